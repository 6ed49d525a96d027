"""Shared fixtures: the enriched bundled zero table and sieve tables.

Both are session-scoped; enrichment refines ~1.5e3 heights by bisection and
attaches zeta'(rho), zeta(rho-1), so it runs once for the whole suite.
"""

import pytest

from ztl.totient import sieve_totients
from ztl.zeros import bundled_zero_table_path, enrich_table, ingest_zero_table


@pytest.fixture(scope="session")
def enriched_table():
    raw = ingest_zero_table(bundled_zero_table_path())
    return enrich_table(raw, k_set=(2, 3))


@pytest.fixture(scope="session")
def sieve_million():
    return sieve_totients(10**6)


@pytest.fixture(scope="session")
def sieve_small():
    return sieve_totients(2000)
