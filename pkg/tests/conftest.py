import pytest

from dmcp.catalog import derived_sequence


@pytest.fixture(scope="session")
def derived_pi_o1():
    """Exact first-order pi sequence (root near the published N=4 row)."""
    return derived_sequence("pi-n4-o1")


@pytest.fixture(scope="session")
def derived_pi_o2():
    """Exact second-order pi sequence (root near the published N=6 row)."""
    return derived_sequence("pi-n6-o2")


@pytest.fixture(scope="session")
def derived_pi2_o1():
    """Exact first-order pi/2 sequence (root near the published N=4 row)."""
    return derived_sequence("pi2-n4-o1")
