import pytest

from oblivup import mbr_code, mds_code


@pytest.fixture(scope="session")
def mbr_f11_spec():
    """Smallest interesting instance: n=4, k=2, theta=1 over F_11."""
    return mbr_code.generate(4, 2, 1, 11, seed=0, budget=1_000_000)


@pytest.fixture(scope="session")
def mbr_spec_fast():
    """Same shape at a larger modulus, where generation takes a few draws."""
    return mbr_code.generate(4, 2, 1, 1009, seed=1, budget=10_000)


@pytest.fixture(scope="session")
def mbr_spec_632():
    return mbr_code.generate_searching_q(6, 3, 2, seed=0)


@pytest.fixture(scope="session")
def mds_spec():
    return mds_code.generate(4, 2, 4)
