from fractions import Fraction

import pytest

from cm_cycle import enumerate_cm
from cm_quartic import build_cm_field
from hecke_rho import bm_table
from quad_field import QuadField
from weakly_holomorphic import construct_weakly_holomorphic


@pytest.fixture(autouse=True)
def setup_test_env(tmp_path, monkeypatch):
    """Set up test environment variables."""
    monkeypatch.setenv("BIGCM_ENV", "dev")
    monkeypatch.setenv("BIGCM_LOG_TO_FILE", "false")
    monkeypatch.setenv("BIGCM_CACHE", str(tmp_path / "cache"))
    yield


@pytest.fixture(scope="session")
def zeta5():
    """E = Q(zeta_5) = Q(sqrt 5)(sqrt((-5 + sqrt 5)/2))."""
    F = QuadField(5)
    return build_cm_field(5, F.elem(Fraction(-5, 2), Fraction(1, 2)))


@pytest.fixture(scope="session")
def cyclic13():
    """Cyclic quartic CM field of conductor 13, delta = -(13 + 3 sqrt 13)/2."""
    F = QuadField(13)
    return build_cm_field(13, F.elem(Fraction(-13, 2), Fraction(-3, 2)))


@pytest.fixture(scope="session")
def zeta5_reflex(zeta5):
    return zeta5.reflex_data


@pytest.fixture(scope="session")
def zeta5_table(zeta5):
    return bm_table(zeta5, 10)


@pytest.fixture(scope="session")
def zeta5_cycle(zeta5):
    return enumerate_cm(zeta5, 128)


@pytest.fixture(scope="session")
def f1():
    """q^-1 + 5 + 11 q + ... on Gamma_0(5), known to q^119."""
    return construct_weakly_holomorphic(5, {-1: 1}, precision=120)


@pytest.fixture(scope="session")
def f1_long():
    """f1 known far enough for a product truncated at index 200."""
    return construct_weakly_holomorphic(5, {-1: 1}, precision=220)
