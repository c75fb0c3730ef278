"""Tests for truncated q-expansions, the xi-operator and the constant-term pairing."""

import random
from fractions import Fraction

import mpmath
import pytest

from arith_kernel import LogLinear, kronecker
from errors import InsufficientPrecision, NotPlusSpace
from qexpansion import (HarmonicSplit, ScalarQExpansion, VectorQExpansion, ct_pairing,
                        eisenstein_hol_part, scalar_to_vector, vector_to_scalar,
                        xi_finite_difference, xi_operator)
from weil_rep import DiscriminantForm


def random_plus_series(rng: random.Random, D: int = 5, precision: int = 30) -> ScalarQExpansion:
    coeffs = {}
    for n in range(-6, precision):
        if kronecker(D, n) != -1 and rng.random() < 0.6:
            coeffs[n] = Fraction(rng.randint(-50, 50), rng.randint(1, 9))
    return ScalarQExpansion(0, D, coeffs, precision)


class TestScalarQExpansion:
    def setup_method(self):
        self.f = ScalarQExpansion(0, 5, {-1: Fraction(1), 0: Fraction(5), 1: Fraction(11)}, 10)

    def test_coefficients(self):
        assert self.f[0] == 5
        assert self.f[3] == 0
        assert self.f.principal_part() == {-1: 1}
        assert self.f.valuation == -1

    def test_beyond_precision(self):
        with pytest.raises(InsufficientPrecision):
            self.f[10]

    def test_tilde_doubles_multiples_of_level(self):
        g = ScalarQExpansion(0, 5, {-5: Fraction(3), 0: Fraction(2)}, 10)
        assert g.tilde(-5) == 6
        assert g.tilde(0) == 4

    def test_plus_space(self):
        assert self.f.is_plus_space()
        assert not ScalarQExpansion(0, 5, {2: Fraction(1)}, 10).is_plus_space()

    def test_arithmetic(self):
        g = self.f + self.f.scale(2)
        assert g[1] == 33
        assert (self.f - self.f).is_zero()
        product = self.f * self.f
        assert product[-2] == 1
        assert product[-1] == 10

    def test_level_mismatch(self):
        with pytest.raises(ValueError):
            self.f + ScalarQExpansion(0, 13, {}, 10)

    def test_json_round_trip(self):
        assert ScalarQExpansion.from_json(self.f.to_json()).coeffs == self.f.coeffs


class TestScalarVectorIsomorphism:
    """Plus-space scalar forms and vector-valued forms for Z/DZ."""

    def test_round_trip_on_random_series(self):
        rng = random.Random(7)
        for _ in range(20):
            f = random_plus_series(rng)
            assert vector_to_scalar(scalar_to_vector(f)).coeffs == f.coeffs

    def test_component_layout(self):
        f = ScalarQExpansion(0, 5, {-1: Fraction(1), 0: Fraction(5)}, 10)
        F = scalar_to_vector(f)
        assert F.coefficient(Fraction(-1, 5), 1) == Fraction(1, 2)
        assert F.coefficient(Fraction(-1, 5), 4) == Fraction(1, 2)
        assert F.coefficient(Fraction(0), 0) == 5

    def test_rejects_non_plus_series(self):
        with pytest.raises(NotPlusSpace):
            scalar_to_vector(ScalarQExpansion(0, 5, {2: Fraction(1)}, 10))

    def test_exponents_must_match_components(self):
        with pytest.raises(ValueError):
            VectorQExpansion(0, DiscriminantForm(5), {1: {Fraction(1, 5): Fraction(1)}}, 10)


class TestXiOperator:
    """xi_k f = 2i v^k conj(df/dtau_bar)."""

    def setup_method(self):
        plus = ScalarQExpansion(0, 5, {-1: Fraction(1), 0: Fraction(2)}, 10)
        minus = [(Fraction(-1), None, Fraction(3)), (Fraction(-4), None, Fraction(-1, 2))]
        self.h = HarmonicSplit(plus, minus)

    def test_closed_form_matches_finite_differences(self):
        xi = xi_operator(self.h)
        assert xi.weight == 2
        with mpmath.workdps(40):
            for tau in (mpmath.mpc(0.1, 0.8), mpmath.mpc(-0.3, 1.1), mpmath.mpc(0.45, 0.6),
                        mpmath.mpc(0, 1.5), mpmath.mpc(0.2, 0.95)):
                symbolic = xi.evaluate(tau)
                numeric = xi_finite_difference(self.h, tau)
                assert abs(symbolic - numeric) / abs(symbolic) < 1e-6

    def test_weakly_holomorphic_is_killed(self):
        h = HarmonicSplit(ScalarQExpansion(0, 5, {-1: Fraction(1), 1: Fraction(11)}, 10))
        assert h.is_weakly_holomorphic()
        assert xi_operator(h).is_zero()

    def test_minus_part_needs_negative_exponents(self):
        with pytest.raises(ValueError):
            HarmonicSplit(ScalarQExpansion(0, 5, {}, 10), [(Fraction(1), None, Fraction(1))])


class TestConstantTermPairing:
    """CT<f+, E> against the b_m table of Q(zeta_5)."""

    def test_principal_part_and_constant(self, zeta5_table):
        eis = eisenstein_hol_part(zeta5_table, 5)
        f = ScalarQExpansion(0, 5, {-4: Fraction(1), 0: Fraction(3)}, 10)
        expected = LogLinear.lambda_prime(-6) + LogLinear.log(2, -8)
        assert ct_pairing(f, eis) == expected
        assert ct_pairing(scalar_to_vector(f), eis) == expected

    def test_q_inverse_pairs_with_b1(self, zeta5_table):
        eis = eisenstein_hol_part(zeta5_table, 5)
        f = ScalarQExpansion(0, 5, {-1: Fraction(1)}, 10)
        assert ct_pairing(f, eis) == zeta5_table.b(1).scale(-2)

    def test_needs_long_enough_table(self, zeta5_table):
        eis = eisenstein_hol_part(zeta5_table, 5)
        f = ScalarQExpansion(0, 5, {-11: Fraction(1)}, 10)
        with pytest.raises(InsufficientPrecision):
            ct_pairing(f, eis)

    def test_eisenstein_part_as_series(self, zeta5_table):
        E = eisenstein_hol_part(zeta5_table, 5).as_scalar()
        assert E.weight == 2
        assert E[0] == LogLinear.lambda_prime(-2)
        assert E[6] == zeta5_table.b(6).scale(-4)
