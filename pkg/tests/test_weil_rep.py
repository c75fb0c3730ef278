"""Tests for the discriminant form Z/DZ and its Weil representation."""

from fractions import Fraction

import mpmath
import pytest

from errors import HypothesisViolated
from weil_rep import (DiscriminantForm, braid_defect, divisor_of, hz_components,
                      s_squared_defect, unitarity_defect, weil_S, weil_T)

TINY = mpmath.mpf(10) ** -20


class TestDiscriminantForm:
    def setup_method(self):
        self.df = DiscriminantForm(5)

    def test_quadratic_form(self):
        assert self.df.Q(1) == Fraction(4, 5)
        assert self.df.Q(2) == Fraction(1, 5)
        assert self.df.bilinear(1, 2) == Fraction(1, 5)

    def test_gauss_sum(self):
        assert abs(self.df.gauss_sum() - mpmath.sqrt(5)) < 1e-12

    def test_rejects_bad_level(self):
        with pytest.raises(HypothesisViolated):
            DiscriminantForm(8)
        with pytest.raises(HypothesisViolated):
            DiscriminantForm(7)


class TestWeilRepresentation:
    """rho(S), rho(T) for (Z/5Z, -x^2/5)."""

    def setup_method(self):
        self.df = DiscriminantForm(5)

    def test_unitary(self):
        assert unitarity_defect(weil_S(self.df)) < TINY
        assert unitarity_defect(weil_T(self.df)) < TINY

    def test_braid_relation(self):
        assert braid_defect(self.df) < TINY

    def test_s_squared_is_negation(self):
        assert s_squared_defect(self.df) < TINY

    def test_image_of_phi_zero(self):
        S = weil_S(self.df)
        for nu in self.df.components():
            assert abs(S[nu, 0] - 1 / mpmath.sqrt(5)) < TINY

    def test_wrong_signature_breaks_braid(self):
        assert braid_defect(DiscriminantForm(5, signature_n=4)) > 0.1


class TestHirzebruchZagier:
    """T_n as a combination of Z(m, mu)."""

    def setup_method(self):
        self.df = DiscriminantForm(5)

    def test_residue_index(self):
        assert hz_components(self.df, 1) == [
            (Fraction(1, 5), 1, Fraction(1, 2)),
            (Fraction(1, 5), 4, Fraction(1, 2)),
        ]

    def test_index_divisible_by_level(self):
        assert hz_components(self.df, 5) == [(Fraction(1), 0, Fraction(1, 2))]

    def test_non_residue_is_empty(self):
        assert hz_components(self.df, 2) == []

    def test_divisor_of_principal_part(self):
        assert divisor_of(self.df, {-1: 1, -5: 1}) == {
            (Fraction(1, 5), 1): Fraction(1, 2),
            (Fraction(1, 5), 4): Fraction(1, 2),
            (Fraction(1), 0): Fraction(1),
        }

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            hz_components(self.df, 0)
