"""Tests for the Hecke character and the Eisenstein coefficients b_m."""

import math
from fractions import Fraction

import pytest

from arith_kernel import LogLinear
from hecke_rho import (BmTable, HeckeChar, bm_table, coefficient_Bt, diff_set,
                       t_candidates)
from quad_field import QuadIdeal, ideals_of_norm


class TestHeckeChar:
    def test_values_on_rational_primes(self, zeta5_reflex):
        chi = HeckeChar(zeta5_reflex)
        F = zeta5_reflex.F_tilde
        assert chi(QuadIdeal.principal(F.elem(11))) == 1
        assert chi(QuadIdeal.principal(F.elem(2))) == -1
        assert chi(QuadIdeal.principal(F.elem(3))) == -1
        assert chi(QuadIdeal.principal(F.elem(5))) == 0

    def test_multiplicative_on_coprime_ideals(self, zeta5_reflex):
        chi = HeckeChar(zeta5_reflex)
        ideals = [a for n in range(1, 21) for a in ideals_of_norm(zeta5_reflex.F_tilde, n)]
        for a in ideals:
            for b in ideals:
                if math.gcd(int(a.norm()), int(b.norm())) == 1:
                    assert chi(a * b) == chi(a) * chi(b), (a, b)

    def test_rejects_fractional(self, zeta5_reflex):
        chi = HeckeChar(zeta5_reflex)
        with pytest.raises(ValueError):
            chi(QuadIdeal.principal(zeta5_reflex.F_tilde.elem(Fraction(1, 3))))


class TestCoefficientBt:
    """B_t for t in d^-1 of the reflex field."""

    def test_single_inert_prime(self, zeta5_reflex):
        """t = 2 sqrt(5)/5: Diff(t) = {(2)}, rho = 1, ord = 1."""
        chi = HeckeChar(zeta5_reflex)
        t = zeta5_reflex.F_tilde.elem(0, Fraction(2, 5))
        diff = diff_set(zeta5_reflex, t, zeta5_reflex.rel_disc_tilde)
        assert len(diff) == 1
        assert diff.primes[0].norm() == 4
        assert coefficient_Bt(chi, t) == LogLinear.log(2, 4)
        assert coefficient_Bt(chi, t, oracle=True) == LogLinear.log(2, 4)

    def test_empty_diff_contributes_zero(self, zeta5_reflex):
        chi = HeckeChar(zeta5_reflex)
        t = zeta5_reflex.F_tilde.elem(0, Fraction(1, 5))
        assert len(diff_set(zeta5_reflex, t, zeta5_reflex.rel_disc_tilde)) == 0
        assert coefficient_Bt(chi, t).is_zero()

    def test_diff_parity_matches_chi(self, zeta5_reflex):
        """(-1)^|Diff(t)| = chi(t d) whenever t d is prime to the ramified prime."""
        chi = HeckeChar(zeta5_reflex)
        d_rel = zeta5_reflex.rel_disc_tilde
        checked = 0
        for m in range(1, 21):
            for t in t_candidates(zeta5_reflex, 5, m):
                value = chi(QuadIdeal.principal(t) * d_rel)
                if value == 0:
                    continue
                assert (-1) ** len(diff_set(zeta5_reflex, t, d_rel)) == value, t
                checked += 1
        assert checked > 0

    def test_only_singleton_diff_contributes(self, zeta5_reflex):
        chi = HeckeChar(zeta5_reflex)
        d_rel = zeta5_reflex.rel_disc_tilde
        sizes = set()
        for m in range(1, 21):
            for t in t_candidates(zeta5_reflex, 5, m):
                size = len(diff_set(zeta5_reflex, t, d_rel))
                sizes.add(size)
                if size != 1:
                    assert coefficient_Bt(chi, t).is_zero(), t
        assert 0 in sizes and 1 in sizes

    def test_candidates_lie_in_inverse_different(self, zeta5_reflex):
        d_inv = zeta5_reflex.rel_disc_tilde.inverse()
        for m in range(1, 12):
            for t in t_candidates(zeta5_reflex, 5, m):
                assert d_inv.contains(t)
                assert t.b == Fraction(m, 10)


class TestBmTable:
    """b_m for E = Q(zeta_5)."""

    def test_known_values(self, zeta5_table):
        assert zeta5_table.b(4) == LogLinear.log(2, 4)
        assert zeta5_table.b(6) == LogLinear.log(2, 8) + LogLinear.log(3, 4)

    def test_vanishing_values(self, zeta5_table):
        for m in (1, 2, 3, 5):
            assert zeta5_table.b(m).is_zero()

    def test_non_negative_log_coefficients(self, zeta5_table):
        for m in range(1, 11):
            b = zeta5_table.b(m)
            assert b.constant == 0
            assert b.lambda_coeff == 0
            assert all(c >= 0 for c in b.logs.values())

    def test_two_paths_agree(self, zeta5, zeta5_table):
        oracle = bm_table(zeta5, 10, oracle=True)
        for m in range(1, 11):
            assert oracle.b(m) == zeta5_table.b(m)

    @pytest.mark.slow
    def test_two_paths_agree_to_50(self, zeta5):
        formula = bm_table(zeta5, 50)
        oracle = bm_table(zeta5, 50, oracle=True)
        for m in range(1, 51):
            assert oracle.b(m) == formula.b(m), m
            assert all(c >= 0 for c in formula.b(m).logs.values())

    def test_extension_from_prefix(self, zeta5, zeta5_table):
        extended = bm_table(zeta5, 10, previous=bm_table(zeta5, 6))
        assert extended.coeffs == zeta5_table.coeffs

    def test_json_round_trip(self, zeta5_table):
        restored = BmTable.from_json(zeta5_table.to_json())
        assert restored.coeffs == zeta5_table.coeffs
        assert restored.m_max == 10

    def test_eisenstein_coefficients(self, zeta5_table):
        assert zeta5_table.eisenstein_coefficient(0) == LogLinear.lambda_prime(-2)
        assert zeta5_table.eisenstein_coefficient(4) == LogLinear.log(2, -16)

    def test_beyond_table(self, zeta5_table):
        with pytest.raises(KeyError):
            zeta5_table.b(11)

    def test_csv_rows(self, zeta5_table):
        rows = zeta5_table.csv_rows()
        assert rows[0] == ["m", "prime", "coefficient"]
        assert ["4", "2", "4"] in rows
        assert ["1", "", "0"] in rows

    def test_rejects_empty_table(self, zeta5):
        with pytest.raises(ValueError):
            bm_table(zeta5, 0)
