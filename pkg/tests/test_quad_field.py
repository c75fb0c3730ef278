"""Tests for real quadratic fields, their ideals and the lattice helpers."""

from fractions import Fraction

import pytest

from errors import OverBound
from lattice import Lattice, integer_combination, short_vectors
from quad_field import (QuadField, QuadIdeal, class_number, factor_ideal,
                        fundamental_unit, generators_within, ideals_of_norm,
                        ideals_of_norm_bruteforce, is_principal, is_totally_positive,
                        split_prime, totally_positive_unit, valuation)


class TestQuadElem:
    """Element arithmetic in Q(sqrt 5)."""

    def setup_method(self):
        self.F = QuadField(5)

    def test_disc_and_omega(self):
        assert self.F.disc == 5
        assert self.F.omega == self.F.elem(Fraction(1, 2), Fraction(1, 2))
        assert QuadField(3).disc == 12

    def test_norm_trace_inverse(self):
        x = self.F.elem(3, 1)
        assert x.norm() == 4
        assert x.trace() == 6
        assert x * x.inverse() == self.F.one

    def test_coords_on_integral_basis(self):
        assert self.F.elem(Fraction(-5, 2), Fraction(1, 2)).coords() == (Fraction(-3), Fraction(1))
        assert self.F.elem(Fraction(1, 2), 0).is_integral() is False

    def test_exact_signs(self):
        x = self.F.elem(-2, 1)  # -2 + 2.236..
        assert x.sign(0) == 1
        assert x.sign(1) == -1
        assert is_totally_positive(self.F.elem(3, 1))

    def test_rejects_non_squarefree(self):
        with pytest.raises(ValueError):
            QuadField(8)


class TestSplitPrime:
    """Decomposition of rational primes in Q(sqrt 5)."""

    def setup_method(self):
        self.F = QuadField(5)

    def test_split(self):
        st = split_prime(self.F, 11)
        assert st.kind == "split"
        assert [P.norm() for P in st.primes] == [11, 11]
        P, Q = st.primes
        assert P * Q == QuadIdeal.principal(self.F.elem(11))

    def test_ramified(self):
        st = split_prime(self.F, 5)
        assert st.kind == "ramified"
        (P,) = st.primes
        assert P == QuadIdeal.principal(self.F.sqrt_m)
        assert P**2 == QuadIdeal.principal(self.F.elem(5))

    def test_inert(self):
        st = split_prime(self.F, 2)
        assert st.kind == "inert"
        assert st.primes[0].norm() == 4
        assert st.residue_degree == 2


class TestIdeals:
    """Ideal enumeration, factorization and valuations."""

    def setup_method(self):
        self.F = QuadField(5)

    def test_enumeration_matches_bruteforce(self):
        for n in range(1, 31):
            fast = sorted(str(I.hnf) for I in ideals_of_norm(self.F, n))
            slow = sorted(str(I.hnf) for I in ideals_of_norm_bruteforce(self.F, n))
            assert fast == slow, n

    def test_factorization_reassembles(self):
        a = QuadIdeal.principal(self.F.elem(12, 2))
        product = self.F.ring_of_integers
        for P, e in factor_ideal(a):
            product = product * P**e
        assert product == a

    def test_valuation_of_fractional_ideal(self):
        P = split_prime(self.F, 5).primes[0]
        a = QuadIdeal.principal(self.F.elem(Fraction(1, 5)))
        assert valuation(a, P) == -2

    def test_different(self):
        assert self.F.different().norm() == 5
        assert self.F.inverse_different() * self.F.different() == self.F.ring_of_integers


class TestUnitsAndClassGroup:
    """Fundamental units and class numbers."""

    def test_fundamental_units(self):
        F5, F13 = QuadField(5), QuadField(13)
        assert fundamental_unit(F5) == F5.elem(Fraction(1, 2), Fraction(1, 2))
        assert fundamental_unit(F13) == F13.elem(Fraction(3, 2), Fraction(1, 2))
        assert fundamental_unit(F5).norm() == -1

    def test_totally_positive_unit(self):
        F = QuadField(5)
        eps = totally_positive_unit(F)
        assert eps == fundamental_unit(F) ** 2
        assert is_totally_positive(eps)

    def test_class_numbers(self):
        assert class_number(QuadField(5)).h == 1
        assert class_number(QuadField(13)).h == 1
        assert class_number(QuadField(65)).h == 2

    def test_non_principal_ideal(self):
        F = QuadField(65)
        P = split_prime(F, 2).primes[0]
        assert not is_principal(P)
        assert is_principal(P**2)

    def test_generators_within_height(self):
        """Generators of (2) in Q(sqrt 5): +-2 at height 2, +-2 eps^(+-1) at height 3."""
        F = QuadField(5)
        a = QuadIdeal.principal(F.elem(2))
        hits = list(generators_within(a, 3))
        assert sorted(h for h, _ in hits) == [2, 2, 3, 3, 3, 3]
        assert all(QuadIdeal.principal(x) == a for _, x in hits)
        assert list(generators_within(a, 1)) == []

    def test_disc_bound(self, mocker):
        mocker.patch("quad_field.config.disc_bound", 10)
        with pytest.raises(OverBound):
            fundamental_unit(QuadField(7))


class TestLattice:
    """HNF lattices and enumeration helpers."""

    def test_hnf_is_canonical(self):
        a = Lattice.from_generators([(2, 0), (0, 3)], 2)
        b = Lattice.from_generators([(2, 3), (4, 3), (0, 3)], 2)
        assert a == b
        assert a.det == 6

    def test_integer_combination(self):
        assert integer_combination([(2, 0), (0, 3)], (4, -3)) == (2, -1)
        assert integer_combination([(2, 0), (0, 3)], (1, 0)) is None

    def test_integer_combination_dependent_generators(self):
        vectors = [(2, 0), (3, 0), (0, Fraction(1, 2)), (4, 1)]
        target = (1, Fraction(7, 2))
        coeffs = integer_combination(vectors, target)
        assert coeffs is not None
        assert all(isinstance(c, int) for c in coeffs)
        total = tuple(sum(c * Fraction(v[i]) for c, v in zip(coeffs, vectors)) for i in range(2))
        assert total == target

    def test_integer_combination_outside_span(self):
        assert integer_combination([(2, 2), (4, 0)], (1, 1)) is None
        assert integer_combination([(2, 2), (4, 4)], (2, 3)) is None
        assert integer_combination([(1, 1)], (0, 0)) == (0,)

    def test_short_vectors(self):
        found = sorted(u for u, _ in short_vectors([[1, 0], [0, 1]], 1))
        assert found == [(-1, 0), (0, -1), (0, 1), (1, 0)]
