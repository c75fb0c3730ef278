"""Tests for the exact and interval arithmetic kernel."""

from fractions import Fraction

import mpmath
import pytest

from arith_kernel import (Interval, LogLinear, certified_eval, factor, kronecker,
                          lsum, rat, rat_str, squarefree_part, upper_incomplete_gamma)
from errors import OverBound, PrecisionUnreachable


class TestKronecker:
    """Kronecker symbol conventions."""

    def test_known_values(self):
        assert kronecker(5, 1) == 1
        assert kronecker(5, 3) == -1
        assert kronecker(5, 11) == 1
        assert kronecker(5, 5) == 0

    def test_multiplicative_in_numerator(self):
        """(a/n)(b/n) = (ab/n)."""
        for n in range(1, 60):
            for a in range(-20, 21):
                for b in (-7, -3, 2, 5, 13):
                    assert kronecker(a, n) * kronecker(b, n) == kronecker(a * b, n)


class TestFactor:
    """Integer factorization within the configured bound."""

    def test_small_values(self):
        assert factor(1) == {}
        assert factor(125) == {5: 3}
        assert factor(845) == {5: 1, 13: 2}

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            factor(0)

    def test_over_bound(self, mocker):
        mocker.patch("arith_kernel.config.factor_bound", 100)
        with pytest.raises(OverBound):
            factor(101)

    def test_squarefree_part(self):
        assert squarefree_part(80) == 5
        assert squarefree_part(-12) == -3


class TestRationals:
    def test_parse_and_print(self):
        assert rat("3/6") == Fraction(1, 2)
        assert rat(4) == Fraction(4)
        assert rat_str(Fraction(4, 2)) == "2"
        assert rat_str(Fraction(-2, 6)) == "-1/3"


class TestLogLinear:
    """Exact Q-linear combinations of log p and Lambda'(0)."""

    def test_zero_terms_are_dropped(self):
        x = LogLinear.log(2, 3) + LogLinear.log(2, -3)
        assert x.is_zero()

    def test_associative(self):
        x = LogLinear.log(2, Fraction(1, 3))
        y = LogLinear.log(3, 2) + LogLinear.lambda_prime(1)
        z = LogLinear.rational(5) + LogLinear.log(2, -1)
        assert (x + y) + z == x + (y + z)

    def test_evaluation_is_linear(self):
        x = LogLinear.log(2, 4) + LogLinear.lambda_prime(2)
        y = LogLinear.log(3, 1) + LogLinear.rational(Fraction(1, 2))
        lam = mpmath.mpf("0.37")
        combined = (x.scale(3) + y).evaluate(lam)
        assert abs(combined - (3 * x.evaluate(lam) + y.evaluate(lam))) < mpmath.mpf(10) ** -12

    def test_json_round_trip(self):
        x = LogLinear(Fraction(1, 3), Fraction(-2), ((2, Fraction(4)), (3, Fraction(1, 2))))
        assert LogLinear.from_json(x.to_json()) == x

    def test_lsum(self):
        total = lsum(LogLinear.log(2) for _ in range(4))
        assert total.logs == {2: Fraction(4)}


class TestInterval:
    def test_addition_widens(self):
        a = Interval(mpmath.mpf(1), mpmath.mpf("0.1"))
        b = Interval(mpmath.mpf(2), mpmath.mpf("0.2"))
        c = a + b
        assert c.contains(3)
        assert c.rad >= mpmath.mpf("0.3")

    def test_negative_radius_is_normalised(self):
        assert Interval(1, -2).rad == 2


class TestIncompleteGamma:
    """Certified upper incomplete gamma values."""

    def test_s_one_is_exponential(self):
        value = upper_incomplete_gamma(1, 1, 64)
        assert value.contains(mpmath.exp(-1))
        assert value.rad <= abs(value.mid) * mpmath.mpf(2) ** -64

    def test_exponential_integral(self):
        value = upper_incomplete_gamma(0, 1, 64)
        assert abs(value.mid - mpmath.mpf("0.2193839343955202736771637754601216")) < 1e-15

    def test_half(self):
        value = upper_incomplete_gamma(1, "0.5", 64)
        assert abs(value.mid - mpmath.exp(mpmath.mpf("-0.5"))) < 1e-15

    def test_rejects_non_positive_x(self):
        with pytest.raises(ValueError):
            upper_incomplete_gamma(1, 0)


class TestCertifiedEval:
    def test_unstable_value_gives_up(self):
        with pytest.raises(PrecisionUnreachable):
            certified_eval(lambda: mpmath.rand() + 1, 64, attempts=2)
