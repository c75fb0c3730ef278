"""Tests for Borcherds products, their Petersson norms and the CM-value identity."""

import dataclasses
from fractions import Fraction

import mpmath
import pytest

from arith_kernel import LogLinear
from borcherds_eval import (BorcherdsProduct, arithmetic_side, cm_value, evaluate_at,
                            evaluate_log_petersson, gamma_invariance_certificate, weyl_vector)
from errors import (DivisorHit, HypothesisViolated, InsufficientPrecision, OnDivisor,
                    TailNotConvergent)
from qexpansion import ScalarQExpansion


class TestBorcherdsProduct:
    def test_lift_of_f1(self, f1):
        P = BorcherdsProduct(f1, 60)
        assert P.weight == 5
        assert P.principal == {1: 1}
        assert P.divisor() == {1: 1}
        assert set(P.exponents()) <= set(range(1, 61))
        assert P.to_json()["weight"] == "5"

    def test_weyl_vector(self, f1):
        """rho = eps / sqrt(5) on the chamber containing y1 = y2."""
        P = BorcherdsProduct(f1, 60)
        assert weyl_vector(P, 1) == P.F.elem(Fraction(1, 2), Fraction(1, 10))

    def test_rejects_nonzero_weight(self):
        with pytest.raises(ValueError):
            BorcherdsProduct(ScalarQExpansion(2, 5, {0: Fraction(1)}, 20), 10)

    def test_rejects_non_plus_form(self):
        with pytest.raises(HypothesisViolated):
            BorcherdsProduct(ScalarQExpansion(0, 5, {-2: Fraction(1)}, 20), 10)

    def test_rejects_fractional_principal_part(self):
        with pytest.raises(HypothesisViolated):
            BorcherdsProduct(ScalarQExpansion(0, 5, {-1: Fraction(1, 2)}, 20), 10)

    def test_needs_coefficients_up_to_trace_bound(self, f1):
        with pytest.raises(InsufficientPrecision):
            BorcherdsProduct(f1, 120)


class TestEvaluation:
    """log ||Psi(w)||^2 at generic points of H^2."""

    def setup_method(self):
        self.w = (mpmath.mpc(0.1, 1.0), mpmath.mpc(-0.2, 1.1))

    def test_translation_invariance(self, f1):
        P = BorcherdsProduct(f1, 60)
        base = evaluate_at(P, self.w, 96)
        moved = evaluate_at(P, (self.w[0] + 1, self.w[1] + 1), 96)
        assert abs(base.log_norm_sq.mid - moved.log_norm_sq.mid) < 1e-10
        assert base.tail <= 1e-6

    def test_linear_in_the_form(self, f1):
        single = evaluate_at(BorcherdsProduct(f1, 60), self.w, 96)
        double = evaluate_at(BorcherdsProduct(f1.scale(2), 60), self.w, 96)
        assert abs(double.log_norm_sq.mid - 2 * single.log_norm_sq.mid) < 1e-10

    def test_zero_form(self):
        P = BorcherdsProduct(ScalarQExpansion(0, 5, {}, 61), 60)
        value = evaluate_at(P, self.w, 96)
        assert value.log_norm_sq.mid == 0
        assert value.terms == 0

    def test_rejects_points_outside_h2(self, f1):
        P = BorcherdsProduct(f1, 60)
        with pytest.raises(ValueError):
            evaluate_at(P, (mpmath.mpc(0.1, -1.0), mpmath.mpc(0, 1.0)), 96)

    def test_tail_too_large_near_the_cusp_boundary(self, f1):
        P = BorcherdsProduct(f1, 10)
        with pytest.raises(TailNotConvergent):
            evaluate_at(P, (mpmath.mpc(0.1, 0.25), mpmath.mpc(-0.17, 0.25)), 96)

    def test_cm_point_needs_reduced_coordinates(self, f1, zeta5_cycle):
        P = BorcherdsProduct(f1, 60)
        point = dataclasses.replace(zeta5_cycle.points[0], w=None)
        with pytest.raises(ValueError):
            evaluate_log_petersson(P, point, 96)


class TestArithmeticSide:
    def test_flagship_symbolic_value(self, f1, zeta5_table):
        """b_1 = 0, so only c(0) Lambda'(0, chi) = 5 Lambda'(0, chi) survives."""
        P = BorcherdsProduct(f1, 60)
        assert arithmetic_side(P, zeta5_table, Fraction(1)) == LogLinear.lambda_prime(5)

    def test_scaled_by_c_prime(self, f1, zeta5_table):
        P = BorcherdsProduct(f1, 60)
        assert arithmetic_side(P, zeta5_table, Fraction(1, 2)) == LogLinear.lambda_prime(Fraction(5, 2))


class TestCMValue:
    def test_divisor_hit_names_the_point(self, mocker, zeta5, f1, zeta5_cycle, zeta5_table):
        mocker.patch("borcherds_eval.evaluate_log_petersson", side_effect=OnDivisor("on T_4", 4))
        with pytest.raises(DivisorHit) as exc:
            cm_value(zeta5, f1, 60, 128, cycle=zeta5_cycle, table=zeta5_table, certify=False)
        assert exc.value.n == 4
        assert exc.value.point_key == sorted(p.key for p in zeta5_cycle.points)[0]

    def test_level_mismatch(self, cyclic13, f1):
        with pytest.raises(ValueError):
            cm_value(cyclic13, f1, 60, 128, certify=False)

    @pytest.mark.slow
    def test_gamma_invariance_certificate(self, f1_long):
        cert = gamma_invariance_certificate(BorcherdsProduct(f1_long, 200), points=2, precision=128)
        assert cert.passed
        assert len(cert.details) == 6

    @pytest.mark.slow
    def test_zeta5_identity(self, zeta5, f1_long, zeta5_cycle, zeta5_table):
        report = cm_value(zeta5, f1_long, 200, 128, cycle=zeta5_cycle, table=zeta5_table)
        assert report.passed
        assert report.c_prime == 1
        assert report.arithmetic_symbolic == LogLinear.lambda_prime(5)
        assert len(report.values) == 4
        assert report.certificate.passed
        assert report.to_json()["pass"] is True
