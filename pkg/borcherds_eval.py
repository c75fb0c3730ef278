"""Borcherds products on SL_2(O_F)\\H^2 from weight-0 plus-space forms, their Petersson
norms at CM points and the comparison of the CM value with the Eisenstein side.

For f = sum a(n) q^n with a~(n) = a(n), or 2 a(n) when D | n,

    Psi(w) = e(rho_W w1 + rho_W' w2) prod_{nu in d^-1, (nu, W) > 0} (1 - e(nu w1 + nu' w2))^{a~(D nu nu')}

on a Weyl chamber W, with weight c(0). Elements nu = x / sqrt(D) are handled through x in O_F.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

import mpmath

from arith_kernel import Interval, LogLinear, lsum, rat_str
from cm_cycle import CMCycle, CMPoint, act, enumerate_cm
from cm_quartic import CMQuartic
from config import config
from errors import (ConstructionFailed, DivisorHit, HypothesisViolated,
                    InsufficientPrecision, OnDivisor, TailNotConvergent)
from hecke_rho import BmTable, bm_table
from l_series import lambda_derivative_at_zero
from logging_config import logger
from qexpansion import ScalarQExpansion
from quad_field import QuadElem, QuadField, totally_positive_unit

TAIL_BLOCKS = 4

Point = Tuple[mpmath.mpc, mpmath.mpc]


@dataclass
class BorcherdsProduct:
    """Psi(w, f) truncated at product terms of index D N(nu) <= trace_bound."""

    form: ScalarQExpansion
    trace_bound: int

    def __post_init__(self):
        f = self.form
        if f.weight != 0:
            raise ValueError(f"Borcherds lift needs weight 0, got {f.weight}")
        if not f.is_plus_space():
            raise HypothesisViolated(["plus-space input form"])
        if self.trace_bound < 1:
            raise ValueError("trace_bound must be positive")
        if f.precision <= self.trace_bound:
            raise InsufficientPrecision(f"form known to q^{f.precision - 1}, product needs q^{self.trace_bound}")
        for n, c in f.principal_part().items():
            if Fraction(f.tilde(n)).denominator != 1:
                raise HypothesisViolated([f"integral principal part (c~({n}) = {rat_str(Fraction(f.tilde(n)))})"])
        self.F = QuadField(f.D)
        self.eps_plus = totally_positive_unit(self.F)

    @property
    def D(self) -> int:
        return self.form.D

    @property
    def weight(self) -> Fraction:
        return Fraction(self.form.constant_term())

    @property
    def principal(self) -> Dict[int, int]:
        """{m: c~(-m)} for the principal part q^-m."""
        return {-n: int(self.form.tilde(n)) for n in sorted(self.form.principal_part(), reverse=True)}

    def exponents(self) -> Dict[int, Fraction]:
        """{n: a~(n)} for 1 <= n <= trace_bound."""
        result = {}
        for n in range(1, self.trace_bound + 1):
            c = Fraction(self.form.tilde(n))
            if c:
                result[n] = c
        return result

    def divisor(self) -> Dict[int, int]:
        """T(f) = sum c~(-m) T_m as {m: multiplicity}."""
        return dict(self.principal)

    def to_json(self) -> dict:
        return {
            "D": self.D,
            "weight": rat_str(self.weight),
            "divisor": {str(m): c for m, c in self.divisor().items()},
            "trace_bound": self.trace_bound,
        }


@dataclass
class PeterssonValue:
    """log ||Psi(w)||^2_Pet at one point, with the data that produced it."""

    log_norm_sq: Interval
    w: Point
    weyl_vector: QuadElem
    terms: int
    tail: mpmath.mpf
    min_factor: mpmath.mpf
    key: str = ""

    @property
    def log_norm(self) -> Interval:
        return self.log_norm_sq.scale(Fraction(1, 2))

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "log_norm_sq": self.log_norm_sq.to_json(),
            "weyl_vector": self.weyl_vector.to_json(),
            "terms": self.terms,
            "tail": mpmath.nstr(self.tail, 6),
            "min_factor": mpmath.nstr(self.min_factor, 6),
        }


def _elements_in_box(F: QuadField, lo1, hi1, lo2, hi2) -> Iterator[QuadElem]:
    """x in O_F with sigma_1(x) in [lo1, hi1] and sigma_2(x) in [lo2, hi2] (numerically, with slack)."""
    o1, o2 = F.omega.embed(0), F.omega.embed(1)
    gap = o1 - o2
    v_lo = int(mpmath.floor((lo1 - hi2) / gap)) - 1
    v_hi = int(mpmath.ceil((hi1 - lo2) / gap)) + 1
    for v in range(v_lo, v_hi + 1):
        u_lo = int(mpmath.floor(max(lo1 - v * o1, lo2 - v * o2))) - 1
        u_hi = int(mpmath.ceil(min(hi1 - v * o1, hi2 - v * o2))) + 1
        for u in range(u_lo, u_hi + 1):
            yield F.from_coords(u, v)


def _totally_positive_of_norm(F: QuadField, m: int, lo, hi) -> List[QuadElem]:
    """r >> 0 with N(r) = m and lo < sigma_1(r) <= hi."""
    found = []
    for r in _elements_in_box(F, lo, hi, m / hi, m / lo):
        if r.norm() != m or r.sign(0) <= 0 or r.sign(1) <= 0:
            continue
        s1 = r.embed(0)
        if lo < s1 <= hi:
            found.append(r)
    return found


def _slope(r: QuadElem):
    return r.embed(0) / r.embed(1)


def lower_wall(P: BorcherdsProduct, slope) -> mpmath.mpf:
    """Largest wall slope y2/y1 not above the given slope."""
    e = P.eps_plus.embed(0)
    slope = mpmath.mpf(slope)
    best = None
    for m in P.principal:
        root = mpmath.sqrt(m * slope)
        for r in _totally_positive_of_norm(P.F, m, root / e, root):
            s = _slope(r)
            if best is None or s > best:
                best = s
    if best is None:
        raise ConstructionFailed("no Weyl chamber walls found for a non-empty principal part")
    return best


def weyl_vector(P: BorcherdsProduct, slope) -> QuadElem:
    """rho_W = sum c~(-N(r)) r / (sqrt(D) (eps_+ - 1)) over r >> 0 with wall slope in (s_lo, s_lo eps_+^2].

    slope is y2/y1 for any y in the chamber W; the empty principal part gives 0.
    """
    if not P.principal:
        return P.F.elem(0)
    s_lo = lower_wall(P, slope)
    e = P.eps_plus.embed(0)
    inv = (P.F.sqrt_disc * (P.eps_plus - 1)).inverse()
    rho = P.F.elem(0)
    for m, c in P.principal.items():
        root = mpmath.sqrt(m * s_lo)
        for r in _totally_positive_of_norm(P.F, m, root, root * e):
            rho = rho + r * inv * c
    return rho


def _cutoff(exponents: Dict[int, Fraction], precision: int):
    """Trace Tr(nu y) beyond which a single factor is below 2^-precision."""
    total = sum((abs(c) for c in exponents.values()), Fraction(1))
    return (precision * mpmath.log(2) + mpmath.log(mpmath.mpf(total.numerator) / total.denominator)) / (2 * mpmath.pi) + 1


def _factor(x: QuadElem, w: Point, root_d):
    """1 - e(nu w1 + nu' w2) and Tr(nu y) for nu = x / sqrt(D)."""
    nu1 = x.embed(0) / root_d
    nu2 = -x.embed(1) / root_d
    arg = nu1 * w[0] + nu2 * w[1]
    return 1 - mpmath.exp(2j * mpmath.pi * arg), nu1 * w[0].imag + nu2 * w[1].imag


def _block_tail(blocks: List[mpmath.mpf]) -> mpmath.mpf:
    last, previous = blocks[-1], blocks[-2]
    if previous == 0:
        raise TailNotConvergent("truncation bound too small to estimate the product tail")
    ratio = last / previous
    if ratio >= 1:
        raise TailNotConvergent(f"product terms do not decay (block ratio {mpmath.nstr(ratio, 4)})")
    return last * ratio / (1 - ratio)


def evaluate_at(P: BorcherdsProduct, w: Point, precision: int = None, petersson_model: str = None) -> PeterssonValue:
    """log ||Psi(w)||^2_Pet = log |Psi(w)|^2 + c(0) log(4 pi e^-gamma Y) at w in H^2.

    Y is Im w1 Im w2 in the SL_2(O_F) model and D Im w1 Im w2 in the Gamma model.
    """
    precision = precision or config.default_precision
    model = petersson_model or config.petersson_model
    F = P.F
    with mpmath.workprec(precision + 20):
        w = (mpmath.mpc(w[0]), mpmath.mpc(w[1]))
        y1, y2 = w[0].imag, w[1].imag
        if y1 <= 0 or y2 <= 0:
            raise ValueError("evaluation point must lie in H^2")
        root_d = mpmath.sqrt(P.D)
        exponents = P.exponents()
        T = _cutoff(exponents, precision)
        threshold = mpmath.mpf(config.divisor_threshold)

        log_abs = mpmath.mpf(0)
        min_factor = mpmath.inf
        terms = 0
        blocks = [mpmath.mpf(0)] * TAIL_BLOCKS
        scale = TAIL_BLOCKS / mpmath.sqrt(P.trace_bound)

        def accumulate(x: QuadElem, exponent: Fraction, n: int):
            nonlocal log_abs, min_factor, terms
            value, _ = _factor(x, w, root_d)
            size = abs(value)
            min_factor = min(min_factor, size)
            if size < threshold:
                raise OnDivisor(f"factor of index {n} has modulus {mpmath.nstr(size, 5)}", n)
            c = mpmath.mpf(exponent.numerator) / exponent.denominator
            log_abs += c * mpmath.log(size)
            terms += 1
            return c

        # nu totally positive: x > 0 > x'
        box = _elements_in_box(F, mpmath.mpf(0), root_d * T / y1, -root_d * T / y2, mpmath.mpf(0))
        for x in box:
            if x.sign(0) <= 0 or x.sign(1) >= 0:
                continue
            n = int(-x.norm())
            exponent = exponents.get(n) if n <= P.trace_bound else None
            if not exponent:
                continue
            _, trace = _factor(x, w, root_d)
            if trace > T:
                continue
            c = accumulate(x, exponent, n)
            b = min(int(mpmath.sqrt(n) * scale), TAIL_BLOCKS - 1)
            blocks[b] += abs(c) * mpmath.exp(-2 * mpmath.pi * trace)

        # nu of mixed sign on the walls of the chamber containing y
        slope = y2 / y1
        for m, c in P.principal.items():
            spread = root_d * T
            disc = mpmath.sqrt(spread**2 + 4 * m * y1 * y2)
            lo = (disc - spread) / (2 * y1)
            hi = (disc + spread) / (2 * y1)
            for r in _totally_positive_of_norm(F, m, lo, hi):
                x = r if _slope(r) > slope else -r
                _, trace = _factor(x, w, root_d)
                if trace <= T:
                    accumulate(x, Fraction(c), -m)

        tail = _block_tail(blocks) if exponents else mpmath.mpf(0)
        if tail > config.tail_tolerance:
            raise TailNotConvergent(
                f"product tail {mpmath.nstr(tail, 3)} exceeds {config.tail_tolerance} at Im w1 Im w2 = {mpmath.nstr(y1 * y2, 5)}"
            )

        rho = weyl_vector(P, slope)
        log_abs -= 2 * mpmath.pi * (rho.embed(0) * y1 + rho.embed(1) * y2)
        height = y1 * y2 * (P.D if model == "gamma" else 1)
        k = mpmath.mpf(P.weight.numerator) / P.weight.denominator
        value = 2 * log_abs + k * mpmath.log(4 * mpmath.pi * mpmath.exp(-mpmath.euler) * height)
        rad = 2 * tail * mpmath.mpf("1.01") + (terms + 1) * abs(value) * mpmath.mpf(2) ** (-precision)
        result = PeterssonValue(Interval(value, rad), w, rho, terms, tail, min_factor)
    logger.debug("Petersson norm evaluated", extra={"D": P.D, "n_terms": terms, "radius": float(rad)})
    return result


def evaluate_log_petersson(P: BorcherdsProduct, point: CMPoint, precision: int = None) -> PeterssonValue:
    """log ||Psi||^2_Pet at a CM point, evaluated at its reduced coordinates."""
    if point.w is None:
        raise ValueError(f"CM point {point.key} has no reduced coordinates")
    value = evaluate_at(P, point.w, precision)
    value.key = point.key
    return value


@dataclass
class InvarianceCertificate:
    max_defect: float
    tolerance: float
    passed: bool
    details: List[dict] = field(default_factory=list)


def sl2_generators(F: QuadField):
    one, zero = F.one, F.elem(0)
    return [
        ("T_1", (one, one, zero, one)),
        ("T_omega", (one, F.omega, zero, one)),
        ("S", (zero, -one, one, zero)),
    ]


def gamma_invariance_certificate(P: BorcherdsProduct, points: int = 5, seed: int = 0,
                                 precision: int = None) -> InvarianceCertificate:
    """|log||Psi(gamma w)|| - log||Psi(w)||| relative to max(1, |value|) for the generators of SL_2(O_F)."""
    precision = precision or config.default_precision
    tol = config.modularity_tolerance
    rng = random.Random(seed)
    details = []
    worst = mpmath.mpf(0)
    with mpmath.workprec(precision + 20):
        for _ in range(points):
            w = tuple(mpmath.mpc(rng.uniform(-0.3, 0.3), rng.uniform(0.95, 1.15)) for _ in range(2))
            base = evaluate_at(P, w, precision).log_norm_sq
            for name, M in sl2_generators(P.F):
                moved = evaluate_at(P, act(M, w), precision).log_norm_sq
                defect = abs(moved.mid - base.mid) / max(abs(base.mid), mpmath.mpf(1))
                worst = max(worst, defect)
                details.append({"generator": name, "defect": mpmath.nstr(defect, 5)})
    cert = InvarianceCertificate(float(worst), tol, bool(worst < tol), details)
    logger.info("Gamma-invariance certificate", extra={"D": P.D, "points": points, "radius": cert.max_defect})
    return cert


@dataclass
class CMValueReport:
    """log ||Psi(CM(E), f)||_Pet against c'(E) (sum c~(-n) b_n + c(0) Lambda'(0, chi))."""

    analytic: Interval
    arithmetic_symbolic: LogLinear
    arithmetic_numeric: Interval
    passed: bool
    trace_bound: int
    c_prime: Fraction
    values: List[PeterssonValue] = field(default_factory=list)
    certificate: Optional[InvarianceCertificate] = None

    @property
    def phi_analytic(self) -> Interval:
        """Phi(CM(E), f) = -2 log ||Psi(CM(E), f)||_Pet."""
        return self.analytic.scale(-2)

    @property
    def phi_arithmetic(self) -> LogLinear:
        return self.arithmetic_symbolic.scale(-2)

    def to_json(self, digits: int = 30) -> dict:
        return {
            "analytic": self.analytic.to_json(digits),
            "arithmetic_symbolic": self.arithmetic_symbolic.to_json(),
            "arithmetic_numeric": self.arithmetic_numeric.to_json(digits),
            "pass": self.passed,
            "trace_bound": self.trace_bound,
            "c_prime": rat_str(self.c_prime),
            "phi": {
                "analytic": self.phi_analytic.to_json(digits),
                "arithmetic_symbolic": self.phi_arithmetic.to_json(),
            },
            "points": [v.to_json() for v in self.values],
            "certificate": None if self.certificate is None else {
                "max_defect": self.certificate.max_defect,
                "tolerance": self.certificate.tolerance,
                "passed": self.certificate.passed,
            },
        }


def arithmetic_side(P: BorcherdsProduct, table: Optional[BmTable], c_prime: Fraction) -> LogLinear:
    terms = [table.b(m).scale(c) for m, c in P.principal.items()] if P.principal else []
    return (lsum(terms) + LogLinear.lambda_prime(P.weight)).scale(c_prime)


def cm_value(
    cm: CMQuartic,
    f: ScalarQExpansion,
    trace_bound: int = None,
    precision: int = None,
    cycle: Optional[CMCycle] = None,
    table: Optional[BmTable] = None,
    certify: bool = True,
) -> CMValueReport:
    """Both sides of the CM-value identity for a weakly holomorphic plus-space form."""
    trace_bound = trace_bound or config.trace_bound
    precision = precision or config.default_precision
    if f.D != cm.D:
        raise ValueError(f"form has level {f.D}, field has D = {cm.D}")
    P = BorcherdsProduct(f, trace_bound)

    certificate = None
    if certify:
        certificate = gamma_invariance_certificate(P, precision=precision)
        if not certificate.passed:
            raise ConstructionFailed(f"Gamma-invariance certificate failed (defect {certificate.max_defect:.3e})")

    cycle = cycle or enumerate_cm(cm, precision)
    analytic = Interval.exact(0)
    values = []
    # serial: mpmath working precision is process-global
    for point in sorted(cycle.points, key=lambda p: p.key):
        try:
            value = evaluate_log_petersson(P, point, precision)
        except OnDivisor as exc:
            raise DivisorHit(point.key, exc.n) from exc
        values.append(value)
        analytic = analytic + value.log_norm_sq.scale(point.multiplicity / 2)

    if P.principal and table is None:
        table = bm_table(cm, max(P.principal))
    symbolic = arithmetic_side(P, table, cycle.c_prime)
    if symbolic.lambda_coeff:
        numeric = symbolic.evaluate(lambda_derivative_at_zero(cm, precision))
    else:
        numeric = Interval.exact(symbolic.evaluate())

    gap = abs(analytic.mid - numeric.mid)
    passed = bool(gap <= analytic.rad + numeric.rad + config.identity_tolerance)
    logger.info(
        f"CM value: analytic {mpmath.nstr(analytic.mid, 12)}, arithmetic {mpmath.nstr(numeric.mid, 12)}",
        extra={"D": cm.D, "trace_bound": trace_bound, "points": len(values)},
    )
    return CMValueReport(analytic, symbolic, numeric, passed, trace_bound, cycle.c_prime, values, certificate)
