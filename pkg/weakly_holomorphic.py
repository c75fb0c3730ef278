"""Weakly holomorphic weight-0 plus-space forms on Gamma_0(D) with character (D/.).

A form with principal part P is written as f = G / Delta(D tau)^j where G runs
over the span of E_a^+(tau) * E_4^alpha E_6^beta(D tau) in weight 12j; the
coefficients of G are fixed by exact linear algebra and every result is checked
numerically for modularity before it is returned.
"""

import random
import threading
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Tuple, Union

import mpmath
from cachetools import LRUCache, cached
from sympy import Matrix, Rational, bernoulli, divisor_sigma, divisors

from arith_kernel import kronecker, rat_str
from config import config
from errors import BasisConstructionFailed, ModularityCertificateFailed, NotPlusSpace
from logging_config import logger
from qexpansion import ScalarQExpansion

Series = List[Fraction]

MAX_EXTRA_LEVELS = 2

_blocks_lock = threading.Lock()


def _mul(a: Series, b: Series, length: int) -> Series:
    out = [Fraction(0)] * length
    for i, x in enumerate(a[:length]):
        if x == 0:
            continue
        for j, y in enumerate(b[: length - i]):
            if y:
                out[i + j] += x * y
    return out


def _inverse(a: Series, length: int) -> Series:
    """1/a for a power series with a[0] != 0."""
    inv = [Fraction(0)] * length
    inv[0] = 1 / a[0]
    for n in range(1, length):
        acc = sum((a[k] * inv[n - k] for k in range(1, min(n, len(a) - 1) + 1)), Fraction(0))
        inv[n] = -acc * inv[0]
    return inv


def _rescale(a: Series, D: int, length: int) -> Series:
    """a(D tau) truncated to length."""
    out = [Fraction(0)] * length
    for n, c in enumerate(a):
        if n * D >= length:
            break
        out[n * D] = c
    return out


@cached(cache=LRUCache(maxsize=64), key=lambda k, length: (k, length), lock=_blocks_lock)
def level_one_eisenstein(k: int, length: int) -> Tuple[Fraction, ...]:
    """E_4 or E_6 on SL_2(Z)."""
    factor = {4: 240, 6: -504}[k]
    return tuple([Fraction(1)] + [Fraction(factor * int(divisor_sigma(n, k - 1))) for n in range(1, length)])


@cached(cache=LRUCache(maxsize=64), key=lambda length: length, lock=_blocks_lock)
def delta_series(length: int) -> Tuple[Fraction, ...]:
    """Delta = (E_4^3 - E_6^2) / 1728 = q - 24 q^2 + ..."""
    e4 = list(level_one_eisenstein(4, length))
    e6 = list(level_one_eisenstein(6, length))
    cube = _mul(_mul(e4, e4, length), e4, length)
    square = _mul(e6, e6, length)
    return tuple((x - y) / 1728 for x, y in zip(cube, square))


def generalized_bernoulli(k: int, D: int) -> Fraction:
    """B_{k, chi_D} = D^(k-1) sum_{a=1}^{D} chi_D(a) B_k(a/D)."""
    total = Rational(0)
    for a in range(1, D + 1):
        chi = kronecker(D, a)
        if chi:
            total += chi * bernoulli(k, Rational(a, D))
    total *= Rational(D) ** (k - 1)
    return Fraction(int(total.p), int(total.q))


@cached(cache=LRUCache(maxsize=256), key=lambda D, k, length: (D, k, length), lock=_blocks_lock)
def eisenstein_plus(D: int, k: int, length: int) -> Tuple[Fraction, ...]:
    """E_k^+ = 1 + sum_n (2 / L(1-k, chi_D)) sum_{d|n} d^(k-1) (chi_D(d) + chi_D(n/d)) q^n."""
    if k < 2 or k % 2:
        raise ValueError("plus-space Eisenstein series need even weight k >= 2")
    L_value = -generalized_bernoulli(k, D) / k
    scale = 2 / L_value
    coeffs = [Fraction(1)]
    for n in range(1, length):
        s = sum(d ** (k - 1) * (kronecker(D, d) + kronecker(D, n // d)) for d in divisors(n))
        coeffs.append(scale * s)
    logger.debug("plus-space Eisenstein series built", extra={"D": D, "n_terms": length})
    return tuple(coeffs)


def _level_one_monomials(weight: int) -> List[Tuple[int, int]]:
    return [(a, (weight - 4 * a) // 6) for a in range(weight // 4 + 1) if (weight - 4 * a) % 6 == 0]


def spanning_set(D: int, weight: int, length: int) -> List[Tuple[str, Series]]:
    """E_a^+(tau) E_4^alpha E_6^beta (D tau) with a + 4 alpha + 6 beta = weight."""
    blocks = []
    short = length // D + 1
    e4 = list(level_one_eisenstein(4, short))
    e6 = list(level_one_eisenstein(6, short))
    for a in range(2, weight + 1, 2):
        for alpha, beta in _level_one_monomials(weight - a):
            g = [Fraction(1)] + [Fraction(0)] * (short - 1)
            for _ in range(alpha):
                g = _mul(g, e4, short)
            for _ in range(beta):
                g = _mul(g, e6, short)
            series = _mul(list(eisenstein_plus(D, a, length)), _rescale(g, D, length), length)
            blocks.append((f"E{a}+ * E4^{alpha} E6^{beta}(D tau)", series))
    return blocks


@dataclass
class Obstruction:
    """No form with the requested principal part exists in the constructed space."""

    D: int
    principal_part: Dict[int, int]
    weights_tried: List[int]
    rank: int
    conditions: int
    message: str

    def to_json(self) -> dict:
        data = asdict(self)
        data["principal_part"] = {str(n): c for n, c in sorted(self.principal_part.items())}
        return data


@dataclass
class ModularityCertificate:
    max_defect: float
    fricke_spread: float
    fricke_constant: Tuple[str, str]
    points: int
    tolerance: float
    passed: bool
    details: List[Dict[str, str]] = field(default_factory=list)


def _delta_power(D: int, j: int, length: int) -> Series:
    """Delta(D tau)^j truncated to length."""
    base = _rescale(list(delta_series(length // D + 2)), D, length)
    h = base
    for _ in range(j - 1):
        h = _mul(h, base, length)
    return h


def _solve(D: int, principal_part: Mapping[int, int], j: int, precision: int):
    """Coefficients of f = G / Delta(D tau)^j, or None when the system is inconsistent."""
    offset = D * j
    length = precision + offset
    h = _delta_power(D, j, length)
    # G = f * h below q^(Dj) only sees the principal part of f
    target = [Fraction(0)] * offset
    for n, c in principal_part.items():
        for e in range(offset):
            if e - n < length:
                target[e] += c * h[e - n]
    blocks = spanning_set(D, 12 * j, length)
    A = Matrix(offset, len(blocks), lambda r, col: Rational(blocks[col][1][r].numerator, blocks[col][1][r].denominator))
    b = Matrix(offset, 1, lambda r, _: Rational(target[r].numerator, target[r].denominator))
    rank = A.rank()
    try:
        solution, params = A.gauss_jordan_solve(b)
    except ValueError:
        return None, rank, offset
    solution = solution.xreplace({p: 0 for p in params})
    G = [Fraction(0)] * length
    for value, (_, series) in zip(solution, blocks):
        x = Fraction(int(value.p), int(value.q))
        if x:
            G = [g + x * s for g, s in zip(G, series)]
    full = _mul(G, _inverse(h[offset:], length), length)
    coeffs = {n - offset: c for n, c in enumerate(full) if c and n - offset < precision}
    return coeffs, rank, offset


def construct_weakly_holomorphic(
    D: int, principal_part: Mapping[int, int], precision: int = 120, certify: bool = True
) -> Union[ScalarQExpansion, Obstruction]:
    """Weight-0 plus-space form on Gamma_0(D), character (D/.), with the given principal part."""
    principal_part = {int(n): int(c) for n, c in principal_part.items() if c}
    if any(n >= 0 for n in principal_part):
        raise ValueError("principal part exponents must be negative")
    bad = [n for n in principal_part if kronecker(D, n) == -1]
    if bad:
        raise NotPlusSpace(f"principal part uses non-residue exponents {sorted(bad)}")
    if not principal_part:
        return ScalarQExpansion(0, D, {}, precision)

    depth = max(-n for n in principal_part)
    j0 = max(1, -(-depth // D))
    weights, rank, conditions = [], 0, 0
    for j in range(j0, j0 + MAX_EXTRA_LEVELS + 1):
        weights.append(12 * j)
        coeffs, rank, conditions = _solve(D, principal_part, j, precision)
        if coeffs is not None:
            break
    else:
        message = f"no weight-0 form with principal part {principal_part} in weights {weights}"
        logger.info(message, extra={"D": D})
        return Obstruction(D, dict(principal_part), weights, rank, conditions, message)

    f = ScalarQExpansion(0, D, coeffs, precision)
    if f.principal_part() != {n: Fraction(c) for n, c in principal_part.items()}:
        raise BasisConstructionFailed(
            "solved form does not reproduce the principal part",
            {"requested": {str(n): c for n, c in principal_part.items()},
             "found": {str(n): rat_str(c) for n, c in f.principal_part().items()}},
        )
    if not f.is_plus_space():
        raise BasisConstructionFailed("solved form left the plus space", {"exponents": f.non_plus_exponents()[:10]})
    logger.info("weakly holomorphic form constructed",
                extra={"D": D, "n_terms": len(f.coeffs), "precision": precision})
    if certify:
        cert = modularity_certificate(f)
        if not cert.passed:
            raise ModularityCertificateFailed("numerical modularity test failed", asdict(cert))
    return f


def gamma0_elements(D: int) -> List[Tuple[int, int, int, int]]:
    """[[a, b], [D, d]] in Gamma_0(D) for d = 1..D-1."""
    elements = []
    for d in range(1, D):
        a = pow(d, -1, D)
        b = (a * d - 1) // D
        elements.append((a, b, D, d))
    return elements


def _tail_estimate(f: ScalarQExpansion, y) -> mpmath.mpf:
    q_abs = mpmath.exp(-2 * mpmath.pi * y)
    top = [n for n in f.coeffs if n >= f.precision - 10]
    if not top:
        return mpmath.mpf(0)
    return 10 * max(abs(mpmath.mpf(f.coeffs[n].numerator) / f.coeffs[n].denominator) * q_abs**n for n in top)


def modularity_certificate(f: ScalarQExpansion, points: int = 5, seed: int = 0) -> ModularityCertificate:
    """|f(gamma tau) - chi(d) f(tau)| at sample points for elements of Gamma_0(D), plus the
    Fricke relation f(-1/(D tau)) = C * sum_m a(Dm) q^m."""
    tol = config.modularity_tolerance
    D = f.D
    rng = random.Random(seed)
    details = []
    max_defect = mpmath.mpf(0)
    with mpmath.workprec(128):
        elements = gamma0_elements(D)
        for i in range(points):
            a, b, c, d = elements[i % len(elements)]
            t = mpmath.mpf(rng.uniform(0.8, 1.25))
            # c tau + d = i t keeps Im tau and Im gamma tau both near 1/D
            tau = mpmath.mpc(-d, t) / c
            gtau = (a * tau + b) / (c * tau + d)
            lhs = f.evaluate(gtau)
            rhs = kronecker(D, d) * f.evaluate(tau)
            tail = _tail_estimate(f, min(mpmath.im(tau), mpmath.im(gtau)))
            defect = abs(lhs - rhs) / max(abs(rhs), mpmath.mpf(1)) + tail
            max_defect = max(max_defect, defect)
            details.append({"gamma": f"[[{a},{b}],[{c},{d}]]", "defect": mpmath.nstr(defect, 5)})

        g = ScalarQExpansion(0, D, {n // D: c for n, c in f.coeffs.items() if n % D == 0}, f.precision // D)
        ratios = []
        for _ in range(points):
            s = mpmath.mpf(rng.uniform(0.85, 1.15))
            tau = mpmath.mpc(0, s / mpmath.sqrt(D))
            ratios.append(f.evaluate(-1 / (D * tau)) / g.evaluate(tau) if not g.is_zero() else f.evaluate(-1 / (D * tau)))
        constant = ratios[0]
        spread = max(abs(r - constant) for r in ratios) / max(abs(constant), mpmath.mpf(1))
    passed = bool(max_defect < tol and spread < tol)
    cert = ModularityCertificate(
        float(max_defect), float(spread), (mpmath.nstr(constant.real, 15), mpmath.nstr(constant.imag, 15)),
        points, tol, passed, details,
    )
    logger.info("modularity certificate", extra={"D": D, "points": points, "radius": cert.max_defect})
    return cert
