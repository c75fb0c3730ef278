"""Completed Hecke L-function Lambda(s, chi) of a quadratic extension of a real quadratic field.

Lambda(s) = A^(s/2) (pi^(-(s+1)/2) Gamma((s+1)/2))^2 L(s, chi) has root number +1,
so with phi(x) = 4x K_0(2 pi x) (the inverse Mellin transform of the gamma factor)

    Lambda(s) = sum_n a_n [J(n/sqrt A, s) + J(n/sqrt A, 1 - s)],
    J(c, s)   = int_1^inf phi(c y) y^(s-1) dy.
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Union

import mpmath
from cachetools import LRUCache, cached
from sympy import primerange

from arith_kernel import Interval, refine_until
from cm_quartic import CMQuartic, QuarticField, ReflexData
from config import config
from errors import OverBound
from logging_config import logger
from quad_field import ideals_of_norm, split_prime


@dataclass
class CompletedL:
    """Dirichlet data of L(s, chi) for E/F: a_n = sum over ideals of norm n of chi."""

    E: QuarticField
    A: int
    dirichlet_coeffs: Dict[int, int] = field(default_factory=dict)
    coeff_bound: int = 0

    def a(self, n: int) -> int:
        return self.dirichlet_coeffs.get(n, 0)


def _local_coefficients(E: QuarticField, p: int, e_max: int) -> Dict[int, int]:
    """a_{p^e} for e <= e_max from the splitting of p in F and the chi values."""
    st = split_prime(E.F, p)
    values = [E.chi(P) for P in st.primes]
    local = {}
    for e in range(e_max + 1):
        if st.kind == "split":
            c1, c2 = values
            local[e] = sum(c1**i * c2 ** (e - i) for i in range(e + 1))
        elif st.kind == "inert":
            local[e] = values[0] ** (e // 2) if e % 2 == 0 else 0
        else:
            local[e] = values[0] ** e
    return local


def _build_coefficients(E: QuarticField, n_max: int) -> Dict[int, int]:
    primes = list(primerange(2, n_max + 1))

    def local(p):
        e_max = 0
        while p ** (e_max + 1) <= n_max:
            e_max += 1
        return p, _local_coefficients(E, p, e_max)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        locals_by_prime = dict(pool.map(local, primes))

    coeffs = {1: 1}
    # multiplicative sieve over prime powers
    for p in primes:
        table = locals_by_prime[p]
        current = dict(coeffs)
        for n, value in coeffs.items():
            pk = p
            e = 1
            while n * pk <= n_max:
                current[n * pk] = value * table[e]
                pk *= p
                e += 1
        coeffs = current
    return {n: v for n, v in coeffs.items() if v != 0}


def conductor(E: QuarticField) -> int:
    """A = N_{F/Q}(different of F times d_{E/F})."""
    return E.F.disc * int(E.rel_disc.norm())


_l_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=64), key=lambda E, n_max: (E, n_max), lock=_l_lock)
def completed_l(E: QuarticField, n_max: int) -> CompletedL:
    if n_max > config.factor_bound:
        raise OverBound(f"coefficient length {n_max} too large")
    coeffs = _build_coefficients(E, n_max)
    logger.debug("L-series coefficients built", extra={"n_terms": len(coeffs)})
    return CompletedL(E, conductor(E), coeffs, n_max)


def ideal_count_identity(E: QuarticField, n: int) -> bool:
    """#{E-ideals of norm n} == sum_{d | n} #{F-ideals of norm d} a_{n/d}  (zeta_E = zeta_F L)."""
    L = completed_l(E, n)
    lhs = len(E.ideals_of_norm(n))
    rhs = 0
    for d in range(1, n + 1):
        if n % d == 0:
            rhs += len(ideals_of_norm(E.F, d)) * L.a(n // d)
    return lhs == rhs


def _phi(x):
    return 4 * x * mpmath.besselk(0, 2 * mpmath.pi * x)


def _integral(c, weight):
    """int_1^inf phi(c y) weight(y) dy with mpmath's error estimate."""
    return mpmath.quad(lambda y: _phi(c * y) * weight(y), [1, 1 + 1 / c, mpmath.inf], error=True)


def _term_bound(c, sigma):
    """Bound for int_1^inf phi(c y) y^(sigma-1) dy using K_0(x) <= sqrt(pi/2x) e^-x."""
    a = 2 * mpmath.pi * c
    return 2 * mpmath.sqrt(c) * mpmath.gammainc(sigma + mpmath.mpf(1) / 2, a) / a ** (sigma + mpmath.mpf(1) / 2)


def _truncation(A: int, sigma, precision: int) -> int:
    """Smallest N with the tail sum_{n>N} d(n) bound(n) below 2^-(precision+8)."""
    target = mpmath.mpf(2) ** (-(precision + 8))
    n = 1
    while True:
        tail = _tail(A, sigma, n)
        if tail < target:
            return n
        n = int(n * 1.25) + 1


def _tail(A: int, sigma, N: int):
    root = mpmath.sqrt(A)
    total = mpmath.mpf(0)
    n = N + 1
    while True:
        term = 2 * mpmath.sqrt(n) * _term_bound(n / root, sigma)
        total += term
        if term < total * mpmath.mpf(2) ** (-20):
            ratio = mpmath.exp(-2 * mpmath.pi / root)
            return total + term * ratio / (1 - ratio) * 4
        n += 1


def _source(obj: Union[CMQuartic, ReflexData, QuarticField]) -> QuarticField:
    if isinstance(obj, CMQuartic):
        return obj.E
    if isinstance(obj, ReflexData):
        return obj.E_tilde
    return obj


def lambda_zero_exact(cm: CMQuartic) -> Fraction:
    """Lambda(0, chi) = L(0, chi) = 2^(2 - delta) h_E / (w_E h_F)."""
    return Fraction(2 ** (2 - cm.delta_index) * cm.h_E, cm.w_E * cm.h_F)


def _evaluate(E: QuarticField, precision: int, kernels, sigma, label: str) -> Interval:
    A = conductor(E)

    def compute(working: int) -> Interval:
        N = _truncation(A, sigma, precision)
        L = completed_l(E, N)
        root = mpmath.sqrt(A)
        total = mpmath.mpf(0)
        err = mpmath.mpf(0)
        for n, a_n in sorted(L.dirichlet_coeffs.items()):
            c = n / root
            for weight in kernels:
                value, e = _integral(c, weight)
                total += a_n * value
                err += abs(a_n) * e
        err += len(kernels) * _tail(A, sigma, N)
        return Interval(total, err + mpmath.eps * abs(total) * N)

    result = refine_until(compute, precision, label=label)
    logger.info(f"{label} evaluated", extra={"precision": precision, "radius": float(result.rad)})
    return result


def lambda_numeric(obj, s, precision: int = None) -> Interval:
    """Interval for Lambda(s, chi) at real s."""
    E = _source(obj)
    precision = precision or config.default_precision
    s = mpmath.mpf(s)
    kernels = (lambda y: y ** (s - 1), lambda y: y ** (-s))
    sigma = max(s, 1 - s)
    return _evaluate(E, precision, kernels, sigma, f"Lambda({mpmath.nstr(s, 6)})")


def lambda_derivative(obj, s, precision: int = None) -> Interval:
    """Interval for Lambda'(s, chi): sum a_n int phi(c y) (y^(s-1) - y^(-s)) log y dy."""
    E = _source(obj)
    precision = precision or config.default_precision
    s = mpmath.mpf(s)
    kernels = (lambda y: (y ** (s - 1) - y ** (-s)) * mpmath.log(y),)
    # log y <= y
    sigma = max(s, 1 - s) + 1
    return _evaluate(E, precision, kernels, sigma, f"Lambda'({mpmath.nstr(s, 6)})")


def lambda_derivative_at_zero(cm, precision: int = None) -> Interval:
    return lambda_derivative(cm, 0, precision)
