"""Exact rationals, log-linear coefficients, intervals and small number theory helpers."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import mpmath
from sympy import factorint, jacobi_symbol
from tenacity import (RetryError, retry, retry_if_exception_type,
                      stop_after_attempt)

from config import config
from errors import OverBound, PrecisionUnreachable
from logging_config import logger

BigRat = Fraction

RatLike = Union[int, Fraction, str]


def rat(value: RatLike) -> Fraction:
    """Parse an int, Fraction or "p/q" string into a reduced rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value).strip())


def rat_str(value: Fraction) -> str:
    """Canonical "p/q" string ("p" when the denominator is 1)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class LogLinear:
    """constant + lambda_coeff * Lambda'(0, chi) + sum_p log_terms[p] * log p."""

    constant: Fraction = Fraction(0)
    lambda_coeff: Fraction = Fraction(0)
    log_terms: Tuple[Tuple[int, Fraction], ...] = ()

    def __post_init__(self):
        merged: Dict[int, Fraction] = {}
        for p, c in self.log_terms:
            merged[int(p)] = merged.get(int(p), Fraction(0)) + Fraction(c)
        cleaned = tuple(sorted((p, c) for p, c in merged.items() if c != 0))
        object.__setattr__(self, "constant", Fraction(self.constant))
        object.__setattr__(self, "lambda_coeff", Fraction(self.lambda_coeff))
        object.__setattr__(self, "log_terms", cleaned)

    @classmethod
    def zero(cls) -> "LogLinear":
        return cls()

    @classmethod
    def log(cls, p: int, coeff: RatLike = 1) -> "LogLinear":
        return cls(log_terms=((p, rat(coeff)),))

    @classmethod
    def lambda_prime(cls, coeff: RatLike = 1) -> "LogLinear":
        return cls(lambda_coeff=rat(coeff))

    @classmethod
    def rational(cls, value: RatLike) -> "LogLinear":
        return cls(constant=rat(value))

    @property
    def logs(self) -> Dict[int, Fraction]:
        return dict(self.log_terms)

    def is_zero(self) -> bool:
        return self.constant == 0 and self.lambda_coeff == 0 and not self.log_terms

    def __add__(self, other: "LogLinear") -> "LogLinear":
        if not isinstance(other, LogLinear):
            return NotImplemented
        return LogLinear(
            self.constant + other.constant,
            self.lambda_coeff + other.lambda_coeff,
            self.log_terms + other.log_terms,
        )

    def __neg__(self) -> "LogLinear":
        return self.scale(-1)

    def __sub__(self, other: "LogLinear") -> "LogLinear":
        return self + (-other)

    def scale(self, factor: RatLike) -> "LogLinear":
        f = rat(factor)
        return LogLinear(
            self.constant * f,
            self.lambda_coeff * f,
            tuple((p, c * f) for p, c in self.log_terms),
        )

    def __mul__(self, factor: RatLike) -> "LogLinear":
        if isinstance(factor, LogLinear):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__

    def evaluate(self, lambda_prime=0):
        """Numeric value; lambda_prime is a number or an Interval for Lambda'(0, chi)."""
        value = mpmath.mpf(self.constant.numerator) / self.constant.denominator
        for p, c in self.log_terms:
            value += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p)
        if isinstance(lambda_prime, Interval):
            lam = Interval(value, mpmath.mpf(0)) + lambda_prime.scale(self.lambda_coeff)
            return lam
        return value + mpmath.mpf(self.lambda_coeff.numerator) / self.lambda_coeff.denominator * lambda_prime

    def to_json(self) -> dict:
        return {
            "constant": rat_str(self.constant),
            "lambda": rat_str(self.lambda_coeff),
            "logs": {str(p): rat_str(c) for p, c in self.log_terms},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LogLinear":
        return cls(
            rat(data.get("constant", 0)),
            rat(data.get("lambda", 0)),
            tuple((int(p), rat(c)) for p, c in data.get("logs", {}).items()),
        )

    def __str__(self) -> str:
        parts = []
        if self.constant:
            parts.append(rat_str(self.constant))
        if self.lambda_coeff:
            parts.append(f"{rat_str(self.lambda_coeff)}*L'(0)")
        parts.extend(f"{rat_str(c)}*log({p})" for p, c in self.log_terms)
        return " + ".join(parts) if parts else "0"


def lsum(values: Iterable[LogLinear]) -> LogLinear:
    total = LogLinear.zero()
    for v in values:
        total = total + v
    return total


@dataclass(frozen=True)
class Interval:
    """Midpoint-radius real interval over mpmath floats."""

    mid: mpmath.mpf
    rad: mpmath.mpf

    def __post_init__(self):
        object.__setattr__(self, "mid", mpmath.mpf(self.mid))
        object.__setattr__(self, "rad", abs(mpmath.mpf(self.rad)))

    @classmethod
    def exact(cls, value) -> "Interval":
        return cls(mpmath.mpf(value), mpmath.mpf(0))

    @property
    def lower(self):
        return self.mid - self.rad

    @property
    def upper(self):
        return self.mid + self.rad

    def contains(self, value) -> bool:
        return abs(mpmath.mpf(value) - self.mid) <= self.rad

    def __add__(self, other: "Interval") -> "Interval":
        if not isinstance(other, Interval):
            other = Interval.exact(other)
        mid = self.mid + other.mid
        return Interval(mid, self.rad + other.rad + mpmath.eps * abs(mid))

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.mid, self.rad)

    def __sub__(self, other: "Interval") -> "Interval":
        if not isinstance(other, Interval):
            other = Interval.exact(other)
        return self + (-other)

    def __mul__(self, other) -> "Interval":
        if not isinstance(other, Interval):
            return self.scale(other)
        mid = self.mid * other.mid
        rad = abs(self.mid) * other.rad + abs(other.mid) * self.rad + self.rad * other.rad
        return Interval(mid, rad + mpmath.eps * abs(mid))

    __rmul__ = __mul__

    def scale(self, factor) -> "Interval":
        if isinstance(factor, Fraction):
            f = mpmath.mpf(factor.numerator) / factor.denominator
        else:
            f = mpmath.mpf(factor)
        return Interval(self.mid * f, self.rad * abs(f))

    def to_json(self, digits: int = 30) -> list:
        return [mpmath.nstr(self.mid, digits), mpmath.nstr(self.rad, 6)]

    @classmethod
    def from_json(cls, data) -> "Interval":
        return cls(mpmath.mpf(data[0]), mpmath.mpf(data[1]))

    def __repr__(self) -> str:
        return f"Interval({mpmath.nstr(self.mid, 20)} +/- {mpmath.nstr(self.rad, 3)})"


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) with the usual conventions at 2, -1 and 0."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = (n & -n).bit_length() - 1
    if v:
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5) and v % 2 == 1:
            result = -result
        n >>= v
    if n == 1:
        return result
    return result * int(jacobi_symbol(a % n, n))


def factor(n: int) -> Dict[int, int]:
    """Prime factorization {p: e} of a positive integer below the configured bound."""
    if n < 1:
        raise ValueError(f"factor expects a positive integer, got {n}")
    if n > config.factor_bound:
        raise OverBound(f"{n} exceeds factorization bound {config.factor_bound}")
    return dict(sorted(factorint(n).items()))


def divisors(n: int) -> list:
    divs = [1]
    for p, e in factor(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def squarefree_part(n: int) -> int:
    """Signed squarefree core of a nonzero integer."""
    sign = -1 if n < 0 else 1
    core = 1
    for p, e in factor(abs(n)).items():
        if e % 2:
            core *= p
    return sign * core


class _GuardBitsTooLow(Exception):
    """Raised internally to trigger a precision escalation."""


def certified_eval(func, precision: int, attempts: int = 4, label: str = "value") -> Interval:
    """Evaluate func() at two working precisions and certify the difference.

    Working precision grows with every tenacity attempt; PrecisionUnreachable is
    raised once the attempts are spent.
    """
    guard = {"bits": 24}

    @retry(
        stop=stop_after_attempt(attempts),
        retry=retry_if_exception_type(_GuardBitsTooLow),
    )
    def _attempt() -> Interval:
        bits = guard["bits"]
        guard["bits"] *= 2
        with mpmath.workprec(precision + bits):
            coarse = func()
        with mpmath.workprec(precision + 2 * bits):
            fine = func()
        with mpmath.workprec(precision + 2 * bits):
            rad = abs(fine - coarse) + abs(fine) * mpmath.mpf(2) ** (-(precision + bits))
            target = abs(fine) * mpmath.mpf(2) ** (-precision)
            if rad > target and fine != 0:
                logger.debug(f"escalating working precision for {label}", extra={"precision": precision + 2 * bits})
                raise _GuardBitsTooLow()
            return Interval(fine, rad)

    try:
        return _attempt()
    except RetryError:
        raise PrecisionUnreachable(f"{label}: {precision} bits not reachable after {attempts} attempts")


def upper_incomplete_gamma(s, x, precision: Optional[int] = None) -> Interval:
    """Certified interval for Gamma(s, x) = int_x^inf e^-t t^(s-1) dt."""
    if mpmath.mpf(x) <= 0:
        raise ValueError("upper_incomplete_gamma requires x > 0")
    precision = precision or config.default_precision
    s_val, x_val = str(s), str(x)
    return certified_eval(
        lambda: mpmath.gammainc(mpmath.mpf(s_val), mpmath.mpf(x_val)),
        precision,
        label=f"Gamma({s_val},{x_val})",
    )


class InsufficientWorkingPrecision(Exception):
    """An intermediate result is not yet accurate enough."""


def refine_until(compute, precision: int, attempts: int = 3, label: str = "value") -> Interval:
    """Run compute(working_bits) -> Interval with growing working precision.

    Accepts the first interval whose radius is at most 2^-precision relative to
    max(|mid|, 1); raises PrecisionUnreachable when tenacity gives up.
    """
    bits = {"extra": 16}

    @retry(
        stop=stop_after_attempt(attempts),
        retry=retry_if_exception_type(InsufficientWorkingPrecision),
    )
    def _attempt() -> Interval:
        working = precision + bits["extra"]
        bits["extra"] *= 2
        with mpmath.workprec(working):
            result = compute(working)
            scale = max(abs(result.mid), mpmath.mpf(1))
            if result.rad > scale * mpmath.mpf(2) ** (-precision):
                logger.debug(f"{label}: radius {mpmath.nstr(result.rad, 3)} too large",
                             extra={"precision": working, "radius": float(result.rad)})
                raise InsufficientWorkingPrecision()
            return result

    try:
        return _attempt()
    except RetryError:
        raise PrecisionUnreachable(f"{label}: {precision} bits not certified after {attempts} attempts")
