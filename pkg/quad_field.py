"""Real quadratic fields Q(sqrt m): elements, HNF ideals, splitting, units and class groups."""

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import mpmath
from cachetools import LRUCache, cached
from sympy import isprime, primerange
from sympy.ntheory import sqrt_mod

from arith_kernel import RatLike, factor, kronecker, rat, rat_str
from config import config
from errors import OverBound
from lattice import Lattice, short_vectors
from logging_config import logger


@dataclass(frozen=True)
class QuadField:
    """Q(sqrt m) with integral basis {1, omega}."""

    m: int

    def __post_init__(self):
        if self.m <= 1:
            raise ValueError(f"QuadField needs squarefree m > 1, got {self.m}")
        if any(e > 1 for e in factor(self.m).values()):
            raise ValueError(f"{self.m} is not squarefree")

    @property
    def disc(self) -> int:
        return self.m if self.m % 4 == 1 else 4 * self.m

    @property
    def omega_half(self) -> bool:
        """True when omega = (1 + sqrt m)/2."""
        return self.m % 4 == 1

    def elem(self, a: RatLike = 0, b: RatLike = 0) -> "QuadElem":
        return QuadElem(self, rat(a), rat(b))

    @property
    def one(self) -> "QuadElem":
        return self.elem(1)

    @property
    def omega(self) -> "QuadElem":
        return self.from_coords(0, 1)

    @property
    def sqrt_m(self) -> "QuadElem":
        return self.elem(0, 1)

    @property
    def sqrt_disc(self) -> "QuadElem":
        return self.elem(0, 1 if self.omega_half else 2)

    def from_coords(self, x: RatLike, y: RatLike) -> "QuadElem":
        """x + y*omega."""
        x, y = rat(x), rat(y)
        if self.omega_half:
            return self.elem(x + y / 2, y / 2)
        return self.elem(x, y)

    @property
    def ring_of_integers(self) -> "QuadIdeal":
        return QuadIdeal.principal(self.one)

    def different(self) -> "QuadIdeal":
        return QuadIdeal.principal(self.sqrt_disc)

    def inverse_different(self) -> "QuadIdeal":
        return QuadIdeal.principal(self.sqrt_disc.inverse())

    def minkowski_bound(self) -> float:
        return math.sqrt(self.disc) / 2

    def to_json(self) -> dict:
        return {"m": self.m, "disc": self.disc}

    def __repr__(self) -> str:
        return f"QuadField(Q(sqrt {self.m}))"


@dataclass(frozen=True)
class QuadElem:
    """a + b*sqrt(m) with rational a, b."""

    field: QuadField
    a: Fraction
    b: Fraction

    def _coerce(self, other) -> "QuadElem":
        if isinstance(other, QuadElem):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        return self.field.elem(rat(other))

    def __add__(self, other) -> "QuadElem":
        o = self._coerce(other)
        return QuadElem(self.field, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self) -> "QuadElem":
        return QuadElem(self.field, -self.a, -self.b)

    def __sub__(self, other) -> "QuadElem":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "QuadElem":
        return self._coerce(other) - self

    def __mul__(self, other) -> "QuadElem":
        o = self._coerce(other)
        m = self.field.m
        return QuadElem(self.field, self.a * o.a + m * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conj(self) -> "QuadElem":
        return QuadElem(self.field, self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - self.field.m * self.b * self.b

    def trace(self) -> Fraction:
        return 2 * self.a

    def inverse(self) -> "QuadElem":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conj()
        return QuadElem(self.field, c.a / n, c.b / n)

    def __truediv__(self, other) -> "QuadElem":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "QuadElem":
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "QuadElem":
        if k < 0:
            return self.inverse() ** (-k)
        result = self.field.one
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def coords(self) -> Tuple[Fraction, Fraction]:
        """Coordinates on the integral basis {1, omega}."""
        if self.field.omega_half:
            return (self.a - self.b, 2 * self.b)
        return (self.a, self.b)

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords())

    def sign(self, embedding: int = 0) -> int:
        """Exact sign of sigma_1 (embedding 0, +sqrt m) or sigma_2 (embedding 1)."""
        a, b = self.a, (self.b if embedding == 0 else -self.b)
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: compare a^2 with m b^2
        dominant_a = a * a > self.field.m * b * b
        return (1 if a > 0 else -1) if dominant_a else (1 if b > 0 else -1)

    def embed(self, embedding: int = 0):
        root = mpmath.sqrt(self.field.m)
        b = self.b if embedding == 0 else -self.b
        return mpmath.mpf(self.a.numerator) / self.a.denominator + mpmath.mpf(b.numerator) / b.denominator * root

    def embeddings(self):
        return (self.embed(0), self.embed(1))

    def to_json(self) -> dict:
        return {"a": rat_str(self.a), "b": rat_str(self.b)}

    def __repr__(self) -> str:
        return f"({rat_str(self.a)} + {rat_str(self.b)}*sqrt{self.field.m})"


def is_totally_positive(x: QuadElem) -> bool:
    if x.is_zero():
        raise ValueError("is_totally_positive is undefined at 0")
    return x.sign(0) > 0 and x.sign(1) > 0


@dataclass(frozen=True)
class QuadIdeal:
    """Fractional ideal: lattice on the basis {1, omega} in HNF [[a, b], [0, c]] / den."""

    field: QuadField
    lattice: Lattice

    @classmethod
    def from_generators(cls, K: QuadField, gens: Sequence[QuadElem]) -> "QuadIdeal":
        """O_K-module generated by gens."""
        vecs = []
        for g in gens:
            vecs.append(g.coords())
            vecs.append((g * K.omega).coords())
        return cls(K, Lattice.from_generators(vecs, 2))

    @classmethod
    def principal(cls, x: QuadElem) -> "QuadIdeal":
        return cls.from_generators(x.field, [x])

    @classmethod
    def from_hnf(cls, K: QuadField, hnf: Sequence[Sequence[int]], den: int = 1) -> "QuadIdeal":
        (a, b), (_, c) = hnf
        return cls(K, Lattice.from_generators([(Fraction(a, den), 0), (Fraction(b, den), Fraction(c, den))], 2))

    @property
    def hnf(self) -> List[List[int]]:
        (a, _), (b, c) = self.lattice.cols
        return [[a, b], [0, c]]

    @property
    def den(self) -> int:
        return self.lattice.den

    @property
    def basis(self) -> List[QuadElem]:
        return [self.field.from_coords(*v) for v in self.lattice.basis]

    def norm(self) -> Fraction:
        return self.lattice.det

    def is_integral(self) -> bool:
        return self.lattice.is_integral()

    def is_unit_ideal(self) -> bool:
        return self.is_integral() and self.norm() == 1

    def contains(self, x: QuadElem) -> bool:
        return self.lattice.contains(x.coords())

    def contains_ideal(self, other: "QuadIdeal") -> bool:
        return self.lattice.contains_lattice(other.lattice)

    def __mul__(self, other) -> "QuadIdeal":
        if isinstance(other, QuadIdeal):
            gens = [x * y for x in self.basis for y in other.basis]
            return QuadIdeal(self.field, Lattice.from_generators([g.coords() for g in gens], 2))
        if isinstance(other, QuadElem):
            return self * QuadIdeal.principal(other)
        return QuadIdeal(self.field, self.lattice.scale(rat(other)))

    __rmul__ = __mul__

    def __add__(self, other: "QuadIdeal") -> "QuadIdeal":
        return QuadIdeal(self.field, self.lattice + other.lattice)

    def intersect(self, other: "QuadIdeal") -> "QuadIdeal":
        return QuadIdeal(self.field, self.lattice.intersect(other.lattice))

    def conj(self) -> "QuadIdeal":
        return QuadIdeal.from_generators(self.field, [b.conj() for b in self.basis])

    def inverse(self) -> "QuadIdeal":
        return self.conj() * (1 / self.norm())

    def __truediv__(self, other: "QuadIdeal") -> "QuadIdeal":
        return self * other.inverse()

    def __pow__(self, k: int) -> "QuadIdeal":
        if k < 0:
            return self.inverse() ** (-k)
        result = self.field.ring_of_integers
        for _ in range(k):
            result = result * self
        return result

    def divides(self, other: "QuadIdeal") -> bool:
        """self | other, i.e. other is contained in self."""
        return self.contains_ideal(other)

    def min_integer(self) -> Fraction:
        """Positive generator of self intersected with Q."""
        return Fraction(self.hnf[0][0], self.den)

    def reduce(self, x: QuadElem) -> QuadElem:
        """Canonical representative of x modulo an integral ideal."""
        (a, b), (_, c) = self.hnf
        u, v = x.coords()
        if u.denominator != 1 or v.denominator != 1:
            raise ValueError(f"{x} is not integral")
        u, v = int(u), int(v)
        v_red = v % c
        u_red = (u - b * ((v - v_red) // c)) % a
        return self.field.from_coords(u_red, v_red)

    def residues(self) -> List[QuadElem]:
        """Representatives {x + y omega : 0 <= x < a, 0 <= y < c} of O_K / self."""
        (a, _), (_, c) = self.hnf
        return [self.field.from_coords(x, y) for y in range(c) for x in range(a)]

    def to_json(self) -> dict:
        return {"m": self.field.m, "hnf": self.hnf, "den": self.den}

    def __repr__(self) -> str:
        return f"QuadIdeal(m={self.field.m}, hnf={self.hnf}, den={self.den})"


@dataclass(frozen=True)
class SplitType:
    """Decomposition of a rational prime: kind in {'split', 'inert', 'ramified'}."""

    kind: str
    primes: Tuple[QuadIdeal, ...]

    @property
    def residue_degree(self) -> int:
        return 2 if self.kind == "inert" else 1


def _omega_min_poly(K: QuadField) -> Tuple[int, int]:
    """(B, C) with omega a root of X^2 + B X + C."""
    if K.omega_half:
        return -1, (1 - K.m) // 4
    return 0, -K.m


def _roots_mod_p(B: int, C: int, p: int) -> List[int]:
    if p == 2:
        return [r for r in range(2) if (r * r + B * r + C) % 2 == 0]
    disc = (B * B - 4 * C) % p
    s = sqrt_mod(disc, p)
    if s is None:
        return []
    inv2 = pow(2, -1, p)
    return sorted({((-B + s) * inv2) % p, ((-B - s) * inv2) % p})


_split_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=8192), key=lambda K, p: (K.m, p), lock=_split_lock)
def split_prime(K: QuadField, p: int) -> SplitType:
    """Factor pO_K into prime ideals."""
    if not isprime(p):
        raise ValueError(f"{p} is not prime")
    symbol = kronecker(K.disc, p)
    if symbol == -1:
        return SplitType("inert", (QuadIdeal.principal(K.elem(p)),))
    B, C = _omega_min_poly(K)
    roots = _roots_mod_p(B, C, p)
    primes = tuple(
        QuadIdeal.from_generators(K, [K.elem(p), K.omega - r]) for r in roots
    )
    if symbol == 0:
        return SplitType("ramified", primes[:1])
    return SplitType("split", primes)


def ideals_of_norm(K: QuadField, n: int) -> List[QuadIdeal]:
    """All integral ideals of norm exactly n."""
    choices: List[List[QuadIdeal]] = []
    for p, e in factor(n).items():
        st = split_prime(K, p)
        if st.kind == "inert":
            if e % 2:
                return []
            choices.append([st.primes[0] ** (e // 2)])
        elif st.kind == "ramified":
            choices.append([st.primes[0] ** e])
        else:
            P, Pbar = st.primes
            choices.append([P**i * Pbar ** (e - i) for i in range(e + 1)])
    result = []
    for combo in itertools.product(*choices):
        ideal = K.ring_of_integers
        for part in combo:
            ideal = ideal * part
        result.append(ideal)
    return result


def ideals_of_norm_bruteforce(K: QuadField, n: int) -> List[QuadIdeal]:
    """Enumerate HNF matrices [[a, b], [0, c]] with ac = n and keep the O_K-stable ones."""
    result = []
    for a in range(1, n + 1):
        if n % a:
            continue
        c = n // a
        for b in range(a):
            lat = Lattice.from_generators([(a, 0), (b, c)], 2)
            omega_times = [(K.from_coords(*v) * K.omega).coords() for v in lat.basis]
            if all(lat.contains(w) for w in omega_times):
                result.append(QuadIdeal(K, lat))
    return result


def factor_ideal(a: QuadIdeal) -> List[Tuple[QuadIdeal, int]]:
    """Prime factorization of a fractional ideal as (prime, exponent) pairs."""
    K = a.field
    den = a.den
    num = a * den
    rational_primes = set(factor(int(num.norm())).keys()) | set(factor(den).keys() if den > 1 else [])
    result = []
    for p in sorted(rational_primes):
        for P in split_prime(K, p).primes:
            v = valuation(a, P)
            if v:
                result.append((P, v))
    return result


def valuation(a: QuadIdeal, P: QuadIdeal) -> int:
    """ord_P of a fractional ideal."""
    den = a.den
    num = a * den
    Pinv = P.inverse()
    v = 0
    current = num
    while True:
        nxt = current * Pinv
        if not nxt.is_integral():
            break
        current = nxt
        v += 1
    if den > 1:
        p = int(P.min_integer())
        e = valuation(QuadIdeal.principal(a.field.elem(p)), P) if den % p == 0 else 0
        k = 0
        d = den
        while d % p == 0:
            d //= p
            k += 1
        v -= e * k
    return v


@cached(cache=LRUCache(maxsize=512), key=lambda K: K.m, lock=threading.Lock())
def fundamental_unit(K: QuadField) -> QuadElem:
    """Fundamental unit > 1 from the continued fraction of omega."""
    if K.disc > config.disc_bound:
        raise OverBound(f"disc {K.disc} exceeds bound {config.disc_bound}")
    m = K.m
    root = math.isqrt(m)
    P, Q = (1, 2) if K.omega_half else (0, 1)
    p_prev, p_cur = 0, 1
    q_prev, q_cur = 1, 0
    omega = K.omega
    for _ in range(10 * K.disc + 10):
        a = (P + root) // Q
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        u = K.elem(p_cur) - omega * q_cur
        if abs(u.norm()) == 1:
            eps = u.conj()
            if eps.sign(0) < 0:
                eps = -eps
            if eps.embed(0) < 1:
                eps = eps.inverse()
            logger.debug(f"fundamental unit of Q(sqrt {m}): {eps}", extra={"D": K.disc})
            return eps
        P = a * Q - P
        Q = (m - P * P) // Q
    raise OverBound(f"continued fraction of omega did not close for m={m}")


def totally_positive_unit(K: QuadField) -> QuadElem:
    """Generator > 1 of the totally positive units."""
    eps = fundamental_unit(K)
    return eps if eps.norm() == 1 else eps * eps


def trace_form_gram(basis: Sequence[QuadElem]) -> List[List[Fraction]]:
    """Gram matrix of Tr(x y) = sigma_1(x)sigma_1(y) + sigma_2(x)sigma_2(y)."""
    return [[(x * y).trace() for y in basis] for x in basis]


def generators_within(a: QuadIdeal, height: RatLike) -> Iterator[Tuple[Fraction, QuadElem]]:
    """Generators x of a with Tr(x^2) <= height * N(a), as (Tr(x^2) / N(a), x)."""
    den = a.den
    num = a * den
    n = num.norm()
    basis = num.basis
    for u, value in short_vectors(trace_form_gram(basis), Fraction(height) * n):
        x = basis[0] * u[0] + basis[1] * u[1]
        if abs(x.norm()) == n:
            yield Fraction(value) / n, x / den


def principal_generator(a: QuadIdeal) -> Optional[QuadElem]:
    """A generator of a (fractional) principal ideal, or None.

    Unit balancing bounds a generator by sigma_1^2 + sigma_2^2 <= 2 N(a) eps.
    """
    eps = fundamental_unit(a.field)
    eps_bound = Fraction(int(mpmath.ceil(eps.embed(0) * 1000)) + 1, 1000)
    return next((x for _, x in generators_within(a, 2 * eps_bound)), None)


def is_principal(a: QuadIdeal) -> bool:
    return principal_generator(a) is not None


def same_class(a: QuadIdeal, b: QuadIdeal) -> bool:
    return is_principal(a / b)


@dataclass
class ClassGroup:
    """Class number with ideal representatives (the first is O_K)."""

    h: int
    representatives: List[QuadIdeal] = field(default_factory=list)

    def class_index(self, a: QuadIdeal) -> int:
        for i, r in enumerate(self.representatives):
            if same_class(a, r):
                return i
        raise ValueError(f"{a} matches no class representative")


def close_classes(unit, generators: Sequence, equivalent) -> List:
    """Representatives of the group generated by the classes of generators."""
    reps = [unit]
    frontier = list(reps)
    while frontier:
        new_frontier = []
        for r in frontier:
            for P in generators:
                candidate = r * P
                if not any(equivalent(candidate, s) for s in reps):
                    reps.append(candidate)
                    new_frontier.append(candidate)
        frontier = new_frontier
    return reps


def residue_power(x: QuadElem, k: int, P: QuadIdeal) -> QuadElem:
    result = P.reduce(x.field.one)
    base = P.reduce(x)
    while k:
        if k & 1:
            result = P.reduce(result * base)
        base = P.reduce(base * base)
        k >>= 1
    return result


def legendre_mod(x: QuadElem, P: QuadIdeal) -> int:
    """Quadratic residue symbol of an integral x modulo a prime P of odd norm."""
    q = int(P.norm())
    if q % 2 == 0:
        raise ValueError("legendre_mod needs a prime of odd norm")
    if P.reduce(x).is_zero():
        return 0
    r = residue_power(x, (q - 1) // 2, P)
    return 1 if r == x.field.one else -1


def sqrt_mod_prime(x: QuadElem, P: QuadIdeal) -> Optional[QuadElem]:
    """Some r with r^2 = x mod P, or None."""
    K = x.field
    q = int(P.norm())
    (a, _), _ = P.hnf
    if q == a:
        # degree one: O_K/P = Z/p through the coordinate reduction
        u, _ = P.reduce(x).coords()
        s = sqrt_mod(int(u), q) if q > 2 else int(u) % 2
        return None if s is None else K.elem(s)
    if q > 10**6:
        raise OverBound(f"residue field of size {q} too large for square-root search")
    target = P.reduce(x)
    for r in P.residues():
        if P.reduce(r * r) == target:
            return r
    return None


@cached(cache=LRUCache(maxsize=256), key=lambda K: K.m, lock=threading.Lock())
def class_number(K: QuadField) -> ClassGroup:
    """Class group by closing the classes of primes below the Minkowski bound."""
    if K.disc > config.disc_bound:
        raise OverBound(f"disc {K.disc} exceeds bound {config.disc_bound}")
    bound = K.minkowski_bound()
    generators = []
    for p in primerange(2, int(bound) + 1):
        for P in split_prime(K, p).primes:
            if P.norm() <= bound:
                generators.append(P)
    reps = close_classes(K.ring_of_integers, generators, same_class)
    logger.info(f"class number of Q(sqrt {K.m}) is {len(reps)}", extra={"D": K.disc})
    return ClassGroup(len(reps), reps)
