"""Quartic CM fields E = F(sqrt delta) over a real quadratic F, and their reflex pair.

Everything is relative: elements are pairs (x, y) over F meaning x + y*sqrt(delta),
ideals are full-rank lattices on the coordinates (x_1, x_omega, y_1, y_omega).
"""

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import mpmath
from cachetools import LRUCache, cached
from sympy import Matrix, isprime, primerange

from arith_kernel import factor, rat, squarefree_part
from config import config
from errors import ConstructionFailed, HypothesisViolated, OverBound
from lattice import Lattice, short_vectors
from logging_config import logger
from quad_field import (QuadElem, QuadField, QuadIdeal, class_number,
                        close_classes, factor_ideal, fundamental_unit,
                        legendre_mod, split_prime, sqrt_mod_prime)


@dataclass(frozen=True)
class QuarticElem:
    """x + y*sqrt(delta) with x, y in F."""

    field: "QuarticField"
    x: QuadElem
    y: QuadElem

    def _coerce(self, other) -> "QuarticElem":
        if isinstance(other, QuarticElem):
            return other
        if isinstance(other, QuadElem):
            return QuarticElem(self.field, other, self.field.F.elem(0))
        return QuarticElem(self.field, self.field.F.elem(rat(other)), self.field.F.elem(0))

    def __add__(self, other) -> "QuarticElem":
        o = self._coerce(other)
        return QuarticElem(self.field, self.x + o.x, self.y + o.y)

    __radd__ = __add__

    def __neg__(self) -> "QuarticElem":
        return QuarticElem(self.field, -self.x, -self.y)

    def __sub__(self, other) -> "QuarticElem":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "QuarticElem":
        o = self._coerce(other)
        d = self.field.delta
        return QuarticElem(self.field, self.x * o.x + d * self.y * o.y, self.x * o.y + self.y * o.x)

    __rmul__ = __mul__

    def conj(self) -> "QuarticElem":
        return QuarticElem(self.field, self.x, -self.y)

    def rel_norm(self) -> QuadElem:
        return self.x * self.x - self.field.delta * self.y * self.y

    def rel_trace(self) -> QuadElem:
        return self.x * 2

    def abs_norm(self) -> Fraction:
        return self.rel_norm().norm()

    def inverse(self) -> "QuarticElem":
        n_inv = self.rel_norm().inverse()
        c = self.conj()
        return QuarticElem(self.field, c.x * n_inv, c.y * n_inv)

    def __truediv__(self, other) -> "QuarticElem":
        return self * self._coerce(other).inverse()

    def is_zero(self) -> bool:
        return self.x.is_zero() and self.y.is_zero()

    def coords(self) -> Tuple[Fraction, ...]:
        return self.x.coords() + self.y.coords()

    def is_integral(self) -> bool:
        return self.rel_trace().is_integral() and self.rel_norm().is_integral()

    def embed(self, i: int, s: int = 1):
        """Complex embedding: sigma_i on F and sqrt(sigma_i delta) = s * i * sqrt|sigma_i delta|."""
        root = mpmath.sqrt(-self.field.delta.embed(i)) * 1j * s
        return mpmath.mpc(self.x.embed(i)) + self.y.embed(i) * root

    def trace_form(self, other: "QuarticElem") -> Fraction:
        """Tr_{E/Q}(self * conj(other))."""
        return (self * other.conj()).rel_trace().trace()

    def __repr__(self) -> str:
        return f"[{self.x} + {self.y}*sqrt(delta)]"


@dataclass(frozen=True)
class QuarticField:
    """Relative quadratic extension F(sqrt delta), delta integral in F."""

    F: QuadField
    delta: QuadElem

    def elem(self, x, y=0) -> QuarticElem:
        x = x if isinstance(x, QuadElem) else self.F.elem(rat(x))
        y = y if isinstance(y, QuadElem) else self.F.elem(rat(y))
        return QuarticElem(self, x, y)

    def from_coords(self, c: Sequence) -> QuarticElem:
        return QuarticElem(self, self.F.from_coords(c[0], c[1]), self.F.from_coords(c[2], c[3]))

    @property
    def one(self) -> QuarticElem:
        return self.elem(1)

    @property
    def sqrt_delta(self) -> QuarticElem:
        return self.elem(0, 1)

    def _equation_order_basis(self) -> List[QuarticElem]:
        w = self.F.omega
        return [self.elem(1), self.elem(w), self.elem(0, 1), self.elem(0, w)]

    @staticmethod
    def _disc_of(basis: Sequence[QuarticElem]) -> Fraction:
        gram = Matrix(len(basis), len(basis), lambda i, j: (basis[i] * basis[j]).rel_trace().trace())
        return Fraction(int(gram.det()))

    @cached_property
    def order(self) -> Lattice:
        """The maximal order O_E, by p-maximal enlargement of O_F[sqrt delta]."""
        basis = self._equation_order_basis()
        lat = Lattice.from_generators([b.coords() for b in basis], 4)
        changed = True
        while changed:
            changed = False
            basis = [self.from_coords(v) for v in lat.basis]
            disc = int(self._disc_of(basis))
            for p, e in factor(abs(disc)).items():
                if e < 2:
                    continue
                extra = self._p_enlargement(basis, p)
                if extra is not None:
                    gens = [b.coords() for b in basis] + [(extra * b).coords() for b in basis]
                    lat = Lattice.from_generators(gens, 4)
                    changed = True
                    break
        return lat

    def _p_enlargement(self, basis: Sequence[QuarticElem], p: int) -> Optional[QuarticElem]:
        if p**4 > 10**6:
            raise OverBound(f"p-maximality search at p={p} is too large")
        for digits in itertools.product(range(p), repeat=4):
            if not any(digits):
                continue
            x = self.elem(0)
            for d, b in zip(digits, basis):
                if d:
                    x = x + b * Fraction(d, p)
            if x.is_integral():
                return x
        return None

    @cached_property
    def int_basis(self) -> List[QuarticElem]:
        return [self.from_coords(v) for v in self.order.basis]

    @cached_property
    def abs_disc(self) -> int:
        return abs(int(self._disc_of(self.int_basis)))

    @property
    def unit_ideal(self) -> "QuarticIdeal":
        return QuarticIdeal(self, self.order)

    def ideal(self, gens: Sequence) -> "QuarticIdeal":
        return QuarticIdeal.from_generators(self, gens)

    def extend(self, a: QuadIdeal) -> "QuarticIdeal":
        """a O_E for an ideal a of F."""
        return QuarticIdeal.from_generators(self, [self.elem(b) for b in a.basis])

    @cached_property
    def rel_different(self) -> "QuarticIdeal":
        return self.ideal([b - b.conj() for b in self.int_basis])

    @cached_property
    def rel_disc(self) -> QuadIdeal:
        return (self.rel_different * self.rel_different).intersect_F()

    def trace_gram(self, basis: Optional[Sequence[QuarticElem]] = None) -> List[List[Fraction]]:
        basis = basis or self.int_basis
        return [[x.trace_form(y) for y in basis] for x in basis]

    def prime_decomposition(self, P: QuadIdeal) -> Tuple[str, List["QuarticIdeal"]]:
        """('split' | 'inert' | 'ramified', primes of E above the F-prime P)."""
        return _prime_decomposition(self, P)

    def chi(self, P: QuadIdeal) -> int:
        """+1, -1, 0 for P split, inert, ramified in E."""
        return _chi_prime(self, P)

    def chi_ideal(self, a: QuadIdeal) -> int:
        value = 1
        for P, e in factor_ideal(a):
            c = self.chi(P)
            value *= c**e
            if value == 0:
                return 0
        return value

    def ideals_of_norm(self, n: int) -> List["QuarticIdeal"]:
        """Integral ideals of absolute norm n, as products of primes of E."""
        choices = []
        for p, e in factor(n).items():
            primes = []
            for P in split_prime(self.F, p).primes:
                _, above = self.prime_decomposition(P)
                primes.extend(above)
            options = []
            norms = [int(Q.norm()) for Q in primes]
            for exps in itertools.product(*[range(e + 1) for _ in primes]):
                total = 1
                for k, q in zip(exps, norms):
                    total *= q**k
                if total == p**e:
                    ideal = self.unit_ideal
                    for k, Q in zip(exps, primes):
                        ideal = ideal * (Q**k)
                    options.append(ideal)
            if not options:
                return []
            choices.append(options)
        result = []
        for combo in itertools.product(*choices):
            ideal = self.unit_ideal
            for part in combo:
                ideal = ideal * part
            result.append(ideal)
        return result


@dataclass(frozen=True)
class QuarticIdeal:
    """Fractional O_E-ideal as a lattice in Q^4."""

    field: QuarticField
    lattice: Lattice

    @classmethod
    def from_generators(cls, E: QuarticField, gens: Sequence[QuarticElem]) -> "QuarticIdeal":
        vecs = [(g * b).coords() for g in gens for b in E.int_basis]
        return cls(E, Lattice.from_generators(vecs, 4))

    @classmethod
    def principal(cls, x: QuarticElem) -> "QuarticIdeal":
        return cls.from_generators(x.field, [x])

    @property
    def basis(self) -> List[QuarticElem]:
        return [self.field.from_coords(v) for v in self.lattice.basis]

    def norm(self) -> Fraction:
        return self.lattice.det / self.field.order.det

    def is_integral(self) -> bool:
        return self.field.order.contains_lattice(self.lattice)

    def contains(self, x: QuarticElem) -> bool:
        return self.lattice.contains(x.coords())

    def __mul__(self, other) -> "QuarticIdeal":
        if isinstance(other, QuarticIdeal):
            gens = [x * y for x in self.basis for y in other.basis]
            return QuarticIdeal(self.field, Lattice.from_generators([g.coords() for g in gens], 4))
        if isinstance(other, QuarticElem):
            return QuarticIdeal(self.field, Lattice.from_generators([(b * other).coords() for b in self.basis], 4))
        if isinstance(other, QuadElem):
            return self * self.field.elem(other)
        return QuarticIdeal(self.field, self.lattice.scale(rat(other)))

    __rmul__ = __mul__

    def __add__(self, other: "QuarticIdeal") -> "QuarticIdeal":
        return QuarticIdeal(self.field, self.lattice + other.lattice)

    def __pow__(self, k: int) -> "QuarticIdeal":
        if k < 0:
            return self.inverse() ** (-k)
        result = self.field.unit_ideal
        for _ in range(k):
            result = result * self
        return result

    def conj(self) -> "QuarticIdeal":
        return QuarticIdeal(self.field, Lattice.from_generators([b.conj().coords() for b in self.basis], 4))

    def intersect(self, other: "QuarticIdeal") -> "QuarticIdeal":
        return QuarticIdeal(self.field, self.lattice.intersect(other.lattice))

    def intersect_F(self) -> QuadIdeal:
        """self intersected with F, as an ideal of F."""
        vecs = self.lattice.leading_sublattice(2)
        return QuadIdeal(self.field.F, Lattice.from_generators(vecs, 2))

    def rel_norm(self) -> QuadIdeal:
        return (self * self.conj()).intersect_F()

    def inverse(self) -> "QuarticIdeal":
        b = self.rel_norm()
        return self.conj() * self.field.extend(b.inverse())

    def __truediv__(self, other: "QuarticIdeal") -> "QuarticIdeal":
        return self * other.inverse()

    def __repr__(self) -> str:
        return f"QuarticIdeal(cols={self.lattice.cols}, den={self.lattice.den})"


def _index_coprime(E: QuarticField, theta: QuarticElem, P: QuadIdeal, PO: QuarticIdeal) -> bool:
    w = E.F.omega
    gens = [E.one, E.elem(w), theta, theta * E.elem(w)]
    lat = Lattice.from_generators([g.coords() for g in gens] + PO.lattice.basis, 4)
    return lat == E.order


def _theta_candidates(E: QuarticField):
    yield E.sqrt_delta
    basis = E.int_basis
    yield from basis[2:]
    for j, k in itertools.product(range(-2, 3), repeat=2):
        yield basis[2] + basis[3] * j + basis[1] * k


def _residue_roots(P: QuadIdeal, t: QuadElem, n: QuadElem) -> List[QuadElem]:
    """Roots of X^2 - t X + n in O_F / P."""
    roots = []
    for r in P.residues():
        if P.reduce(r * r - t * r + n).is_zero():
            roots.append(r)
            if len(roots) == 2:
                break
    return roots


def _roots_by_discriminant(P: QuadIdeal, t: QuadElem, n: QuadElem) -> List[QuadElem]:
    """Roots of X^2 - t X + n modulo a prime P of odd norm via a residue square root."""
    p = int(P.min_integer())
    if p == 2:
        raise OverBound("large residue fields above 2 are not supported")
    inv2 = pow(2, -1, p)
    disc = t * t - n * 4
    if P.reduce(disc).is_zero():
        return [P.reduce(t * inv2)]
    s = sqrt_mod_prime(disc, P)
    if s is None:
        return []
    return [P.reduce((t + s) * inv2), P.reduce((t - s) * inv2)]


def _prime_decomposition(E: QuarticField, P: QuadIdeal) -> Tuple[str, List[QuarticIdeal]]:
    PO = E.extend(P)
    q = int(P.norm())
    for theta in _theta_candidates(E):
        if not theta.is_integral() or theta.y.is_zero():
            continue
        if not _index_coprime(E, theta, P, PO):
            continue
        t, n = theta.rel_trace(), theta.rel_norm()
        if q > 4096:
            roots = _roots_by_discriminant(P, t, n)
        else:
            roots = _residue_roots(P, t, n)
        if not roots:
            return "inert", [PO]
        primes = [PO + QuarticIdeal.principal(theta - E.elem(r)) for r in roots]
        if len(roots) == 1:
            return "ramified", primes
        return "split", primes
    raise ConstructionFailed(f"no generator with index prime to {P}")


_chi_lock = threading.Lock()


@cached(cache=LRUCache(maxsize=65536), key=lambda E, P: (E, P), lock=_chi_lock)
def _chi_prime(E: QuarticField, P: QuadIdeal) -> int:
    q = int(P.norm())
    if q % 2 == 1 and not P.contains(E.delta) and not P.contains(E.F.elem(2)):
        return legendre_mod(E.delta, P)
    kind, _ = _prime_decomposition(E, P)
    return {"split": 1, "inert": -1, "ramified": 0}[kind]


def principal_generator(A: QuarticIdeal) -> Optional[QuarticElem]:
    """Generator of a principal fractional ideal, searched with unit balancing."""
    E = A.field
    den = A.lattice.den
    num = A * den
    n = num.norm()
    eps = fundamental_unit(E.F).embed(0)
    bound_f = 2 * mpmath.sqrt(n) * (eps + 1 / eps)
    bound = Fraction(int(mpmath.ceil(bound_f * 1000)) + 1, 1000)
    basis = num.basis
    gram = E.trace_gram(basis)
    for u, _ in short_vectors(gram, bound):
        x = basis[0] * 0
        for c, b in zip(u, basis):
            if c:
                x = x + b * c
        if x.abs_norm() == n:
            return x * Fraction(1, den)
    return None


def is_principal(A: QuarticIdeal) -> bool:
    return principal_generator(A) is not None


def same_class(A: QuarticIdeal, B: QuarticIdeal) -> bool:
    return is_principal(A / B)


@dataclass(frozen=True)
class ReflexData:
    """Reflex pair (F_tilde, delta_tilde) with E_tilde = F_tilde(sqrt delta_tilde)."""

    F_tilde: QuadField
    delta_tilde: QuadElem
    E_tilde: QuarticField

    @property
    def D_tilde(self) -> int:
        return self.F_tilde.disc

    @property
    def rel_disc_tilde(self) -> QuadIdeal:
        return self.E_tilde.rel_disc

    @cached_property
    def ramified_prime(self) -> QuadIdeal:
        """The unique prime of F_tilde ramified in E_tilde."""
        primes = [P for P, _ in factor_ideal(self.rel_disc_tilde)]
        if len(primes) != 1:
            raise ConstructionFailed(f"reflex ramifies at {len(primes)} primes, expected 1")
        return primes[0]

    def chi(self, a: QuadIdeal) -> int:
        return self.E_tilde.chi_ideal(a)

    def to_json(self) -> dict:
        return {
            "D_tilde": self.D_tilde,
            "delta_tilde": self.delta_tilde.to_json(),
            "rel_disc_tilde": self.rel_disc_tilde.to_json(),
        }


@dataclass
class CMQuartic:
    """A non-biquadratic quartic CM field with its invariants."""

    F: QuadField
    delta: QuadElem
    E: QuarticField
    abs_disc: int
    rel_disc: QuadIdeal
    w_E: int
    delta_index: int
    h_E: int
    h_F: int
    class_reps: List[QuarticIdeal] = field(default_factory=list)
    reflex_data: Optional[ReflexData] = None

    @property
    def D(self) -> int:
        return self.F.disc

    @property
    def D_tilde(self) -> int:
        return self.abs_disc // (self.D * self.D)

    def descriptor(self) -> dict:
        return {"D": self.D, "delta": self.delta.to_json()}

    def to_json(self) -> dict:
        data = {
            "D": self.D,
            "delta": self.delta.to_json(),
            "d_E": self.abs_disc,
            "D_tilde": self.D_tilde,
            "rel_disc": self.rel_disc.to_json(),
            "w_E": self.w_E,
            "delta_index": self.delta_index,
            "h_E": self.h_E,
            "h_F": self.h_F,
        }
        if self.reflex_data is not None:
            data["reflex"] = self.reflex_data.to_json()
        return data


def count_roots_of_unity(E: QuarticField) -> int:
    """w_E: vectors of O_E with Tr(x conj x) = 4 are exactly the roots of unity."""
    return sum(1 for _, value in short_vectors(E.trace_gram(), 4) if value == 4)


def unit_index(E: QuarticField) -> int:
    """delta with 2^delta = [O_E^x : mu_E O_F^x]."""
    eps = fundamental_unit(E.F)
    if eps.norm() == -1:
        return 0
    target = eps if eps.sign(0) > 0 else -eps
    value = 2 * target.trace()
    for u, v in short_vectors(E.trace_gram(), value):
        if v != value:
            continue
        eta = E.elem(0)
        for c, b in zip(u, E.int_basis):
            eta = eta + b * c
        if eta.rel_norm() == target:
            return 1
    return 0


def minkowski_bound_quartic(d_E: int) -> float:
    return 3 / (2 * math.pi**2) * math.sqrt(d_E)


def quartic_class_group(E: QuarticField) -> List[QuarticIdeal]:
    bound = minkowski_bound_quartic(E.abs_disc)
    generators = []
    for p in primerange(2, int(bound) + 1):
        for P in split_prime(E.F, p).primes:
            _, above = E.prime_decomposition(P)
            generators.extend(Q for Q in above if Q.norm() <= bound)
    return close_classes(E.unit_ideal, generators, same_class)


def _integral_delta(delta: QuadElem) -> QuadElem:
    k = 1
    for c in delta.coords():
        k = k * c.denominator // math.gcd(k, c.denominator)
    return delta * (k * k)


def reflex(cm: CMQuartic) -> ReflexData:
    """Reflex pair: F_tilde = Q(sqrt N(delta)), delta_tilde = Tr(delta) - 2 sqrt N(delta)."""
    n = cm.delta.norm()
    if n.denominator != 1:
        raise ConstructionFailed("delta must be integral")
    n = int(n)
    core = squarefree_part(n)
    k = math.isqrt(n // core)
    if k * k * core != n:
        raise ConstructionFailed(f"N(delta) = {n} has no square-free decomposition")
    F_t = QuadField(core)
    delta_t = F_t.elem(cm.delta.trace(), -2 * k)
    E_t = QuarticField(F_t, delta_t)
    data = ReflexData(F_t, delta_t, E_t)
    rel_norm_abs = int(E_t.rel_disc.norm())
    if rel_norm_abs != cm.D:
        raise ConstructionFailed(f"N(d_Etilde/Ftilde) = {rel_norm_abs}, expected {cm.D}")
    ramified = data.ramified_prime
    if int(ramified.min_integer()) != cm.D:
        raise ConstructionFailed("reflex ramifies above a prime other than D")
    logger.info("reflex constructed", extra={"D": cm.D, "field": f"Q(sqrt {core})"})
    return data


def build_cm_field(D: int, delta: QuadElem) -> CMQuartic:
    """Validate the hypotheses and compute every invariant of E = Q(sqrt D)(sqrt delta)."""
    failures = []
    if not (D > 0 and D % 4 == 1 and isprime(D)):
        raise HypothesisViolated(["D ≡ 1 mod 4 prime"])
    if D > config.disc_bound:
        raise OverBound(f"D = {D} exceeds bound {config.disc_bound}")
    F = QuadField(D)
    if delta.field != F:
        delta = F.elem(delta.a, delta.b)
    if delta.is_zero() or not (delta.sign(0) < 0 and delta.sign(1) < 0):
        failures.append("delta totally negative")
    n = delta.norm()
    if n > 0 and math.isqrt(n.numerator) ** 2 == n.numerator and math.isqrt(n.denominator) ** 2 == n.denominator:
        failures.append("E non-biquadratic")
    if failures:
        raise HypothesisViolated(failures)
    delta = _integral_delta(delta)
    E = QuarticField(F, delta)
    d_E = E.abs_disc
    D_tilde, rem = divmod(d_E, D * D)
    if rem or D_tilde % 4 != 1 or any(e > 1 for e in factor(D_tilde).values()):
        raise HypothesisViolated([f"d_E = D^2 * D_tilde with D_tilde ≡ 1 mod 4 squarefree (d_E = {d_E})"])
    rel_disc = E.rel_disc
    if D * D * int(rel_disc.norm()) != d_E:
        raise ConstructionFailed("relative discriminant does not match d_E")
    w_E = count_roots_of_unity(E)
    reps = quartic_class_group(E)
    cm = CMQuartic(
        F=F,
        delta=delta,
        E=E,
        abs_disc=d_E,
        rel_disc=rel_disc,
        w_E=w_E,
        delta_index=unit_index(E),
        h_E=len(reps),
        h_F=class_number(F).h,
        class_reps=reps,
    )
    cm.reflex_data = reflex(cm)
    logger.info(
        f"built CM field d_E={d_E} w_E={w_E} h_E={cm.h_E} delta_index={cm.delta_index}",
        extra={"D": D},
    )
    return cm


def rho_formula(R: ReflexData, a: QuadIdeal) -> int:
    """rho(a) = sum over divisors b of a of chi_tilde(b), computed multiplicatively."""
    total = 1
    for P, e in factor_ideal(a):
        c = R.E_tilde.chi(P)
        if c == 1:
            total *= e + 1
        elif c == -1:
            total *= 1 if e % 2 == 0 else 0
        # ramified primes contribute 1
        if total == 0:
            return 0
    return total


def rho_by_enumeration(R: ReflexData, a: QuadIdeal) -> int:
    """Count ideals of O_E_tilde of relative norm a by enumerating ideals of that absolute norm."""
    n = int(a.norm())
    return sum(1 for A in R.E_tilde.ideals_of_norm(n) if A.rel_norm() == a)


def quartic_ideals_of_relative_norm(R: ReflexData, a: QuadIdeal, oracle: bool = False) -> int:
    if not a.is_integral():
        raise ValueError("rho is defined on integral ideals")
    return rho_by_enumeration(R, a) if oracle else rho_formula(R, a)
