"""Rational lattices in Hermite normal form and small enumeration helpers.

Lattices are stored column-wise: ``cols`` are the integer HNF columns of
``den * L``. The HNF is upper triangular with pivots on the diagonal, and
entries right of a pivot are reduced modulo it, so two lattices are equal iff
their ``(cols, den)`` agree.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from sympy import ZZ, Matrix
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_decomp

Vector = Tuple[Fraction, ...]


def _lcm(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


def _to_fraction(x) -> Fraction:
    return Fraction(int(x.p), int(x.q))


def _hnf_int_columns(int_cols: Sequence[Sequence[int]], dim: int) -> Tuple[Tuple[int, ...], ...]:
    nonzero = [c for c in int_cols if any(c)]
    if not nonzero:
        return ()
    m = Matrix(dim, len(nonzero), lambda i, j: nonzero[j][i])
    h = hermite_normal_form(m)
    return tuple(tuple(int(h[i, j]) for i in range(dim)) for j in range(h.cols))


@dataclass(frozen=True)
class Lattice:
    """Full-rank sublattice of Q^dim given by an integral HNF and a common denominator."""

    dim: int
    cols: Tuple[Tuple[int, ...], ...]
    den: int = 1

    @classmethod
    def from_generators(cls, gens: Iterable[Sequence], dim: int) -> "Lattice":
        gens = [tuple(Fraction(x) for x in g) for g in gens]
        den = _lcm(x.denominator for g in gens for x in g) if gens else 1
        int_cols = [tuple(int(x * den) for x in g) for g in gens]
        cols = _hnf_int_columns(int_cols, dim)
        if len(cols) != dim:
            raise ValueError(f"generators span rank {len(cols)} < {dim}")
        g = reduce(math.gcd, (x for c in cols for x in c), den)
        if g > 1:
            cols = tuple(tuple(x // g for x in c) for c in cols)
            den //= g
        return cls(dim, cols, den)

    @property
    def basis(self) -> List[Vector]:
        return [tuple(Fraction(x, self.den) for x in c) for c in self.cols]

    @property
    def det(self) -> Fraction:
        """Covolume (index in Z^dim when integral)."""
        prod = 1
        for i in range(self.dim):
            prod *= self.cols[i][i]
        return Fraction(prod, self.den**self.dim)

    def is_integral(self) -> bool:
        return self.den == 1

    def coordinates(self, v: Sequence) -> Tuple[Fraction, ...]:
        """Coordinates of v on the HNF basis (back substitution)."""
        target = [Fraction(x) * self.den for x in v]
        u = [Fraction(0)] * self.dim
        for i in reversed(range(self.dim)):
            acc = target[i] - sum(self.cols[j][i] * u[j] for j in range(i + 1, self.dim))
            u[i] = acc / self.cols[i][i]
        return tuple(u)

    def contains(self, v: Sequence) -> bool:
        return all(x.denominator == 1 for x in self.coordinates(v))

    def contains_lattice(self, other: "Lattice") -> bool:
        return all(self.contains(b) for b in other.basis)

    def __add__(self, other: "Lattice") -> "Lattice":
        return Lattice.from_generators(self.basis + other.basis, self.dim)

    def scale(self, factor) -> "Lattice":
        f = Fraction(factor)
        return Lattice.from_generators([tuple(x * f for x in b) for b in self.basis], self.dim)

    def dual(self) -> "Lattice":
        """Dual lattice for the standard dot product."""
        b = Matrix(self.dim, self.dim, lambda i, j: Fraction(self.cols[j][i], self.den))
        inv_t = b.inv().T
        return Lattice.from_generators(
            [tuple(_to_fraction(inv_t[i, j]) for i in range(self.dim)) for j in range(self.dim)], self.dim
        )

    def intersect(self, other: "Lattice") -> "Lattice":
        return (self.dual() + other.dual()).dual()

    def leading_sublattice(self, k: int) -> List[Vector]:
        """Basis of the vectors whose last dim-k coordinates vanish (first k coordinates returned)."""
        return [tuple(Fraction(x, self.den) for x in self.cols[j][:k]) for j in range(k)]


def short_vectors(gram: Sequence[Sequence[Fraction]], bound: Fraction) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
    """Yield (u, Q(u)) for nonzero integer u with u^T G u <= bound.

    Plain Fincke-Pohst over a rational Cholesky decomposition; each candidate is
    rechecked exactly, so floating slack only costs time.
    """
    n = len(gram)
    g = [[Fraction(x) for x in row] for row in gram]
    # LDL^T in rationals
    d = [Fraction(0)] * n
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        s = g[i][i] - sum(mu[i][k] ** 2 * d[k] for k in range(i))
        d[i] = s
        for j in range(i + 1, n):
            mu[j][i] = (g[j][i] - sum(mu[j][k] * mu[i][k] * d[k] for k in range(i))) / d[i]
    bound = Fraction(bound)
    slack = 1e-9

    def quad(u):
        return sum(g[i][j] * u[i] * u[j] for i in range(n) for j in range(n))

    u = [0] * n

    def recurse(i: int, remaining: float):
        # coordinates are fixed from n-1 down to i+1
        center = -sum(float(mu[j][i]) * u[j] for j in range(i + 1, n))
        radius = math.sqrt(max(remaining, 0.0) / float(d[i])) + slack
        for x in range(math.ceil(center - radius), math.floor(center + radius) + 1):
            u[i] = x
            rem = remaining - float(d[i]) * (x - center) ** 2
            if rem < -slack * (1 + abs(remaining)):
                continue
            if i == 0:
                if any(u):
                    value = quad(u)
                    if value <= bound:
                        yield tuple(u), value
            else:
                yield from recurse(i - 1, rem)
        u[i] = 0

    yield from recurse(n - 1, float(bound) * (1 + 1e-12) + slack)


def box(dim: int, radius: int) -> Iterator[Tuple[int, ...]]:
    """All integer vectors with max-norm <= radius."""
    return itertools.product(range(-radius, radius + 1), repeat=dim)


def integer_combination(vectors: Sequence[Sequence], target: Sequence) -> Optional[Tuple[int, ...]]:
    """Integer c with sum_i c_i vectors[i] == target, or None if target is outside their Z-span.

    Solved through the Smith decomposition ``diag = S * M * T`` of the column matrix.
    """
    vecs = [[Fraction(x) for x in v] for v in vectors]
    goal = [Fraction(x) for x in target]
    if not vecs:
        return () if not any(goal) else None
    den = _lcm(x.denominator for v in vecs + [goal] for x in v)
    k, dim = len(vecs), len(goal)
    m = Matrix(dim, k, lambda i, j: int(vecs[j][i] * den))
    diag, s, t = smith_normal_decomp(m, domain=ZZ)
    rhs = s * Matrix(dim, 1, [int(x * den) for x in goal])
    y = [0] * k
    for i in range(dim):
        a = int(diag[i, i]) if i < k else 0
        b = int(rhs[i, 0])
        if a == 0:
            if b != 0:
                return None
            continue
        q, r = divmod(b, a)
        if r:
            return None
        y[i] = q
    coeffs = t * Matrix(k, 1, y)
    return tuple(int(coeffs[i, 0]) for i in range(k))
