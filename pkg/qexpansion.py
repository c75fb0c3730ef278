"""Truncated q-expansions: scalar plus-space series, vector-valued series for Z/DZ,
harmonic splits, the xi-operator and the constant-term pairing with the Eisenstein
holomorphic part."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple, Union

import mpmath

from arith_kernel import LogLinear, kronecker, rat, rat_str
from errors import InsufficientPrecision, NotPlusSpace
from hecke_rho import BmTable
from weil_rep import DiscriminantForm

Coefficient = Union[Fraction, LogLinear, mpmath.mpf, mpmath.mpc]


def _is_zero(c: Coefficient) -> bool:
    if isinstance(c, LogLinear):
        return c.is_zero()
    return c == 0


def _scale(c: Coefficient, factor) -> Coefficient:
    if isinstance(c, LogLinear):
        return c.scale(factor)
    if isinstance(c, Fraction) and isinstance(factor, (int, Fraction)):
        return c * factor
    return c * _to_mp(factor)


def _add(a: Optional[Coefficient], b: Coefficient) -> Coefficient:
    return b if a is None else a + b


def _to_mp(c):
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    if isinstance(c, LogLinear):
        raise TypeError("LogLinear coefficients need a value for Lambda'(0) before numeric evaluation")
    return mpmath.mpmathify(c)


def coefficient_to_json(c: Coefficient):
    if isinstance(c, LogLinear):
        return c.to_json()
    if isinstance(c, Fraction):
        return rat_str(c)
    if isinstance(c, int):
        return str(c)
    c = mpmath.mpmathify(c)
    if isinstance(c, mpmath.mpc):
        return [mpmath.nstr(c.real, 30), mpmath.nstr(c.imag, 30)]
    return mpmath.nstr(c, 30)


def coefficient_from_json(data) -> Coefficient:
    if isinstance(data, dict):
        return LogLinear.from_json(data)
    if isinstance(data, list):
        return mpmath.mpc(data[0], data[1])
    return rat(data)


@dataclass
class ScalarQExpansion:
    """sum_n coeffs[n] q^n on Gamma_0(D) with character (D/.), known for n < precision."""

    weight: int
    D: int
    coeffs: Dict[int, Coefficient] = field(default_factory=dict)
    precision: int = 0
    character: str = "kronecker"

    def __post_init__(self):
        self.coeffs = {n: c for n, c in sorted(self.coeffs.items()) if n < self.precision and not _is_zero(c)}

    def __getitem__(self, n: int) -> Coefficient:
        if n >= self.precision:
            raise InsufficientPrecision(f"coefficient q^{n} beyond precision {self.precision}")
        return self.coeffs.get(n, Fraction(0))

    def coefficient(self, n: int) -> Coefficient:
        return self[n]

    @property
    def valuation(self) -> int:
        return min(self.coeffs) if self.coeffs else self.precision

    def principal_part(self) -> Dict[int, Coefficient]:
        return {n: c for n, c in self.coeffs.items() if n < 0}

    def constant_term(self) -> Coefficient:
        return self[0]

    def tilde(self, n: int) -> Coefficient:
        """c~(n): doubled when D | n."""
        c = self[n]
        return _scale(c, 2) if n % self.D == 0 else c

    def non_plus_exponents(self) -> List[int]:
        return [n for n in self.coeffs if kronecker(self.D, n) == -1]

    def is_plus_space(self) -> bool:
        return not self.non_plus_exponents()

    def is_zero(self) -> bool:
        return not self.coeffs

    def _check_compatible(self, other: "ScalarQExpansion"):
        if self.D != other.D:
            raise ValueError(f"level mismatch {self.D} != {other.D}")

    def __add__(self, other: "ScalarQExpansion") -> "ScalarQExpansion":
        self._check_compatible(other)
        if self.weight != other.weight:
            raise ValueError("cannot add forms of different weight")
        precision = min(self.precision, other.precision)
        coeffs: Dict[int, Coefficient] = {}
        for n, c in list(self.coeffs.items()) + list(other.coeffs.items()):
            if n < precision:
                coeffs[n] = _add(coeffs.get(n), c)
        return ScalarQExpansion(self.weight, self.D, coeffs, precision, self.character)

    def __neg__(self) -> "ScalarQExpansion":
        return self.scale(-1)

    def __sub__(self, other: "ScalarQExpansion") -> "ScalarQExpansion":
        return self + (-other)

    def scale(self, factor) -> "ScalarQExpansion":
        return ScalarQExpansion(self.weight, self.D, {n: _scale(c, factor) for n, c in self.coeffs.items()},
                                self.precision, self.character)

    def __mul__(self, other: "ScalarQExpansion") -> "ScalarQExpansion":
        if not isinstance(other, ScalarQExpansion):
            return self.scale(other)
        self._check_compatible(other)
        precision = min(self.precision + other.valuation, other.precision + self.valuation)
        coeffs: Dict[int, Coefficient] = {}
        for n, a in self.coeffs.items():
            for m, b in other.coeffs.items():
                if n + m < precision:
                    coeffs[n + m] = _add(coeffs.get(n + m), a * b)
        character = "trivial" if self.character == other.character else "kronecker"
        return ScalarQExpansion(self.weight + other.weight, self.D, coeffs, precision, character)

    def evaluate(self, tau) -> mpmath.mpc:
        """Truncated sum at tau in the upper half plane."""
        tau = mpmath.mpmathify(tau)
        q = mpmath.expjpi(2 * tau)
        return mpmath.fsum(_to_mp(c) * q**n for n, c in self.coeffs.items())

    def to_json(self) -> dict:
        return {
            "weight": self.weight,
            "D": self.D,
            "terms": [{"n": str(n), "mu": 0, "c": coefficient_to_json(c)} for n, c in self.coeffs.items()],
            "precision": self.precision,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ScalarQExpansion":
        coeffs = {int(t["n"]): coefficient_from_json(t["c"]) for t in data["terms"]}
        return cls(int(data["weight"]), int(data["D"]), coeffs, int(data["precision"]))


@dataclass
class VectorQExpansion:
    """sum_mu sum_n c(n, mu) q^n phi_mu with n in Q(mu) + Z, known for n < precision / D."""

    weight: int
    df: DiscriminantForm
    components: Dict[int, Dict[Fraction, Coefficient]] = field(default_factory=dict)
    precision: int = 0

    def __post_init__(self):
        bound = Fraction(self.precision, self.df.D)
        cleaned = {}
        for mu, terms in sorted(self.components.items()):
            mu = mu % self.df.D
            for n, c in terms.items():
                n = Fraction(n)
                if (n - self.df.Q(mu)).denominator != 1:
                    raise ValueError(f"exponent {n} not congruent to Q({mu}) mod 1")
                if n < bound and not _is_zero(c):
                    cleaned.setdefault(mu, {})[n] = c
        self.components = {mu: dict(sorted(t.items())) for mu, t in sorted(cleaned.items())}

    def coefficient(self, n: Fraction, mu: int) -> Coefficient:
        if n * self.df.D >= self.precision:
            raise InsufficientPrecision(f"exponent {n} beyond precision {self.precision}/{self.df.D}")
        return self.components.get(mu % self.df.D, {}).get(Fraction(n), Fraction(0))

    def terms(self) -> List[Tuple[Fraction, int, Coefficient]]:
        return [(n, mu, c) for mu, t in self.components.items() for n, c in t.items()]

    def principal_part(self) -> List[Tuple[Fraction, int, Coefficient]]:
        return [(n, mu, c) for n, mu, c in self.terms() if n < 0]

    def is_zero(self) -> bool:
        return not self.components

    def to_json(self) -> dict:
        return {
            "weight": self.weight,
            "D": self.df.D,
            "terms": [{"n": rat_str(n), "mu": mu, "c": coefficient_to_json(c)} for n, mu, c in self.terms()],
            "precision": self.precision,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "VectorQExpansion":
        components: Dict[int, Dict[Fraction, Coefficient]] = {}
        for t in data["terms"]:
            components.setdefault(int(t["mu"]), {})[rat(t["n"])] = coefficient_from_json(t["c"])
        return cls(int(data["weight"]), DiscriminantForm(int(data["D"])), components, int(data["precision"]))


@dataclass
class HarmonicSplit:
    """f = f^+ + f^-; minus holds (n < 0, mu, c^-(n, mu)) for terms c^- Gamma(1-k, 4 pi |n| v) q^n.

    mu is None for scalar-valued forms.
    """

    plus: Union[ScalarQExpansion, VectorQExpansion]
    minus: List[Tuple[Fraction, Optional[int], Coefficient]] = field(default_factory=list)

    def __post_init__(self):
        for n, _, _ in self.minus:
            if n >= 0:
                raise ValueError("non-holomorphic terms carry negative exponents")

    @property
    def weight(self) -> int:
        return self.plus.weight

    def is_weakly_holomorphic(self) -> bool:
        return all(_is_zero(c) for _, _, c in self.minus)

    def evaluate(self, tau) -> mpmath.mpc:
        """Value of a scalar harmonic form at tau."""
        if not isinstance(self.plus, ScalarQExpansion):
            raise TypeError("numeric evaluation is implemented for scalar forms")
        tau = mpmath.mpmathify(tau)
        v = mpmath.im(tau)
        k = self.weight
        value = self.plus.evaluate(tau)
        for n, _, c in self.minus:
            n = mpmath.mpf(n.numerator) / n.denominator if isinstance(n, Fraction) else mpmath.mpf(n)
            value += _to_mp(c) * mpmath.gammainc(1 - k, 4 * mpmath.pi * abs(n) * v) * mpmath.expjpi(2 * n * tau)
        return value


def scalar_to_vector(f: ScalarQExpansion, df: Optional[DiscriminantForm] = None) -> VectorQExpansion:
    """Plus-space scalar form to the vector-valued form: component mu carries exponents
    n/D with n = D Q(mu) mod D and coefficient a~(n)/2."""
    df = df or DiscriminantForm(f.D)
    bad = f.non_plus_exponents()
    if bad:
        raise NotPlusSpace(f"non-zero coefficients on non-residue exponents {bad[:5]}")
    components: Dict[int, Dict[Fraction, Coefficient]] = {}
    half = Fraction(1, 2)
    for n, c in f.coeffs.items():
        exponent = Fraction(n, df.D)
        for mu in _components_for(df, n):
            components.setdefault(mu, {})[exponent] = _scale(f.tilde(n), half)
    return VectorQExpansion(f.weight, df, components, f.precision)


def _components_for(df: DiscriminantForm, n: int) -> List[int]:
    """mu with D Q(mu) = n mod D, i.e. mu^2 = -n mod D."""
    return [mu for mu in df.components() if (mu * mu + n) % df.D == 0]


def vector_to_scalar(F: VectorQExpansion) -> ScalarQExpansion:
    """Inverse of scalar_to_vector: a(n) = c(n/D, 0) for D | n, else c(n/D, mu) + c(n/D, -mu)."""
    df = F.df
    coeffs: Dict[int, Coefficient] = {}
    for exponent, mu, c in F.terms():
        n = exponent * df.D
        if n.denominator != 1:
            raise ValueError(f"exponent {exponent} has denominator beyond D")
        n = int(n)
        if n % df.D == 0:
            coeffs[n] = c
        else:
            coeffs[n] = _add(coeffs.get(n), c)
    return ScalarQExpansion(F.weight, df.D, coeffs, F.precision)


def xi_operator(h: HarmonicSplit) -> Union[ScalarQExpansion, VectorQExpansion]:
    """xi_k f = 2i v^k conj(df/dtau_bar), computed from the minus part:
    c^- Gamma(1-k, 4 pi |n| v) q^n  ->  -(4 pi |n|)^(1-k) conj(c^-) q^|n|."""
    k = h.weight
    out_weight = 2 - k
    terms: Dict[Tuple[Fraction, Optional[int]], Coefficient] = {}
    for n, mu, c in h.minus:
        if _is_zero(c):
            continue
        m = -Fraction(n)
        factor = (4 * mpmath.pi * _to_mp(m)) ** (1 - k)
        value = -factor * mpmath.conj(_to_mp(c))
        terms[(m, mu)] = _add(terms.get((m, mu)), value)
    if isinstance(h.plus, VectorQExpansion):
        df = h.plus.df
        components: Dict[int, Dict[Fraction, Coefficient]] = {}
        for (m, mu), c in terms.items():
            components.setdefault(mu, {})[m] = c
        precision = max([int(m * df.D) + 1 for m, _ in terms] + [h.plus.precision])
        return VectorQExpansion(out_weight, df, components, precision)
    precision = max([int(m) + 1 for m, _ in terms] + [h.plus.precision])
    return ScalarQExpansion(out_weight, h.plus.D, {int(m): c for (m, _), c in terms.items()}, precision)


def xi_finite_difference(h: HarmonicSplit, tau, step=None):
    """2i v^k conj(df/dtau_bar) by central differences, df/dtau_bar = (f_x + i f_y)/2."""
    tau = mpmath.mpmathify(tau)
    step = step or mpmath.mpf(2) ** (-(mpmath.mp.prec // 3))
    fx = (h.evaluate(tau + step) - h.evaluate(tau - step)) / (2 * step)
    fy = (h.evaluate(tau + 1j * step) - h.evaluate(tau - 1j * step)) / (2 * step)
    dbar = (fx + 1j * fy) / 2
    return 2j * mpmath.im(tau) ** h.weight * mpmath.conj(dbar)


@dataclass
class EisensteinHolPart:
    """-2 Lambda'(0, chi) - 4 sum_m b_m q^m with LogLinear coefficients."""

    table: BmTable
    D: int

    @property
    def m_max(self) -> int:
        return self.table.m_max

    def coefficient(self, m: int) -> LogLinear:
        if m > self.m_max:
            raise InsufficientPrecision(f"Eisenstein part known to q^{self.m_max}, q^{m} requested")
        return self.table.eisenstein_coefficient(m)

    def as_scalar(self) -> ScalarQExpansion:
        coeffs = {m: self.coefficient(m) for m in range(self.m_max + 1)}
        return ScalarQExpansion(2, self.D, coeffs, self.m_max + 1)


def eisenstein_hol_part(table: BmTable, D: int) -> EisensteinHolPart:
    return EisensteinHolPart(table, D)


def ct_pairing(fplus: Union[ScalarQExpansion, VectorQExpansion], eis: EisensteinHolPart) -> LogLinear:
    """CT<f^+, E> = -2 c^+(0) Lambda'(0) - 2 sum_{n>0} c~^+(-n) b_n."""
    f = vector_to_scalar(fplus) if isinstance(fplus, VectorQExpansion) else fplus
    principal = f.principal_part()
    deepest = max((-n for n in principal), default=0)
    if deepest > eis.m_max:
        raise InsufficientPrecision(f"pairing needs b_{deepest}, Eisenstein part known to {eis.m_max}")
    total = LogLinear.zero()
    c0 = f.constant_term() if f.precision > 0 else Fraction(0)
    if not _is_zero(c0):
        total = total + eis.coefficient(0).scale(c0)
    for n, c in sorted(principal.items()):
        total = total + eis.coefficient(-n).scale(Fraction(f.tilde(n)) / 2)
    return total
