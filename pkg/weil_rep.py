"""Discriminant form Z/DZ, its Weil representation and Hirzebruch-Zagier divisor bookkeeping."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Tuple

import mpmath
from sympy import isprime, sqrt_mod

from arith_kernel import kronecker
from errors import HypothesisViolated

DEFAULT_SIGNATURE_N = 2


@dataclass(frozen=True)
class DiscriminantForm:
    """L'/L = Z/DZ with Q(mu) = -mu^2/D mod 1.

    signature_n is the n of the (n, 2) signature; it only enters the constant
    e((2 - n)/8) of the S-matrix.
    """

    D: int
    signature_n: int = DEFAULT_SIGNATURE_N

    def __post_init__(self):
        if not (self.D > 2 and isprime(self.D) and self.D % 4 == 1):
            raise HypothesisViolated(["D ≡ 1 mod 4 prime"])

    def Q(self, mu: int) -> Fraction:
        return Fraction((-mu * mu) % self.D, self.D)

    def bilinear(self, mu: int, nu: int) -> Fraction:
        """(mu, nu) = Q(mu + nu) - Q(mu) - Q(nu) mod 1."""
        return Fraction((-2 * mu * nu) % self.D, self.D)

    def components(self) -> range:
        return range(self.D)

    def negate(self, mu: int) -> int:
        return (-mu) % self.D

    def gauss_sum(self):
        return mpmath.fsum(_e(self.Q(mu)) for mu in self.components())

    def to_json(self) -> dict:
        return {"D": self.D, "signature_n": self.signature_n}


def _e(x: Fraction):
    """exp(2 pi i x) for rational x."""
    x = Fraction(x) % 1
    return mpmath.expjpi(2 * mpmath.mpf(x.numerator) / x.denominator)


def weil_T(df: DiscriminantForm, precision: int = 128) -> mpmath.matrix:
    """Diagonal matrix rho(T) phi_mu = e(Q(mu)) phi_mu."""
    with mpmath.workprec(precision):
        T = mpmath.matrix(df.D, df.D)
        for mu in df.components():
            T[mu, mu] = _e(df.Q(mu))
        return T


def weil_S(df: DiscriminantForm, precision: int = 128) -> mpmath.matrix:
    """rho(S) phi_mu = e((2-n)/8)/sqrt(D) * sum_nu e(-(mu, nu)) phi_nu.

    Column mu holds the image of phi_mu.
    """
    with mpmath.workprec(precision):
        lead = _e(Fraction(2 - df.signature_n, 8)) / mpmath.sqrt(df.D)
        S = mpmath.matrix(df.D, df.D)
        for mu in df.components():
            for nu in df.components():
                S[nu, mu] = lead * _e(-df.bilinear(mu, nu))
        return S


def _max_entry(M: mpmath.matrix):
    return max(abs(M[i, j]) for i in range(M.rows) for j in range(M.cols))


def unitarity_defect(M: mpmath.matrix, precision: int = 128):
    with mpmath.workprec(precision):
        return _max_entry(M * M.H - mpmath.eye(M.rows))


def braid_defect(df: DiscriminantForm, precision: int = 128):
    """max |(S T)^3 - S^2| over the entries."""
    with mpmath.workprec(precision):
        S = weil_S(df, precision)
        T = weil_T(df, precision)
        ST = S * T
        return _max_entry(ST * ST * ST - S * S)


def s_squared_defect(df: DiscriminantForm, precision: int = 128):
    """Distance of S^2 from c * (phi_mu -> phi_-mu) for a unit scalar c."""
    with mpmath.workprec(precision):
        S = weil_S(df, precision)
        S2 = S * S
        c = S2[0, 0]
        P = mpmath.matrix(df.D, df.D)
        for mu in df.components():
            P[df.negate(mu), mu] = c
        return max(_max_entry(S2 - P), abs(abs(c) - 1))


def hz_components(df: DiscriminantForm, n: int) -> List[Tuple[Fraction, int, Fraction]]:
    """(m, mu, weight) with T_n = sum weight * Z(m, mu).

    D | n gives (1/2) Z(n/D, 0); otherwise (1/2)(Z(n/D, mu) + Z(n/D, -mu)) for the
    mu with mu^2 = n mod D. Non-residues give the empty divisor.
    """
    if n <= 0:
        raise ValueError("T_n is defined for n > 0")
    m = Fraction(n, df.D)
    half = Fraction(1, 2)
    if n % df.D == 0:
        return [(m, 0, half)]
    if kronecker(df.D, n) == -1:
        return []
    mu = min(int(r) for r in sqrt_mod(n % df.D, df.D, all_roots=True))
    return [(m, mu, half), (m, df.negate(mu), half)]


def divisor_of(df: DiscriminantForm, principal_part: Mapping[int, int]) -> Dict[Tuple[Fraction, int], Fraction]:
    """Multiset sum_{n>0} c~(-n) T_n from a scalar principal part {-n: c(-n)}."""
    divisor: Dict[Tuple[Fraction, int], Fraction] = {}
    for exponent, coeff in sorted(principal_part.items()):
        if exponent >= 0 or coeff == 0:
            continue
        n = -exponent
        tilde = 2 * coeff if n % df.D == 0 else coeff
        for m, mu, weight in hz_components(df, n):
            key = (m, mu)
            divisor[key] = divisor.get(key, Fraction(0)) + tilde * weight
    return {k: v for k, v in sorted(divisor.items()) if v != 0}
