"""Hecke character of the reflex extension and the holomorphic Eisenstein coefficients b_m."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List

from arith_kernel import LogLinear, lsum, rat_str
from cm_quartic import (CMQuartic, ReflexData, rho_by_enumeration,
                        rho_formula)
from config import config
from logging_config import logger
from quad_field import QuadElem, QuadIdeal, factor_ideal, valuation


@dataclass
class HeckeChar:
    """Quadratic character chi_tilde of F_tilde cutting out E_tilde.

    Prime values are memoised by the reflex field's thread-safe cache.
    """

    reflex: ReflexData

    def __call__(self, a: QuadIdeal) -> int:
        return chi_eval(self, a)


def chi_eval(chi: HeckeChar, a: QuadIdeal) -> int:
    if not a.is_integral():
        raise ValueError("chi is evaluated on integral ideals")
    return chi.reflex.chi(a)


@dataclass
class DiffSet:
    t: QuadElem
    primes: List[QuadIdeal] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.primes)


def diff_set(R: ReflexData, t: QuadElem, d_rel: QuadIdeal) -> DiffSet:
    """Inert primes l of F_tilde with ord_l(t * d_rel) odd."""
    a = QuadIdeal.principal(t) * d_rel
    primes = [P for P, e in factor_ideal(a) if e % 2 == 1 and R.E_tilde.chi(P) == -1]
    return DiffSet(t, primes)


def _log_norm(P: QuadIdeal) -> LogLinear:
    p = int(P.min_integer())
    f = 1 if int(P.norm()) == p else 2
    return LogLinear.log(p, f)


def _ord_argument(R: ReflexData, t: QuadElem, d_rel: QuadIdeal) -> QuadIdeal:
    a = QuadIdeal.principal(t) * d_rel
    if config.bt_ord_mode == "tdd":
        a = a * R.F_tilde.different()
    return a


def coefficient_Bt(chi: HeckeChar, t: QuadElem, oracle: bool = False) -> LogLinear:
    """B_t = (ord_l + 1) rho(t d l^-1) log N(l) when Diff(t) = {l}, else 0."""
    R = chi.reflex
    d_rel = R.rel_disc_tilde
    diff = diff_set(R, t, d_rel)
    if len(diff) != 1:
        return LogLinear.zero()
    (l,) = diff.primes
    a = QuadIdeal.principal(t) * d_rel
    rest = a / l
    rho = rho_by_enumeration(R, rest) if oracle else rho_formula(R, rest)
    if rho == 0:
        return LogLinear.zero()
    ord_l = valuation(_ord_argument(R, t, d_rel), l)
    return _log_norm(l).scale((ord_l + 1) * rho)


def t_candidates(R: ReflexData, D: int, m: int) -> List[QuadElem]:
    """t = (n + m sqrt(D_tilde)) / (2D) in d^-1 with |n| < m sqrt(D_tilde)."""
    F_t = R.F_tilde
    d_inv = R.rel_disc_tilde.inverse()
    limit = math.isqrt(m * m * F_t.m - 1)
    result = []
    for n in range(-limit, limit + 1):
        t = F_t.elem(Fraction(n, 2 * D), Fraction(m, 2 * D))
        if d_inv.contains(t):
            result.append(t)
    return result


@dataclass
class BmTable:
    """b_m for 1 <= m <= m_max and the constant term of the holomorphic Eisenstein part."""

    descriptor: dict
    m_max: int
    coeffs: Dict[int, LogLinear] = field(default_factory=dict)
    constant: LogLinear = field(default_factory=lambda: LogLinear.lambda_prime(-2))

    def b(self, m: int) -> LogLinear:
        if m > self.m_max:
            raise KeyError(f"b_{m} beyond table length {self.m_max}")
        return self.coeffs.get(m, LogLinear.zero())

    def eisenstein_coefficient(self, m: int) -> LogLinear:
        """Coefficient of q^m in -2 Lambda'(0) - 4 sum b_m q^m."""
        if m == 0:
            return self.constant
        return self.b(m).scale(-4)

    def to_json(self) -> dict:
        return {
            "field": self.descriptor,
            "m_max": self.m_max,
            "constant": self.constant.to_json(),
            "b": {str(m): self.b(m).to_json() for m in range(1, self.m_max + 1)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "BmTable":
        coeffs = {int(m): LogLinear.from_json(v) for m, v in data["b"].items()}
        return cls(
            data["field"],
            int(data["m_max"]),
            {m: v for m, v in coeffs.items() if not v.is_zero()},
            LogLinear.from_json(data["constant"]),
        )

    def csv_rows(self) -> List[List[str]]:
        rows = [["m", "prime", "coefficient"]]
        for m in range(1, self.m_max + 1):
            terms = self.b(m).log_terms
            if not terms:
                rows.append([str(m), "", "0"])
            for p, c in terms:
                rows.append([str(m), str(p), rat_str(c)])
        return rows


def _bm_single(cm: CMQuartic, chi: HeckeChar, m: int, oracle: bool) -> LogLinear:
    return lsum(coefficient_Bt(chi, t, oracle=oracle) for t in t_candidates(chi.reflex, cm.D, m))


def bm_table(cm: CMQuartic, m_max: int, oracle: bool = False, previous: "BmTable" = None) -> BmTable:
    """Compute b_1..b_m_max; oracle=True counts rho by direct ideal enumeration."""
    if m_max < 1:
        raise ValueError("m_max must be positive")
    chi = HeckeChar(cm.reflex_data)
    table = BmTable(cm.descriptor(), m_max)
    start = 1
    if previous is not None:
        table.coeffs.update({m: v for m, v in previous.coeffs.items() if m <= m_max})
        start = previous.m_max + 1
    todo = list(range(start, m_max + 1))
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        values = list(pool.map(lambda m: _bm_single(cm, chi, m, oracle), todo))
    for m, value in zip(todo, values):
        if not value.is_zero():
            table.coeffs[m] = value
    logger.info("b_m table computed", extra={"D": cm.D, "m_max": m_max, "n_terms": len(table.coeffs)})
    return table
