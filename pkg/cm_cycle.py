"""The CM cycle of a quartic CM field: polarized pairs (A, xi), their period points in H^2
and the degree bookkeeping c'(E) = deg CM(E) / (2 Lambda(0, chi))."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import mpmath

from arith_kernel import rat_str
from cm_quartic import CMQuartic, QuarticElem, QuarticIdeal
from config import config
from errors import BasisNotFound, ConstructionFailed, OverBound, XiSearchExhausted
from l_series import lambda_zero_exact
from lattice import Lattice, integer_combination, short_vectors
from logging_config import logger
from quad_field import (QuadElem, QuadIdeal, fundamental_unit, generators_within,
                        is_principal, is_totally_positive, principal_generator)

MAX_CLASSES = 256
BASIS_CANDIDATES = 400

Matrix2 = Tuple[QuadElem, QuadElem, QuadElem, QuadElem]


@dataclass(frozen=True)
class PolarizedPair:
    """(A, xi) with conj(xi) = -xi and xi d_{E/F} A conj(A) cap F = d_F^-1.

    cm_type holds the sign s_i with sigma_i(sqrt delta) = s_i i sqrt|sigma_i delta| making
    sigma_i(xi) lie in the upper half plane.
    """

    ideal: QuarticIdeal
    xi: QuarticElem
    class_index: int
    unit_index: int
    cm_type: Tuple[int, int]

    @property
    def key(self) -> str:
        return f"{self.class_index}.{self.unit_index}"

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "ideal": {"cols": [list(c) for c in self.ideal.lattice.cols], "den": self.ideal.lattice.den},
            "xi": {"x": self.xi.x.to_json(), "y": self.xi.y.to_json()},
            "cm_type": list(self.cm_type),
        }


@dataclass
class CMPoint:
    """Period point z = (z1, z2) of a pair for the basis A = O_F alpha + d^-1 beta."""

    z1: mpmath.mpc
    z2: mpmath.mpc
    source: PolarizedPair
    alpha: QuarticElem
    beta: QuarticElem
    w: Optional[Tuple[mpmath.mpc, mpmath.mpc]] = None
    reduction: Optional[Matrix2] = None
    multiplicity: Fraction = Fraction(1)

    @property
    def key(self) -> str:
        return self.source.key

    def to_json(self, digits: int = 30) -> dict:
        def c(z):
            return [mpmath.nstr(z.real, digits), mpmath.nstr(z.imag, digits)]

        data = {
            "key": self.key,
            "z": [c(self.z1), c(self.z2)],
            "multiplicity": rat_str(self.multiplicity),
            "digits": digits,
        }
        if self.w is not None:
            data["w"] = [c(self.w[0]), c(self.w[1])]
        if self.reduction is not None:
            data["reduction"] = [e.to_json() for e in self.reduction]
        return data


@dataclass
class CMCycle:
    cm: CMQuartic
    points: List[CMPoint] = field(default_factory=list)
    multiplicity_per_point: Fraction = Fraction(0)
    class_group_order: int = 0

    @property
    def degree(self) -> Fraction:
        return sum((p.multiplicity for p in self.points), Fraction(0))

    @property
    def c_prime(self) -> Fraction:
        return self.degree / (2 * lambda_zero_exact(self.cm))

    def to_json(self) -> dict:
        return {
            "field": self.cm.descriptor(),
            "points": [p.to_json() for p in self.points],
            "pairs": [p.source.to_json() for p in self.points],
            "multiplicity_per_point": rat_str(self.multiplicity_per_point),
            "class_group_order": self.class_group_order,
            "degree": rat_str(self.degree),
            "c_prime": rat_str(self.c_prime),
        }


def polarization_ideal(cm: CMQuartic, A: QuarticIdeal, xi: QuarticElem) -> QuadIdeal:
    return (cm.E.rel_different * A * A.conj() * xi).intersect_F()


def is_principally_polarized(cm: CMQuartic, A: QuarticIdeal, xi: QuarticElem) -> bool:
    return polarization_ideal(cm, A, xi) == cm.F.inverse_different()


def unit_representatives(cm: CMQuartic) -> List[QuadElem]:
    """O_F^x modulo relative norms of units of E."""
    eps = fundamental_unit(cm.F)
    one = cm.F.one
    if cm.delta_index == 0:
        return [one, -one, eps, -eps]
    return [one, -one]


def _cm_type(xi: QuarticElem) -> Tuple[int, int]:
    if not xi.x.is_zero():
        raise ConstructionFailed("xi must satisfy conj(xi) = -xi")
    return (xi.y.sign(0), xi.y.sign(1))


def xi_search_height(cm: CMQuartic) -> int:
    """Bound on Tr(y^2) / N(y) for xi = y sqrt(delta)."""
    return config.xi_height_factor * int(cm.E.rel_different.norm())


def _pairs_for_class(cm: CMQuartic, index: int, A: QuarticIdeal) -> List[PolarizedPair]:
    E = cm.E
    c = (E.rel_different * A * A.conj() * E.sqrt_delta).intersect_F()
    target = cm.F.inverse_different() / c
    height = xi_search_height(cm)
    # smallest height first, ties broken on coordinates
    best = min(generators_within(target, height), key=lambda hit: (hit[0], hit[1].coords()), default=None)
    if best is None:
        if is_principal(target):
            raise XiSearchExhausted(f"class {index} has a polarization but none of height <= {height}", height)
        return []
    y0 = best[1]
    pairs = []
    for u_index, u in enumerate(unit_representatives(cm)):
        xi = E.elem(0, y0 * u)
        if not is_principally_polarized(cm, A, xi):
            raise ConstructionFailed(f"pair {index}.{u_index} fails the principal polarization identity")
        pairs.append(PolarizedPair(A, xi, index, u_index, _cm_type(xi)))
    return pairs


def expected_point_count(cm: CMQuartic) -> int:
    """|C(E)| = [O_F^x : N(O_E^x)] * #{[A] in Cl(E) : N_{E/F} A principal}."""
    principal_norms = sum(1 for A in cm.class_reps if is_principal(A.rel_norm()))
    return len(unit_representatives(cm)) * principal_norms


def enumerate_pairs(cm: CMQuartic) -> List[PolarizedPair]:
    if len(cm.class_reps) > MAX_CLASSES:
        raise OverBound(f"h_E = {len(cm.class_reps)} exceeds {MAX_CLASSES}")
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        per_class = list(pool.map(lambda item: _pairs_for_class(cm, *item), enumerate(cm.class_reps)))
    pairs = sorted((p for ps in per_class for p in ps), key=lambda p: (p.class_index, p.unit_index))
    expected = expected_point_count(cm)
    if len(pairs) < expected:
        raise XiSearchExhausted(f"found {len(pairs)} polarizations, expected {expected}", xi_search_height(cm))
    if len(pairs) > expected:
        raise ConstructionFailed(f"found {len(pairs)} polarizations, more than |C(E)| = {expected}")
    return pairs


def _pi(pair: PolarizedPair, alpha: QuarticElem, x: QuarticElem) -> QuadElem:
    """xi (conj(alpha) x - alpha conj(x)), an element of F."""
    value = pair.xi * (alpha.conj() * x - alpha * x.conj())
    if not value.y.is_zero():
        raise ConstructionFailed("symplectic pairing left F")
    return value.x


def _primitive(pair: PolarizedPair, alpha: QuarticElem) -> Optional[QuarticElem]:
    """Rescale alpha by a in F so that A cap F alpha = O_F alpha."""
    coeff_ideal = (pair.ideal * alpha.inverse()).intersect_F()
    a = principal_generator(coeff_ideal)
    if a is None:
        return None
    return alpha * pair.ideal.field.elem(a)


def _complete_basis(pair: PolarizedPair, alpha: QuarticElem) -> Optional[QuarticElem]:
    """beta with xi (conj(alpha) beta - alpha conj(beta)) = 1 and A = O_F alpha + d^-1 beta.

    beta = sqrt(D) gamma where gamma in A pairs with alpha to the generator 1/sqrt(D) of d^-1.
    """
    A = pair.ideal
    F = A.field.F
    basis = A.basis
    images = [_pi(pair, alpha, b).coords() for b in basis]
    coeffs = integer_combination(images, F.sqrt_disc.inverse().coords())
    if coeffs is None:
        return None
    gamma = A.field.elem(0)
    for c, b in zip(coeffs, basis):
        if c:
            gamma = gamma + b * c
    beta = gamma * A.field.elem(F.sqrt_disc)
    gens = [alpha * A.field.elem(g) for g in F.ring_of_integers.basis]
    gens += [beta * A.field.elem(g) for g in F.inverse_different().basis]
    if Lattice.from_generators([g.coords() for g in gens], 4) != A.lattice:
        return None
    return beta


def find_bases(pair: PolarizedPair, count: int = 1) -> List[Tuple[QuarticElem, QuarticElem]]:
    """Up to count (alpha, beta) with A = O_F alpha + d^-1 beta, alphas distinct up to sign."""
    A = pair.ideal
    E = A.field
    den = A.lattice.den
    scaled = A * den
    basis = scaled.basis
    gram = E.trace_gram(basis)
    bound = Fraction(4) * max(gram[i][i] for i in range(4))
    found: List[Tuple[QuarticElem, QuarticElem]] = []
    seen = set()
    tried = 0
    for u, _ in sorted(short_vectors(gram, bound), key=lambda item: (item[1], item[0])):
        tried += 1
        if tried > BASIS_CANDIDATES:
            break
        x = E.elem(0)
        for c, b in zip(u, basis):
            if c:
                x = x + b * c
        alpha = _primitive(pair, x * Fraction(1, den))
        if alpha is None or alpha.coords() in seen or (-alpha).coords() in seen:
            continue
        beta = _complete_basis(pair, alpha)
        if beta is None:
            continue
        seen.add(alpha.coords())
        found.append((alpha, beta))
        if len(found) >= count:
            break
    if not found:
        raise BasisNotFound(f"no O_F alpha + d^-1 beta basis for pair {pair.key} among {tried} candidates")
    return found


def _embed_pair(pair: PolarizedPair, x: QuarticElem) -> Tuple[mpmath.mpc, mpmath.mpc]:
    return (x.embed(0, pair.cm_type[0]), x.embed(1, pair.cm_type[1]))


def point_from_basis(pair: PolarizedPair, alpha: QuarticElem, beta: QuarticElem) -> Tuple[mpmath.mpc, mpmath.mpc]:
    """conj(Sigma(beta / alpha)); Sigma(xi) in H^2 puts Sigma(beta / alpha) in the lower half planes."""
    z = _embed_pair(pair, beta / alpha)
    return (mpmath.conj(z[0]), mpmath.conj(z[1]))


def totally_positive_different_generator(F) -> QuadElem:
    """delta_0 = +-eps^k sqrt(D) generating the different and totally positive."""
    eps = fundamental_unit(F)
    for k in (0, 1, -1):
        for s in (1, -1):
            cand = F.sqrt_disc * (eps**k) * s
            if is_totally_positive(cand):
                return cand
    raise ConstructionFailed("the different has no totally positive generator")


def _apply(M: Matrix2, w: Tuple[mpmath.mpc, mpmath.mpc]) -> Tuple[mpmath.mpc, mpmath.mpc]:
    a, b, c, d = M
    return tuple((a.embed(i) * w[i] + b.embed(i)) / (c.embed(i) * w[i] + d.embed(i)) for i in range(2))


def _compose(M: Matrix2, N: Matrix2) -> Matrix2:
    a, b, c, d = M
    e, f, g, h = N
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def reduce_point(F, w: Tuple[mpmath.mpc, mpmath.mpc], max_steps: int = 64) -> Tuple[Tuple, Matrix2]:
    """Move w by SL_2(O_F) (translations, unit scalings, inversion) to raise Im w1 Im w2."""
    one, zero = F.one, F.elem(0)
    eps = fundamental_unit(F)
    log_eps = mpmath.log(abs(eps.embed(0)))
    omega = F.omega
    M: Matrix2 = (one, zero, zero, one)
    for _ in range(max_steps):
        # translation: Re w ~ x + y omega with x, y rounded
        o1, o2 = omega.embed(0), omega.embed(1)
        r1, r2 = w[0].real, w[1].real
        y = int(mpmath.nint((r1 - r2) / (o1 - o2)))
        x = int(mpmath.nint((r1 + r2 - y * (o1 + o2)) / 2))
        t = F.from_coords(x, y)
        T = (one, -t, zero, one)
        w = _apply(T, w)
        M = _compose(T, M)
        # unit scaling balances the imaginary parts
        k = int(mpmath.nint(mpmath.log(w[1].imag / w[0].imag) / (4 * log_eps)))
        if k:
            U = (eps**k, zero, zero, eps ** (-k))
            w = _apply(U, w)
            M = _compose(U, M)
        if abs(w[0]) * abs(w[1]) >= 1:
            break
        S = (zero, -one, one, zero)
        w = _apply(S, w)
        M = _compose(S, M)
    return w, M


def _sl2_coordinates(F, z: Tuple[mpmath.mpc, mpmath.mpc]) -> Tuple[mpmath.mpc, mpmath.mpc]:
    d0 = totally_positive_different_generator(F)
    return (z[0] / d0.embed(0), z[1] / d0.embed(1))


def period_point(pair: PolarizedPair, which: int = 0, precision: int = None) -> CMPoint:
    """CM point from the which-th basis found for the pair, with its SL_2(O_F) reduction."""
    precision = precision or config.default_precision
    bases = find_bases(pair, which + 1)
    if len(bases) <= which:
        raise BasisNotFound(f"pair {pair.key} has only {len(bases)} bases within the search")
    alpha, beta = bases[which]
    if pair.xi * (alpha.conj() * beta - alpha * beta.conj()) != pair.ideal.field.one:
        raise BasisNotFound(f"basis for pair {pair.key} is not symplectic")
    F = pair.ideal.field.F
    with mpmath.workprec(precision):
        z1, z2 = point_from_basis(pair, alpha, beta)
        if not (z1.imag > 0 and z2.imag > 0):
            raise ConstructionFailed(f"period point of {pair.key} is not in H^2")
        w, M = reduce_point(F, _sl2_coordinates(F, (z1, z2)))
    return CMPoint(z1, z2, pair, alpha, beta, w, M)


def gamma_in_group(F, M: Matrix2) -> bool:
    """a, d in O_F, b in d_F, c in d_F^-1 and det 1."""
    a, b, c, d = M
    return (
        a.is_integral()
        and d.is_integral()
        and F.different().contains(b)
        and F.inverse_different().contains(c)
        and a * d - b * c == F.one
    )


def basis_change(p: CMPoint, q: CMPoint) -> Matrix2:
    """gamma = [[a, b], [c, d]] with q.z = gamma p.z, solved exactly from (alpha', beta') = (alpha, beta) M."""
    pair = p.source
    alpha, beta = p.alpha, p.beta

    def split(x: QuarticElem) -> Tuple[QuadElem, QuadElem]:
        v = _pi(pair, alpha, x)
        u = (x - beta * v) / alpha
        if not u.y.is_zero():
            raise ConstructionFailed("basis change left F")
        return u.x, v

    d, c = split(q.alpha)
    b, a = split(q.beta)
    M = (a, b, c, d)
    if not gamma_in_group(alpha.field.F, M):
        raise ConstructionFailed(f"basis change for {pair.key} is not in Gamma")
    return M


def act(M: Matrix2, z: Tuple[mpmath.mpc, mpmath.mpc]) -> Tuple[mpmath.mpc, mpmath.mpc]:
    return _apply(M, z)


def enumerate_cm(cm: CMQuartic, precision: int = None) -> CMCycle:
    """All of CM(E) over the four CM types, each point with multiplicity 2/w_E."""
    pairs = enumerate_pairs(cm)
    multiplicity = Fraction(2, cm.w_E)
    points = []
    # numeric work stays serial: mpmath precision is process-global
    for pair in pairs:
        point = period_point(pair, precision=precision)
        point.multiplicity = multiplicity
        points.append(point)
    cycle = CMCycle(cm, points, multiplicity, expected_point_count(cm))
    logger.info(
        f"CM cycle: {len(points)} points, degree {rat_str(cycle.degree)}",
        extra={"D": cm.D, "points": len(points)},
    )
    return cycle
