"""Semistability and stability of pairs of vectors via weight polytopes.

A pair (v, w) is numerically semistable at a maximal torus when the weight
polytope of v is contained in the weight polytope of w; equivalently, when
min <a, lam> over the support of v is >= the same minimum for w, for every
integer sum-zero functional lam.  (Containment in a smaller set can only
raise a minimum, and a separating facet normal certifies failure.)

Full semistability quantifies over all maximal tori, which is out of reach
exactly; this module certifies the diagonal torus exactly and probes random
integer conjugates, labeling verdicts accordingly.  Destabilizations are
always exact: conjugating group elements are unimodular integer matrices,
so supports, hulls and separating functionals never touch floating point.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np

from . import exactgeom
from .exactgeom import LatticePolytope, contains, convex_hull, dilate, minkowski_sum
from .polyrep import (
    AnyPolynomial,
    FormalPower,
    GroupElement,
    OnePSG,
    act,
    random_unimodular,
    support,
)

__all__ = [
    "PairSpec",
    "StabilityVerdict",
    "simplex_qn",
    "weight_polytope",
    "ops_weight",
    "semistable_diagonal",
    "semistable_probe",
    "module_degree",
    "stable_search",
    "separating_functionals",
    "destabilizing_functional",
    "verify_witness",
]

CERTIFIED = "semistable-certified-on-diagonal-torus"
DESTABILIZED = "destabilized"
STABLE = "stable-with-exponent"


@dataclass(frozen=True)
class PairSpec:
    """A pair (v, w) with its ambient column dimension and module degrees."""

    v: AnyPolynomial
    w: AnyPolynomial
    ambient: int
    degree_v: int
    degree_w: int

    @staticmethod
    def of(v: AnyPolynomial, w: AnyPolynomial) -> "PairSpec":
        if v.is_zero or w.is_zero:
            raise ValueError("pair components must be nonzero")
        if v.shape.cols != w.shape.cols:
            raise ValueError("pair components must share the ambient dimension")
        return PairSpec(v=v, w=w, ambient=v.shape.cols,
                        degree_v=module_degree(v), degree_w=module_degree(w))


@dataclass
class StabilityVerdict:
    status: str
    trials: int
    witness: Optional[tuple] = None  # (GroupElement, OnePSG)
    exponent: Optional[int] = None

    @property
    def destabilized(self) -> bool:
        return self.status == DESTABILIZED


@lru_cache(maxsize=None)
def simplex_qn(ambient: int) -> LatticePolytope:
    """Weight polytope of the identity operator, in sum-zero coordinates.

    Vertices are e_i - (1, ..., 1)/(N+1); the origin is its barycenter and
    lies in the strict interior.  Under any basis change the left regular
    factor keeps every row character, so this polytope is the same for all
    maximal tori.
    """
    verts = []
    for i in range(ambient):
        v = [Fraction(-1, ambient)] * ambient
        v[i] += 1
        verts.append(tuple(v))
    return convex_hull(verts)


def weight_polytope(p: AnyPolynomial) -> LatticePolytope:
    """Hull of the projected (sum-zero) torus characters of p."""
    if isinstance(p, FormalPower):
        return dilate(weight_polytope(p.base), p.exponent)
    pts = [c.projected() for c in support(p)]
    return convex_hull(pts)


def ops_weight(p: AnyPolynomial, lam: OnePSG):
    """min over the support of p of <a, lam>; exact.

    Raw and projected characters give the same value because lam sums to
    zero.  Formal powers scale the weight by their exponent.
    """
    if not isinstance(lam, OnePSG):
        lam = OnePSG(tuple(lam))
    if isinstance(p, FormalPower):
        return p.exponent * ops_weight(p.base, lam)
    return min(c.pair(lam) for c in support(p))


def semistable_diagonal(pair: PairSpec) -> bool:
    """Exact weight-polytope containment N(v) <= N(w) at the diagonal torus."""
    return contains(weight_polytope(pair.w), weight_polytope(pair.v))


def _project_primitive(vec, ambient: int) -> tuple:
    """Project a rational vector to the sum-zero lattice, primitively scaled."""
    fr = [Fraction(x) for x in vec]
    total = sum(fr)
    shifted = [x * ambient - total for x in fr]
    if all(x == 0 for x in shifted):
        raise ValueError("functional is trivial on the sum-zero hyperplane")
    return exactgeom._primitive(shifted)


def separating_functionals(polytope: LatticePolytope) -> list:
    """Finite certificate set for containment in `polytope`.

    Facet normals plus both signs of each affine-hull equality normal,
    projected to primitive sum-zero integer vectors.  A polytope Q lies in
    `polytope` iff min over Q >= min over `polytope` for every one of these.
    """
    equalities, inequalities = polytope.halfspaces()
    lams = []
    seen = set()
    for n, _c in equalities:
        for sign in (1, -1):
            try:
                lam = _project_primitive([sign * x for x in n], polytope.dim)
            except ValueError:
                continue
            if lam not in seen:
                seen.add(lam)
                lams.append(OnePSG(lam))
    for u, _c in inequalities:
        try:
            lam = _project_primitive(u, polytope.dim)
        except ValueError:
            continue
        if lam not in seen:
            seen.add(lam)
            lams.append(OnePSG(lam))
    return lams


def destabilizing_functional(outer: LatticePolytope,
                             inner: LatticePolytope) -> Optional[OnePSG]:
    """A sum-zero integer functional with min(inner) < min(outer), if one exists.

    Containment failures always yield one through a violated equality or
    facet of the outer polytope.
    """
    for lam in separating_functionals(outer):
        lo_inner = exactgeom.support_min(inner, lam.exponents)
        lo_outer = exactgeom.support_min(outer, lam.exponents)
        if lo_inner < lo_outer:
            return lam
    return None


def _acted_pair(pair: PairSpec, g: GroupElement):
    return act(g, pair.v), act(g, pair.w)


def _probe_trial(pair: PairSpec, g: GroupElement):
    v_g, w_g = _acted_pair(pair, g)
    wp_v = weight_polytope(v_g)
    wp_w = weight_polytope(w_g)
    if contains(wp_w, wp_v):
        return None
    lam = destabilizing_functional(wp_w, wp_v)
    if lam is None:  # pragma: no cover - separation always produces a witness
        raise ArithmeticError("containment failed but no separating functional found")
    return (g, lam)


def semistable_probe(pair: PairSpec, trials: int = 20, rng_seed=0,
                     threads: int = 1) -> StabilityVerdict:
    """Exact diagonal certification plus randomized conjugate-torus probing.

    Trial 0 is the identity (the diagonal torus itself); the remaining
    trials act by random integer unimodular matrices, so every verdict is
    an exact polytope computation.  The first destabilizer by trial index
    wins, independent of scheduling.  A returned witness (g, lam) satisfies
    ops_weight(act(g, v), lam) < ops_weight(act(g, w), lam).
    """
    if trials < 1:
        raise ValueError("at least one trial required")
    seeds = np.random.SeedSequence(rng_seed).spawn(trials)
    elements = [GroupElement.identity(pair.ambient)]
    for i in range(1, trials):
        elements.append(random_unimodular(pair.ambient, np.random.default_rng(seeds[i])))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda g: _probe_trial(pair, g), elements))
    else:
        results = [_probe_trial(pair, g) for g in elements]

    for idx, res in enumerate(results):
        if res is not None:
            g, lam = res
            check = verify_witness(pair, g, lam)
            if not check["valid"]:  # pragma: no cover - exact arithmetic
                raise ArithmeticError("destabilizing witness failed re-verification")
            return StabilityVerdict(status=DESTABILIZED, trials=idx + 1,
                                    witness=(g, lam))
    return StabilityVerdict(status=CERTIFIED, trials=trials)


def verify_witness(pair: PairSpec, g: GroupElement, lam: OnePSG) -> dict:
    """Independent recomputation of a destabilizing witness."""
    v_g, w_g = _acted_pair(pair, g)
    weight_v = ops_weight(v_g, lam)
    weight_w = ops_weight(w_g, lam)
    return {"weight_v": weight_v, "weight_w": weight_w,
            "valid": weight_v < weight_w}


def module_degree(p: AnyPolynomial, generic: bool = False) -> int:
    """Degree of the ambient module of homogeneous polynomials containing p.

    For the module of all homogeneous polynomials of total degree D on a
    matrix space, the smallest positive k with every weight polytope inside
    k times the standard simplex is max(D, 1): a single-column monomial
    attains the bound.  With generic=True the value is recomputed from the
    full module polytope by exact containment sweep and must agree.
    """
    if isinstance(p, FormalPower):
        total = p.degree
        cols = p.shape.cols
    else:
        if p.is_zero:
            raise ValueError("zero polynomial spans no module")
        total = p.degree
        cols = p.shape.cols
    closed = max(total, 1)
    if generic:
        qn = simplex_qn(cols)
        pts = []
        for comb in combinations_with_replacement(range(cols), total):
            degs = [0] * cols
            for c in comb:
                degs[c] += 1
            shift = Fraction(total, cols)
            pts.append(tuple(Fraction(d) - shift for d in degs))
        module_polytope = convex_hull(pts)
        k = 1
        while not contains(dilate(qn, k), module_polytope):
            k += 1
            if k > total + 1:  # pragma: no cover
                raise ArithmeticError("module degree sweep exceeded bound")
        if k != closed:
            raise ArithmeticError(
                f"generic module degree {k} disagrees with closed form {closed}")
    return closed


def stable_search(pair: PairSpec, q: int, m_max: int = 50,
                  scheme: str = "m:m+1", probe_trials: int = 0,
                  rng_seed=0, conjugators: Optional[list] = None) -> Optional[int]:
    """Smallest twist exponent m making the identity-padded pair semistable.

    scheme "m:m+1" tests q*Q + m*N(v) <= (m+1)*N(w); scheme "m-1:m" tests
    the shifted variant q*Q + (m-1)*N(v) <= m*N(w).  Both exponent layouts
    appear in the source definitions and are kept behind this flag rather
    than reconciled.  The sweep is linear in m because the criterion is not
    monotone in m a priori.  Each diagonal success is cross-checked on
    conjugate tori (random integer ones with probe_trials > 0, or the
    explicit `conjugators`) and rejected on any failure; the identity
    simplex factor is torus-independent, so only the pair polytopes move.
    """
    if q < 1:
        raise ValueError("identity padding exponent q must be >= 1")
    if scheme not in ("m:m+1", "m-1:m"):
        raise ValueError(f"unknown exponent scheme {scheme!r}")
    qn = simplex_qn(pair.ambient)

    if conjugators is None:
        conjugators = []
        if probe_trials:
            seeds = np.random.SeedSequence(rng_seed).spawn(probe_trials)
            conjugators = [random_unimodular(pair.ambient, np.random.default_rng(s))
                           for s in seeds]

    def criterion(wp_v: LatticePolytope, wp_w: LatticePolytope, m: int) -> bool:
        if scheme == "m:m+1":
            source = minkowski_sum(dilate(qn, q), dilate(wp_v, m))
            target = dilate(wp_w, m + 1)
        else:
            source = (minkowski_sum(dilate(qn, q), dilate(wp_v, m - 1))
                      if m > 1 else dilate(qn, q))
            target = dilate(wp_w, m)
        return contains(target, source)

    wp_v0 = weight_polytope(pair.v)
    wp_w0 = weight_polytope(pair.w)
    acted = None
    for m in range(1, m_max + 1):
        if not criterion(wp_v0, wp_w0, m):
            continue
        if conjugators:
            if acted is None:
                acted = [(_acted_pair(pair, g)) for g in conjugators]
            ok = True
            for v_g, w_g in acted:
                if not criterion(weight_polytope(v_g), weight_polytope(w_g), m):
                    ok = False
                    break
            if not ok:
                continue
        return m
    return None
