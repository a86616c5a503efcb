"""Exact rational polytope kernel for weight-polytope computations.

Everything in this module runs on `fractions.Fraction`: hulls, halfspace
descriptions, containment, Minkowski sums and support minima are all exact.
Containment verdicts feed stability certificates, so there is no floating
point and no epsilon anywhere in this module.

Points are plain tuples of Fractions.  Polytopes may be degenerate
(lower-dimensional); the halfspace description then carries equality
constraints cutting out the affine hull alongside the facet inequalities.
Dimensions stay small (<= ~8), which keeps direct facet enumeration and a
tiny exact simplex entirely adequate.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

LatticePoint = tuple  # tuple[Fraction, ...]; fixed length within one context

__all__ = [
    "LatticePoint",
    "LinearFunctional",
    "LatticePolytope",
    "convex_hull",
    "contains",
    "minkowski_sum",
    "dilate",
    "support_min",
    "polytope_to_json",
    "polytope_from_json",
]


def as_point(coords: Iterable) -> LatticePoint:
    """Coerce a sequence of numbers to an exact rational point."""
    return tuple(Fraction(c) for c in coords)


@dataclass(frozen=True)
class LinearFunctional:
    """Integer linear functional with coefficients summing to zero.

    These are the functionals induced by algebraic one-parameter subgroups
    of the special linear group, which live in the sum-zero lattice.
    """

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        if any(c != orig for c, orig in zip(coeffs, self.coefficients)):
            raise ValueError("functional coefficients must be integers")
        if sum(coeffs) != 0:
            raise ValueError("functional coefficients must sum to zero")
        object.__setattr__(self, "coefficients", coeffs)

    def __call__(self, point: Sequence) -> Fraction:
        if len(point) != len(self.coefficients):
            raise ValueError("dimension mismatch between functional and point")
        return sum((Fraction(x) * c for x, c in zip(point, self.coefficients)),
                   Fraction(0))


# ---------------------------------------------------------------------------
# exact linear algebra helpers
# ---------------------------------------------------------------------------

def _dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((Fraction(a) * Fraction(b) for a, b in zip(u, v)), Fraction(0))


def _sub(u: Sequence, v: Sequence) -> tuple:
    return tuple(Fraction(a) - Fraction(b) for a, b in zip(u, v))


def _independent_rows(rows: list) -> list:
    """Return a maximal linearly independent subset of `rows` (exact)."""
    basis: list = []
    reduced: list = []  # row-echelon shadows of the basis
    pivots: list = []
    for row in rows:
        work = list(row)
        for shadow, piv in zip(reduced, pivots):
            if work[piv] != 0:
                factor = work[piv] / shadow[piv]
                work = [a - factor * b for a, b in zip(work, shadow)]
        piv = next((j for j, a in enumerate(work) if a != 0), None)
        if piv is None:
            continue
        basis.append(tuple(row))
        reduced.append(work)
        pivots.append(piv)
    return basis


def _nullspace(rows: list, dim: int) -> list:
    """Basis of {x : <row, x> = 0 for all rows} in ambient dimension `dim`."""
    mat = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(dim):
        piv_row = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if piv_row is None:
            continue
        mat[r], mat[piv_row] = mat[piv_row], mat[r]
        lead = mat[r][col]
        mat[r] = [a / lead for a in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    free = [j for j in range(dim) if j not in pivots]
    basis = []
    for j in free:
        vec = [Fraction(0)] * dim
        vec[j] = Fraction(1)
        for i, piv in enumerate(pivots):
            vec[piv] = -mat[i][j]
        basis.append(tuple(vec))
    return basis


def _solve(columns: list, rhs: Sequence) -> Optional[tuple]:
    """Solve sum_j y_j * columns[j] = rhs exactly; None if inconsistent."""
    dim = len(rhs)
    k = len(columns)
    aug = [[columns[j][i] for j in range(k)] + [Fraction(rhs[i])] for i in range(dim)]
    pivots = []
    r = 0
    for col in range(k):
        piv_row = next((i for i in range(r, dim) if aug[i][col] != 0), None)
        if piv_row is None:
            continue
        aug[r], aug[piv_row] = aug[piv_row], aug[r]
        lead = aug[r][col]
        aug[r] = [a / lead for a in aug[r]]
        for i in range(dim):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
    for i in range(r, dim):
        if aug[i][-1] != 0:
            return None
    sol = [Fraction(0)] * k
    for i, col in enumerate(pivots):
        sol[col] = aug[i][-1]
    return tuple(sol)


def _primitive(vec: Sequence) -> tuple:
    """Scale a rational vector by a positive rational to a primitive integer one."""
    fracs = [Fraction(v) for v in vec]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // gcd(denom, f.denominator)
    ints = [int(f * denom) for f in fracs]
    g = 0
    for a in ints:
        g = gcd(g, abs(a))
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(a // g for a in ints)


def _canonical_sign(vec: tuple) -> tuple:
    """Flip sign so the first nonzero entry is positive (for dedup keys)."""
    for a in vec:
        if a != 0:
            return vec if a > 0 else tuple(-x for x in vec)
    return vec


# ---------------------------------------------------------------------------
# exact feasibility LP (phase-1 simplex, Bland's rule)
# ---------------------------------------------------------------------------

def _lp_feasible(A: list, b: list) -> bool:
    """Exact feasibility of {x >= 0 : A x = b} over the rationals."""
    m = len(A)
    n = len(A[0]) if m else 0
    rows = []
    for i in range(m):
        if b[i] >= 0:
            rows.append([Fraction(a) for a in A[i]] + [Fraction(0)] * m + [Fraction(b[i])])
        else:
            rows.append([-Fraction(a) for a in A[i]] + [Fraction(0)] * m + [-Fraction(b[i])])
    for i in range(m):
        rows[i][n + i] = Fraction(1)
    basis = list(range(n, n + m))
    z = [Fraction(0)] * (n + m + 1)
    for row in rows:
        z = [a + bb for a, bb in zip(z, row)]
    while True:
        enter = next((j for j in range(n) if z[j] > 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            if rows[i][enter] > 0:
                ratio = rows[i][-1] / rows[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:  # pragma: no cover - phase-1 objective is bounded
            raise ArithmeticError("unbounded phase-1 simplex")
        piv = rows[leave][enter]
        rows[leave] = [a / piv for a in rows[leave]]
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [a - f * c for a, c in zip(rows[i], rows[leave])]
        if z[enter] != 0:
            f = z[enter]
            z = [a - f * c for a, c in zip(z, rows[leave])]
        basis[leave] = enter
    return z[-1] == 0


def _point_in_hull(point: Sequence, points: list) -> bool:
    """Exact test for `point` in conv(points)."""
    if not points:
        return False
    dim = len(point)
    A = [[Fraction(p[i]) for p in points] for i in range(dim)]
    A.append([Fraction(1)] * len(points))
    b = [Fraction(point[i]) for i in range(dim)] + [Fraction(1)]
    return _lp_feasible(A, b)


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------

class LatticePolytope:
    """Convex hull of finitely many rational points, stored by its vertex set.

    `vertices` is the irredundant set of extreme points.  The halfspace
    description (affine-hull equalities plus facet inequalities, both in
    ambient coordinates) is derived lazily and cached; it defines exactly
    the same set.  Instances are immutable and safe to share across threads.
    """

    __slots__ = ("dim", "vertices", "_reduced", "_halfspaces")

    def __init__(self, vertices: Sequence[LatticePoint], *, _known_extreme: bool = False):
        pts = [as_point(p) for p in vertices]
        if not pts:
            raise ValueError("a polytope needs at least one point")
        dim = len(pts[0])
        if any(len(p) != dim for p in pts):
            raise ValueError("mixed dimensions in point set")
        pts = sorted(set(pts))
        if not _known_extreme:
            pts = _extreme_points(pts)
        self.dim = dim
        self.vertices = tuple(pts)
        self._reduced = None
        self._halfspaces = None

    # -- structure ---------------------------------------------------------

    def _reduction(self):
        """Affine-hull data: base point, independent direction basis, reduced verts."""
        if self._reduced is None:
            p0 = self.vertices[0]
            diffs = [_sub(v, p0) for v in self.vertices[1:]]
            basis = _independent_rows(diffs)
            reduced = []
            for v in self.vertices:
                y = _solve(basis, _sub(v, p0)) if basis else ()
                if y is None:  # pragma: no cover - basis spans by construction
                    raise ArithmeticError("vertex outside its own affine hull")
                reduced.append(tuple(y))
            self._reduced = (p0, basis, reduced)
        return self._reduced

    @property
    def intrinsic_dim(self) -> int:
        return len(self._reduction()[1])

    def halfspaces(self):
        """Return (equalities, inequalities) in ambient coordinates.

        Equalities are pairs (n, c) with <n, x> = c on the polytope and cut
        out its affine hull; inequalities are pairs (u, c) with <u, x> >= c,
        one per facet relative to the affine hull.
        """
        if self._halfspaces is None:
            p0, basis, reduced = self._reduction()
            r = len(basis)
            equalities = []
            for n in _nullspace(basis, self.dim):
                n = _canonical_sign(_primitive(n))
                equalities.append((n, _dot(n, p0)))
            inequalities = []
            if r == 1:
                coords = [y[0] for y in reduced]
                lo, hi = min(coords), max(coords)
                inequalities = [((Fraction(1),), lo), ((Fraction(-1),), -hi)]
            elif r >= 2:
                inequalities = _facets_reduced(reduced, r)
            # Map reduced-space inequalities back to ambient coordinates via
            # the exact left inverse of the basis matrix.
            if inequalities and r >= 1:
                gram = [[_dot(basis[i], basis[j]) for j in range(r)] for i in range(r)]
                gram_inv = _invert(gram)
                ambient_ineqs = []
                for (u_red, c_red) in inequalities:
                    w = [sum(gram_inv[i][j] * u_red[j] for j in range(r)) for i in range(r)]
                    u_amb = tuple(sum(w[i] * basis[i][k] for i in range(r))
                                  for k in range(self.dim))
                    u_amb = _primitive(u_amb)
                    # re-derive the offset from an incident vertex to keep the
                    # primitive scaling consistent
                    c_amb = min(_dot(u_amb, v) for v in self.vertices)
                    ambient_ineqs.append((u_amb, c_amb))
                inequalities = ambient_ineqs
            self._halfspaces = (tuple(equalities), tuple(inequalities))
        return self._halfspaces

    # -- predicates ----------------------------------------------------------

    def contains_point(self, point: Sequence) -> bool:
        point = as_point(point)
        if len(point) != self.dim:
            raise ValueError("dimension mismatch")
        equalities, inequalities = self.halfspaces()
        for n, c in equalities:
            if _dot(n, point) != c:
                return False
        for u, c in inequalities:
            if _dot(u, point) < c:
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, LatticePolytope) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"LatticePolytope(dim={self.dim}, vertices={len(self.vertices)})"


def _invert(mat: list) -> list:
    """Exact inverse of a small nonsingular rational matrix."""
    n = len(mat)
    aug = [[Fraction(mat[i][j]) for j in range(n)] +
           [Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        lead = aug[col][col]
        aug[col] = [a / lead for a in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def _extreme_points(points: list) -> list:
    """Filter a deduplicated point list down to the extreme points (exact LPs)."""
    cand = list(points)
    i = 0
    while i < len(cand):
        others = cand[:i] + cand[i + 1:]
        if others and _point_in_hull(cand[i], others):
            cand.pop(i)
        else:
            i += 1
    return cand


def _facets_reduced(verts: list, r: int) -> list:
    """All facets of a full-dimensional polytope in reduced coordinates.

    Every facet contains r affinely independent vertices, so scanning
    r-subsets finds each one; supporting hyperplanes are kept with the
    polytope on the >= side.
    """
    facets = {}
    for subset in itertools.combinations(range(len(verts)), r):
        base = verts[subset[0]]
        rows = [_sub(verts[k], base) for k in subset[1:]]
        null = _nullspace(rows, r)
        if len(null) != 1:
            continue
        u = _primitive(null[0])
        c = _dot(u, base)
        below = above = False
        for v in verts:
            s = _dot(u, v) - c
            if s > 0:
                above = True
            elif s < 0:
                below = True
            if below and above:
                break
        if below and above:
            continue
        if below:
            u, c = tuple(-x for x in u), -c
        facets[(u, c)] = True
    return list(facets.keys())


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def convex_hull(points: Sequence) -> LatticePolytope:
    """Irredundant convex hull of a nonempty list of same-dimension points."""
    if points is None or len(points) == 0:
        raise ValueError("convex_hull of empty point set")
    return LatticePolytope(points)


def contains(outer: LatticePolytope, inner: LatticePolytope) -> bool:
    """Closed containment inner <= outer, exact (boundary counts as inside)."""
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch between polytopes")
    return all(outer.contains_point(v) for v in inner.vertices)


def minkowski_sum(p: LatticePolytope, q: LatticePolytope) -> LatticePolytope:
    """Hull of pairwise vertex sums."""
    if p.dim != q.dim:
        raise ValueError("dimension mismatch between polytopes")
    sums = [tuple(a + b for a, b in zip(u, v))
            for u in p.vertices for v in q.vertices]
    return LatticePolytope(sums)


def dilate(p: LatticePolytope, k) -> LatticePolytope:
    """Scale a polytope about the origin by a nonnegative rational factor."""
    k = Fraction(k)
    if k < 0:
        raise ValueError("dilation factor must be nonnegative")
    if k == 0:
        return LatticePolytope([tuple(Fraction(0) for _ in range(p.dim))],
                               _known_extreme=True)
    return LatticePolytope([tuple(k * c for c in v) for v in p.vertices],
                           _known_extreme=True)


def support_min(p: LatticePolytope, functional) -> Fraction:
    """Exact minimum of the functional over the polytope (attained at a vertex)."""
    coeffs = functional.coefficients if isinstance(functional, LinearFunctional) else functional
    if len(coeffs) != p.dim:
        raise ValueError("dimension mismatch between functional and polytope")
    return min(_dot(coeffs, v) for v in p.vertices)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def polytope_to_json(p: LatticePolytope) -> str:
    payload = {
        "dim": p.dim,
        "vertices": [[str(c) for c in v] for v in p.vertices],
    }
    return json.dumps(payload)


def polytope_from_json(text: str) -> LatticePolytope:
    payload = json.loads(text)
    verts = [tuple(Fraction(c) for c in v) for v in payload["vertices"]]
    if any(len(v) != payload["dim"] for v in verts):
        raise ValueError("vertex dimension disagrees with declared dim")
    return LatticePolytope(verts)
