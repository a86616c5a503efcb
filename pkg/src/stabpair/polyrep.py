"""Sparse homogeneous polynomials on matrix variable spaces.

A polynomial lives on the space of k x (N+1) complex matrices.  Terms are
stored as a map from exponent matrices (k x (N+1) nonnegative integers) to
coefficients; coefficients stay exact (int / Fraction) whenever they were
constructed from exact data, so torus supports survive cancellation exactly.

The group SL(N+1, C) acts by substitution on columns:

    (sigma . P)(A) := P(A . sigma)

which composes as act(s1, act(s2, P)) = act(s1 s2, P).  Any consistent
one-sided convention yields the same orbit norms for the unitarily
invariant norms used downstream.

Large resultants and hyperdiscriminants are never expanded; they enter as
black-box polynomials (evaluation only, with a declared degree that is
spot-checked for homogeneity), and formal tensor powers defer to linearity
rules for weights, polytopes and log-norms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

__all__ = [
    "MatrixShape",
    "TorusCharacter",
    "SparsePolynomial",
    "GroupElement",
    "OnePSG",
    "BlackBoxPolynomial",
    "FormalPower",
    "support",
    "act",
    "evaluate",
    "evaluate_batch",
    "tensor_support",
    "gaussian_sample",
    "gaussian_batch",
    "random_unimodular",
    "exact_gaussian_norm_sq",
    "measured_degree",
    "poly_to_json",
    "poly_from_json",
    "monomial",
    "constant",
    "determinant_poly",
]

ExponentMatrix = tuple  # tuple of row tuples of nonnegative ints


class MatrixShape(NamedTuple):
    rows: int
    cols: int


@dataclass(frozen=True)
class TorusCharacter:
    """Column-degree vector of a monomial on a matrix space.

    The diagonal torus scales column j by t_j, so a monomial transforms by
    prod t_j ** degrees[j].  The projected form subtracts the mean and lives
    in the sum-zero hyperplane, where characters of polynomials of different
    total degrees become comparable.
    """

    degrees: tuple

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))

    @property
    def total(self) -> int:
        return sum(self.degrees)

    def projected(self) -> tuple:
        shift = Fraction(self.total, len(self.degrees))
        return tuple(Fraction(d) - shift for d in self.degrees)

    def __add__(self, other: "TorusCharacter") -> "TorusCharacter":
        if len(self.degrees) != len(other.degrees):
            raise ValueError("character length mismatch")
        return TorusCharacter(tuple(a + b for a, b in zip(self.degrees, other.degrees)))

    def pair(self, lam: "OnePSG"):
        if len(lam.exponents) != len(self.degrees):
            raise ValueError("character / one-parameter-subgroup length mismatch")
        return sum(a * l for a, l in zip(self.degrees, lam.exponents))


@dataclass(frozen=True)
class OnePSG:
    """Algebraic one-parameter subgroup of the diagonal torus of SL(N+1).

    Identified with its integer exponent vector, which sums to zero.
    """

    exponents: tuple

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if sum(exps) != 0:
            raise ValueError("one-parameter subgroup exponents must sum to zero")
        object.__setattr__(self, "exponents", exps)

    def matrix(self, t: complex) -> np.ndarray:
        return np.diag([complex(t) ** e for e in self.exponents])


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


def _column_degrees(exps: ExponentMatrix) -> tuple:
    cols = len(exps[0])
    return tuple(sum(row[j] for row in exps) for j in range(cols))


class SparsePolynomial:
    """Homogeneous polynomial in matrix entries, stored term-by-term.

    `terms` maps exponent matrices to nonzero coefficients; all terms share
    the same total degree.  Instances are immutable in use: arithmetic
    returns new objects and never mutates existing ones.
    """

    __slots__ = ("shape", "terms", "degree")

    def __init__(self, shape: MatrixShape, terms: dict, degree: Optional[int] = None):
        shape = MatrixShape(*shape)
        clean = {}
        for exps, coeff in terms.items():
            if coeff == 0:
                continue
            exps = tuple(tuple(int(e) for e in row) for row in exps)
            if len(exps) != shape.rows or any(len(row) != shape.cols for row in exps):
                raise ValueError("exponent matrix does not match declared shape")
            if any(e < 0 for row in exps for e in row):
                raise ValueError("negative exponent")
            clean[exps] = coeff
        degrees = {sum(e for row in exps for e in row) for exps in clean}
        if len(degrees) > 1:
            raise ValueError(f"non-homogeneous term set with degrees {sorted(degrees)}")
        if degrees:
            inferred = degrees.pop()
            if degree is not None and degree != inferred:
                raise ValueError("declared degree disagrees with terms")
            degree = inferred
        elif degree is None:
            degree = 0
        self.shape = shape
        self.terms = clean
        self.degree = degree

    # -- basic structure -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def has_exact_coefficients(self) -> bool:
        return all(_is_exact(c) for c in self.terms.values())

    def __eq__(self, other):
        return (isinstance(other, SparsePolynomial) and self.shape == other.shape
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.shape, frozenset(self.terms.items())))

    def __repr__(self):
        return (f"SparsePolynomial(shape={tuple(self.shape)}, degree={self.degree}, "
                f"terms={len(self.terms)})")

    # -- ring operations -------------------------------------------------------

    def _check_compatible(self, other: "SparsePolynomial"):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")

    def __add__(self, other):
        if not isinstance(other, SparsePolynomial):
            return NotImplemented
        self._check_compatible(other)
        out = dict(self.terms)
        for exps, c in other.terms.items():
            s = out.get(exps, 0) + c
            if s == 0:
                out.pop(exps, None)
            else:
                out[exps] = s
        deg = self.degree if self.terms or not other.terms else other.degree
        return SparsePolynomial(self.shape, out, deg)

    def __neg__(self):
        return SparsePolynomial(self.shape, {e: -c for e, c in self.terms.items()},
                                self.degree)

    def __sub__(self, other):
        if not isinstance(other, SparsePolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SparsePolynomial):
            self._check_compatible(other)
            out = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    prod = c1 * c2
                    key = tuple(tuple(a + b for a, b in zip(r1, r2))
                                for r1, r2 in zip(e1, e2))
                    s = out.get(key, 0) + prod
                    if s == 0:
                        out.pop(key, None)
                    else:
                        out[key] = s
            return SparsePolynomial(self.shape, out, self.degree + other.degree)
        # scalar
        if other == 0:
            return SparsePolynomial(self.shape, {}, self.degree)
        return SparsePolynomial(self.shape,
                                {e: c * other for e, c in self.terms.items()},
                                self.degree)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = constant(self.shape, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- evaluation --------------------------------------------------------------

    def evaluate(self, a) -> complex:
        """Value at a single matrix, with compensated real/imag accumulation."""
        a = np.asarray(a, dtype=complex)
        if a.shape != tuple(self.shape):
            raise ValueError("argument shape mismatch")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite entries in argument")
        res_re, res_im = [], []
        for exps, coeff in self.terms.items():
            val = complex(coeff)
            for i, row in enumerate(exps):
                for j, e in enumerate(row):
                    if e:
                        val *= complex(a[i, j]) ** e
            res_re.append(val.real)
            res_im.append(val.imag)
        return complex(math.fsum(res_re), math.fsum(res_im))

    def evaluate_batch(self, batch: np.ndarray) -> np.ndarray:
        """Vectorized values on a (count, rows, cols) stack of matrices."""
        batch = np.asarray(batch, dtype=complex)
        if batch.ndim != 3 or batch.shape[1:] != tuple(self.shape):
            raise ValueError("batch shape mismatch")
        out = np.zeros(batch.shape[0], dtype=complex)
        for exps, coeff in self.terms.items():
            term = np.full(batch.shape[0], complex(coeff), dtype=complex)
            for i, row in enumerate(exps):
                for j, e in enumerate(row):
                    if e == 1:
                        term = term * batch[:, i, j]
                    elif e > 1:
                        term = term * batch[:, i, j] ** e
            out += term
        return out

    __call__ = evaluate

    def evaluate_exact(self, a):
        """Value at a matrix of exact (int / Fraction) entries, exactly.

        Arbitrary-precision rational arithmetic: no rounding, so planted
        zeros really come out as zero regardless of coefficient growth.
        """
        if not self.has_exact_coefficients():
            raise ValueError("exact evaluation needs exact coefficients")
        rows = [[Fraction(x) for x in row] for row in a]
        if len(rows) != self.shape.rows or any(len(r) != self.shape.cols
                                               for r in rows):
            raise ValueError("argument shape mismatch")
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            val = Fraction(coeff)
            for i, row in enumerate(exps):
                for j, e in enumerate(row):
                    if e:
                        val *= rows[i][j] ** e
            total += val
        return total


@dataclass(frozen=True)
class GroupElement:
    """Invertible (N+1) x (N+1) matrix with a cached determinant.

    The original entries are kept verbatim so that integer / rational group
    elements substitute exactly into polynomials; `matrix` is the complex
    working copy.
    """

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(e for e in row) for row in self.entries)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("group element must be square")
        object.__setattr__(self, "entries", rows)
        exact = all(_is_exact(e) for row in rows for e in row)
        object.__setattr__(self, "is_exact", exact)
        if exact:
            det = _exact_det([[Fraction(e) for e in row] for row in rows])
        else:
            det = complex(np.linalg.det(
                np.array([[complex(e) for e in row] for row in rows], dtype=complex)))
        if det == 0:
            raise ValueError("singular matrix is not a group element")
        object.__setattr__(self, "det", det)

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[complex(e) for e in row] for row in self.entries],
                        dtype=complex)

    @staticmethod
    def identity(n: int) -> "GroupElement":
        return GroupElement(tuple(tuple(1 if i == j else 0 for j in range(n))
                                  for i in range(n)))

    @staticmethod
    def diagonal(diag: Sequence) -> "GroupElement":
        n = len(diag)
        return GroupElement(tuple(tuple(diag[i] if i == j else 0 for j in range(n))
                                  for i in range(n)))

    @staticmethod
    def from_matrix(mat) -> "GroupElement":
        arr = np.asarray(mat)
        return GroupElement(tuple(tuple(arr[i, j] for j in range(arr.shape[1]))
                                  for i in range(arr.shape[0])))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        n = self.size
        if other.size != n:
            raise ValueError("size mismatch")
        if self.is_exact and other.is_exact:
            prod = tuple(tuple(sum(self.entries[i][k] * other.entries[k][j]
                                   for k in range(n)) for j in range(n))
                         for i in range(n))
            return GroupElement(prod)
        return GroupElement.from_matrix(self.matrix @ other.matrix)


def _exact_det(mat: list) -> Fraction:
    n = len(mat)
    det = Fraction(1)
    for col in range(n):
        piv = next((i for i in range(col, n) if mat[i][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            mat[col], mat[piv] = mat[piv], mat[col]
            det = -det
        det *= mat[col][col]
        inv = 1 / mat[col][col]
        for i in range(col + 1, n):
            if mat[i][col] != 0:
                f = mat[i][col] * inv
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[col])]
    return det


@dataclass
class BlackBoxPolynomial:
    """Evaluation-only polynomial with a declared degree.

    The declared homogeneity degree is spot-checked on random samples at
    construction; weights and heights only ever evaluate these, they are
    never expanded.
    """

    shape: MatrixShape
    degree: int
    evaluator: Callable[[np.ndarray], complex]
    batch_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "blackbox"
    check_samples: int = 20

    def __post_init__(self):
        self.shape = MatrixShape(*self.shape)
        if self.check_samples:
            rng = np.random.default_rng(20151216)
            for _ in range(self.check_samples):
                a = gaussian_sample(self.shape, rng)
                t = complex(rng.standard_normal() + 1j * rng.standard_normal())
                lhs = self.evaluator(t * a)
                rhs = (t ** self.degree) * self.evaluator(a)
                scale = max(abs(lhs), abs(rhs), 1e-300)
                if abs(lhs - rhs) / scale > 1e-8:
                    raise ValueError(
                        f"{self.name}: declared degree {self.degree} fails "
                        f"homogeneity spot-check")

    @property
    def is_zero(self) -> bool:
        return False

    def evaluate(self, a) -> complex:
        a = np.asarray(a, dtype=complex)
        if a.shape != tuple(self.shape):
            raise ValueError("argument shape mismatch")
        return complex(self.evaluator(a))

    def evaluate_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=complex)
        if batch.ndim != 3 or batch.shape[1:] != tuple(self.shape):
            raise ValueError("batch shape mismatch")
        if self.batch_evaluator is not None:
            return np.asarray(self.batch_evaluator(batch), dtype=complex)
        return np.array([self.evaluator(a) for a in batch], dtype=complex)

    __call__ = evaluate


@dataclass(frozen=True)
class FormalPower:
    """Formal tensor power base**(x) kept unexpanded.

    Weights, polytopes and log-norms all scale linearly in the exponent, so
    the power is never materialized.
    """

    base: Union[SparsePolynomial, BlackBoxPolynomial]
    exponent: int

    def __post_init__(self):
        if self.exponent < 1:
            raise ValueError("formal power exponent must be >= 1")

    @property
    def shape(self) -> MatrixShape:
        return self.base.shape

    @property
    def degree(self) -> int:
        return self.base.degree * self.exponent

    @property
    def is_zero(self) -> bool:
        return self.base.is_zero


AnyPolynomial = Union[SparsePolynomial, BlackBoxPolynomial, FormalPower]


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def monomial(shape: MatrixShape, exps, coeff=1) -> SparsePolynomial:
    exps = tuple(tuple(int(e) for e in row) for row in exps)
    return SparsePolynomial(MatrixShape(*shape), {exps: coeff})


def constant(shape: MatrixShape, value=1) -> SparsePolynomial:
    shape = MatrixShape(*shape)
    zero = tuple(tuple(0 for _ in range(shape.cols)) for _ in range(shape.rows))
    return SparsePolynomial(shape, {zero: value} if value != 0 else {}, 0)


def determinant_poly(n: int) -> SparsePolynomial:
    """Determinant of the n x n matrix space as an explicit n!-term polynomial."""
    import itertools as _it

    if n < 1:
        raise ValueError("determinant size must be >= 1")
    shape = MatrixShape(n, n)
    terms = {}
    for perm in _it.permutations(range(n)):
        sign = 1
        seen = [False] * n
        for i in range(n):  # cycle-count parity
            if seen[i]:
                continue
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        exps = tuple(tuple(1 if j == perm[i] else 0 for j in range(n))
                     for i in range(n))
        terms[exps] = sign
    return SparsePolynomial(shape, terms, n)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def support(p: AnyPolynomial) -> set:
    """Set of torus characters with nonzero component in p."""
    if isinstance(p, FormalPower):
        base_support = support(p.base)
        if p.exponent > 12 and len(base_support) > 1:
            raise ValueError(
                "iterated sumset support of a large formal power is "
                "combinatorial; weights and polytopes scale linearly in the "
                "exponent instead")
        out = {TorusCharacter(tuple(0 for _ in range(p.shape.cols)))}
        for _ in range(p.exponent):
            out = {a + b for a in out for b in base_support}
        return out
    if isinstance(p, BlackBoxPolynomial):
        raise ValueError(
            f"{p.name}: support of a black-box polynomial is unavailable; "
            "construct it symbolically or supply the support explicitly")
    if p.is_zero:
        raise ValueError("zero polynomial has no support")
    return {TorusCharacter(_column_degrees(exps)) for exps in p.terms}


def act(sigma: Union[GroupElement, np.ndarray, Sequence], p: AnyPolynomial):
    """Column substitution action (sigma . P)(A) = P(A . sigma).

    Exact when both the group element and the coefficients are exact;
    composes as act(s1, act(s2, P)) = act(s1 @ s2, P).
    """
    if not isinstance(sigma, GroupElement):
        sigma = GroupElement.from_matrix(np.asarray(sigma))
    if isinstance(p, FormalPower):
        return FormalPower(act(sigma, p.base), p.exponent)
    if sigma.size != p.shape.cols:
        raise ValueError("group element size must match the column count")
    if isinstance(p, BlackBoxPolynomial):
        mat = sigma.matrix
        base_eval = p.evaluator
        base_batch = p.batch_evaluator
        return BlackBoxPolynomial(
            shape=p.shape,
            degree=p.degree,
            evaluator=lambda a, _m=mat, _f=base_eval: _f(np.asarray(a) @ _m),
            batch_evaluator=(None if base_batch is None
                             else lambda b, _m=mat, _f=base_batch: _f(np.asarray(b) @ _m)),
            name=f"{p.name}.acted",
            check_samples=0,
        )
    exact = sigma.is_exact and p.has_exact_coefficients()
    entries = (sigma.entries if exact
               else tuple(tuple(complex(e) for e in row) for row in sigma.entries))
    shape = p.shape
    # variable (i, l) pulls back to the linear form sum_k sigma[k][l] x[i, k]
    form_cache = {}

    def linear_form(i: int, l: int) -> SparsePolynomial:
        key = (i, l)
        if key not in form_cache:
            terms = {}
            for k in range(shape.cols):
                c = entries[k][l]
                if c == 0:
                    continue
                exps = tuple(tuple(1 if (r == i and j == k) else 0
                                   for j in range(shape.cols))
                             for r in range(shape.rows))
                terms[exps] = c
            form_cache[key] = SparsePolynomial(shape, terms, 1)
        return form_cache[key]

    result = SparsePolynomial(shape, {}, p.degree)
    for exps, coeff in p.terms.items():
        term = constant(shape, coeff)
        for i, row in enumerate(exps):
            for l, e in enumerate(row):
                if e:
                    term = term * (linear_form(i, l) ** e)
        result = result + term
    return result


def evaluate(p: AnyPolynomial, a) -> complex:
    if isinstance(p, FormalPower):
        raise ValueError("formal powers are never evaluated; evaluate the base")
    return p.evaluate(a)


def evaluate_batch(p: AnyPolynomial, batch: np.ndarray) -> np.ndarray:
    if isinstance(p, FormalPower):
        raise ValueError("formal powers are never evaluated; evaluate the base")
    return p.evaluate_batch(batch)


def tensor_support(v: AnyPolynomial, w: AnyPolynomial) -> set:
    """Support of the tensor product: all pairwise character sums."""
    sup_v, sup_w = support(v), support(w)
    if not sup_v or not sup_w:
        raise ValueError("tensor_support of a zero polynomial")
    sample_v = next(iter(sup_v))
    sample_w = next(iter(sup_w))
    if len(sample_v.degrees) != len(sample_w.degrees):
        raise ValueError("ambient dimension mismatch")
    return {a + b for a in sup_v for b in sup_w}


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gaussian_sample(shape: MatrixShape, rng_seed=0) -> np.ndarray:
    """One draw of the standard complex Gaussian on the matrix space.

    Entries are i.i.d. with independent real and imaginary parts of variance
    1/2, so E|z_ij|^2 = 1 and the density is exp(-|Z|^2) / pi^dim.
    """
    return gaussian_batch(shape, 1, rng_seed)[0]


def gaussian_batch(shape: MatrixShape, count: int, rng_seed=0) -> np.ndarray:
    rng = _as_rng(rng_seed)
    shape = MatrixShape(*shape)
    re = rng.standard_normal((count, shape.rows, shape.cols))
    im = rng.standard_normal((count, shape.rows, shape.cols))
    return (re + 1j * im) / np.sqrt(2.0)


def random_unimodular(n: int, rng_seed=0, steps: int = 12, bound: int = 2) -> GroupElement:
    """Random integer matrix of determinant exactly 1 (product of shears).

    Exact entries keep conjugate-torus supports exact downstream.
    """
    rng = _as_rng(rng_seed)
    mat = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(steps):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        j = j if j < i else j + 1
        k = int(rng.integers(1, bound + 1)) * (1 if rng.integers(0, 2) else -1)
        # row_i += k * row_j
        mat[i] = [a + k * b for a, b in zip(mat[i], mat[j])]
    return GroupElement(tuple(tuple(row) for row in mat))


def exact_gaussian_norm_sq(p: SparsePolynomial):
    """E|P(Z)|^2 under the standard complex Gaussian, exactly.

    Monomials are orthogonal for this measure and a monomial with exponent
    matrix alpha has squared norm prod alpha_ij!.  Exact (Fraction) when the
    coefficients are exact, float otherwise.
    """
    if not isinstance(p, SparsePolynomial):
        raise TypeError("exact norms exist only for sparse polynomials")
    if p.is_zero:
        raise ValueError("zero polynomial has no norm")
    exact = p.has_exact_coefficients()
    total = Fraction(0) if exact else 0.0
    for exps, coeff in p.terms.items():
        weight = 1
        for row in exps:
            for e in row:
                if e > 1:
                    weight *= math.factorial(e)
        if exact:
            total += Fraction(coeff) * Fraction(coeff) * weight
        else:
            total += abs(complex(coeff)) ** 2 * weight
    return total


def measured_degree(p: Union[SparsePolynomial, BlackBoxPolynomial], rng_seed=3) -> int:
    """Total degree measured from behavior under scaling.

    For sparse polynomials this just reads the stored degree; for black
    boxes it recovers the integer exponent from f(2A)/f(A) at random points
    and checks consistency.
    """
    if isinstance(p, SparsePolynomial):
        if p.is_zero:
            raise ValueError("zero polynomial has no degree")
        return p.degree
    rng = _as_rng(rng_seed)
    measured = set()
    for _ in range(5):
        a = gaussian_sample(p.shape, rng)
        base = p.evaluate(a)
        if abs(base) < 1e-12:
            continue
        ratio = abs(p.evaluate(2.0 * a)) / abs(base)
        deg = round(math.log2(ratio))
        if abs(math.log2(ratio) - deg) > 1e-6:
            raise ValueError("scaling ratio is not an integer power of 2")
        measured.add(int(deg))
    if len(measured) != 1:
        raise ValueError(f"inconsistent measured degrees {sorted(measured)}")
    return measured.pop()


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def poly_to_json(p: SparsePolynomial) -> str:
    terms = []
    for exps, coeff in sorted(p.terms.items()):
        c = complex(coeff)
        terms.append({"exps": [list(row) for row in exps], "re": c.real, "im": c.imag})
    return json.dumps({"shape": [p.shape.rows, p.shape.cols],
                       "degree": p.degree, "terms": terms})


def poly_from_json(text: str) -> SparsePolynomial:
    payload = json.loads(text)
    shape = MatrixShape(*payload["shape"])
    terms = {}
    for item in payload["terms"]:
        exps = tuple(tuple(int(e) for e in row) for row in item["exps"])
        re, im = item.get("re", 0.0), item.get("im", 0.0)
        coeff = int(re) if im == 0 and float(re).is_integer() else complex(re, im)
        terms[exps] = coeff
    p = SparsePolynomial(shape, terms)
    declared = payload.get("degree")
    if declared is not None and not p.is_zero and p.degree != declared:
        raise ValueError("declared degree disagrees with terms")
    return p
