"""Resultants and hyperdiscriminants of rational normal curves, and their heights.

The degree-d rational normal curve is the unique built-in family: its
codimension-2-plane divisor form is the Sylvester resultant of the two
binary d-forms read off the rows of a 2 x (d+1) matrix, and its tangency
divisor form is the discriminant of a single binary d-form, realized as
the resultant of the two partial derivatives.  Both are exactly
constructible, which makes every downstream quantity (degrees, supports,
heights, discrepancies) independently checkable.

Small degrees are expanded symbolically with integer coefficients; larger
ones stay black boxes evaluated through batched numeric Sylvester
determinants.  Degrees are measured from the constructions and must equal
2d and 2d - 2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .igusa import HeightReport, height
from .pairstab import PairSpec
from .polyrep import (
    BlackBoxPolynomial,
    FormalPower,
    GroupElement,
    MatrixShape,
    SparsePolynomial,
    act,
    constant,
    measured_degree,
)

logger = logging.getLogger(__name__)

__all__ = [
    "VarietyExample",
    "DiscrepancyRow",
    "poly_det",
    "sylvester_resultant",
    "rnc_resultant",
    "rnc_hyperdiscriminant",
    "rnc_example",
    "normalized_pair",
    "variety_heights",
    "discrepancy_table",
    "optimal_constant_probe",
    "binary_form_mul",
]

SYMBOLIC_RESULTANT_LIMIT = 4
SYMBOLIC_DISCRIMINANT_LIMIT = 5


# ---------------------------------------------------------------------------
# symbolic Sylvester machinery
# ---------------------------------------------------------------------------

def poly_det(rows: Sequence[Sequence[SparsePolynomial]]) -> SparsePolynomial:
    """Determinant of a small matrix of polynomials by memoized expansion.

    Expands along columns left to right; minors are shared across the
    expansion tree, so the cost is 2^n subsets rather than n! products.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant needs a square matrix")
    shape = None
    for r in rows:
        for e in r:
            if e is not None:
                shape = e.shape
                break
        if shape is not None:
            break
    if shape is None:
        raise ValueError("matrix of empty entries")
    one = constant(shape, 1)
    zero = SparsePolynomial(shape, {}, 0)
    memo: dict = {}

    def rec(remaining: tuple) -> SparsePolynomial:
        if not remaining:
            return one
        key = remaining
        if key in memo:
            return memo[key]
        col = n - len(remaining)
        acc = zero
        for pos, i in enumerate(remaining):
            entry = rows[i][col]
            if entry is None or entry.is_zero:
                continue
            sub = rec(remaining[:pos] + remaining[pos + 1:])
            if sub.is_zero:
                continue
            term = entry * sub
            acc = acc + term if pos % 2 == 0 else acc - term
        memo[key] = acc
        return acc

    return rec(tuple(range(n)))


def _sylvester_rows(f: Sequence, g: Sequence, shape: MatrixShape):
    """Symbolic Sylvester matrix of two coefficient vectors (degrees from length)."""
    df = len(f) - 1
    dg = len(g) - 1
    size = df + dg
    zero = SparsePolynomial(shape, {}, 0)
    rows = []
    for i in range(dg):
        row = [zero] * size
        for j, coeff in enumerate(f):
            row[i + j] = coeff
        rows.append(row)
    for i in range(df):
        row = [zero] * size
        for j, coeff in enumerate(g):
            row[i + j] = coeff
        rows.append(row)
    return rows


def sylvester_resultant(f: Sequence[SparsePolynomial],
                        g: Sequence[SparsePolynomial]) -> SparsePolynomial:
    """Resultant of two binary forms given by symbolic coefficient vectors."""
    shape = f[0].shape
    return poly_det(_sylvester_rows(list(f), list(g), shape))


def _numeric_sylvester_det(fs: np.ndarray, gs: np.ndarray) -> np.ndarray:
    """Batched determinant of the Sylvester matrix of rows fs, gs.

    fs: (batch, df+1), gs: (batch, dg+1) coefficient stacks.
    """
    batch = fs.shape[0]
    df = fs.shape[1] - 1
    dg = gs.shape[1] - 1
    size = df + dg
    m = np.zeros((batch, size, size), dtype=complex)
    for i in range(dg):
        m[:, i, i:i + df + 1] = fs
    for i in range(df):
        m[:, dg + i, i:i + dg + 1] = gs
    return np.linalg.det(m)


# ---------------------------------------------------------------------------
# the rational normal curve family
# ---------------------------------------------------------------------------

def _coeff_vars(shape: MatrixShape, row: int):
    """The row's entries as degree-1 monomials a_{row,0}, ..., a_{row,cols-1}."""
    out = []
    for j in range(shape.cols):
        exps = tuple(tuple(1 if (r == row and c == j) else 0
                           for c in range(shape.cols)) for r in range(shape.rows))
        out.append(SparsePolynomial(shape, {exps: 1}, 1))
    return out


def rnc_resultant(d: int) -> Union[SparsePolynomial, BlackBoxPolynomial]:
    """Form vanishing exactly when the two row forms share a projective root.

    Symbolic (integer coefficients, degree 2d) up to d = 4; numeric
    Sylvester-determinant black box beyond.
    """
    if d < 2:
        raise ValueError("the family needs degree >= 2")
    shape = MatrixShape(2, d + 1)
    if d <= SYMBOLIC_RESULTANT_LIMIT:
        a = _coeff_vars(shape, 0)
        b = _coeff_vars(shape, 1)
        return sylvester_resultant(a, b)

    def batch_eval(batch: np.ndarray) -> np.ndarray:
        return _numeric_sylvester_det(batch[:, 0, :], batch[:, 1, :])

    return BlackBoxPolynomial(
        shape=shape, degree=2 * d,
        evaluator=lambda arr: complex(batch_eval(np.asarray(arr, dtype=complex)[None])[0]),
        batch_evaluator=batch_eval,
        name=f"rnc-resultant-{d}")


def _derivative_coeffs(a: Sequence, d: int):
    """Coefficient vectors of both partials of sum_j a_j s^(d-j) t^j."""
    ds = [ (d - j) * a[j] for j in range(d) ]
    dt = [ (j + 1) * a[j + 1] for j in range(d) ]
    return ds, dt


def rnc_hyperdiscriminant(d: int) -> Union[SparsePolynomial, BlackBoxPolynomial]:
    """Form vanishing exactly when the row form has a repeated root.

    Realized as the resultant of the two partial derivatives (degree
    2d - 2); for the symbolic range the overall constant is fixed so the
    lexicographically first monomial has coefficient +1.  The black-box
    variant skips that cosmetic normalization: every consumer downstream
    (heights, weights, polytopes) is scale-invariant.
    """
    if d < 2:
        raise ValueError("the family needs degree >= 2")
    shape = MatrixShape(1, d + 1)
    if d <= SYMBOLIC_DISCRIMINANT_LIMIT:
        a = _coeff_vars(shape, 0)
        ds, dt = _derivative_coeffs(a, d)
        raw = sylvester_resultant(ds, dt)
        lead = raw.terms[sorted(raw.terms)[0]]
        return raw if lead == 1 else raw * Fraction(1, lead)

    def batch_eval(batch: np.ndarray) -> np.ndarray:
        a = np.asarray(batch, dtype=complex)[:, 0, :]
        j = np.arange(d)
        fs = a[:, :d] * (d - j)
        ft = a[:, 1:] * (j + 1)
        return _numeric_sylvester_det(fs, ft)

    return BlackBoxPolynomial(
        shape=shape, degree=2 * d - 2,
        evaluator=lambda arr: complex(batch_eval(np.asarray(arr, dtype=complex)[None])[0]),
        batch_evaluator=batch_eval,
        name=f"rnc-hyperdiscriminant-{d}")


@dataclass
class VarietyExample:
    """A built-in projective variety with exactly constructed divisor forms."""

    family: str
    n: int
    N: int
    d: int
    R_X: Union[SparsePolynomial, BlackBoxPolynomial]
    Delta_X: Union[SparsePolynomial, BlackBoxPolynomial]
    deg_R: int
    deg_Delta: int


def rnc_example(d: int) -> VarietyExample:
    """The degree-d rational normal curve (d = 2 is the plane conic)."""
    r = rnc_resultant(d)
    delta = rnc_hyperdiscriminant(d)
    deg_r = measured_degree(r)
    deg_delta = measured_degree(delta)
    if deg_r != d * 2:
        raise ArithmeticError(f"resultant degree {deg_r} != expected {2 * d}")
    if deg_delta != 2 * d - 2:
        raise ArithmeticError(
            f"hyperdiscriminant degree {deg_delta} != expected {2 * d - 2}")
    return VarietyExample(family="rnc", n=1, N=d, d=d, R_X=r, Delta_X=delta,
                          deg_R=deg_r, deg_Delta=deg_delta)


def normalized_pair(example: VarietyExample) -> PairSpec:
    """The degree-normalized pair (R_X^(deg Delta), Delta_X^(deg R)).

    Both sides carry the same total formal degree deg_R * deg_Delta; the
    powers stay formal and all downstream quantities scale linearly.
    """
    r_power = FormalPower(example.R_X, example.deg_Delta)
    delta_power = FormalPower(example.Delta_X, example.deg_R)
    if r_power.degree != delta_power.degree:  # pragma: no cover
        raise ArithmeticError("normalized degrees disagree")
    return PairSpec(v=r_power, w=delta_power, ambient=example.N + 1,
                    degree_v=max(r_power.degree, 1),
                    degree_w=max(delta_power.degree, 1))


# ---------------------------------------------------------------------------
# heights and discrepancy
# ---------------------------------------------------------------------------

def variety_heights(example: VarietyExample, samples: int = 10**6, seed=0,
                    threads: int = 1):
    """(height report of R_X, height report of Delta_X), Monte Carlo."""
    seq = np.random.SeedSequence((_seed_int(seed), example.d))
    s_r, s_delta = seq.spawn(2)
    h_f = height(example.R_X, samples=samples, seed=s_r, threads=threads,
                 method="monte-carlo")
    h_delta = height(example.Delta_X, samples=samples, seed=s_delta,
                     threads=threads, method="monte-carlo")
    return h_f, h_delta


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    raise ValueError("discrepancy seeds must be plain integers")


@dataclass
class DiscrepancyRow:
    d: int
    deg_R: int
    deg_Delta: int
    h_F: float
    h_F_stderr: float
    h_Delta: float
    h_Delta_stderr: float
    delta: float
    delta_stderr: float
    delta_over_d2: float


def _row_from_reports(example: VarietyExample, h_f: HeightReport,
                      h_delta: HeightReport) -> DiscrepancyRow:
    delta = abs(example.deg_Delta * h_f.h - example.deg_R * h_delta.h)
    delta_stderr = math.hypot(example.deg_Delta * h_f.stderr,
                              example.deg_R * h_delta.stderr)
    return DiscrepancyRow(
        d=example.d, deg_R=example.deg_R, deg_Delta=example.deg_Delta,
        h_F=h_f.h, h_F_stderr=h_f.stderr,
        h_Delta=h_delta.h, h_Delta_stderr=h_delta.stderr,
        delta=delta, delta_stderr=delta_stderr,
        delta_over_d2=delta / example.d**2)


def discrepancy_table(d_values: Sequence[int], samples: int = 200_000, seed=0,
                      threads: int = 1):
    """Height-discrepancy rows |deg_Delta h_F - deg_R h_Delta| plus a growth fit.

    Returns (rows, fit) where fit regresses log(delta) on log(d) and
    reports the growth exponent with a two-sigma halfwidth; the fit is
    reported, never asserted against.
    """
    rows = []
    for d in d_values:
        if d < 2:
            raise ValueError("the family needs degree >= 2")
        example = rnc_example(d)
        h_f, h_delta = variety_heights(example, samples=samples, seed=seed,
                                       threads=threads)
        rows.append(_row_from_reports(example, h_f, h_delta))
    fit = _growth_fit([r.d for r in rows], [r.delta for r in rows])
    return rows, fit


def _growth_fit(ds, deltas) -> dict:
    xs = np.log(np.asarray(ds, dtype=float))
    ys = np.log(np.asarray(deltas, dtype=float))
    design = np.column_stack([np.ones_like(xs), xs])
    coef, residuals, *_ = np.linalg.lstsq(design, ys, rcond=None)
    dof = max(len(xs) - 2, 1)
    resid = ys - design @ coef
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return {"exponent": float(coef[1]),
            "exponent_ci_halfwidth": 2.0 * math.sqrt(max(cov[1, 1], 0.0)),
            "log_prefactor": float(coef[0]),
            "points": len(xs)}


def optimal_constant_probe(example: VarietyExample,
                           sigmas: Sequence[GroupElement],
                           samples: int = 100_000, seed=0,
                           threads: int = 1):
    """Lower bound for the best comparison constant, probed at the given sigmas.

    Evaluates |deg_Delta * h(sigma.R_X) - deg_R * h(sigma.Delta_X)| at each
    supplied group element and returns (max, per-sigma rows).  A supremum
    probed on finitely many elements only ever bounds the constant from
    below; adding elements can only increase the probe value because each
    element's Monte Carlo seed depends on its position alone.
    """
    if not sigmas:
        raise ValueError("at least one group element required")
    rows = []
    best = -math.inf
    for idx, sigma in enumerate(sigmas):
        seq = np.random.SeedSequence((_seed_int(seed), idx))
        s_r, s_d = seq.spawn(2)
        h_f = height(act(sigma, example.R_X), samples=samples, seed=s_r,
                     threads=threads, method="monte-carlo")
        h_delta = height(act(sigma, example.Delta_X), samples=samples, seed=s_d,
                         threads=threads, method="monte-carlo")
        value = abs(example.deg_Delta * h_f.h - example.deg_R * h_delta.h)
        rows.append({"index": idx, "value": value,
                     "h_F": h_f.h, "h_Delta": h_delta.h})
        best = max(best, value)
    return best, rows


# ---------------------------------------------------------------------------
# binary-form helpers (planted-root constructions live on these)
# ---------------------------------------------------------------------------

def binary_form_mul(a: Sequence, b: Sequence) -> list:
    """Coefficient convolution: the product of two binary forms."""
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out
