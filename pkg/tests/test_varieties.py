"""Rational normal curve forms: construction, vanishing, degrees, heights."""

import math
import numpy as np
import pytest

from stabpair.energy import nu_pair
from stabpair.exactgeom import dilate
from stabpair.igusa import (
    degeneration_limit_heights,
    height_monomial_closed,
    log_gamma,
)
from stabpair.pairstab import semistable_diagonal, stable_search, weight_polytope
from stabpair.polyrep import (
    BlackBoxPolynomial,
    GroupElement,
    MatrixShape,
    SparsePolynomial,
    act,
    evaluate,
    gaussian_batch,
    monomial,
    support,
)
from stabpair.varieties import (
    binary_form_mul,
    discrepancy_table,
    normalized_pair,
    optimal_constant_probe,
    poly_det,
    rnc_example,
    rnc_hyperdiscriminant,
    rnc_resultant,
    variety_heights,
)


def random_form(rng, d, lo=-3, hi=3):
    while True:
        c = [int(x) for x in rng.integers(lo, hi + 1, size=d + 1)]
        if any(c):
            return c


def split_form(roots):
    """Monic-in-s form prod (s - alpha t) as a coefficient list."""
    coeffs = [1]
    for alpha in roots:
        coeffs = binary_form_mul(coeffs, [1, -alpha])
    return coeffs


def distinct_roots(rng, count, taboo=()):
    pool = [x for x in range(-6, 7) if x not in taboo]
    rng.shuffle(pool)
    return pool[:count]


def rows_matrix(f, g):
    return np.array([f, g], dtype=complex)


# -- constructions ------------------------------------------------------------------

def test_resultant_of_split_forms_is_one():
    r = rnc_resultant(2)
    val = evaluate(r, rows_matrix([1, 0, 0], [0, 0, 1]))  # s^2 and t^2
    assert val == pytest.approx(1.0)


def test_resultant_identical_rows_vanishes():
    r = rnc_resultant(2)
    assert evaluate(r, rows_matrix([1, 2, 3], [1, 2, 3])) == pytest.approx(0.0, abs=1e-12)


def test_resultant_symbolic_support_d2():
    r = rnc_resultant(2)
    assert isinstance(r, SparsePolynomial)
    assert {c.degrees for c in support(r)} == {(2, 0, 2), (1, 2, 1)}
    assert r.degree == 4 and r.has_exact_coefficients()


def test_discriminant_d2_is_b2_minus_4ac():
    disc = rnc_hyperdiscriminant(2)
    assert disc.terms == {((0, 2, 0),): 1, ((1, 0, 1),): -4}


def test_resultant_d2_classical_expansion():
    # the full 7-term classical resultant of two binary quadratics,
    # exponent matrices written as (a-row, b-row)
    want = {
        ((0, 0, 2), (2, 0, 0)): 1,    # a2^2 b0^2
        ((0, 1, 1), (1, 1, 0)): -1,   # -a1 a2 b0 b1
        ((0, 2, 0), (1, 0, 1)): 1,    # a1^2 b0 b2
        ((1, 0, 1), (0, 2, 0)): 1,    # a0 a2 b1^2
        ((1, 0, 1), (1, 0, 1)): -2,   # -2 a0 a2 b0 b2
        ((1, 1, 0), (0, 1, 1)): -1,   # -a0 a1 b1 b2
        ((2, 0, 0), (0, 0, 2)): 1,    # a0^2 b2^2
    }
    assert rnc_resultant(2).terms == want


def test_discriminant_d3_classical_expansion():
    # the classical discriminant of the binary cubic, coefficient +1 on
    # a1^2 a2^2 by the normalization convention
    want = {
        ((0, 2, 2, 0),): 1,
        ((0, 3, 0, 1),): -4,
        ((1, 0, 3, 0),): -4,
        ((1, 1, 1, 1),): 18,
        ((2, 0, 0, 2),): -27,
    }
    assert rnc_hyperdiscriminant(3).terms == want


def test_discriminant_d3_classical_values():
    disc = rnc_hyperdiscriminant(3)
    # squarefree cubic s^2 t - s t^2: three distinct roots 0, 1, infinity
    val = evaluate(disc, np.array([[0, 1, -1, 0]], dtype=complex))
    assert abs(val) > 1e-9
    # triple root s^3
    val0 = evaluate(disc, np.array([[1, 0, 0, 0]], dtype=complex))
    assert val0 == pytest.approx(0.0, abs=1e-12)


def test_discriminant_normalization_leading_one():
    for d in (2, 3, 4, 5):
        disc = rnc_hyperdiscriminant(d)
        lead_key = sorted(disc.terms)[0]
        assert disc.terms[lead_key] == 1


def test_symbolic_blackbox_boundaries():
    assert isinstance(rnc_resultant(4), SparsePolynomial)
    assert isinstance(rnc_resultant(5), BlackBoxPolynomial)
    assert isinstance(rnc_hyperdiscriminant(5), SparsePolynomial)
    assert isinstance(rnc_hyperdiscriminant(6), BlackBoxPolynomial)
    with pytest.raises(ValueError):
        rnc_resultant(1)


def test_symbolic_and_blackbox_agree_at_random_points():
    rng = np.random.default_rng(3)
    for d in (2, 3, 4):
        sym = rnc_resultant(d)
        batch = gaussian_batch(MatrixShape(2, d + 1), 100, rng)
        sym_vals = sym.evaluate_batch(batch)
        from stabpair.varieties import _numeric_sylvester_det

        det_vals = _numeric_sylvester_det(batch[:, 0, :], batch[:, 1, :])
        scale = np.maximum(np.abs(det_vals), 1e-30)
        assert np.max(np.abs(sym_vals - det_vals) / scale) < 1e-9


# -- planted-root vanishing -----------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_resultant_planted_common_root(d):
    # split monic forms make the resultant's value an exact integer product
    # prod (alpha_i - beta_j): zero iff a root is shared
    rng = np.random.default_rng(100 + d)
    r = rnc_resultant(d)
    symbolic = isinstance(r, SparsePolynomial)
    for _ in range(50):
        alphas = distinct_roots(rng, d)
        shared_betas = [alphas[0]] + distinct_roots(rng, d - 1)  # plant a root
        coprime_betas = distinct_roots(rng, d, taboo=alphas)

        expected = 1
        for a in alphas:
            for b in coprime_betas:
                expected *= (a - b)
        if symbolic:
            got = r.evaluate_exact([split_form(alphas), split_form(coprime_betas)])
            assert abs(got) == abs(expected)
            planted = r.evaluate_exact([split_form(alphas), split_form(shared_betas)])
            assert planted == 0
        else:
            got = evaluate(r, rows_matrix(split_form(alphas), split_form(coprime_betas)))
            assert abs(abs(got) - abs(expected)) <= 1e-8 * abs(expected)
            planted = evaluate(r, rows_matrix(split_form(alphas),
                                              split_form(shared_betas)))
            assert abs(planted) <= 1e-8 * max(abs(expected), 1.0)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_discriminant_planted_double_root(d):
    # distinct integer roots guarantee squarefree; repeating one root
    # guarantees vanishing; symbolic range is asserted exactly
    rng = np.random.default_rng(200 + d)
    disc = rnc_hyperdiscriminant(d)
    for _ in range(50):
        roots = distinct_roots(rng, d)
        squarefree = split_form(roots)
        doubled = split_form([roots[0]] + roots[:-1])
        gen = disc.evaluate_exact([squarefree])
        val = disc.evaluate_exact([doubled])
        assert gen != 0
        assert val == 0


# -- examples & degrees ----------------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_example_degrees(d):
    ex = rnc_example(d)
    assert ex.deg_R == 2 * d
    assert ex.deg_Delta == 2 * d - 2
    assert ex.N == d and ex.n == 1


def test_normalized_pair_degrees_match():
    ex = rnc_example(2)
    pair = normalized_pair(ex)
    assert pair.v.degree == pair.w.degree == ex.deg_R * ex.deg_Delta
    assert weight_polytope(pair.v) == dilate(weight_polytope(ex.R_X), ex.deg_Delta)


def test_conic_pair_is_diagonally_semistable_but_not_stable():
    # the conic's hyperdiscriminant polytope is a segment while the
    # identity-padded source is full-dimensional, so no twist exponent works
    ex = rnc_example(2)
    pair = normalized_pair(ex)
    assert semistable_diagonal(pair)
    q = ex.deg_R * ex.deg_Delta
    assert stable_search(pair, q=q, m_max=50) is None


def test_conic_pair_nu_matches_direct_scaling_oracle():
    # sigma diagonal: acting scales each monomial by its character, so the
    # log-norm ratio can be assembled term by term without any substitution
    ex = rnc_example(2)
    pair = normalized_pair(ex)
    t = (2.0, 1.0, 0.5)
    sigma = GroupElement.diagonal(t)

    def direct_log_ratio(p):
        num = 0.0
        den = 0.0
        for exps, coeff in p.terms.items():
            w = 1.0
            for row in exps:
                for e in row:
                    w *= math.factorial(e)
            cols = [sum(row[j] for row in exps) for j in range(p.shape.cols)]
            scale = 1.0
            for tj, cj in zip(t, cols):
                scale *= tj ** (2 * cj)
            num += abs(complex(coeff)) ** 2 * w * scale
            den += abs(complex(coeff)) ** 2 * w
        return math.log(num / den)

    want = (ex.deg_R * direct_log_ratio(ex.Delta_X)
            - ex.deg_Delta * direct_log_ratio(ex.R_X))
    assert nu_pair(pair, sigma) == pytest.approx(want, abs=1e-9)


# -- heights ---------------------------------------------------------------------------

def test_variety_heights_negative_at_d2():
    ex = rnc_example(2)
    h_f, h_delta = variety_heights(ex, samples=120_000, seed=5)
    assert h_f.h < -3 * h_f.stderr
    assert h_delta.h < -3 * h_delta.stderr


def test_conic_discriminant_height_against_brute_force_moments():
    # disc2 = a1^2 - 4 a0 a2: E|disc2|^2 = 18 exactly, so the h components
    # can be cross-checked through the mixed path
    from stabpair.igusa import height

    ex = rnc_example(2)
    mixed = height(ex.Delta_X, samples=150_000, seed=9)  # sparse: mixed method
    mc = height(ex.Delta_X, samples=150_000, seed=10, method="monte-carlo")
    assert mixed.method == "mixed"
    assert mixed.log_Z1 == pytest.approx(math.log(18.0) + float(log_gamma(3) - log_gamma(5)))
    assert abs(mixed.h - mc.h) < 3 * math.hypot(mixed.stderr, mc.stderr)


def test_height_scale_invariance_of_forms():
    ex = rnc_example(2)
    from stabpair.igusa import height

    a = height(ex.R_X, samples=100_000, seed=11, method="monte-carlo")
    b = height(10 * ex.R_X, samples=100_000, seed=12, method="monte-carlo")
    assert abs(a.h - b.h) < 3 * math.hypot(a.stderr, b.stderr)


# -- discrepancy -----------------------------------------------------------------------

def test_discrepancy_table_small():
    rows, fit = discrepancy_table([2, 3], samples=60_000, seed=1)
    assert [r.d for r in rows] == [2, 3]
    for r in rows:
        assert r.delta >= 0
        assert r.delta_over_d2 == pytest.approx(r.delta / r.d**2)
        assert r.h_F < 0 and r.h_Delta < 0
    assert fit["points"] == 2


def test_degeneration_limits_match_concrete_minor_powers():
    # the degenerate limit of the d=2 family heights: hDelta is the height
    # of z0^2 on the 1x3 space, hF the height of (2x2 minor)^2 on the 2x3
    # space; the first is an exact monomial height, the second Monte Carlo
    lim = degeneration_limit_heights(n=1, N=2, d=2, deg_R=4, deg_Delta=2,
                                     convention="standard")
    mono = height_monomial_closed(monomial(MatrixShape(1, 3), ((2, 0, 0),)))
    assert lim.hDelta_limit == pytest.approx(mono.h, abs=1e-10)

    minor = SparsePolynomial(
        MatrixShape(2, 3),
        {((1, 0, 0), (0, 1, 0)): 1, ((0, 1, 0), (1, 0, 0)): -1})
    minor_sq = minor * minor
    from stabpair.igusa import height

    rep = height(minor_sq, samples=250_000, seed=21, method="monte-carlo")
    assert abs(rep.h - lim.hF_limit) < 3.5 * rep.stderr


def test_optimal_constant_probe_identity_and_monotonicity():
    ex = rnc_example(2)
    ident = GroupElement.identity(3)
    shear = GroupElement(((1, 1, 0), (0, 1, 0), (0, 0, 1)))
    base, rows = optimal_constant_probe(ex, [ident], samples=50_000, seed=4)
    bigger, rows2 = optimal_constant_probe(ex, [ident, shear], samples=50_000, seed=4)
    assert bigger >= base  # sup over a larger set, shared per-index seeds
    assert rows2[0]["value"] == rows[0]["value"]
    with pytest.raises(ValueError):
        optimal_constant_probe(ex, [], samples=1000, seed=0)


def test_optimal_constant_probe_identity_matches_discrepancy_row():
    # a single identity element reproduces the discrepancy row's delta, up
    # to independent Monte Carlo seeds
    ex = rnc_example(2)
    probe, _ = optimal_constant_probe(ex, [GroupElement.identity(3)],
                                      samples=80_000, seed=11)
    h_f, h_delta = variety_heights(ex, samples=80_000, seed=12)
    row_delta = abs(ex.deg_Delta * h_f.h - ex.deg_R * h_delta.h)
    combined = math.hypot(ex.deg_Delta * h_f.stderr, ex.deg_R * h_delta.stderr)
    assert abs(probe - row_delta) < 8 * combined


# -- symbolic determinant helper ---------------------------------------------------------

def test_poly_det_matches_numeric():
    rng = np.random.default_rng(8)
    d = 3
    shape = MatrixShape(2, d + 1)
    from stabpair.varieties import _coeff_vars, _sylvester_rows

    a = _coeff_vars(shape, 0)
    b = _coeff_vars(shape, 1)
    sym = poly_det(_sylvester_rows(a, b, shape))
    for _ in range(10):
        arr = rng.standard_normal((2, d + 1)) + 1j * rng.standard_normal((2, d + 1))
        from stabpair.varieties import _numeric_sylvester_det

        want = _numeric_sylvester_det(arr[None, 0, :], arr[None, 1, :])[0]
        assert evaluate(sym, arr) == pytest.approx(want, rel=1e-9)
