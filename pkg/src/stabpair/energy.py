"""Finite-dimensional energy functionals of pairs under the group action.

For a pair (v, w) with Hermitian norms and a group element sigma,

    nu(sigma) = log ||sigma.w||^2/||w||^2 - log ||sigma.v||^2/||v||^2
    J_v(sigma) = deg(V) log(||sigma||^2/(N+1)) - log ||sigma.v||^2/||v||^2

with ||sigma||^2 = Trace(sigma sigma*).  The norm everywhere is the
Gaussian L2 norm E|P(Z)|^2 (monomials orthogonal, squared norms given by
factorials): it is unitarily invariant, exact on sparse polynomials, and
is the same normalization the zeta-function module integrates against, so
energies and heights share one metric.  The textbook L2 norm on projective
space differs by a degree-dependent constant that cancels in every ratio
used here.

nu is bounded below exactly when the pair is semistable, and the infimum
equals log tan^2 of the Fubini-Study distance between the orbit closures
of [(v, w)] and [(v, 0)] once v and w are scaled to unit length.  Both
sides of that identity are estimated here, independently, by optimization
over group parameters; the results are estimates, never certificates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from . import igusa
from .pairstab import PairSpec, module_degree
from .polyrep import (
    AnyPolynomial,
    FormalPower,
    GroupElement,
    OnePSG,
    SparsePolynomial,
    act,
)

__all__ = [
    "NormedVector",
    "EnergyReport",
    "PropernessEstimate",
    "OrbitDistanceEstimate",
    "gaussian_norm_sq",
    "log_gaussian_norm_sq",
    "gaussian_inner",
    "nu_pair",
    "energy_report",
    "j_aubin",
    "nu_along_ray",
    "j_along_ray",
    "properness_probe",
    "nu_infimum",
    "orbit_distance",
]


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def gaussian_norm_sq(p: AnyPolynomial, samples: int = 200_000, seed=0) -> float:
    """Squared Gaussian L2 norm E|P(Z)|^2.

    Exact factorial sum for sparse polynomials; Monte Carlo mean for black
    boxes (use igusa.mc_moment directly when the standard error matters).
    Formal powers are rejected here: their norms only exist in log space.
    """
    if isinstance(p, FormalPower):
        raise ValueError("formal powers have log-norms only; "
                         "use log_gaussian_norm_sq")
    if isinstance(p, SparsePolynomial):
        from .polyrep import exact_gaussian_norm_sq

        return float(exact_gaussian_norm_sq(p))
    return igusa.mc_moment(p, 1.0, samples=samples, seed=seed).mean


def log_gaussian_norm_sq(p: AnyPolynomial, samples: int = 200_000, seed=0) -> float:
    """log E|P(Z)|^2, scaling linearly through formal tensor powers."""
    if isinstance(p, FormalPower):
        return p.exponent * log_gaussian_norm_sq(p.base, samples=samples, seed=seed)
    return math.log(gaussian_norm_sq(p, samples=samples, seed=seed))


def gaussian_inner(p: SparsePolynomial, q: SparsePolynomial) -> complex:
    """Hermitian Gaussian inner product <P, Q> = sum c_P conj(c_Q) alpha!."""
    if not isinstance(p, SparsePolynomial) or not isinstance(q, SparsePolynomial):
        raise TypeError("inner products need sparse polynomials")
    if p.shape != q.shape:
        raise ValueError("shape mismatch")
    total = 0j
    small, large = (p.terms, q.terms) if len(p.terms) <= len(q.terms) else (q.terms, p.terms)
    swap = len(p.terms) > len(q.terms)
    for exps, c in small.items():
        other = large.get(exps)
        if other is None:
            continue
        weight = 1
        for row in exps:
            for e in row:
                if e > 1:
                    weight *= math.factorial(e)
        a, b = (other, c) if swap else (c, other)
        total += complex(a) * complex(b).conjugate() * weight
    return total


@dataclass
class NormedVector:
    """A polynomial together with its cached Gaussian log-norm."""

    underlying: AnyPolynomial
    norm_kind: str = "gaussian-l2"
    log_norm_sq: Optional[float] = None

    def __post_init__(self):
        if self.norm_kind != "gaussian-l2":
            raise ValueError("only the Gaussian L2 norm is implemented")
        if self.log_norm_sq is None:
            self.log_norm_sq = log_gaussian_norm_sq(self.underlying)


# ---------------------------------------------------------------------------
# energies at a group element
# ---------------------------------------------------------------------------

def _log_norm_ratio(p: AnyPolynomial, sigma: GroupElement,
                    samples: int = 200_000, seed=0) -> float:
    """log(||sigma.P||^2 / ||P||^2), linear through formal powers."""
    if isinstance(p, FormalPower):
        return p.exponent * _log_norm_ratio(p.base, sigma, samples, seed)
    acted = act(sigma, p)
    return (log_gaussian_norm_sq(acted, samples=samples, seed=seed)
            - log_gaussian_norm_sq(p, samples=samples, seed=seed))


@dataclass
class EnergyReport:
    sigma: GroupElement
    nu: float
    j: float
    components: tuple  # (w log-ratio, v log-ratio, trace term)


def nu_pair(pair: PairSpec, sigma: Union[GroupElement, np.ndarray],
            samples: int = 200_000, seed=0) -> float:
    """nu(sigma) for the pair; exact for sparse data, sampled for black boxes."""
    if not isinstance(sigma, GroupElement):
        sigma = GroupElement.from_matrix(np.asarray(sigma))
    w_ratio = _log_norm_ratio(pair.w, sigma, samples, seed)
    v_ratio = _log_norm_ratio(pair.v, sigma, samples, seed)
    return w_ratio - v_ratio


def j_aubin(v: Union[AnyPolynomial, NormedVector],
            sigma: Union[GroupElement, np.ndarray],
            degree: Optional[int] = None, ambient: Optional[int] = None,
            samples: int = 200_000, seed=0) -> float:
    """J_v(sigma) = deg log(Trace(sigma sigma*)/(N+1)) - log ||sigma.v||^2/||v||^2."""
    if isinstance(v, NormedVector):
        v = v.underlying
    if not isinstance(sigma, GroupElement):
        sigma = GroupElement.from_matrix(np.asarray(sigma))
    if degree is None:
        degree = module_degree(v)
    if ambient is None:
        ambient = v.shape.cols
    m = sigma.matrix
    trace_term = math.log(float(np.real(np.trace(m @ m.conj().T))) / ambient)
    return degree * trace_term - _log_norm_ratio(v, sigma, samples, seed)


def energy_report(pair: PairSpec, sigma: Union[GroupElement, np.ndarray],
                  samples: int = 200_000, seed=0) -> EnergyReport:
    if not isinstance(sigma, GroupElement):
        sigma = GroupElement.from_matrix(np.asarray(sigma))
    w_ratio = _log_norm_ratio(pair.w, sigma, samples, seed)
    v_ratio = _log_norm_ratio(pair.v, sigma, samples, seed)
    m = sigma.matrix
    trace_term = math.log(float(np.real(np.trace(m @ m.conj().T))) / pair.ambient)
    return EnergyReport(sigma=sigma, nu=w_ratio - v_ratio,
                        j=pair.degree_v * trace_term - v_ratio,
                        components=(w_ratio, v_ratio, trace_term))


# ---------------------------------------------------------------------------
# behavior along one-parameter rays (log-space, overflow-free)
# ---------------------------------------------------------------------------

def _ray_profile(p: AnyPolynomial):
    """(log term masses, character pairings) for the diagonal-ray log-norm."""
    if isinstance(p, FormalPower):
        masses, chars = _ray_profile(p.base)
        return masses, chars, p.exponent
    if not isinstance(p, SparsePolynomial):
        raise ValueError("ray profiles need sparse polynomials (or powers of them)")
    masses = []
    chars = []
    for exps, coeff in p.terms.items():
        weight = 1.0
        for row in exps:
            for e in row:
                if e > 1:
                    weight *= math.factorial(e)
        masses.append(2 * math.log(abs(complex(coeff))) + math.log(weight))
        chars.append(tuple(sum(row[j] for row in exps) for j in range(p.shape.cols)))
    return np.array(masses), chars, 1


def _log_norm_ratio_ray(profile, lam: OnePSG, log_t: float) -> float:
    """log(||lam(t).P||^2/||P||^2) at log|t| = log_t via logsumexp."""
    masses, chars, exponent = profile
    pairings = np.array([sum(a * l for a, l in zip(c, lam.exponents)) for c in chars],
                        dtype=float)
    shifted = masses + 2.0 * pairings * log_t
    base = masses
    ratio = _logsumexp(shifted) - _logsumexp(base)
    return exponent * ratio


def _logsumexp(arr: np.ndarray) -> float:
    m = float(np.max(arr))
    return m + math.log(float(np.sum(np.exp(arr - m))))


def nu_along_ray(pair: PairSpec, lam: OnePSG, ts: Sequence[float]) -> np.ndarray:
    """nu(lam(t)) for each |t|, computed stably in log space."""
    prof_v = _ray_profile(pair.v)
    prof_w = _ray_profile(pair.w)
    out = []
    for t in ts:
        lt = math.log(abs(t))
        out.append(_log_norm_ratio_ray(prof_w, lam, lt)
                   - _log_norm_ratio_ray(prof_v, lam, lt))
    return np.array(out)


def j_along_ray(v: AnyPolynomial, lam: OnePSG, ts: Sequence[float],
                degree: Optional[int] = None) -> np.ndarray:
    """J_v(lam(t)) for each |t| (trace term summed exactly in log space)."""
    if degree is None:
        degree = module_degree(v)
    prof = _ray_profile(v)
    ambient = len(lam.exponents)
    out = []
    for t in ts:
        lt = math.log(abs(t))
        trace_log = _logsumexp(np.array([2.0 * e * lt for e in lam.exponents]))
        out.append(degree * (trace_log - math.log(ambient))
                   - _log_norm_ratio_ray(prof, lam, lt))
    return np.array(out)


# ---------------------------------------------------------------------------
# properness probing
# ---------------------------------------------------------------------------

@dataclass
class PropernessEstimate:
    epsilon: float
    b: float
    samples: int
    violated_at: Optional[GroupElement] = None
    min_margin: float = math.inf
    violation_value: Optional[tuple] = None  # (nu, j) at the violation


def _random_sum_zero(rng, n: int) -> OnePSG:
    lam = [int(x) for x in rng.integers(-3, 4, size=n)]
    lam[-1] -= sum(lam)
    if all(x == 0 for x in lam):
        lam[0] += 1
        lam[-1] -= 1
    return OnePSG(tuple(lam))


def properness_probe(pair: PairSpec, epsilon: float, b: float,
                     samples: int = 200, rng_seed=0,
                     decades: int = 6) -> PropernessEstimate:
    """Search for violations of nu >= epsilon * J + b.

    Samples diagonal one-parameter rays with |t| sweeping the requested
    decades, plus random conjugated rays at moderate |t|.  Stops at the
    first violation (which re-verifies by direct recomputation) or reports
    the minimal margin seen.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rng = np.random.default_rng(rng_seed)
    n = pair.ambient
    count = 0
    min_margin = math.inf
    for k in range(samples):
        lam = _random_sum_zero(rng, n)
        conjugated = bool(k % 2)
        if conjugated:
            t = 10.0 ** rng.uniform(-3, -0.3)
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            q = np.linalg.qr(g)[0]
            sigma_mat = q @ lam.matrix(t) @ q.conj().T
            sigma = GroupElement.from_matrix(sigma_mat)
            nu = nu_pair(pair, sigma)
            j = j_aubin(pair.v, sigma, degree=pair.degree_v, ambient=n)
        else:
            t = 10.0 ** rng.uniform(-decades, -0.3)
            sigma = GroupElement.from_matrix(lam.matrix(t))
            nu = float(nu_along_ray(pair, lam, [t])[0])
            j = float(j_along_ray(pair.v, lam, [t], degree=pair.degree_v)[0])
        count += 1
        margin = nu - epsilon * j - b
        min_margin = min(min_margin, margin)
        if margin < 0:
            return PropernessEstimate(epsilon=epsilon, b=b, samples=count,
                                      violated_at=sigma, min_margin=margin,
                                      violation_value=(nu, j))
    return PropernessEstimate(epsilon=epsilon, b=b, samples=count,
                              min_margin=min_margin)


# ---------------------------------------------------------------------------
# optimization over the group: nu infimum and orbit distance
# ---------------------------------------------------------------------------

def _sl2_upper(params) -> np.ndarray:
    """diag(e^r, e^-r) . [[1, x+iy], [0, 1]]: every nu value on SL(2) is
    attained here because the left unitary factor drops out of all norms."""
    r, x, y = params
    er = math.exp(r)
    return np.array([[er, er * complex(x, y)], [0.0, 1.0 / er]], dtype=complex)


def _su2(params) -> np.ndarray:
    th, ph, ps = params
    a = math.cos(th) * cmath.exp(1j * ph)
    bb = math.sin(th) * cmath.exp(1j * ps)
    return np.array([[a, bb], [-bb.conjugate(), a.conjugate()]], dtype=complex)


def _sl_exp(params, n: int) -> np.ndarray:
    """exp of a traceless complex matrix; its closure fills SL(n, C)."""
    import scipy.linalg as sla

    half = (n * n - 1)
    re = np.asarray(params[:half])
    im = np.asarray(params[half:])
    mat = np.zeros((n, n), dtype=complex)
    idx = 0
    for i in range(n):
        for j in range(n):
            if i == n - 1 and j == n - 1:
                continue
            mat[i, j] = complex(re[idx], im[idx])
            idx += 1
    mat[n - 1, n - 1] = -np.trace(mat)
    return sla.expm(mat)


def _nu_param_builder(n: int):
    if n == 2:
        return 3, lambda params: _sl2_upper(params)
    return 2 * (n * n - 1), lambda params: _sl_exp(params, n)


def _restart_points(dim: int, restarts: int, seed) -> list:
    """Deterministic per-restart starting points (independent seed streams,
    so any execution order reproduces the same set)."""
    seqs = np.random.SeedSequence(seed).spawn(restarts)
    points = []
    for sq in seqs:
        rng = np.random.default_rng(sq)
        points.append(rng.standard_normal(dim) * rng.uniform(0.2, 1.5))
    return points


def nu_infimum(pair: PairSpec, restarts: int = 20, seed=0,
               maxiter: int = 300) -> tuple:
    """Sampled/descended estimate of inf nu over the group (never a certificate).

    Returns (value, group element at the minimum); ties keep the earliest
    restart.
    """
    dim, build = _nu_param_builder(pair.ambient)

    def objective(params):
        try:
            return nu_pair(pair, GroupElement.from_matrix(build(params)))
        except (ValueError, OverflowError):
            return math.inf

    best_val = nu_pair(pair, GroupElement.identity(pair.ambient))
    best_params = np.zeros(dim)
    for start in _restart_points(dim, restarts, seed):
        res = minimize(objective, start, method="Nelder-Mead",
                       options={"maxiter": maxiter, "xatol": 1e-7, "fatol": 1e-10})
        if res.fun < best_val:
            best_val = float(res.fun)
            best_params = res.x
    return best_val, GroupElement.from_matrix(build(best_params))


@dataclass
class OrbitDistanceEstimate:
    distance: float
    log_tan_sq: float
    restarts: int
    best_overlap: float  # squared cosine of the distance
    stabilized: bool = True  # False: still improving when the budget ran out


def _unit_scaled(p: SparsePolynomial) -> SparsePolynomial:
    norm = math.sqrt(gaussian_norm_sq(p))
    return p * (1.0 / norm)


def orbit_distance(pair: PairSpec, restarts: int = 30, seed=0,
                   maxiter: int = 400) -> OrbitDistanceEstimate:
    """Estimated Fubini-Study distance between the orbit closures of
    [(v, w)] and [(v, 0)], with v and w scaled to unit length.

    Minimizes the pairwise point distance over two independent group
    elements (one moving the pair point, one moving the v-only point) by
    random restarts and local descent; an estimate from above, never a
    certificate.  The companion value log tan^2(distance) is the quantity
    the nu infimum is compared against.
    """
    if not isinstance(pair.v, SparsePolynomial) or not isinstance(pair.w, SparsePolynomial):
        raise ValueError("orbit distance estimation needs expanded sparse pairs")
    if pair.ambient > 4:
        raise ValueError("orbit distance optimization is supported for N+1 <= 4")
    v = _unit_scaled(pair.v)
    w = _unit_scaled(pair.w)
    n = pair.ambient

    if n == 2:
        dim1, dim2 = 6, 3

        def build1(params):
            return _su2(params[:3]) @ _sl2_upper(params[3:6])

        def build2(params):
            return _sl2_upper(params)
    else:
        dim1 = dim2 = 2 * (n * n - 1)

        def build1(params):
            return _sl_exp(params, n)

        def build2(params):
            return _sl_exp(params, n)

    def overlap(params):
        s1 = GroupElement.from_matrix(build1(params[:dim1]))
        s2 = GroupElement.from_matrix(build2(params[dim1:]))
        v1 = act(s1, v)
        w1 = act(s1, w)
        v2 = act(s2, v)
        num = abs(gaussian_inner(v1, v2)) ** 2
        den = ((gaussian_norm_sq(v1) + gaussian_norm_sq(w1))
               * gaussian_norm_sq(v2))
        return num / den

    def objective(params):
        try:
            return -overlap(params)
        except (ValueError, OverflowError):
            return 0.0

    best = overlap(np.zeros(dim1 + dim2))
    last_improvement = 0
    for idx, start in enumerate(_restart_points(dim1 + dim2, restarts, seed)):
        res = minimize(objective, start, method="Nelder-Mead",
                       options={"maxiter": maxiter, "xatol": 1e-7, "fatol": 1e-12})
        if -res.fun > best + 1e-9:
            best = -float(res.fun)
            last_improvement = idx + 1
    best = min(max(best, 0.0), 1.0)
    distance = math.acos(math.sqrt(best))
    if distance == 0.0:
        log_tan_sq = -math.inf
    else:
        log_tan_sq = 2.0 * math.log(math.tan(distance))
    # an estimate still moving in the final quarter of the budget has not
    # stabilized; report it rather than fail
    stabilized = last_improvement <= max(1, (3 * restarts) // 4)
    return OrbitDistanceEstimate(distance=distance, log_tan_sq=log_tan_sq,
                                 restarts=restarts, best_overlap=best,
                                 stabilized=stabilized)
