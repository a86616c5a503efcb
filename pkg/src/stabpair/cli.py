"""Command-line surface: reproducible experiments with JSON/CSV artifacts.

Every run can write its artifact plus a manifest sidecar recording the
subcommand, the full flag set, the master seed, library versions and the
output digests; two runs with identical manifests (wall time aside)
produce bit-identical numeric payloads.  Exit codes: 0 success, 1 verdict
contradicts --expect, 2 usage or specification errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, energy, igusa, pairstab, polyrep, varieties
from .pairstab import PairSpec
from .polyrep import GroupElement, MatrixShape, OnePSG

SCHEMA = 1


class CLIUsageError(ValueError):
    """Bad flags or malformed specifications (exit code 2)."""


class ExpectationFailed(RuntimeError):
    """A verdict contradicted --expect (exit code 1)."""


# ---------------------------------------------------------------------------
# specification parsing
# ---------------------------------------------------------------------------

def parse_poly_spec(spec: str):
    """Named built-ins (disc:<d>, res:<d>, det:<n>, monomial:<exps>) or a JSON file.

    A trailing ^k wraps the polynomial in a formal tensor power, so the
    degree-normalized variety pair is expressible as v=res:d^<deg disc>,
    w=disc:d^<deg res>.
    """
    base_spec, caret, power_text = spec.rpartition("^")
    if caret and "/" not in power_text and "\\" not in power_text:
        try:
            exponent = int(power_text)
        except ValueError:
            exponent = None
        if exponent is not None:
            from .polyrep import FormalPower

            if exponent < 1:
                raise CLIUsageError(f"formal power must be >= 1 in {spec!r}")
            return FormalPower(parse_poly_spec(base_spec), exponent)
    if ":" in spec:
        head, _, rest = spec.partition(":")
        if head == "disc":
            return varieties.rnc_hyperdiscriminant(_int_arg(rest, spec))
        if head == "res":
            return varieties.rnc_resultant(_int_arg(rest, spec))
        if head == "det":
            n = _int_arg(rest, spec)
            if not 1 <= n <= 6:
                raise CLIUsageError(f"det size out of range in {spec!r}")
            return polyrep.determinant_poly(n)
        if head == "monomial":
            rows = []
            for row in rest.split(";"):
                try:
                    rows.append(tuple(int(x) for x in row.split(",")))
                except ValueError as exc:
                    raise CLIUsageError(f"bad monomial exponents in {spec!r}") from exc
            if len({len(r) for r in rows}) != 1:
                raise CLIUsageError(f"ragged monomial exponent rows in {spec!r}")
            return polyrep.monomial(MatrixShape(len(rows), len(rows[0])), tuple(rows))
        raise CLIUsageError(f"unknown polynomial builder {head!r} in {spec!r}")
    path = Path(spec)
    if not path.exists():
        raise CLIUsageError(f"polynomial spec {spec!r}: no such builder or file")
    try:
        return polyrep.poly_from_json(path.read_text(encoding="utf-8"))
    except (ValueError, KeyError) as exc:
        raise CLIUsageError(f"malformed polynomial JSON in {spec!r}: {exc}") from exc


def _int_arg(text: str, spec: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise CLIUsageError(f"expected an integer in {spec!r}") from exc


def parse_pair_spec(spec: str) -> PairSpec:
    """Pairs are written v=<polyspec>,w=<polyspec>.

    The split happens at the literal ",w=" so polynomial specs may contain
    commas of their own (monomial exponent lists do).
    """
    if not spec.startswith("v="):
        raise CLIUsageError(f"pair spec {spec!r} must look like v=<spec>,w=<spec>")
    v_text, sep, w_text = spec[2:].partition(",w=")
    if not sep or not v_text or not w_text:
        raise CLIUsageError(f"pair spec {spec!r} must supply both v= and w=")
    return PairSpec.of(parse_poly_spec(v_text), parse_poly_spec(w_text))


def parse_sigma_spec(spec: str, ambient: int) -> GroupElement:
    """diag:<entries>, ray:<exponents>:<t>, or a JSON matrix file."""
    if spec.startswith("diag:"):
        entries = [float(x) for x in spec[5:].split(",")]
        if len(entries) != ambient:
            raise CLIUsageError(f"diagonal length {len(entries)} != ambient {ambient}")
        return GroupElement.diagonal(tuple(entries))
    if spec.startswith("ray:"):
        body = spec[4:]
        lam_text, _, t_text = body.rpartition(":")
        try:
            lam = OnePSG(tuple(int(x) for x in lam_text.split(",")))
            t = float(t_text)
        except ValueError as exc:
            raise CLIUsageError(f"bad ray spec {spec!r}") from exc
        if len(lam.exponents) != ambient:
            raise CLIUsageError(f"ray length != ambient {ambient}")
        return GroupElement.from_matrix(lam.matrix(t))
    path = Path(spec)
    if not path.exists():
        raise CLIUsageError(f"sigma spec {spec!r}: no such form or file")
    data = json.loads(path.read_text(encoding="utf-8"))
    mat = np.array([[complex(*e) if isinstance(e, list) else complex(e) for e in row]
                    for row in data])
    return GroupElement.from_matrix(mat)


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------

def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("STABPAIR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CLIUsageError(f"bad STABPAIR_THREADS value {env!r}") from exc
    return os.cpu_count() or 1


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        elif isinstance(value, (list, tuple)):
            flat[name] = json.dumps(value)
        else:
            flat[name] = value
    return flat


def _emit_report(args, payload: dict) -> None:
    """Write a scalar report as JSON (default) or a one-row CSV."""
    if getattr(args, "format", None) == "csv":
        flat = _flatten(payload)
        keys = sorted(flat)
        text = _csv_text("single-row report; columns are flattened JSON keys",
                         keys, [[flat[k] for k in keys]])
    else:
        text = _json_text(payload)
    _write_artifact(args, text, args._started)


def _emit_table(args, comment: str, header: list, rows: list) -> None:
    """Write a table as CSV (default) or a JSON row bundle."""
    if getattr(args, "format", None) == "json":
        payload = {"schema": SCHEMA, "comment": comment, "columns": header,
                   "rows": [list(r) for r in rows]}
        text = _json_text(payload)
    else:
        text = _csv_text(comment, header, rows)
    _write_artifact(args, text, args._started)


def _csv_text(comment: str, header: list, rows: list) -> str:
    lines = [f"# {comment}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(x) for x in row))
    return "\n".join(lines) + "\n"


def _csv_cell(x) -> str:
    if isinstance(x, float):
        # plain-float repr is shortest-roundtrip and, unlike numpy scalar
        # repr, stays parseable CSV
        return repr(float(x))
    return str(x)


def _write_artifact(args, text: str, started: float) -> None:
    if not args.out:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.write_text(text, encoding="utf-8")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    manifest = {
        "schema": SCHEMA,
        "subcommand": args.subcommand,
        "flags": {k: v for k, v in sorted(vars(args).items())
                  if k not in ("func", "subcommand") and not k.startswith("_")
                  and v is not None},
        "seed": getattr(args, "seed", None),
        "versions": {
            "stabpair": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
        "wall_time_s": round(time.time() - started, 3),
        "outputs": {out.name: digest},
    }
    Path(str(out) + ".manifest.json").write_text(_json_text(manifest),
                                                 encoding="utf-8")


def _fraction_str(x) -> str:
    return str(Fraction(x))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_polytope(args) -> int:
    poly = parse_poly_spec(args.poly)
    wp = pairstab.weight_polytope(poly)
    payload = {
        "schema": SCHEMA,
        "poly": args.poly,
        "dim": wp.dim,
        "vertices": [[_fraction_str(c) for c in v] for v in wp.vertices],
    }
    _emit_report(args, payload)
    return 0


def _cmd_semistable(args) -> int:
    pair = parse_pair_spec(args.pair)
    verdict = pairstab.semistable_probe(pair, trials=args.trials, rng_seed=args.seed,
                                        threads=_resolve_threads(args))
    payload = {
        "schema": SCHEMA,
        "pair": args.pair,
        "status": verdict.status,
        "trials": verdict.trials,
        "witness": None,
    }
    if verdict.witness is not None:
        g, lam = verdict.witness
        check = pairstab.verify_witness(pair, g, lam)
        witness = {
            "group_element": [[_fraction_str(e) for e in row] for row in g.entries],
            "one_ps": list(lam.exponents),
            "weight_v": _fraction_str(check["weight_v"]),
            "weight_w": _fraction_str(check["weight_w"]),
        }
        witness_text = json.dumps(witness, sort_keys=True)
        payload["witness"] = witness
        payload["reverify_hash"] = hashlib.sha256(witness_text.encode()).hexdigest()
    _emit_report(args, payload)
    if args.expect:
        got = "destabilized" if verdict.destabilized else "semistable"
        if got != args.expect:
            raise ExpectationFailed(f"expected {args.expect}, verdict {verdict.status}")
    return 0


def _cmd_stable_search(args) -> int:
    pair = parse_pair_spec(args.pair)
    m = pairstab.stable_search(pair, q=args.q, m_max=args.m_max, scheme=args.scheme,
                               probe_trials=args.probe_trials, rng_seed=args.seed)
    payload = {
        "schema": SCHEMA,
        "pair": args.pair,
        "q": args.q,
        "m_max": args.m_max,
        "scheme": args.scheme,
        "exponent": m,
        "status": "stable-with-exponent" if m is not None else "no-exponent-found",
    }
    _emit_report(args, payload)
    return 0


def _cmd_energy(args) -> int:
    pair = parse_pair_spec(args.pair)
    sigma = parse_sigma_spec(args.sigma, pair.ambient)
    rep = energy.energy_report(pair, sigma, samples=args.samples, seed=args.seed)
    payload = {
        "schema": SCHEMA,
        "pair": args.pair,
        "sigma": args.sigma,
        "nu": rep.nu,
        "j": rep.j,
        "components": {
            "w_log_ratio": rep.components[0],
            "v_log_ratio": rep.components[1],
            "trace_term": rep.components[2],
        },
    }
    _emit_report(args, payload)
    return 0


def _cmd_energy_scan(args) -> int:
    pair = parse_pair_spec(args.pair)
    rng = np.random.default_rng(args.seed)
    rows = []
    for ray_idx in range(args.rays):
        lam = energy._random_sum_zero(rng, pair.ambient)
        ts = np.logspace(-0.25, -args.decades, args.points)
        nus = energy.nu_along_ray(pair, lam, ts)
        js = energy.j_along_ray(pair.v, lam, ts, degree=pair.degree_v)
        label = " ".join(str(e) for e in lam.exponents)
        for t, nu, j in zip(ts, nus, js):
            rows.append((ray_idx, label, float(t), float(nu), float(j)))
    _emit_table(
        args,
        "columns: ray=index, exponents=diagonal one-parameter exponents, "
        "t=|parameter|, nu=pair energy log||sw||^2/||w||^2-log||sv||^2/||v||^2, "
        "j=deg*log(trace/(N+1))-log||sv||^2/||v||^2",
        ["ray", "exponents", "t", "nu", "j"], rows)
    return 0


def _cmd_zeta(args) -> int:
    poly = parse_poly_spec(args.poly)
    est = igusa.zeta(poly, args.s, samples=args.samples, seed=args.seed,
                     threads=_resolve_threads(args))
    payload = {
        "schema": SCHEMA,
        "poly": args.poly,
        "s": est.s,
        "value": est.value,
        "log_value": est.log_value,
        "stderr": est.stderr,
        "samples": est.samples,
        "seed": args.seed,
    }
    if args.poly.startswith("det:"):
        n = int(args.poly.split(":")[1])
        payload["closed_form"] = {
            "standard": igusa.zeta_det(n, args.s, cols=n, convention="standard"),
            "paper": igusa.zeta_det(n, args.s, cols=n, convention="paper"),
        }
        payload["convention_note"] = (
            "the two closed-form conventions disagree (already 1 vs 1/pi at "
            "n=1, s=1); the Monte Carlo estimate matches `standard`")
    _emit_report(args, payload)
    return 0


def _cmd_height(args) -> int:
    poly = parse_poly_spec(args.poly)
    rep = igusa.height(poly, samples=args.samples, seed=args.seed,
                       threads=_resolve_threads(args))
    payload = {
        "schema": SCHEMA,
        "poly": args.poly,
        "h": rep.h,
        "log_Z1": rep.log_Z1,
        "Zprime0": rep.Zprime0,
        "stderr": rep.stderr,
        "ci_halfwidth": rep.ci_halfwidth,
        "method": rep.method,
        "samples": rep.samples,
        "seed": args.seed,
    }
    if args.audit_bounds:
        if poly.shape.rows != 1:
            raise CLIUsageError("--audit-bounds applies to vector variable spaces")
        audit = igusa.height_bounds_audit(poly, samples=args.samples, seed=args.seed,
                                          threads=_resolve_threads(args))
        payload["bounds"] = {
            "lower": audit.lower,
            "lower_alt": audit.lower_alt,
            "upper": audit.upper,
            "pass_lower": audit.pass_lower,
            "pass_lower_alt": audit.pass_lower_alt,
            "pass_upper": audit.pass_upper,
        }
    _emit_report(args, payload)
    return 0


def _parse_range(text: str) -> list:
    lo, sep, hi = text.partition(":")
    try:
        if sep:
            return list(range(int(lo), int(hi) + 1))
        return [int(lo)]
    except ValueError as exc:
        raise CLIUsageError(f"bad degree range {text!r}") from exc


def _cmd_degeneration(args) -> int:
    if args.n != 1:
        raise CLIUsageError("closed-form degeneration table is built in for curves "
                            "(n=1) only; call the library for other dimensions")
    rows = []
    for d in _parse_range(args.d_range):
        lim = igusa.degeneration_limit_heights(
            n=1, N=d, d=d, deg_R=2 * d, deg_Delta=2 * d - 2,
            convention=args.convention)
        rows.append((d, lim.hF_limit, lim.hDelta_limit, lim.delta_limit,
                     lim.delta_limit / d**2))
    _emit_table(
        args,
        "columns: d=embedding degree (N=d), hF=limit height of the resultant "
        "side, hDelta=limit height of the hyperdiscriminant side, "
        "delta=|deg_Delta*hF-deg_R*hDelta|, delta_over_d2=delta/d^2; "
        f"convention={args.convention}",
        ["d", "hF_limit", "hDelta_limit", "delta", "delta_over_d2"], rows)
    return 0


def _cmd_discrepancy(args) -> int:
    if args.family != "rnc":
        raise CLIUsageError(f"unknown family {args.family!r}")
    d_values = _parse_range(args.d)
    rows, fit = varieties.discrepancy_table(d_values, samples=args.samples,
                                            seed=args.seed,
                                            threads=_resolve_threads(args))
    table = [(r.d, r.deg_R, r.deg_Delta, r.h_F, r.h_F_stderr, r.h_Delta,
              r.h_Delta_stderr, r.delta, r.delta_over_d2) for r in rows]
    _emit_table(
        args,
        "columns: d=curve degree, deg_R/deg_Delta=form degrees 2d and 2d-2, "
        "h_F/h_Delta=Monte Carlo heights with standard errors, "
        "delta=|deg_Delta*h_F-deg_R*h_Delta|, delta_over_d2=delta/d^2; "
        f"log-log growth fit: exponent={fit['exponent']!r} "
        f"ci_halfwidth={fit['exponent_ci_halfwidth']!r}",
        ["d", "deg_R", "deg_Delta", "h_F", "h_F_stderr", "h_Delta",
         "h_Delta_stderr", "delta", "delta_over_d2"], table)
    return 0


def _cmd_variety(args) -> int:
    if args.family != "rnc":
        raise CLIUsageError(f"unknown family {args.family!r}")
    example = varieties.rnc_example(args.d)
    payload = {
        "schema": SCHEMA,
        "family": example.family,
        "n": example.n,
        "N": example.N,
        "d": example.d,
        "deg_R": example.deg_R,
        "deg_Delta": example.deg_Delta,
    }
    for key, poly in (("R_X", example.R_X), ("Delta_X", example.Delta_X)):
        if isinstance(poly, polyrep.SparsePolynomial):
            payload[key] = json.loads(polyrep.poly_to_json(poly))
        else:
            payload[key] = {"blackbox": poly.name, "degree": poly.degree,
                            "shape": list(poly.shape),
                            "note": "evaluation-only at this degree"}
    _emit_report(args, payload)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabpair",
        description="semistability of pairs, energies, zeta functions and heights")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, samples_default=10**6):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=samples_default)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", choices=["json", "csv"], default=None)
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("polytope", help="weight polytope of a polynomial")
    p.add_argument("--poly", required=True)
    common(p)
    p.set_defaults(func=_cmd_polytope)

    p = sub.add_parser("semistable", help="pair semistability probe")
    p.add_argument("--pair", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--expect", choices=["semistable", "destabilized"], default=None)
    common(p)
    p.set_defaults(func=_cmd_semistable)

    p = sub.add_parser("stable-search", help="twist exponent search")
    p.add_argument("--pair", required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--m-max", type=int, default=50)
    p.add_argument("--scheme", choices=["m:m+1", "m-1:m"], default="m:m+1")
    p.add_argument("--probe-trials", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_stable_search)

    p = sub.add_parser("energy", help="nu and J at one group element")
    p.add_argument("--pair", required=True)
    p.add_argument("--sigma", required=True)
    common(p, samples_default=200_000)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("energy-scan", help="nu and J along sampled diagonal rays")
    p.add_argument("--pair", required=True)
    p.add_argument("--rays", type=int, default=8)
    p.add_argument("--decades", type=int, default=6)
    p.add_argument("--points", type=int, default=13)
    common(p)
    p.set_defaults(func=_cmd_energy_scan)

    p = sub.add_parser("zeta", help="Gaussian local zeta value")
    p.add_argument("--poly", required=True)
    p.add_argument("--s", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_zeta)

    p = sub.add_parser("height", help="height of a polynomial")
    p.add_argument("--poly", required=True)
    p.add_argument("--audit-bounds", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_height)

    p = sub.add_parser("degeneration", help="closed-form limit heights table")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--d-range", required=True)
    p.add_argument("--convention", choices=list(igusa.CONVENTIONS),
                   default="standard")
    common(p)
    p.set_defaults(func=_cmd_degeneration)

    p = sub.add_parser("discrepancy", help="Monte Carlo height-discrepancy table")
    p.add_argument("--family", default="rnc")
    p.add_argument("--d", required=True)
    common(p, samples_default=200_000)
    p.set_defaults(func=_cmd_discrepancy)

    p = sub.add_parser("variety", help="emit a built-in variety's forms")
    p.add_argument("--family", default="rnc")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--emit", dest="out", type=str, default=None)
    common(p)
    p.set_defaults(func=_cmd_variety)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._started = time.time()
    try:
        return args.func(args)
    except ExpectationFailed as exc:
        print(f"verdict: {exc}", file=sys.stderr)
        return 1
    except (CLIUsageError, ValueError) as exc:
        # invalid arguments surfacing from any layer are usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
