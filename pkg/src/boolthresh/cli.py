"""Command-line front end: config-driven runs emitting CSV or JSON.

Subcommands: thresholds, scan, mc, branching, gaussian-report.  The
config file is a single JSON document with a "model" block and exactly
one command block; flags may override scalar fields.  All exponents and
thresholds are natural logarithms (nats).  Exit codes: 0 success, 2
config/validation failure, 3 internal-consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import branching, finite_n, mc, rate, thresholds
from .errors import ConsistencyError, ValidationError

_COMMAND_BLOCKS = ("thresholds", "scan", "mc", "branching", "gaussian_report")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config root must be a JSON object")
    present = [b for b in _COMMAND_BLOCKS if b in doc]
    if len(present) > 1:
        raise ValidationError(f"exactly one command block allowed, found {present}")
    return doc


def _model_spec(doc: dict) -> finite_n.ModelSpec:
    model = doc.get("model")
    if not isinstance(model, dict):
        raise ValidationError("config needs a 'model' block")
    if "radius_law" not in model:
        raise ValidationError("model block needs a 'radius_law'")
    law = rate.radius_law_from_dict(model["radius_law"])
    rho = model.get("rho")
    if rho is None:
        raise ValidationError("model block needs 'rho' (nats)")
    return finite_n.ModelSpec(rho=float(rho), radius_law=law)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _rows_to_csv(header: Sequence[str], rows: Sequence[Sequence], terminator: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if terminator:
        buf.write("# complete\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_thresholds(doc: dict, args) -> str:
    spec = _model_spec(doc)
    rep = thresholds.report(spec.radius_law, spec.rho)
    d = rep.to_dict()
    if args.format == "json":
        return json.dumps({"units": "nats", **d}, indent=2) + "\n"
    keys = list(d.keys())
    return _rows_to_csv([f"{k} (nats)" if k.startswith("tau") or k == "rho" else k for k in keys],
                        [[d[k] for k in keys]], terminator=False)


def cmd_scan(doc: dict, args) -> str:
    spec = _model_spec(doc)
    block = doc.get("scan")
    if not isinstance(block, dict) or "n_list" not in block:
        raise ValidationError("scan command needs a 'scan' block with 'n_list'")
    n_list = [int(n) for n in block["n_list"]]
    if not n_list:
        raise ValidationError("scan n_list must be nonempty")
    cfg = finite_n.QuadratureConfig()
    result = finite_n.exponent_scan(spec, n_list, cfg, jobs=args.jobs)
    header = [
        "n",
        "log_lambda_n (nats)",
        "coverage",
        "exponent_vf (nats)",
        "target_vf (nats)",
        "log_mean_degree (nats)",
        "exponent_deg (nats)",
        "target_deg (nats)",
    ]
    rows = [
        [
            p.n,
            p.log_lambda_n,
            p.coverage,
            p.exponent_vf,
            result.target_vf,
            p.log_mean_degree,
            p.exponent_deg,
            result.target_deg,
        ]
        for p in result.points
    ]
    if args.format == "json":
        return json.dumps(
            {
                "units": "nats",
                "target_vf": result.target_vf,
                "target_deg": result.target_deg,
                "points": [vars(p) | {} for p in (p for p in result.points)],
            },
            default=lambda o: o.__dict__,
            indent=2,
        ) + "\n"
    return _rows_to_csv(header, rows, terminator=True)


def cmd_mc(doc: dict, args) -> str:
    spec = _model_spec(doc)
    block = doc.get("mc")
    if not isinstance(block, dict):
        raise ValidationError("mc command needs an 'mc' block")
    try:
        quantity = block["quantity"]
        samples = int(block["samples"])
        seed = int(args.seed if args.seed is not None else block["seed"])
    except KeyError as exc:
        raise ValidationError(f"mc block missing field {exc}") from exc
    n = int(block.get("n", 0))
    if n < 1:
        raise ValidationError("mc block needs a dimension 'n' >= 1")
    cfg = mc.McConfig(
        samples=samples,
        seed=seed,
        truncation_multiplier=float(block.get("truncation_multiplier", 1.0)),
        max_expected_points=float(block.get("max_expected_points", 1e6)),
    )
    runners = {
        "coverage": mc.mc_coverage,
        "palm_degree": mc.mc_palm_degree,
        "conditional_degree": mc.mc_conditional_poisson_degree,
    }
    if quantity not in runners:
        raise ValidationError(
            f"unknown mc quantity {quantity!r}; choose from {sorted(runners)}"
        )
    est = runners[quantity](spec, n, cfg)
    d = {"quantity": quantity, "n": n, **est.to_dict()}
    if args.format == "json":
        return json.dumps(d, indent=2) + "\n"
    keys = list(d.keys())
    return _rows_to_csv(keys, [[d[k] for k in keys]], terminator=False)


def cmd_branching(doc: dict, args) -> str:
    spec = _model_spec(doc)
    block = doc.get("branching")
    if not isinstance(block, dict) or "n_list" not in block:
        raise ValidationError("branching command needs a 'branching' block with 'n_list'")
    n_list = [int(n) for n in block["n_list"]]
    if not n_list:
        raise ValidationError("branching n_list must be nonempty")
    gamma = block.get("gamma")
    probes = branching.percolation_probe_scan(
        spec, n_list, gamma=float(gamma) if gamma is not None else None
    )
    header = ["n", "log_y_n (nats)", "y_n_normalized_exponent (nats)", "survival", "thin_radius"]
    rows = [[p.n, p.log_y_n, p.y_exponent, p.survival, p.thin_radius] for p in probes]
    if args.format == "json":
        return json.dumps(
            {"units": "nats", "probes": [vars(p) for p in probes]}, indent=2
        ) + "\n"
    return _rows_to_csv(header, rows, terminator=False)


def cmd_gaussian_report(doc: dict, args) -> str:
    block = doc.get("gaussian_report") or {}
    model = doc.get("model") or {}
    sigma = block.get("sigma")
    if sigma is None and isinstance(model.get("radius_law"), dict):
        sigma = model["radius_law"].get("sigma")
    if sigma is None:
        raise ValidationError("gaussian-report needs 'sigma' (gaussian_report block or model)")
    sigma = float(sigma)
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")

    gauss = rate.GaussianGrain(sigma=sigma)
    rep = thresholds.report(gauss, rho=model.get("rho", 0.0))
    c = thresholds.solve_gaussian_cubic()
    poltyrev = -0.5 * math.log(2.0 * math.pi * math.e * sigma * sigma)
    trunc = rate.Deterministic(rstar=sigma)
    trunc_rep = thresholds.report(trunc, rho=model.get("rho", 0.0))
    d = {
        "units": "nats",
        "sigma": sigma,
        "rstar": sigma,
        "cubic_root_c": c,
        "r_v": rep.r_v,
        "r_d": rep.r_d,
        "r_p": rep.r_p,
        "tau_v": rep.tau_v,
        "tau_d": rep.tau_d,
        "tau_p": rep.tau_p,
        "rate_at_r_v": rate.build_rate(gauss).value(rep.r_v),
        "log_mgf_at_1": rate.gaussian_log_mgf(sigma, 1.0),
        "truncated_tau_v_poltyrev": poltyrev,
        "truncated_tau_d": trunc_rep.tau_d,
        "truncated_tau_p": trunc_rep.tau_p,
        # gap of the truncated (deterministic) model: tau_v - tau_p = log 2
        "truncated_gap_tau_v_minus_tau_p": trunc_rep.tau_v - trunc_rep.tau_p,
        # gaussian grains sit strictly below the Poltyrev threshold
        "tau_v_gaussian_minus_truncated": rep.tau_v - poltyrev,
        "tau_v_gaussian_minus_truncated_expected": -0.5 * (math.log(4.0) - 1.0),
    }
    if args.format == "json":
        return json.dumps(d, indent=2) + "\n"
    keys = list(d.keys())
    return _rows_to_csv(keys, [[d[k] for k in keys]], terminator=False)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boolthresh",
        description="Thresholds and finite-dimension diagnostics of "
        "high-dimensional Poisson Boolean models (all exponents in nats).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "thresholds": cmd_thresholds,
        "scan": cmd_scan,
        "mc": cmd_mc,
        "branching": cmd_branching,
        "gaussian-report": cmd_gaussian_report,
    }
    for name in handlers:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=1)
        if name == "mc":
            p.add_argument("--seed", type=int, default=None)
        p.set_defaults(handler=handlers[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = _load_config(args.config)
        block_name = args.command.replace("-", "_")
        present = [b for b in _COMMAND_BLOCKS if b in doc]
        if present and present[0] != block_name:
            raise ValidationError(
                f"config has a {present[0]!r} block but command is {args.command!r}"
            )
        text = args.handler(doc, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 3
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
