"""Command-line front end.

    twohop exponent  --config pair.json
    twohop converse  --config pair.json
    twohop simulate  --config experiment.json [--format csv|json]
    twohop sweep     --config experiment.json [--format csv|json]
    twohop verify    --config verify.json

Exit status: 0 on success, 1 on bad input, 2 on an internal consistency failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import channel as chmod
from . import checks
from .errors import ConsistencyError, DomainError
from .exponent import (block_converse, check_assumption1, e1, feedback_exponent_bsc_rz,
                       one_hop_rate, trivial_converse, two_hop_rate)
from .harness import ExperimentConfig, exact_block_verification, run_point, sweep, write_csv
from .protocol import ProtocolSpec

SEED_ENV = "RELAY_EXP_SEED"
SUBCOMMANDS = ("exponent", "simulate", "sweep", "verify", "converse")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read config {path!r}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise DomainError(f"{path}: top level must be a JSON object")
    return data


def _pair(data: dict, allowed=("P", "Q", "gamma_step")):
    extra = set(data) - set(allowed)
    if extra:
        raise DomainError(f"unknown config fields: {sorted(extra)}")
    for key in ("P", "Q"):
        if key not in data:
            raise DomainError(f"config is missing {key!r}")
    return chmod.from_descriptor(data["P"]), chmod.from_descriptor(data["Q"])


def _gamma_grid(step: float):
    if not 0.0 < step <= 0.5:
        raise DomainError(f"gamma_step must lie in (0, 0.5], got {step!r}")
    return np.round(np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1), 12)


def cmd_exponent(data: dict) -> dict:
    ch_p, ch_q = _pair(data)
    grid = _gamma_grid(float(data.get("gamma_step", 0.05)))
    out = {
        "one_hop_P": one_hop_rate(ch_p).to_json(),
        "one_hop_Q": one_hop_rate(ch_q).to_json(),
        "two_hop": two_hop_rate(ch_p, ch_q).to_json(),
        "two_hop_flipped": two_hop_rate(ch_p, ch_q, flipped=True).to_json(),
        "trivial_converse": trivial_converse(ch_p, ch_q).to_json(),
    }
    bc = block_converse(ch_p, ch_q)
    out["block_converse"] = bc.to_json() if bc is not None else "not-applicable"
    out["assumption1"] = {"P": check_assumption1(ch_p)[0], "Q": check_assumption1(ch_q)[0]}
    out["e1"] = [{"gamma": float(g), **e1(ch_p, ch_q, float(g)).to_json()} for g in grid]
    p = chmod.bsc_crossover(ch_p)
    q = ch_q.row0[1] if chmod.to_descriptor(ch_q)["kind"] == "reverse_z" else None
    if p is not None and q is not None:
        out["feedback_bsc_rz"] = [
            {"gamma": float(g), "rate": feedback_exponent_bsc_rz(p, q, float(g))} for g in grid
        ]
    return out


def cmd_converse(data: dict) -> dict:
    ch_p, ch_q = _pair(data)
    grid = _gamma_grid(float(data.get("gamma_step", 0.001)))
    curve = [e1(ch_p, ch_q, float(g)).rate for g in grid]
    i = int(np.argmin(curve))
    triv = trivial_converse(ch_p, ch_q).rate
    ach = two_hop_rate(ch_p, ch_q).rate
    return {
        "trivial_converse": triv,
        "min_gamma_e1": curve[i],
        "argmin_gamma": float(grid[i]),
        "margin": triv - curve[i],
        "strict_improvement": curve[i] < triv,
        "two_hop_achievable": ach,
        "e1_is_converse": chmod.bsc_crossover(ch_q) is not None,
    }


def _experiment(data: dict, args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(data)
    seed = cfg.seed
    if os.environ.get(SEED_ENV):
        seed = int(os.environ[SEED_ENV])
    if args.seed is not None:
        seed = args.seed
    threads = args.threads if args.threads is not None else cfg.threads
    return replace(cfg, seed=seed, threads=threads)


def cmd_simulate(data: dict, args):
    cfg = _experiment(data, args)
    points = [run_point(cfg, n) for n in cfg.n_grid]
    if args.format == "csv":
        return write_csv(points, cfg.spec)
    return {"config": cfg.to_json(), "points": [pt.__dict__ for pt in points]}


def cmd_sweep(data: dict, args):
    cfg = _experiment(data, args)
    points, fit = sweep(cfg)
    if args.format == "csv":
        return write_csv(points, cfg.spec)
    summary = {"config": cfg.to_json(), "points": [pt.__dict__ for pt in points]}
    summary["fit"] = None if fit is None else {"slope": fit.slope, "stderr": fit.stderr,
                                               "intercept": fit.intercept, "used_n": list(fit.used_n)}
    if cfg.spec.kind == "bsc-block" and cfg.spec.k <= 12:
        ver = exact_block_verification(cfg.spec)
        summary["analytic_bound"] = [
            {"n": pt.n, "bound": ver.rho_w ** (pt.n // cfg.spec.k - 1), "p_hat": pt.p_hat} for pt in points
        ]
    return summary


def cmd_verify(data: dict) -> dict:
    extra = set(data) - {"protocol", "invariants", "seed"}
    if extra:
        raise DomainError(f"unknown config fields: {sorted(extra)}")
    if "protocol" not in data:
        raise DomainError("config is missing 'protocol'")
    spec = ProtocolSpec.from_json(data["protocol"])
    out = {"block": exact_block_verification(spec).to_json()}
    if data.get("invariants", True):
        results = checks.standard_suite(seed=int(data.get("seed", 0)))
        out["invariants"] = [{"name": r.name, "slack": r.slack, "passed": r.passed} for r in results]
    out["passed"] = out["block"]["passed"] and all(r["passed"] for r in out.get("invariants", []))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twohop", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--threads", type=int, help="worker threads for simulation")
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = load_config(args.config)
        if args.subcommand == "exponent":
            result = cmd_exponent(data)
        elif args.subcommand == "converse":
            result = cmd_converse(data)
        elif args.subcommand == "simulate":
            result = cmd_simulate(data, args)
        elif args.subcommand == "sweep":
            result = cmd_sweep(data, args)
        else:
            result = cmd_verify(data)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConsistencyError as exc:
        print(f"internal consistency error: {exc} {json.dumps(exc.diagnostics, default=str)}", file=sys.stderr)
        return 2
    text = result if isinstance(result, str) else json.dumps(result, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.subcommand == "verify" and not result["passed"]:
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
