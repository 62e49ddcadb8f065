"""Command-line harness.

Subcommands::

    metarisk risk-sweep --config <path|fig3a|fig3b> --out <dir> [--seed S] [--reps R] [--workers W]
    metarisk bounds     --config <path|preset> --out <dir> [--seed S]
    metarisk verify     --out <dir> [--seed S] [budget flags]
    metarisk packing    --config <path> --out <dir> [--seed S]
    metarisk env sample --config <path> --out <dir> [--seed S]

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 verification-suite failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import fano, model, sweeps, verify
from .exceptions import (
    DomainError,
    IllConditionedError,
    MetariskError,
    NotSymmetricError,
    ResourceBudgetError,
    SingularMatrixError,
    ValidationError,
)

_PACKING_KEYS = {"d": True, "delta": True, "budget": False}
_VERIFY_KEYS = {
    "mi_cases": False,
    "matrix_cases": False,
    "decoder_cases": False,
    "packing_budget": False,
    "seed": False,
}
_ENV_KEYS = {
    "d": True,
    "tau": True,
    "sigma_theta_sq": True,
    "M": True,
    "n": True,
    "k": True,
    "noise_sq_source": True,
    "noise_sq_novel": True,
    "design_kind": True,
    "x_range": False,
    "clip_theta_unit_ball": False,
    "shared_source_design": False,
    "seed": False,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metarisk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config path or preset name")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--reps", type=int, default=None, help="override Monte-Carlo repetitions")

    p = sub.add_parser("risk-sweep", help="exact/MC risk plus bounds over a sweep grid")
    common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("bounds", help="bound-vs-exact-risk table over a sweep grid")
    common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify", help="run the inequality verification suites")
    common(p, config_required=False)
    p.add_argument("--mi-cases", type=int, default=None)
    p.add_argument("--matrix-cases", type=int, default=None)
    p.add_argument("--decoder-cases", type=int, default=None)
    p.add_argument("--packing-budget", type=int, default=None)

    p = sub.add_parser("packing", help="build a greedy packing set")
    common(p)

    p = sub.add_parser("env", help="environment utilities")
    env_sub = p.add_subparsers(dest="env_command", required=True)
    p2 = env_sub.add_parser("sample", help="sample and serialize an environment")
    common(p2)

    return parser


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_json(path: str, schema: dict, where: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{where} config is not valid JSON: {exc}") from exc
    sweeps._require_keys(doc, schema, where)
    return doc


def _sweep_config(args) -> sweeps.SweepConfig:
    cfg = sweeps.load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.reps is not None:
        if args.reps == 1 or args.reps < 0:
            raise ValidationError("reps must be 0 or >= 2")
        updates["reps"] = args.reps
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_sweep(args, include_mc: bool, filename: str) -> int:
    cfg = _sweep_config(args)
    rows = sweeps.run_sweep(cfg, include_mc=include_mc, workers=getattr(args, "workers", 1))
    out = _out_dir(args) / filename
    out.write_text(sweeps.rows_to_csv(rows), encoding="utf-8", newline="")
    filled = sum(row.risk_exact is not None for row in rows)
    if cfg.d <= 2:
        print("warning: d <= 2, lower_thm51 column left empty")
    print(f"wrote {len(rows)} rows ({filled} with exact risk) to {out}")
    for entry in cfg.configs:
        vals = [r.risk_exact for r in rows if r.config_id == entry.id and r.risk_exact is not None]
        if vals:
            print(f"  {entry.id}: exact risk range [{min(vals):.6g}, {max(vals):.6g}]")
    return 0


def _cmd_verify(args) -> int:
    # Precedence: built-in defaults, then config-file values, then flags.
    budgets = {
        "mi_cases": 200,
        "matrix_cases": 1000,
        "decoder_cases": 200,
        "packing_budget": 100_000,
        "seed": 0,
    }
    if args.config is not None:
        doc = _load_json(args.config, _VERIFY_KEYS, "verify")
        budgets.update({key: int(value) for key, value in doc.items()})
    for key in budgets:
        flag = getattr(args, key if key != "seed" else "seed")
        if flag is not None:
            budgets[key] = flag
    report = verify.run_all(**budgets)
    out = _out_dir(args) / "verify_report.json"
    out.write_text(json.dumps(report, indent=2), encoding="utf-8")
    for suite in report["suites"]:
        status = "ok" if suite["failures"] == 0 else "FAIL"
        print(
            f"{status:4s} {suite['name']}: {suite['cases']} cases, "
            f"{suite['failures']} failures, worst slack {suite['worst_slack']:.3e}"
        )
    print(f"report written to {out}")
    if report["total_failures"]:
        print(f"{report['total_failures']} verification failures", file=sys.stderr)
        return 3
    return 0


def _cmd_packing(args) -> int:
    doc = _load_json(args.config, _PACKING_KEYS, "packing")
    seed = args.seed if args.seed is not None else 0
    ps = fano.greedy_packing(
        int(doc["d"]), float(doc["delta"]), int(doc.get("budget", 100_000)), seed
    )
    out = _out_dir(args) / "packing.json"
    out.write_text(json.dumps(fano.packing_to_dict(ps), indent=2), encoding="utf-8")
    if ps.size >= 2:
        off = ps.pairwise_dist[~np.eye(ps.size, dtype=bool)]
        print(f"packed {ps.size} centers, min separation {off.min():.6g} (2*delta = {2 * ps.delta:.6g})")
    else:
        print(f"packed {ps.size} centers")
    print(f"wrote {out}")
    return 0


def _cmd_env_sample(args) -> int:
    doc = _load_json(args.config, _ENV_KEYS, "environment")
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    prior = model.HyperPrior(np.asarray(doc["tau"], dtype=float), float(doc["sigma_theta_sq"]))
    env = model.sample_environment(
        prior,
        int(doc["M"]), int(doc["n"]), int(doc["k"]),
        float(doc["noise_sq_source"]), float(doc["noise_sq_novel"]),
        design_kind=str(doc["design_kind"]),
        seed=seed,
        x_range=tuple(doc.get("x_range", (-1.0, 1.0))),
        clip_theta_unit_ball=bool(doc.get("clip_theta_unit_ball", False)),
        shared_source_design=bool(doc.get("shared_source_design", False)),
    )
    out = _out_dir(args) / "environment.json"
    out.write_text(model.environment_to_json(env), encoding="utf-8")
    print(f"sampled environment with M={env.num_source}, d={env.d}; wrote {out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "risk-sweep":
            return _cmd_sweep(args, include_mc=True, filename="risk_sweep.csv")
        if args.command == "bounds":
            return _cmd_sweep(args, include_mc=False, filename="bounds.csv")
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "packing":
            return _cmd_packing(args)
        if args.command == "env":
            return _cmd_env_sample(args)
        raise ValidationError(f"unknown command {args.command!r}")
    except (ValidationError, DomainError, ResourceBudgetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SingularMatrixError, IllConditionedError, NotSymmetricError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except MetariskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
