"""Command line entry point: ``lsviucb {generate,run,sweep,diagnose,report}``.

Exit codes: 0 success, 2 config error, 3 environment validation error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import load_config
from .errors import ConfigError, NumericalError, ValidationError
from .harness import emit_csv, emit_json, parse_csv, run_experiment, sublinearity_report
from .mdp import generate_synthetic, serialize

log = logging.getLogger("lsviucb")

EXIT_CONFIG, EXIT_ENV, EXIT_NUMERIC = 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat dotted key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--out", help="output directory (overrides run.out)")
    p.add_argument("--seeds", help="comma-separated seeds (overrides run.seeds)")
    p.add_argument("--variant", choices=["baseline", "fixed", "adaptive"])
    p.add_argument("--quiet", action="store_true")


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if args.out:
        out["run.out"] = args.out
    if args.seeds:
        out["run.seeds"] = args.seeds
    if args.variant:
        out["hp.variant"] = args.variant
    return out


def _write_run(cfg, out: Path, name: str, jobs: int) -> list:
    runs = run_experiment(cfg, jobs=jobs)
    records = [r for seed in cfg.seeds for r in runs[seed]]
    emit_csv(records, out / f"{name}.csv")
    emit_json(records, out / f"{name}.json", cfg)
    for seed in cfg.seeds:
        recs = runs[seed]
        log.info(
            "%s seed=%d K=%d cum_regret=%.4f final_space=%d",
            recs[0].variant, seed, len(recs), recs[-1].cum_regret, recs[-1].logical_space,
        )
    return records


def cmd_generate(args, cfg) -> int:
    out = Path(cfg.get("run.out"))
    out.mkdir(parents=True, exist_ok=True)
    for seed in cfg.seeds:
        path = out / f"mdp_seed{seed}.lmdp"
        path.write_bytes(serialize(generate_synthetic(cfg.synthetic_spec(seed))))
        log.info("wrote %s", path)
    return 0


def cmd_run(args, cfg) -> int:
    _write_run(cfg, Path(cfg.get("run.out")), f"run_{cfg.variant}_{cfg.digest()}", args.jobs)
    return 0


def cmd_sweep(args, cfg) -> int:
    out = Path(cfg.get("run.out"))
    for point in cfg.sweep_points():
        log.info("grid point %s", {k: v for k, v in point.to_mapping().items() if k.startswith("hp.")})
        _write_run(point, out, f"sweep_{point.variant}_{point.digest()}", args.jobs)
    return 0


def cmd_diagnose(args, cfg) -> int:
    out = Path(cfg.get("run.out"))
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    lam = dg.lambda_step_norm_series(dg.GaussianFeatureSpec.isotropic(8, 2000, seed))
    lam_ratio = dg.scaled_median_ratio(lam, (100, 400), (500, 2000), power=2)
    eig_pass, thr = dg.min_eigenvalue_trials(dg.GaussianFeatureSpec.isotropic(8, 512, seed), 512, 100)
    ell = dg.ellipsoid_inequality_check(10_000, 6, seed)
    eig = dg.min_eigenvalue_series(dg.GaussianFeatureSpec.isotropic(8, 512, seed))
    path = out / "diagnostics.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "seed", "variant", "episode", "value"])
        for series in (lam, eig):
            for k, v in zip(series.indices, series.values):
                w.writerow([series.label, seed, "diagnostic", int(k), repr(float(v))])
    summary = {
        "ellipsoid_inequality": {"trials": ell.trials, "violations": len(ell.violations)},
        "min_eigenvalue": {"passed": int(eig_pass), "trials": 100, "threshold": thr},
        "lambda_step_norm": {"late_over_early_k2_median": lam_ratio, "within_factor_20": 1 / 20 <= lam_ratio <= 20},
    }
    print(json.dumps(summary, indent=1))
    ok = ell.passed and eig_pass >= 95 and 1 / 20 <= lam_ratio <= 20
    return 0 if ok else EXIT_NUMERIC


def cmd_report(args, cfg) -> int:
    groups = defaultdict(list)
    for path in args.csv:
        for rec in parse_csv(path):
            groups[rec.run_id].append(rec)
    summary = {}
    for run_id, recs in groups.items():
        recs.sort(key=lambda r: r.episode)
        entry = {
            "variant": recs[0].variant,
            "seed": recs[0].seed,
            "K": len(recs),
            "cum_regret": recs[-1].cum_regret,
            "max_logical_space": max(r.logical_space for r in recs),
            "final_logical_space": recs[-1].logical_space,
            "resets": int(np.sum([r.resets for r in recs])),
        }
        if len(recs) >= 100:
            entry["sublinearity"] = sublinearity_report(recs).as_dict()
        summary[run_id] = entry
    print(json.dumps(summary, indent=1, default=str))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsviucb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, helptext in (
        ("generate", cmd_generate, "write serialized synthetic MDPs"),
        ("run", cmd_run, "run one experiment"),
        ("sweep", cmd_sweep, "grid over sweep.rho / sweep.m / sweep.tau_c / sweep.budget_c"),
        ("diagnose", cmd_diagnose, "run the convergence diagnostics"),
        ("report", cmd_report, "summarize emitted CSV files"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.set_defaults(func=fn)
        if name in ("run", "sweep"):
            p.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")
        if name == "report":
            p.add_argument("csv", nargs="+", help="CSV files emitted by run or sweep")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        return args.func(args, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as e:
        print(f"environment error: {e}", file=sys.stderr)
        return EXIT_ENV
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
