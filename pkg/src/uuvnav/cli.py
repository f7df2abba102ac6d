"""Command line entry point: ``uuvnav run | reproduce | validate-config``."""
from __future__ import annotations

import argparse
import csv
import shutil
import sys
from dataclasses import replace
from pathlib import Path

from . import ekf
from . import state as sc
from .config import ConfigError, ExperimentConfig, dump_experiment, load_experiment
from .evaluation import AXES, ScenarioError, mse_per_axis, run_comparison
from .experiments import TABLES, TITLES, table_axes, table_configs
from .sim import RunLog, run_scenario

POSE = ("x", "y", "z", "roll", "pitch", "yaw")

RUN_LOG_HEADER = (["t"] + [f"truth_{a}" for a in POSE] + [f"est_{a}" for a in POSE]
                  + [f"var_{f}" for f in sc.FIELD_NAMES])


class OutputError(RuntimeError):
    pass


def _f(v) -> str:
    return repr(float(v))


def _prepare_out(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()):
        if not force:
            raise OutputError(f"{out} is not empty (use --force to overwrite)")
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_run_bundle(out: Path, log: RunLog, exp: ExperimentConfig) -> None:
    """Run log, measurement stream, metrics and per-axis plot series."""
    s = exp.scenario
    _write_csv(out / "run_log.csv", RUN_LOG_HEADER,
               ([_f(t)] + [_f(v) for v in tr[:6]] + [_f(v) for v in es[:6]]
                + [_f(v) for v in cd]
                for t, tr, es, cd in zip(log.times, log.truth, log.estimate, log.cov_diag)))
    _write_csv(out / "measurements.csv", ["t", "sensor", "accepted", "values"],
               ([_f(m.time), m.sensor_id, int(m.accepted), " ".join(_f(v) for v in m.values)]
                for m in log.measurements))
    m = mse_per_axis(log)
    _write_csv(out / "metrics.csv",
               ["scenario", "seed"] + [f"mse_{a}" for a in AXES] + ["samples"],
               [[s.name, s.seed] + [_f(v) for v in m.values()] + [m.samples]])
    plot = out / "plot"
    plot.mkdir(exist_ok=True)
    for i, axis in enumerate(POSE):
        _write_csv(plot / f"{axis}.csv", ["t", "truth", "estimate"],
                   ([_f(t), _f(tr[i]), _f(es[i])]
                    for t, tr, es in zip(log.times, log.truth, log.estimate)))
    (out / "config.yaml").write_text(dump_experiment(exp))


def cmd_run(args) -> int:
    exp = load_experiment(args.config, args.override or [])
    if args.seed is not None:
        exp = ExperimentConfig(replace(exp.scenario, seed=args.seed), (args.seed,))
    out = Path(args.out)
    _prepare_out(out, args.force)
    log = run_scenario(exp.scenario)
    write_run_bundle(out, log, exp)
    m = mse_per_axis(log)
    print(f"{exp.scenario.name} (seed {exp.scenario.seed}): "
          + "  ".join(f"mse_{a}={getattr(m, 'mse_' + a):.6g}" for a in AXES))
    print(f"wrote {out}")
    return 0


def cmd_reproduce(args) -> int:
    exp = load_experiment(args.config, args.override or [])
    seeds = tuple(args.seeds) if args.seeds else exp.seeds
    out = Path(args.out)
    _prepare_out(out, args.force)
    tables = TABLES if args.table == "ALL" else (args.table,)
    for table in tables:
        report = run_comparison(table_configs(table, exp.scenario), seeds,
                                workers=args.parallel)
        text = report.to_table(table_axes(table), title=f"{table}: {TITLES[table]}")
        (out / f"{table}_comparison.csv").write_text(report.to_csv())
        (out / f"{table}_table.txt").write_text(text)
        print(text)
    print(f"wrote {out}")
    return 0


def cmd_validate(args) -> int:
    exp = load_experiment(args.config, args.override or [])
    s = exp.scenario
    enabled = ", ".join(sorted(x.value for x in s.sensors))
    print(f"ok: {s.name}: sensors [{enabled}], {s.duration} s at {s.filter_rate} Hz, "
          f"seeds {list(exp.seeds)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uuvnav",
                                 description="UUV EKF simulation and MSE experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="YAML scenario file")
        p.add_argument("--override", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")

    p = sub.add_parser("run", help="run one scenario and write the output bundle")
    common(p, True)
    p.add_argument("--seed", type=int, help="use this seed instead of the config's first")
    p.add_argument("--out", default="out/run")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty --out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="run a canned comparison table")
    p.add_argument("table", type=str.upper, choices=[*TABLES, "ALL"])
    common(p, False)
    p.add_argument("--seeds", type=int, nargs="+", help="default: config seeds")
    p.add_argument("--out", default="out/reproduce")
    p.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("validate-config", help="check a config file and exit")
    common(p, True)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config key {exc}", file=sys.stderr)
        return 2
    except OutputError as exc:
        print(f"error: output: {exc}", file=sys.stderr)
        return 2
    except sc.GimbalLockError as exc:
        print(f"error: state model: {exc}", file=sys.stderr)
        return 3
    except (ekf.FilterError, ScenarioError) as exc:
        print(f"error: filter: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
