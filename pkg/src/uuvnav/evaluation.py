"""Per-axis pose MSE, NEES, and multi-seed scenario comparisons."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from . import state as sc
from .sim import RunLog, ScenarioConfig, run_scenario

AXES = ("x", "y", "z", "roll", "pitch", "yaw")


@dataclass(frozen=True)
class RunMetrics:
    mse_x: float
    mse_y: float
    mse_z: float
    mse_roll: float
    mse_pitch: float
    mse_yaw: float
    samples: int

    def values(self) -> np.ndarray:
        return np.array([getattr(self, f"mse_{a}") for a in AXES])


def pose_errors(log: RunLog) -> np.ndarray:
    """(N, 6) estimate-minus-truth pose errors, angles wrapped."""
    err = log.estimate[:, :6] - log.truth[:, :6]
    err[:, 3:6] = sc.wrap_angles(err[:, 3:6])
    return err


def mse_per_axis(log: RunLog) -> RunMetrics:
    if len(log) == 0:
        raise ValueError("cannot compute MSE of an empty run log")
    mse = np.mean(pose_errors(log) ** 2, axis=0)
    return RunMetrics(*(float(v) for v in mse), samples=len(log))


def position_nees(log: RunLog) -> np.ndarray:
    """Per-tick ``e^T P^-1 e`` for the position block."""
    e = log.estimate[:, :3] - log.truth[:, :3]
    return np.einsum("ni,ni->n", e, np.linalg.solve(log.pos_cov, e[..., None])[..., 0])


@dataclass(frozen=True)
class CellStats:
    mean: RunMetrics
    min: RunMetrics
    max: RunMetrics
    runs: tuple  # RunMetrics per seed, in seed order


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple      # ((label, CellStats), ...) in config order
    seeds: tuple

    def row(self, label: str) -> CellStats:
        for name, stats in self.rows:
            if name == label:
                return stats
        raise KeyError(label)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "stat"] + [f"mse_{a}" for a in AXES] + ["samples", "seeds"])
        seeds = " ".join(str(s) for s in self.seeds)
        for label, stats in self.rows:
            for stat in ("mean", "min", "max"):
                m = getattr(stats, stat)
                w.writerow([label, stat] + [repr(float(v)) for v in m.values()]
                           + [m.samples, seeds])
        return buf.getvalue()

    def to_table(self, axes: Sequence[str] = AXES, title: str = "") -> str:
        """Aligned text table of mean MSE per scenario."""
        header = ["Scenario"] + [_axis_heading(a) for a in axes]
        body = [[label] + [f"{getattr(stats.mean, 'mse_' + a):.5g}" for a in axes]
                for label, stats in self.rows]
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        lines = []
        if title:
            lines.append(title)
        fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                                  for i, (c, w) in enumerate(zip(r, widths)))
        lines.append(fmt(header))
        lines.append("  ".join("-" * w for w in widths))
        lines.extend(fmt(r) for r in body)
        lines.append(f"(mean MSE over seeds {', '.join(str(s) for s in self.seeds)})")
        return "\n".join(lines) + "\n"


def _axis_heading(axis: str) -> str:
    unit = "m^2" if axis in ("x", "y", "z") else "rad^2"
    return f"{axis.capitalize() if len(axis) > 1 else axis.upper()} ({unit})"


def _aggregate(runs: list[RunMetrics]) -> CellStats:
    vals = np.array([r.values() for r in runs])
    n = runs[0].samples

    def pack(v):
        return RunMetrics(*(float(x) for x in v), samples=n)

    return CellStats(pack(vals.mean(axis=0)), pack(vals.min(axis=0)),
                     pack(vals.max(axis=0)), tuple(runs))


class ScenarioError(RuntimeError):
    pass


def _run_cell(cfg: ScenarioConfig) -> RunMetrics:
    try:
        return mse_per_axis(run_scenario(cfg))
    except Exception as exc:
        raise ScenarioError(f"scenario {cfg.name!r} (seed {cfg.seed}): {exc}") from exc


def run_comparison(configs: Sequence[ScenarioConfig], seeds: Sequence[int],
                   workers: int = 1) -> ComparisonReport:
    """Run every config under every seed and aggregate per config.

    All configs must share trajectory and duration so rows are comparable.
    ``workers > 1`` runs cells in a process pool; results do not depend on it.
    """
    if not configs or not seeds:
        raise ValueError("run_comparison needs at least one config and one seed")
    first = configs[0]
    for c in configs[1:]:
        if c.trajectory != first.trajectory or c.duration != first.duration:
            raise ValueError(f"scenario {c.name!r} differs in trajectory or duration")
    cells = [replace(c, seed=int(s)) for c in configs for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    n = len(seeds)
    rows = tuple((c.name, _aggregate(results[i * n:(i + 1) * n]))
                 for i, c in enumerate(configs))
    return ComparisonReport(rows, tuple(int(s) for s in seeds))


def metrics_fields() -> list[str]:
    return [f.name for f in fields(RunMetrics)]
