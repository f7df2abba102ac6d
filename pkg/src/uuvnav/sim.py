"""Ground-truth trajectories and the fixed-rate scenario loop."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from . import ekf
from . import sensors as sn
from . import state as sc


class Sensor(str, Enum):
    IMU = "IMU"
    DVL = "DVL"
    PRESSURE = "PRESSURE"
    USBL = "USBL"
    SURFACE_FIX = "SURFACE_FIX"


# Fixed delivery order for same-time measurements; also the RNG stream index.
SENSOR_ORDER = (Sensor.IMU, Sensor.DVL, Sensor.PRESSURE, Sensor.USBL, Sensor.SURFACE_FIX)

_TIME_EPS = 1e-9


# -- trajectory ----------------------------------------------------------------

@dataclass(frozen=True)
class Waypoint:
    position: tuple
    speed: float

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError(f"waypoint speed must be > 0, got {self.speed}")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))


@dataclass(frozen=True)
class _Segment:
    t0: float
    duration: float
    kind: str               # "line", "turn" or "hold"
    start: np.ndarray       # world position at t0
    yaw0: float
    # line: heading unit vector, speed, accel, ramp time; turn: signed rate
    heading: np.ndarray | None = None
    speed: float = 0.0
    accel: float = 0.0
    ramp: float = 0.0
    rate: float = 0.0

    def state(self, tau: float) -> np.ndarray:
        s = np.zeros(sc.STATE_DIM)
        s[sc.POS] = self.start
        s[5] = self.yaw0
        if self.kind == "turn":
            s[5] = sc.wrap_angle(self.yaw0 + self.rate * tau)
            s[11] = self.rate
        elif self.kind == "line":
            dist, vel, acc = _trapezoid(tau, self.duration, self.speed, self.accel, self.ramp)
            s[sc.POS] = self.start + dist * self.heading
            s[6] = vel
            s[12] = acc
        return s


def _trapezoid(tau, total, vmax, accel, ramp):
    """Distance, speed and acceleration along a trapezoidal speed profile."""
    if tau < ramp:
        return 0.5 * accel * tau * tau, accel * tau, accel
    d_ramp = 0.5 * accel * ramp * ramp
    cruise = total - 2 * ramp
    if tau < ramp + cruise:
        return d_ramp + vmax * (tau - ramp), vmax, 0.0
    tau = min(tau, total)
    td = tau - ramp - cruise
    return (d_ramp + vmax * cruise + vmax * td - 0.5 * accel * td * td,
            vmax - accel * td, -accel if tau < total else 0.0)


class Trajectory:
    """Piecewise-analytic ground truth sampled on a uniform grid.

    ``state_at`` evaluates the continuous trajectory at any time, so
    sensors off the sampling grid still see exact truth.
    """

    def __init__(self, segments: list[_Segment], dt: float, duration: float):
        self.segments = segments
        self._starts = [seg.t0 for seg in segments]
        self.dt = dt
        self.duration = duration
        n = int(round(duration / dt))
        self.times = np.arange(n + 1) * dt
        self.samples = np.array([self.state_at(t) for t in self.times])

    @property
    def motion_duration(self) -> float:
        moving = [s for s in self.segments if s.kind != "hold"]
        return moving[-1].t0 + moving[-1].duration if moving else 0.0

    @property
    def path_length(self) -> float:
        total = 0.0
        for seg in self.segments:
            if seg.kind == "line":
                total += _trapezoid(seg.duration, seg.duration, seg.speed,
                                    seg.accel, seg.ramp)[0]
        return total

    def state_at(self, t: float) -> np.ndarray:
        i = max(bisect.bisect_right(self._starts, t) - 1, 0)
        seg = self.segments[i]
        return seg.state(min(max(t - seg.t0, 0.0), seg.duration)
                         if seg.kind != "hold" else 0.0)

    def world_velocities(self) -> np.ndarray:
        return np.array([sc.rotation_from_euler(s[sc.ORI]) @ s[sc.VEL]
                         for s in self.samples])


def _check_rectangle(pts: np.ndarray) -> None:
    edges = [pts[(i + 1) % 4] - pts[i] for i in range(4)]
    lengths = [float(np.linalg.norm(e)) for e in edges]
    if min(lengths) < 1e-9:
        raise ValueError("degenerate rectangle: zero-length edge")
    for i in range(4):
        cos = abs(edges[i] @ edges[(i + 1) % 4]) / (lengths[i] * lengths[(i + 1) % 4])
        if cos > 1e-6:
            raise ValueError("corners do not form a rectangle (edges not perpendicular)")
    if abs(lengths[0] - lengths[2]) > 1e-6 or abs(lengths[1] - lengths[3]) > 1e-6:
        raise ValueError("corners do not form a rectangle (opposite edges differ)")


def build_rectangle_trajectory(corners: Sequence[Waypoint], depth: float, dt: float,
                               hold: float = 0.0, accel: float = 0.1,
                               yaw_rate: float = 0.2,
                               duration: float | None = None) -> Trajectory:
    """Constant-depth loop around four corners, back to the first one.

    Each edge uses a trapezoidal speed profile (``accel`` ramps up to the
    corner's ``speed``) and ends at rest; the vehicle then turns in place at
    ``yaw_rate`` to face the next edge.  ``hold`` seconds at rest are
    appended after the loop; ``duration``, if given, overrides the total
    length (truncating or extending the final rest).
    """
    if len(corners) != 4:
        raise ValueError("a rectangle needs exactly 4 corners")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not (accel > 0 and yaw_rate > 0) or hold < 0:
        raise ValueError("accel and yaw_rate must be > 0 and hold >= 0")
    pts = np.array([[c.position[0], c.position[1]] for c in corners], dtype=float)
    _check_rectangle(pts)

    segments: list[_Segment] = []
    t = 0.0
    z = -float(depth)
    pos = np.array([pts[0, 0], pts[0, 1], z])
    yaw = math.atan2(*(pts[1] - pts[0])[::-1])
    for i in range(4):
        delta = pts[(i + 1) % 4] - pts[i]
        length = float(np.linalg.norm(delta))
        heading = math.atan2(delta[1], delta[0])
        if i > 0:
            turn = sc.angle_diff(heading, yaw)
            if abs(turn) > 1e-12:
                dur = abs(turn) / yaw_rate
                segments.append(_Segment(t, dur, "turn", pos.copy(), yaw,
                                         rate=math.copysign(yaw_rate, turn)))
                t += dur
            yaw = heading
        vmax = corners[i].speed
        ramp = vmax / accel
        if accel * ramp * ramp > length:   # triangular profile
            ramp = math.sqrt(length / accel)
            vmax = accel * ramp
        total = 2 * ramp + (length - accel * ramp * ramp) / vmax
        unit = np.array([math.cos(heading), math.sin(heading), 0.0])
        segments.append(_Segment(t, total, "line", pos.copy(), yaw, heading=unit,
                                 speed=vmax, accel=accel, ramp=ramp))
        t += total
        pos = np.array([pts[(i + 1) % 4, 0], pts[(i + 1) % 4, 1], z])
    segments.append(_Segment(t, math.inf, "hold", pos.copy(), yaw))
    return Trajectory(segments, dt, t + hold if duration is None else duration)


# -- scenario ------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectorySpec:
    width: float = 20.0      # m, along the first edge
    height: float = 10.0     # m
    speed: float = 0.5       # m/s
    depth: float = 5.0       # m
    origin: tuple = (0.0, 0.0)
    accel: float = 0.1       # m/s^2
    yaw_rate: float = 0.2    # rad/s

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        for name in ("width", "height", "speed", "accel", "yaw_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"trajectory.{name} must be > 0")

    def corners(self) -> list[Waypoint]:
        x0, y0 = self.origin
        return [Waypoint((x0, y0, 0.0), self.speed),
                Waypoint((x0 + self.width, y0, 0.0), self.speed),
                Waypoint((x0 + self.width, y0 + self.height, 0.0), self.speed),
                Waypoint((x0, y0 + self.height, 0.0), self.speed)]

    def build(self, dt: float, duration: float) -> Trajectory:
        return build_rectangle_trajectory(self.corners(), self.depth, dt,
                                          accel=self.accel, yaw_rate=self.yaw_rate,
                                          duration=duration)


@dataclass(frozen=True)
class SensorSuite:
    imu: sn.ImuParams = sn.ImuParams()
    dvl: sn.DvlParams = sn.DvlParams()
    pressure: sn.PressureParams = sn.PressureParams()
    usbl: sn.UsblParams = sn.UsblParams()
    surface_fix: sn.SurfaceFixParams = sn.SurfaceFixParams()


@dataclass(frozen=True)
class SensorRates:
    imu: float = 20.0
    dvl: float = 10.0
    pressure: float = 10.0
    usbl: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    sensors: frozenset = frozenset({Sensor.IMU, Sensor.PRESSURE})
    params: SensorSuite = SensorSuite()
    rates: SensorRates = SensorRates()
    filter_rate: float = 20.0
    surface_period: float | None = None
    trajectory: TrajectorySpec = TrajectorySpec()
    seed: int = 0
    duration: float = 200.0
    q: ekf.ProcessNoise = ekf.ProcessNoise()
    p0_diag: tuple = ekf.DEFAULT_P0_DIAG
    gate: ekf.GateConfig = ekf.GateConfig()

    def __post_init__(self):
        object.__setattr__(self, "sensors", frozenset(Sensor(s) for s in self.sensors))
        object.__setattr__(self, "p0_diag", tuple(float(v) for v in self.p0_diag))
        if not self.filter_rate > 0:
            raise ValueError("filter_rate must be > 0")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if len(self.p0_diag) != sc.STATE_DIM or min(self.p0_diag) < 0:
            raise ValueError("p0_diag needs 15 entries >= 0")
        for s in (Sensor.IMU, Sensor.DVL, Sensor.PRESSURE, Sensor.USBL):
            rate = getattr(self.rates, s.value.lower())
            if s in self.sensors:
                if not rate > 0:
                    raise ValueError(f"{s.value.lower()}.rate must be > 0")
                if s is not Sensor.USBL and rate > self.filter_rate + _TIME_EPS:
                    raise ValueError(
                        f"{s.value.lower()}.rate {rate} exceeds filter rate {self.filter_rate}")
        if Sensor.SURFACE_FIX in self.sensors:
            if self.surface_period is None or not self.surface_period > 0:
                raise ValueError("surface_period must be > 0 when SURFACE_FIX is enabled")
        if self.surface_period is not None and self.surface_period > 0:
            fix = replace(self.params.surface_fix, period=float(self.surface_period))
            object.__setattr__(self, "params", replace(self.params, surface_fix=fix))

    @property
    def period(self) -> dict:
        out = {s: 1.0 / getattr(self.rates, s.value.lower())
               for s in (Sensor.IMU, Sensor.DVL, Sensor.PRESSURE, Sensor.USBL)}
        out[Sensor.SURFACE_FIX] = self.surface_period
        return out


@dataclass(frozen=True)
class MeasurementRecord:
    time: float
    sensor_id: str
    values: tuple
    accepted: bool


@dataclass(eq=False)
class RunLog:
    times: np.ndarray          # (N,)
    truth: np.ndarray          # (N, 15)
    estimate: np.ndarray       # (N, 15)
    cov_diag: np.ndarray       # (N, 15)
    pos_cov: np.ndarray        # (N, 3, 3)
    measurements: list = field(default_factory=list)
    label: str = ""

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, RunLog):
            return NotImplemented
        arrays = ("times", "truth", "estimate", "cov_diag", "pos_cov")
        return (all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
                and self.measurements == other.measurements)


def sensor_rng(seed: int, sensor: Sensor) -> np.random.Generator:
    """Independent stream per sensor kind, stable across sensor subsets."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(SENSOR_ORDER.index(Sensor(sensor)),))
    return np.random.default_rng(ss)


def _make_sensor(cfg: ScenarioConfig, s: Sensor):
    rng = sensor_rng(cfg.seed, s)
    p = cfg.params
    return {
        Sensor.IMU: lambda: sn.Imu(p.imu, rng),
        Sensor.DVL: lambda: sn.Dvl(p.dvl, rng),
        Sensor.PRESSURE: lambda: sn.PressureSensor(p.pressure, rng),
        Sensor.USBL: lambda: sn.Usbl(p.usbl, rng),
        Sensor.SURFACE_FIX: lambda: sn.SurfaceFix(p.surface_fix, rng),
    }[s]()


def _schedule(cfg: ScenarioConfig, fr: float) -> list[tuple[float, int, Sensor]]:
    """All measurement times up to ``duration``, snapped onto filter ticks
    when they coincide within float tolerance."""
    events = []
    for order, s in enumerate(SENSOR_ORDER):
        if s not in cfg.sensors:
            continue
        period = cfg.period[s]
        m = 0
        while True:
            t = m * period
            if t > cfg.duration + _TIME_EPS:
                break
            k = round(t * fr)
            if abs(t * fr - k) < _TIME_EPS * max(1.0, fr):
                t = k / fr
            events.append((t, order, s))
            m += 1
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def run_scenario(cfg: ScenarioConfig) -> RunLog:
    """Simulate sensors along the ground truth and run the EKF at the filter rate.

    Measurements between two ticks are applied in time order, each after
    predicting up to its own timestamp; the estimate is logged on every tick.
    """
    fr = cfg.filter_rate
    n_ticks = int(round(cfg.duration * fr))
    traj = cfg.trajectory.build(1.0 / fr, n_ticks / fr)
    devices = {s: _make_sensor(cfg, s) for s in cfg.sensors}
    events = _schedule(cfg, fr)

    fs = ekf.init_filter(traj.samples[0], np.diag(cfg.p0_diag), 0.0)
    n = n_ticks + 1
    times = np.empty(n)
    est = np.empty((n, sc.STATE_DIM))
    cov_diag = np.empty((n, sc.STATE_DIM))
    pos_cov = np.empty((n, 3, 3))
    records: list[MeasurementRecord] = []

    ei = 0
    for k in range(n):
        tk = k / fr
        while ei < len(events) and events[ei][0] <= tk + _TIME_EPS:
            te, _, s = events[ei]
            ei += 1
            te = min(te, tk)
            fs = ekf.predict_to(fs, te, cfg.q)
            truth = traj.samples[k] if te == tk else traj.state_at(te)
            z = devices[s].sample(truth, te, cfg.period[s])
            fs, ok = ekf.correct(fs, z, cfg.gate)
            records.append(MeasurementRecord(te, z.sensor_id, tuple(z.values.tolist()), ok))
        fs = ekf.predict_to(fs, tk, cfg.q)
        times[k] = tk
        est[k] = fs.x
        cov_diag[k] = np.diag(fs.P)
        pos_cov[k] = fs.P[:3, :3]
    return RunLog(times, traj.samples.copy(), est, cov_diag, pos_cov, records, cfg.name)
