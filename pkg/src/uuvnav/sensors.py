"""Simulated IMU, DVL, pressure, USBL and surface position sensors.

Every sampler draws from an explicit ``numpy.random.Generator`` so a fixed
seed and call order reproduce the stream bit for bit.  Each sampler
returns a :class:`~uuvnav.ekf.Measurement` whose ``R`` is the configured
noise variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import state as sc
from .ekf import Measurement

# R floor so zero-noise sensors still give a positive definite covariance
MIN_VARIANCE = 1e-12

IMU_MASK = (3, 4, 5, 9, 10, 11, 12, 13, 14)
DVL_MASK = (6, 7, 8)
PRESSURE_MASK = (2,)
POSITION_MASK = (0, 1, 2)


def _var(sigma: float) -> float:
    return max(sigma * sigma, MIN_VARIANCE)


def _check_nonneg(obj, names=None):
    for f in fields(obj):
        if names is not None and f.name not in names:
            continue
        v = getattr(obj, f.name)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{type(obj).__name__}.{f.name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ImuParams:
    gyro_noise_density: float = 3.394e-4       # rad/s/sqrt(Hz)
    gyro_random_walk: float = 3.8785e-5        # rad/s^2/sqrt(Hz)
    gyro_bias_corr_time: float = 1000.0        # s
    gyro_turn_on_bias_sigma: float = 0.0087    # rad/s
    accel_noise_density: float = 0.004         # m/s^2/sqrt(Hz)
    accel_random_walk: float = 0.006           # m/s^3/sqrt(Hz)
    accel_bias_corr_time: float = 300.0        # s
    accel_turn_on_bias_sigma: float = 0.1960   # m/s^2
    # not part of the IMU table; absolute attitude from the 9-dof fusion
    orientation_noise_sigma: float = 0.005     # rad

    def __post_init__(self):
        _check_nonneg(self)
        if not (self.gyro_bias_corr_time > 0 and self.accel_bias_corr_time > 0):
            raise ValueError("bias correlation times must be > 0")


@dataclass(frozen=True)
class DvlParams:
    noise_sigma: float = 0.05   # m/s
    noise_amplitude: float = 2.0  # stored, not used

    def __post_init__(self):
        _check_nonneg(self, {"noise_sigma"})


@dataclass(frozen=True)
class PressureParams:
    noise_sigma: float = 3.0            # kPa
    noise_amplitude: float = 0.0        # stored, not used
    standard_pressure: float = 101.325  # kPa
    kpa_per_m: float = 9.80638

    def __post_init__(self):
        _check_nonneg(self, {"noise_sigma", "standard_pressure"})
        if not self.kpa_per_m > 0:
            raise ValueError("PressureParams.kpa_per_m must be > 0")


@dataclass(frozen=True)
class UsblParams:
    noise_sigma: float = 0.5        # m
    stuck_probability: float = 0.05
    stuck_duration: float = 10.0    # s

    def __post_init__(self):
        _check_nonneg(self)
        if self.stuck_probability > 1:
            raise ValueError("UsblParams.stuck_probability must be in [0, 1]")


@dataclass(frozen=True)
class SurfaceFixParams:
    noise_sigma: float = 0.05  # m
    period: float = 1.0        # s

    def __post_init__(self):
        _check_nonneg(self, {"noise_sigma"})
        if not self.period > 0:
            raise ValueError("SurfaceFixParams.period must be > 0")


@dataclass(frozen=True)
class BiasState:
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class StuckState:
    stuck_until: float | None = None
    held_value: np.ndarray | None = None

    def __post_init__(self):
        if (self.stuck_until is None) != (self.held_value is None):
            raise ValueError("held_value must be present iff stuck_until is")

    def is_stuck(self, t: float) -> bool:
        return self.stuck_until is not None and t < self.stuck_until


# -- IMU ---------------------------------------------------------------------

def init_bias(p: ImuParams, rng: np.random.Generator) -> BiasState:
    gyro = rng.normal(0.0, 1.0, 3) * p.gyro_turn_on_bias_sigma
    accel = rng.normal(0.0, 1.0, 3) * p.accel_turn_on_bias_sigma
    return BiasState(gyro, accel)


def step_bias(b: BiasState, p: ImuParams, dt: float,
              rng: np.random.Generator) -> BiasState:
    """First-order Gauss-Markov step of both bias processes."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    sq = math.sqrt(dt)
    # shape-generic so ensembles of bias processes can be stepped together
    gyro = (math.exp(-dt / p.gyro_bias_corr_time) * b.gyro_bias
            + rng.normal(0.0, 1.0, np.shape(b.gyro_bias)) * (p.gyro_random_walk * sq))
    accel = (math.exp(-dt / p.accel_bias_corr_time) * b.accel_bias
             + rng.normal(0.0, 1.0, np.shape(b.accel_bias)) * (p.accel_random_walk * sq))
    return BiasState(gyro, accel)


def sample_imu(truth: np.ndarray, b: BiasState, p: ImuParams, dt: float,
               rng: np.random.Generator, t: float = 0.0) -> Measurement:
    """Orientation, body rates and body acceleration in one measurement.

    White noise densities are converted to per-sample sigmas as
    ``density / sqrt(dt)``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    sq = math.sqrt(dt)
    s_ori = p.orientation_noise_sigma
    s_gyro = p.gyro_noise_density / sq
    s_acc = p.accel_noise_density / sq
    n = rng.normal(0.0, 1.0, 9)
    ori = sc.wrap_angles(truth[sc.ORI] + n[0:3] * s_ori)
    gyro = truth[sc.ANG_VEL] + b.gyro_bias + n[3:6] * s_gyro
    acc = truth[sc.ACC] + b.accel_bias + n[6:9] * s_acc
    var = [_var(s_ori)] * 3 + [_var(s_gyro)] * 3 + [_var(s_acc)] * 3
    return Measurement(t, "imu", np.concatenate([ori, gyro, acc]), np.diag(var),
                       IMU_MASK, (True,) * 3 + (False,) * 6)


# -- DVL ---------------------------------------------------------------------

def sample_dvl(truth: np.ndarray, p: DvlParams, rng: np.random.Generator,
               t: float = 0.0) -> Measurement:
    v = truth[sc.VEL] + rng.normal(0.0, 1.0, 3) * p.noise_sigma
    return Measurement(t, "dvl", v, np.eye(3) * _var(p.noise_sigma), DVL_MASK)


# -- pressure ----------------------------------------------------------------

def pressure_from_depth(depth, p: PressureParams = PressureParams()):
    return p.standard_pressure + p.kpa_per_m * depth


def depth_from_pressure(pressure, p: PressureParams = PressureParams()):
    return (pressure - p.standard_pressure) / p.kpa_per_m


def sample_pressure(truth: np.ndarray, p: PressureParams,
                    rng: np.random.Generator, t: float = 0.0) -> Measurement:
    """Noisy absolute pressure converted to a z (= -depth) observation."""
    depth = -truth[2]
    kpa = pressure_from_depth(depth, p) + rng.normal() * p.noise_sigma
    z = -depth_from_pressure(kpa, p)
    r = _var(p.noise_sigma / p.kpa_per_m)
    return Measurement(t, "pressure", [z], [[r]], PRESSURE_MASK)


# -- USBL --------------------------------------------------------------------

def sample_usbl(truth: np.ndarray, st: StuckState, p: UsblParams, t: float,
                rng: np.random.Generator) -> tuple[Measurement, StuckState]:
    """Noisy position fix that may latch onto one value for a while.

    While stuck the held value is repeated; otherwise a fresh fix is drawn
    and, with ``stuck_probability``, held until ``t + stuck_duration``.
    """
    r = np.eye(3) * _var(p.noise_sigma)
    if st.is_stuck(t):
        return Measurement(t, "usbl", st.held_value.copy(), r, POSITION_MASK), st
    value = truth[sc.POS] + rng.normal(0.0, 1.0, 3) * p.noise_sigma
    if rng.random() < p.stuck_probability:
        st = StuckState(t + p.stuck_duration, value.copy())
    else:
        st = StuckState()
    return Measurement(t, "usbl", value, r, POSITION_MASK), st


# -- surface fix -------------------------------------------------------------

def sample_surface_fix(truth: np.ndarray, p: SurfaceFixParams,
                       rng: np.random.Generator, t: float = 0.0) -> Measurement:
    pos = truth[sc.POS] + rng.normal(0.0, 1.0, 3) * p.noise_sigma
    return Measurement(t, "surface_fix", pos, np.eye(3) * _var(p.noise_sigma),
                       POSITION_MASK)


# -- stateful wrappers used by the scenario loop -------------------------------

class Imu:
    """IMU that owns its generator and bias state."""

    def __init__(self, params: ImuParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self.bias = init_bias(params, rng)
        self._last_t: float | None = None

    def sample(self, truth, t, dt):
        if self._last_t is not None:
            self.bias = step_bias(self.bias, self.params, t - self._last_t, self.rng)
        self._last_t = t
        return sample_imu(truth, self.bias, self.params, dt, self.rng, t)


class Dvl:
    def __init__(self, params: DvlParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def sample(self, truth, t, dt):
        return sample_dvl(truth, self.params, self.rng, t)


class PressureSensor:
    def __init__(self, params: PressureParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def sample(self, truth, t, dt):
        return sample_pressure(truth, self.params, self.rng, t)


class Usbl:
    def __init__(self, params: UsblParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self.stuck = StuckState()

    def sample(self, truth, t, dt):
        z, self.stuck = sample_usbl(truth, self.stuck, self.params, t, self.rng)
        return z


class SurfaceFix:
    def __init__(self, params: SurfaceFixParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def sample(self, truth, t, dt):
        return sample_surface_fix(truth, self.params, self.rng, t)
