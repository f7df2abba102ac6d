"""YAML scenario files.

Sensor sections use the IMU/DVL/pressure parameter names exactly as they
appear in the sensor parameter table (``"Gyroscope noise density"``,
``"kPaPerM"``, ...).  Unknown keys are errors, and every error names the
offending ``section.key``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable

import yaml

from . import ekf
from . import sensors as sn
from . import state as sc
from .sim import ScenarioConfig, Sensor, SensorRates, SensorSuite, TrajectorySpec


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    seeds: tuple = (0,)


# -- value checks --------------------------------------------------------------

def _num(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {v!r}")
    return v


def _nonneg(v):
    v = _num(v)
    if v < 0:
        raise ValueError(f"must be >= 0, got {v}")
    return v


def _pos(v):
    v = _num(v)
    if v <= 0:
        raise ValueError(f"must be > 0, got {v}")
    return v


def _prob(v):
    v = _nonneg(v)
    if v > 1:
        raise ValueError(f"must be in [0, 1], got {v}")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true/false, got {v!r}")
    return v


def _diag15(v):
    if not isinstance(v, (list, tuple)) or len(v) != sc.STATE_DIM:
        raise ValueError(f"expected a list of {sc.STATE_DIM} numbers")
    return tuple(_nonneg(x) for x in v)


def _pair(v):
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ValueError("expected [x, y]")
    return tuple(_num(x) for x in v)


def _seeds(v):
    if isinstance(v, int) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, (list, tuple)) or not v:
        raise ValueError("expected a non-empty list of integers")
    out = []
    for s in v:
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            raise ValueError(f"seeds must be non-negative integers, got {s!r}")
        out.append(s)
    return tuple(out)


def _opt_pos(v):
    return None if v is None else _pos(v)


def _str(v):
    if not isinstance(v, str) or not v:
        raise ValueError("expected a non-empty string")
    return v


def _sensor_ids(v):
    if v is None:
        return None
    if not isinstance(v, (list, tuple)):
        raise ValueError("expected a list of sensor ids or null")
    return tuple(_str(x) for x in v)


# section -> {file key: (attribute path, checker)}
Spec = dict[str, tuple[str, Callable[[Any], Any]]]

SCHEMA: dict[str, Spec] = {
    "trajectory": {
        "width": ("width", _pos),
        "height": ("height", _pos),
        "speed": ("speed", _pos),
        "depth": ("depth", _num),
        "origin": ("origin", _pair),
        "accel": ("accel", _pos),
        "yaw_rate": ("yaw_rate", _pos),
    },
    "filter": {
        "rate": ("filter_rate", _pos),
        "process_noise": ("q", _diag15),
        "initial_covariance": ("p0_diag", _diag15),
        "gating": ("gate.enabled", _bool),
        "gate_threshold": ("gate.threshold", _pos),
        "gate_sensors": ("gate.sensors", _sensor_ids),
    },
    "imu": {
        "enabled": ("enabled", _bool),
        "rate": ("rate", _pos),
        "Gyroscope noise density": ("gyro_noise_density", _nonneg),
        "Gyroscope random walk": ("gyro_random_walk", _nonneg),
        "Gyroscope bias correlation time": ("gyro_bias_corr_time", _pos),
        "Gyroscope turn on bias sigma": ("gyro_turn_on_bias_sigma", _nonneg),
        "Accelerometer noise density": ("accel_noise_density", _nonneg),
        "Accelerometer random walk": ("accel_random_walk", _nonneg),
        "Accelerometer bias correlation time": ("accel_bias_corr_time", _pos),
        "Accelerometer turn on bias sigma": ("accel_turn_on_bias_sigma", _nonneg),
        "Orientation noise sigma": ("orientation_noise_sigma", _nonneg),
    },
    "dvl": {
        "enabled": ("enabled", _bool),
        "rate": ("rate", _pos),
        "Noise sigma": ("noise_sigma", _nonneg),
        "Noise amplitude": ("noise_amplitude", _num),
    },
    "pressure": {
        "enabled": ("enabled", _bool),
        "rate": ("rate", _pos),
        "Noise sigma": ("noise_sigma", _nonneg),
        "Noise amplitude": ("noise_amplitude", _num),
        "Standard pressure": ("standard_pressure", _nonneg),
        "kPaPerM": ("kpa_per_m", _pos),
    },
    "usbl": {
        "enabled": ("enabled", _bool),
        "rate": ("rate", _pos),
        "Noise sigma": ("noise_sigma", _nonneg),
        "Stuck probability": ("stuck_probability", _prob),
        "Stuck duration": ("stuck_duration", _nonneg),
    },
    "surface_fix": {
        "enabled": ("enabled", _bool),
        "Noise sigma": ("noise_sigma", _nonneg),
    },
    "experiment": {
        "name": ("name", _str),
        "seeds": ("seeds", _seeds),
        "duration": ("duration", _pos),
        "surface_period": ("surface_period", _opt_pos),
    },
}

_SENSOR_SECTIONS = {
    "imu": Sensor.IMU, "dvl": Sensor.DVL, "pressure": Sensor.PRESSURE,
    "usbl": Sensor.USBL, "surface_fix": Sensor.SURFACE_FIX,
}


def _checked(raw: dict) -> dict[str, dict[str, Any]]:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping of sections")
    out: dict[str, dict[str, Any]] = {}
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigError(str(section), "unknown section")
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ConfigError(section, "section must be a mapping")
        out[section] = {}
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            attr, check = SCHEMA[section][key]
            try:
                out[section][attr] = check(value)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}", str(exc)) from None
    return out


def _key_for(section: str, attr: str) -> str:
    for key, (a, _) in SCHEMA[section].items():
        if a == attr:
            return f"{section}.{key}"
    return section


def experiment_from_dict(raw: dict) -> ExperimentConfig:
    """Build a validated experiment; missing keys take the library defaults."""
    c = _checked(raw)
    sec = lambda name: c.get(name, {})

    enabled = {Sensor.IMU, Sensor.PRESSURE}
    params = {}
    rates = {}
    defaults = SensorSuite()
    for section, sensor in _SENSOR_SECTIONS.items():
        body = dict(sec(section))
        on = body.pop("enabled", sensor in enabled)
        if on:
            enabled.add(sensor)
        else:
            enabled.discard(sensor)
        if "rate" in body:
            rates[section] = body.pop("rate")
        try:
            params[section] = replace(getattr(defaults, section), **body)
        except ValueError as exc:
            raise ConfigError(section, str(exc)) from None

    exp = dict(sec("experiment"))
    seeds = exp.pop("seeds", (0,))
    filt = dict(sec("filter"))
    gate_kw = {k.split(".", 1)[1]: filt.pop(k) for k in list(filt) if k.startswith("gate.")}
    if "q" in filt:
        filt["q"] = ekf.ProcessNoise(filt["q"])
    try:
        traj = replace(TrajectorySpec(), **sec("trajectory"))
    except ValueError as exc:
        raise ConfigError("trajectory", str(exc)) from None
    try:
        scenario = ScenarioConfig(
            sensors=frozenset(enabled),
            params=SensorSuite(**params),
            rates=replace(SensorRates(), **rates),
            trajectory=traj,
            gate=replace(ekf.GateConfig(), **gate_kw),
            seed=seeds[0],
            **filt,
            **exp,
        )
    except ValueError as exc:
        msg = str(exc)
        key = "experiment.surface_period" if "surface_period" in msg else "config"
        for section in ("imu", "dvl", "pressure", "usbl"):
            if msg.startswith(f"{section}.rate"):
                key = f"{section}.rate"
        if msg.startswith("filter_rate"):
            key = "filter.rate"
        raise ConfigError(key, msg) from None
    return ExperimentConfig(scenario, seeds)


def experiment_to_dict(exp: ExperimentConfig) -> dict:
    """Inverse of :func:`experiment_from_dict` (every key written out)."""
    s = exp.scenario
    out: dict[str, dict] = {}

    def put(section, attr, value):
        out.setdefault(section, {})[_key_for(section, attr).split(".", 1)[1]] = value

    for attr in ("width", "height", "speed", "depth", "accel", "yaw_rate"):
        put("trajectory", attr, float(getattr(s.trajectory, attr)))
    put("trajectory", "origin", [float(v) for v in s.trajectory.origin])
    put("filter", "filter_rate", float(s.filter_rate))
    put("filter", "q", [float(v) for v in s.q.diag])
    put("filter", "p0_diag", [float(v) for v in s.p0_diag])
    put("filter", "gate.enabled", bool(s.gate.enabled))
    put("filter", "gate.threshold", float(s.gate.threshold))
    put("filter", "gate.sensors", None if s.gate.sensors is None else list(s.gate.sensors))
    for section, sensor in _SENSOR_SECTIONS.items():
        put(section, "enabled", sensor in s.sensors)
        if section != "surface_fix":
            put(section, "rate", float(getattr(s.rates, section)))
        p = getattr(s.params, section)
        for key, (attr, _) in SCHEMA[section].items():
            if attr not in ("enabled", "rate"):
                out[section][key] = float(getattr(p, attr))
    put("experiment", "name", s.name)
    put("experiment", "seeds", [int(v) for v in exp.seeds])
    put("experiment", "duration", float(s.duration))
    put("experiment", "surface_period",
        None if s.surface_period is None else float(s.surface_period))
    return out


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` strings (value parsed as YAML)."""
    raw = {k: dict(v or {}) for k, v in (raw or {}).items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        path, text = item.split("=", 1)
        if "." not in path:
            raise ConfigError(path, "override key must be section.key")
        section, key = path.split(".", 1)
        section, key = section.strip(), key.strip()
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        if key not in SCHEMA[section]:
            raise ConfigError(f"{section}.{key}", "unknown key")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{section}.{key}", f"cannot parse value: {exc}") from None
        raw.setdefault(section, {})[key] = value
    return raw


def load_raw(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(str(path), "config must be a mapping of sections")
    return data


def load_experiment(path: str | Path | None, overrides: list[str] = ()) -> ExperimentConfig:
    raw = load_raw(path) if path is not None else {}
    return experiment_from_dict(apply_overrides(raw, list(overrides)))


class _Dumper(yaml.SafeDumper):
    pass


_Dumper.add_representer(
    list, lambda d, v: d.represent_sequence("tag:yaml.org,2002:seq", v, flow_style=True))


def dump_experiment(exp: ExperimentConfig) -> str:
    return yaml.dump(experiment_to_dict(exp), Dumper=_Dumper, sort_keys=False,
                     default_flow_style=False, width=120)
