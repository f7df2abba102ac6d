"""Canned scenario sets matching the three MSE comparison tables."""
from __future__ import annotations

from dataclasses import replace

from .sim import ScenarioConfig, Sensor

S = Sensor

TABLES = ("T2", "T3", "T4")

TITLES = {
    "T2": "MSE for underwater-only pose estimation",
    "T3": "MSE for IMU+USBL with surface position measurements",
    "T4": "MSE for IMU with surface position measurements",
}

UNDERWATER = {
    "IMU": {S.IMU, S.PRESSURE},
    "IMU+USBL": {S.IMU, S.PRESSURE, S.USBL},
    "IMU+DVL": {S.IMU, S.PRESSURE, S.DVL},
    "IMU+DVL+USBL": {S.IMU, S.PRESSURE, S.DVL, S.USBL},
}


def _with(base: ScenarioConfig, name: str, sensors, period=None) -> ScenarioConfig:
    return replace(base, name=name, sensors=frozenset(sensors), surface_period=period)


def table_configs(table: str, base: ScenarioConfig | None = None) -> list[ScenarioConfig]:
    """Scenario rows for ``table`` ("T2", "T3" or "T4"), derived from ``base``.

    Only the sensor set and surface period are changed; trajectory, noise
    parameters, rates and filter settings come from ``base``.
    """
    base = base or ScenarioConfig()
    table = table.upper()
    if table == "T2":
        return [_with(base, name, sensors) for name, sensors in UNDERWATER.items()]
    if table == "T3":
        usbl = UNDERWATER["IMU+USBL"]
        rows = [_with(base, "no feedback", usbl)]
        rows += [_with(base, f"{p} sec", usbl | {S.SURFACE_FIX}, float(p)) for p in (1, 5, 10)]
        return rows
    if table == "T4":
        imu = UNDERWATER["IMU"]
        return [_with(base, "IMU only", imu),
                _with(base, "30 sec", imu | {S.SURFACE_FIX}, 30.0)]
    raise ValueError(f"unknown table {table!r}; expected one of {', '.join(TABLES)}")


def table_axes(table: str) -> tuple:
    # surface fixes carry no attitude information, so those tables omit angles
    return ("x", "y", "z", "roll", "pitch", "yaw") if table.upper() == "T2" else ("x", "y", "z")
