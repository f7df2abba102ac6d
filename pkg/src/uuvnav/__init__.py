"""EKF pose estimation for an underwater vehicle with simulated IMU, DVL,
USBL, pressure and surface position sensors."""

from .ekf import (FilterState, GateConfig, Measurement, ProcessNoise, correct,
                  init_filter, linear_kf_step, predict)
from .evaluation import RunMetrics, mse_per_axis, run_comparison
from .sim import ScenarioConfig, Sensor, run_scenario
from .state import angle_diff, propagate_state, rotation_from_euler, transition_jacobian

__all__ = [
    "FilterState", "GateConfig", "Measurement", "ProcessNoise", "correct",
    "init_filter", "linear_kf_step", "predict", "RunMetrics", "mse_per_axis",
    "run_comparison", "ScenarioConfig", "Sensor", "run_scenario", "angle_diff",
    "propagate_state", "rotation_from_euler", "transition_jacobian",
]
