"""Linear and extended Kalman filtering over the 15-state model.

Measurements observe a subset of state fields directly (``H`` is a row
selection of the identity).  Innovations on orientation fields use the
shortest-arc difference, so a yaw of -3.1 observed against a prior of 3.1
pulls the estimate across the wrap instead of around the circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import state as sc

# Default process noise diagonal, applied as Q * dt per predict step.
DEFAULT_Q_DIAG = (
    1e-3, 1e-3, 1e-3,
    0.3, 0.3, 0.3,
    0.5, 0.5, 0.1,
    0.3, 0.3, 0.3,
    0.3, 0.3, 0.3,
)

DEFAULT_P0_DIAG = (1e-9,) * sc.STATE_DIM

# chi-square, 3 dof, ~0.997
DEFAULT_GATE_THRESHOLD = 13.8

_SYM_TOL = 1e-9
_PSD_TOL = 1e-9


class FilterError(RuntimeError):
    pass


class LateMeasurementError(FilterError):
    """A measurement is older than the filter time."""


class SingularInnovationError(FilterError):
    """The innovation covariance ``H P H^T + R`` cannot be inverted."""


class MotionModel(Protocol):
    angle_indices: Sequence[int]

    def propagate(self, x: np.ndarray, dt: float) -> np.ndarray: ...

    def jacobian(self, x: np.ndarray, dt: float) -> np.ndarray: ...


class RigidBodyModel:
    """The kinematic model from :mod:`uuvnav.state`."""

    angle_indices = sc.ANGLE_INDICES

    def propagate(self, x, dt):
        return sc.propagate_state(x, dt)

    def jacobian(self, x, dt):
        return sc.transition_jacobian(x, dt)


class LinearModel:
    """``x_{k+1} = A x_k`` with a constant ``A``; no angle wrapping.

    Used to check the EKF equations against the textbook linear filter.
    """

    angle_indices: Sequence[int] = ()

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)

    def propagate(self, x, dt):
        return self.a @ x

    def jacobian(self, x, dt):
        return self.a


RIGID_BODY = RigidBodyModel()


@dataclass(frozen=True)
class ProcessNoise:
    diag: tuple = DEFAULT_Q_DIAG

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.ndim != 1 or np.any(~np.isfinite(d)) or np.any(d < 0):
            raise ValueError("process noise diagonal must be finite and >= 0")
        object.__setattr__(self, "diag", tuple(float(v) for v in d))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True)
class GateConfig:
    """Mahalanobis outlier gate.

    Only measurements whose ``sensor_id`` is in ``sensors`` are tested;
    ``sensors=None`` gates every measurement.
    """
    enabled: bool = False
    threshold: float = DEFAULT_GATE_THRESHOLD
    sensors: tuple | None = ("usbl",)

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("gate threshold must be > 0")
        if self.sensors is not None:
            object.__setattr__(self, "sensors", tuple(str(v) for v in self.sensors))

    def applies_to(self, sensor_id: str) -> bool:
        return self.enabled and (self.sensors is None or sensor_id in self.sensors)


@dataclass(frozen=True, eq=False)
class Measurement:
    """A direct observation of ``len(mask)`` state fields.

    ``angular`` flags components that are angles (wrapped innovations).
    """
    time: float
    sensor_id: str
    values: np.ndarray
    covariance: np.ndarray
    mask: tuple
    angular: tuple = field(default=())

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        mask = tuple(int(i) for i in self.mask)
        m = len(mask)
        angular = tuple(bool(f) for f in self.angular) or (False,) * m
        if values.shape != (m,) or cov.shape != (m, m) or len(angular) != m:
            raise ValueError(f"{self.sensor_id}: inconsistent measurement dimensions")
        if len(set(mask)) != m or any(i < 0 or i >= sc.STATE_DIM for i in mask):
            raise ValueError(f"{self.sensor_id}: mask indices must be unique and in [0, 14]")
        if np.abs(cov - cov.T).max() > _SYM_TOL:
            raise ValueError(f"{self.sensor_id}: covariance is not symmetric")
        d = np.diagonal(cov)
        if not np.all(d > 0) or (np.count_nonzero(cov) > m
                                 and np.linalg.eigvalsh(cov).min() <= 0):
            raise ValueError(f"{self.sensor_id}: covariance is not positive definite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "angular", angular)

    def selection_matrix(self) -> np.ndarray:
        h = np.zeros((len(self.mask), sc.STATE_DIM))
        h[np.arange(len(self.mask)), self.mask] = 1.0
        return h


@dataclass(frozen=True, eq=False)
class FilterState:
    x: np.ndarray
    P: np.ndarray
    t: float

    @property
    def estimate(self) -> np.ndarray:
        return self.x

    @property
    def covariance(self) -> np.ndarray:
        return self.P


def _symmetrize(p):
    return 0.5 * (p + p.T)


def init_filter(x0, p0, t0: float = 0.0) -> FilterState:
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    n = x.shape[0]
    if p.shape != (n, n):
        raise ValueError(f"P0 must be {n}x{n}, got {p.shape}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(p)):
        raise ValueError("x0 and P0 must be finite")
    if np.max(np.abs(p - p.T), initial=0.0) > _SYM_TOL:
        raise ValueError("P0 is not symmetric")
    if np.linalg.eigvalsh(p).min() < -_PSD_TOL:
        raise ValueError("P0 is not positive semi-definite")
    if n == sc.STATE_DIM:
        sc.normalize_state(x)
    return FilterState(x, p, float(t0))


def predict(fs: FilterState, dt: float, q: ProcessNoise | np.ndarray,
            model: MotionModel = RIGID_BODY) -> FilterState:
    """Time update: ``x <- f(x)``, ``P <- A P A^T + Q dt``."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return fs
    qm = q.matrix if isinstance(q, ProcessNoise) else np.asarray(q, dtype=float)
    a = model.jacobian(fs.x, dt)
    x = model.propagate(fs.x, dt)
    p = _symmetrize(a @ fs.P @ a.T + qm * dt)
    return FilterState(x, p, fs.t + dt)


def predict_to(fs: FilterState, t: float, q, model: MotionModel = RIGID_BODY
               ) -> FilterState:
    """Predict up to absolute time ``t`` (pinned exactly, no float drift)."""
    if t < fs.t:
        raise LateMeasurementError(f"cannot predict backwards from {fs.t} to {t}")
    out = predict(fs, t - fs.t, q, model)
    return FilterState(out.x, out.P, float(t))


def innovation(fs: FilterState, z: Measurement) -> np.ndarray:
    nu = z.values - fs.x[list(z.mask)]
    for k, is_angle in enumerate(z.angular):
        if is_angle:
            nu[k] = sc.wrap_angle(nu[k])
    return nu


def correct(fs: FilterState, z: Measurement, gate: GateConfig = GateConfig(),
            angle_indices: Sequence[int] = sc.ANGLE_INDICES
            ) -> tuple[FilterState, bool]:
    """Measurement update.  Returns the new state and whether ``z`` was used.

    A gated-out measurement leaves the state untouched.
    """
    if z.time < fs.t:
        raise LateMeasurementError(
            f"{z.sensor_id} measurement at t={z.time} is older than filter time {fs.t}")
    idx = list(z.mask)
    nu = innovation(fs, z)
    # H P H^T and P H^T are row/column selections of P
    pht = fs.P[:, idx]
    s = pht[idx, :] + z.covariance
    try:
        sol = np.linalg.solve(s, np.column_stack([nu, pht.T]))
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationError(
            f"{z.sensor_id}: innovation covariance is singular") from exc
    s_inv_nu, gain = sol[:, 0], sol[:, 1:].T
    if gate.applies_to(z.sensor_id) and float(nu @ s_inv_nu) > gate.threshold:
        return fs, False
    x = fs.x + gain @ nu
    for i in angle_indices:
        x[i] = sc.wrap_angle(x[i])
    # (I - K H) P; K H only touches the masked columns
    p = fs.P - gain @ fs.P[idx, :]
    p = _symmetrize(p)
    return FilterState(x, p, fs.t), True


def mahalanobis2(fs: FilterState, z: Measurement) -> float:
    nu = innovation(fs, z)
    idx = list(z.mask)
    s = fs.P[np.ix_(idx, idx)] + z.covariance
    return float(nu @ np.linalg.solve(s, nu))


def linear_kf_step(x, p, a, b, u, q, y, h, r):
    """One textbook Kalman predict + correct (``B u`` included)."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    h = np.atleast_2d(np.asarray(h, dtype=float))
    r = np.atleast_2d(np.asarray(r, dtype=float))
    x_pred = a @ x
    if b is not None and u is not None:
        x_pred = x_pred + np.asarray(b, dtype=float) @ np.asarray(u, dtype=float)
    p_pred = a @ p @ a.T + q
    s = h @ p_pred @ h.T + r
    try:
        k = np.linalg.solve(s.T, (p_pred @ h.T).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovationError("innovation covariance is singular") from exc
    x_new = x_pred + k @ (np.atleast_1d(y) - h @ x_pred)
    p_new = (np.eye(len(x)) - k @ h) @ p_pred
    return x_new, p_new
