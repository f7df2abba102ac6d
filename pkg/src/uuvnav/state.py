"""15-state rigid-body kinematics.

State layout (float64, length 15)::

    [x y z | roll pitch yaw | vx vy vz | wx wy wz | ax ay az]

Position is in the world frame (z up, depth = -z).  Velocity, angular
velocity and acceleration are expressed in the body frame.  Orientation is
intrinsic Z-Y-X Euler, so ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)`` maps body
vectors to the world frame.
"""
from __future__ import annotations

import math

import numpy as np

STATE_DIM = 15

POS = slice(0, 3)
ORI = slice(3, 6)
VEL = slice(6, 9)
ANG_VEL = slice(9, 12)
ACC = slice(12, 15)

ANGLE_INDICES = (3, 4, 5)

FIELD_NAMES = (
    "x", "y", "z",
    "roll", "pitch", "yaw",
    "vx", "vy", "vz",
    "wx", "wy", "wz",
    "ax", "ay", "az",
)

# |pitch| closer than this to pi/2 makes the Euler-rate transform singular
GIMBAL_TOL = 1e-6

_TWO_PI = 2.0 * math.pi


class GimbalLockError(ValueError):
    """Pitch is too close to +-pi/2 for the Euler-rate transform."""


def wrap_angle(a: float) -> float:
    """Wrap a single angle into (-pi, pi]."""
    d = math.remainder(a, _TWO_PI)
    if d <= -math.pi:
        d += _TWO_PI
    return d


def wrap_angles(a):
    """Vectorised :func:`wrap_angle` for arrays of any shape."""
    a = np.asarray(a, dtype=float)
    # in-range inputs come back bit-identical (round() gives 0)
    d = a - _TWO_PI * np.round(a / _TWO_PI)
    d = np.where(d <= -np.pi, d + _TWO_PI, d)
    return np.where(d > np.pi, d - _TWO_PI, d)


def angle_diff(a: float, b: float) -> float:
    """Signed shortest-arc difference ``a - b`` in (-pi, pi]."""
    return wrap_angle(a - b)


def zero_state() -> np.ndarray:
    return np.zeros(STATE_DIM)


def make_state(position=(0.0, 0.0, 0.0), orientation=(0.0, 0.0, 0.0),
               velocity=(0.0, 0.0, 0.0), angular_velocity=(0.0, 0.0, 0.0),
               acceleration=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Assemble a state vector from its named blocks (angles are wrapped)."""
    s = np.concatenate([position, orientation, velocity,
                        angular_velocity, acceleration]).astype(float)
    if s.shape != (STATE_DIM,):
        raise ValueError(f"expected 15 state entries, got {s.shape}")
    normalize_state(s)
    return s


def normalize_state(s: np.ndarray) -> np.ndarray:
    """Wrap the orientation block of ``s`` in place and return it."""
    for i in ANGLE_INDICES:
        s[i] = wrap_angle(s[i])
    return s


def _elementary(roll, pitch, yaw):
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return rx, ry, rz


def rotation_from_euler(rpy) -> np.ndarray:
    """Body-to-world rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    roll, pitch, yaw = (float(v) for v in rpy)
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def _check_pitch(pitch: float) -> None:
    if abs(abs(pitch) - math.pi / 2) < GIMBAL_TOL:
        raise GimbalLockError(
            f"pitch {pitch!r} is within {GIMBAL_TOL} of +-pi/2; "
            "Euler-rate transform is singular")


def euler_rate_matrix(roll: float, pitch: float) -> np.ndarray:
    """Matrix mapping body angular velocity to Euler-angle rates."""
    _check_pitch(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    cp, tp = math.cos(pitch), math.tan(pitch)
    return np.array([
        [1.0, sr * tp, cr * tp],
        [0.0, cr, -sr],
        [0.0, sr / cp, cr / cp],
    ])


def propagate_state(s: np.ndarray, dt: float) -> np.ndarray:
    """Advance ``s`` by ``dt`` seconds under the constant-acceleration,
    constant-rate kinematic model (one explicit Euler step, with the exact
    second-order position term)."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    s = np.asarray(s, dtype=float)
    out = s.copy()
    roll, pitch, yaw = s[ORI]
    t = euler_rate_matrix(roll, pitch)
    if dt == 0:
        return normalize_state(out)
    r = rotation_from_euler(s[ORI])
    disp = s[VEL] * dt + 0.5 * s[ACC] * dt * dt
    out[POS] = s[POS] + r @ disp
    out[ORI] = s[ORI] + (t @ s[ANG_VEL]) * dt
    out[VEL] = s[VEL] + s[ACC] * dt
    return normalize_state(out)


def transition_jacobian(s: np.ndarray, dt: float) -> np.ndarray:
    """Analytic Jacobian of :func:`propagate_state` with respect to the state."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    s = np.asarray(s, dtype=float)
    roll, pitch, yaw = s[ORI]
    _check_pitch(pitch)
    a = np.eye(STATE_DIM)
    if dt == 0:
        return a

    rx, ry, rz = _elementary(roll, pitch, yaw)
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    drx = np.array([[0.0, 0.0, 0.0], [0.0, -sr, -cr], [0.0, cr, -sr]])
    dry = np.array([[-sp, 0.0, cp], [0.0, 0.0, 0.0], [-cp, 0.0, -sp]])
    drz = np.array([[-sy, -cy, 0.0], [cy, -sy, 0.0], [0.0, 0.0, 0.0]])

    r = rz @ ry @ rx
    disp = s[VEL] * dt + 0.5 * s[ACC] * dt * dt
    a[POS, 3] = rz @ ry @ drx @ disp
    a[POS, 4] = rz @ dry @ rx @ disp
    a[POS, 5] = drz @ ry @ rx @ disp
    a[POS, VEL] = r * dt
    a[POS, ACC] = r * (0.5 * dt * dt)

    _, q, w = s[ANG_VEL]
    tp = sp / cp
    sec2 = 1.0 / (cp * cp)
    qc_rs = q * cr - w * sr
    qs_rc = q * sr + w * cr
    # d(T @ omega)/d(roll), d(T @ omega)/d(pitch)
    a[ORI, 3] += dt * np.array([qc_rs * tp, -qs_rc, qc_rs / cp])
    a[ORI, 4] += dt * np.array([qs_rc * sec2, 0.0, qs_rc * sp * sec2])
    a[ORI, ANG_VEL] = euler_rate_matrix(roll, pitch) * dt

    a[VEL, ACC] = np.eye(3) * dt
    return a
