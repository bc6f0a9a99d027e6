"""6-DOF serial arm kinematics and collaborator steering.

Standard Denavit-Hartenberg chain (one revolute joint per row), geometric
Jacobian, and a damped-least-squares resolved-rate step that pulls the
tool center point toward a standoff point near the collaborator.

Orientation convention is ZYX (yaw about z, then pitch about y, then roll
about x), each angle in (-pi, pi]. Inside the gimbal band
|pitch - pi/2| < GIMBAL_BAND the decomposition is degenerate; roll is
reported as 0 and yaw absorbs the remaining rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GIMBAL_BAND = 0.01  # rad around |pitch| = pi/2 where roll/yaw mix
DEFAULT_STANDOFF_M = 0.25
COND_THRESHOLD = 1e6  # flag the step as near-singular above this
SINGULAR_STEP_SCALE = 0.1


class DegenerateInterval(Exception):
    """Raised by tcp_speed when the timestamps do not advance."""


@dataclass(frozen=True)
class DhRow:
    """One joint's link geometry: a (m), d (m), alpha (rad)."""

    a: float
    d: float
    alpha: float


@dataclass(frozen=True)
class KinematicParams:
    rows: tuple[DhRow, ...]
    limits_lo: tuple[float, ...]
    limits_hi: tuple[float, ...]
    max_joint_speed: float  # rad/s, applies to every joint
    standoff_m: float = DEFAULT_STANDOFF_M

    def validate(self) -> None:
        if len(self.rows) != 6:
            raise ValueError(f"expected 6 DH rows, got {len(self.rows)}")
        if len(self.limits_lo) != 6 or len(self.limits_hi) != 6:
            raise ValueError("joint limits must have 6 entries each")
        for i, (lo, hi) in enumerate(zip(self.limits_lo, self.limits_hi)):
            if not lo < hi:
                raise ValueError(f"joint {i} limits must satisfy lo < hi")
        if not self.max_joint_speed > 0:
            raise ValueError("max_joint_speed must be > 0")
        if not self.standoff_m >= 0:
            raise ValueError("standoff_m must be >= 0")


def default_params() -> KinematicParams:
    """Documented default geometry for a UR10-class arm.

    The rows are configuration data, not constants of the module; sessions
    may override them. Limits are +/-2pi, max speed 120 deg/s.
    """
    rows = (
        DhRow(a=0.0, d=0.1273, alpha=math.pi / 2),
        DhRow(a=-0.612, d=0.0, alpha=0.0),
        DhRow(a=-0.5723, d=0.0, alpha=0.0),
        DhRow(a=0.0, d=0.163941, alpha=math.pi / 2),
        DhRow(a=0.0, d=0.1157, alpha=-math.pi / 2),
        DhRow(a=0.0, d=0.0922, alpha=0.0),
    )
    two_pi = 2 * math.pi
    return KinematicParams(
        rows=rows,
        limits_lo=(-two_pi,) * 6,
        limits_hi=(two_pi,) * 6,
        max_joint_speed=2.0944,
    )


@dataclass(frozen=True)
class JointState:
    """Instantaneous configuration: angles (rad), velocities (rad/s), time (s)."""

    q: tuple[float, ...]
    qdot: tuple[float, ...] = (0.0,) * 6
    t: float = 0.0

    def validate(self, params: KinematicParams) -> None:
        for i in range(6):
            if not params.limits_lo[i] <= self.q[i] <= params.limits_hi[i]:
                raise ValueError(f"joint {i} angle {self.q[i]} outside limits")
            if abs(self.qdot[i]) > params.max_joint_speed * (1 + 1e-9):
                raise ValueError(f"joint {i} speed {self.qdot[i]} above max")


@dataclass(frozen=True)
class Pose:
    """Position (m) and ZYX roll/pitch/yaw (rad) in the base frame."""

    position: tuple[float, float, float]
    rpy: tuple[float, float, float]


@dataclass(frozen=True)
class CollaboratorState:
    position: tuple[float, float, float]
    t: float = 0.0

    def validate(self) -> None:
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError("collaborator position must be finite")


@dataclass(frozen=True)
class FkResult:
    links: tuple[Pose, ...]  # one pose per joint frame, 6 entries
    tcp: Pose  # equal to links[-1]


@dataclass(frozen=True)
class SteerResult:
    state: JointState
    near_singularity: bool
    condition: float


def dh_transform(row: DhRow, theta: float) -> np.ndarray:
    """Homogeneous transform Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(row.alpha), math.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def link_transforms(q, params: KinematicParams) -> list[np.ndarray]:
    """Cumulative base-frame transforms [T0=I, T1, ..., T6]."""
    ts = [np.eye(4)]
    t = np.eye(4)
    for row, theta in zip(params.rows, q):
        t = t @ dh_transform(row, theta)
        ts.append(t)
    return ts


def rpy_to_rotation(rpy) -> np.ndarray:
    roll, pitch, yaw = rpy
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    # Rz(yaw) @ Ry(pitch) @ Rx(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def _wrap_angle(a: float) -> float:
    """Wrap into (-pi, pi]."""
    a = math.fmod(a, 2 * math.pi)
    if a > math.pi:
        a -= 2 * math.pi
    elif a <= -math.pi:
        a += 2 * math.pi
    return a


def rotation_to_rpy(r: np.ndarray) -> tuple[float, float, float]:
    """ZYX Euler extraction with the documented gimbal-band convention.

    R[2,0] = -sin(pitch). Away from |pitch| ~ pi/2:
      roll = atan2(R[2,1], R[2,2]), yaw = atan2(R[1,0], R[0,0]).
    Inside the band roll := 0 and yaw absorbs the rotation about the
    collapsed axis (sign depends on the hemisphere).
    """
    sp = -float(r[2, 0])
    sp = max(-1.0, min(1.0, sp))
    pitch = math.asin(sp)
    if abs(abs(pitch) - math.pi / 2) < GIMBAL_BAND:
        # At pitch=+pi/2: R[0,1]=sin(roll-yaw), R[1,1]=cos(roll-yaw).
        # At pitch=-pi/2: R[0,1]=-sin(roll+yaw), R[1,1]=cos(roll+yaw).
        if pitch > 0:
            yaw = -math.atan2(float(r[0, 1]), float(r[1, 1]))
        else:
            yaw = math.atan2(-float(r[0, 1]), float(r[1, 1]))
        roll = 0.0
    else:
        roll = math.atan2(float(r[2, 1]), float(r[2, 2]))
        yaw = math.atan2(float(r[1, 0]), float(r[0, 0]))
    return (_wrap_angle(roll), _wrap_angle(pitch), _wrap_angle(yaw))


def _pose_from_transform(t: np.ndarray) -> Pose:
    pos = (float(t[0, 3]), float(t[1, 3]), float(t[2, 3]))
    return Pose(position=pos, rpy=rotation_to_rpy(t[:3, :3]))


def forward_kinematics(q, params: KinematicParams) -> FkResult:
    """Base-frame pose of each joint frame plus the TCP (the last frame)."""
    ts = link_transforms(q, params)
    links = tuple(_pose_from_transform(t) for t in ts[1:])
    return FkResult(links=links, tcp=links[-1])


def jacobian(q, params: KinematicParams) -> np.ndarray:
    """Geometric Jacobian, rows 0..2 linear and 3..5 angular velocity.

    Column i is [z_i x (p_tcp - p_i); z_i] with z_i, p_i taken from the
    frame *before* joint i (revolute joints about local z).
    """
    ts = link_transforms(q, params)
    p_tcp = ts[6][:3, 3]
    j = np.zeros((6, 6))
    for i in range(6):
        z = ts[i][:3, 2]
        p = ts[i][:3, 3]
        j[:3, i] = np.cross(z, p_tcp - p)
        j[3:, i] = z
    return j


def steer_towards(
    current: JointState,
    collaborator: CollaboratorState,
    gain: float,
    damping: float,
    dt: float,
    params: KinematicParams,
) -> SteerResult:
    """One damped-least-squares resolved-rate step toward the collaborator.

    The target is the collaborator position offset by the configured
    standoff distance along the collaborator->TCP direction, so the TCP
    approaches but does not touch. qdot = J^T (J J^T + damping^2 I)^-1 v
    with v = gain * (target - tcp) / dt, scaled uniformly to respect the
    joint speed limit (uniform scaling preserves the descent direction),
    then integrated and hard-clamped to the joint limits.

    A near-singular Jacobian (condition number above COND_THRESHOLD)
    scales the step down and sets the flag; it is never fatal.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not 0 < gain <= 1:
        raise ValueError("gain must be in (0, 1]")
    if damping <= 0:
        raise ValueError("damping must be > 0")

    ts = link_transforms(current.q, params)
    tcp = ts[6][:3, 3]
    collab = np.asarray(collaborator.position, dtype=float)
    away = tcp - collab
    dist = float(np.linalg.norm(away))
    direction = away / dist if dist > 1e-9 else np.array([0.0, 0.0, 1.0])
    target = collab + params.standoff_m * direction
    err = target - tcp

    jp = jacobian(current.q, params)[:3, :]
    a = jp @ jp.T + (damping**2) * np.eye(3)
    v = gain * err / dt
    qdot = jp.T @ np.linalg.solve(a, v)

    cond = float(np.linalg.cond(jp))
    near = bool(cond > COND_THRESHOLD or not math.isfinite(cond))
    if near:
        qdot = qdot * SINGULAR_STEP_SCALE

    peak = float(np.max(np.abs(qdot)))
    if peak > params.max_joint_speed:
        qdot = qdot * (params.max_joint_speed / peak)

    q_new = np.clip(
        np.asarray(current.q) + qdot * dt,
        np.asarray(params.limits_lo),
        np.asarray(params.limits_hi),
    )
    qdot_real = (q_new - np.asarray(current.q)) / dt
    state = JointState(q=tuple(q_new), qdot=tuple(qdot_real), t=current.t + dt)
    return SteerResult(state=state, near_singularity=near, condition=cond)


def tcp_speed(prev: Pose, t_prev: float, cur: Pose, t_cur: float) -> float:
    """Euclidean TCP position delta over the interval, m/s."""
    dt = t_cur - t_prev
    if dt <= 0:
        raise DegenerateInterval(f"timestamps must increase (dt={dt})")
    dp = np.asarray(cur.position) - np.asarray(prev.position)
    return float(np.linalg.norm(dp)) / dt


def proximity(collaborator: CollaboratorState, tcp: Pose) -> float:
    """Euclidean collaborator-to-TCP distance, m."""
    d = np.asarray(collaborator.position, dtype=float) - np.asarray(tcp.position)
    return float(np.linalg.norm(d))
