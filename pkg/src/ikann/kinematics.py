"""Analytic forward and inverse kinematics for a 3-DOF articulated (RRR) arm.

Joint convention: q1 is the base yaw, q2 the shoulder pitch measured from the
horizontal plane, q3 the elbow pitch relative to the upper arm. The shoulder
sits at height l1 above the base. With planar radius

    r = l2*cos(q2) + l3*cos(q2 + q3)

the tip position is

    x1 = r*cos(q1),  x2 = r*sin(q1),  x3 = l1 + l2*sin(q2) + l3*sin(q2 + q3).

The closed-form inverse has two elbow solutions; branch "A" (the default)
takes q3 <= 0, branch "B" the mirror.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAxis, UnreachableTarget

ELBOW_A = "A"
ELBOW_B = "B"

# |D| may exceed 1 by rounding noise at full extension; beyond this it is a
# genuinely unreachable target.
_REACH_TOL = 1e-12
_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class RobotGeometry:
    """Link lengths in mm and the elbow branch used by the inverse solver."""

    l1: float = 70.0
    l2: float = 70.0
    l3: float = 70.0
    elbow_branch: str = ELBOW_A

    def __post_init__(self):
        if min(self.l1, self.l2, self.l3) <= 0:
            raise ValueError("link lengths must be positive")
        if self.elbow_branch not in (ELBOW_A, ELBOW_B):
            raise ValueError(f"elbow_branch must be {ELBOW_A!r} or {ELBOW_B!r}")


DEFAULT_GEOMETRY = RobotGeometry()


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def forward_kinematics(q, geom: RobotGeometry = DEFAULT_GEOMETRY) -> np.ndarray:
    """Tip position in mm for joint angles ``q = (q1, q2, q3)`` in radians."""
    q1, q2, q3 = float(q[0]), float(q[1]), float(q[2])
    r = geom.l2 * math.cos(q2) + geom.l3 * math.cos(q2 + q3)
    return np.array([
        r * math.cos(q1),
        r * math.sin(q1),
        geom.l1 + geom.l2 * math.sin(q2) + geom.l3 * math.sin(q2 + q3),
    ])


def forward_kinematics_batch(q: np.ndarray, geom: RobotGeometry = DEFAULT_GEOMETRY) -> np.ndarray:
    """Vectorized forward kinematics for an (N, 3) array of joint angles."""
    q = np.asarray(q, dtype=float)
    r = geom.l2 * np.cos(q[:, 1]) + geom.l3 * np.cos(q[:, 1] + q[:, 2])
    return np.column_stack([
        r * np.cos(q[:, 0]),
        r * np.sin(q[:, 0]),
        geom.l1 + geom.l2 * np.sin(q[:, 1]) + geom.l3 * np.sin(q[:, 1] + q[:, 2]),
    ])


def inverse_kinematics(x, geom: RobotGeometry = DEFAULT_GEOMETRY) -> np.ndarray:
    """Joint angles realizing tip position ``x`` in mm.

    Raises UnreachableTarget outside the annular workspace and DegenerateAxis
    on the base axis (x1 = x2 = 0), where the yaw is undefined.
    """
    x1, x2, x3 = float(x[0]), float(x[1]), float(x[2])
    r = math.hypot(x1, x2)
    if r < _AXIS_TOL:
        raise DegenerateAxis(f"({x1}, {x2}, {x3}) lies on the base axis")
    s = x3 - geom.l1
    d = (r * r + s * s - geom.l2 ** 2 - geom.l3 ** 2) / (2.0 * geom.l2 * geom.l3)
    if abs(d) > 1.0 + _REACH_TOL:
        raise UnreachableTarget(f"({x1}, {x2}, {x3}) is outside the workspace (D={d:.6g})")
    d = min(1.0, max(-1.0, d))
    root = math.sqrt(1.0 - d * d)
    q3 = math.atan2(-root if geom.elbow_branch == ELBOW_A else root, d)
    q1 = math.atan2(x2, x1)
    q2 = math.atan2(s, r) - math.atan2(geom.l3 * math.sin(q3), geom.l2 + geom.l3 * math.cos(q3))
    return np.array([q1, wrap_angle(q2), q3])


def is_reachable(x, geom: RobotGeometry = DEFAULT_GEOMETRY) -> bool:
    """Whether the tip can be placed at ``x``: the squared planar/vertical
    offset from the shoulder must fall inside the annulus [(l2-l3)^2, (l2+l3)^2]."""
    x1, x2, x3 = float(x[0]), float(x[1]), float(x[2])
    s = x3 - geom.l1
    rho2 = x1 * x1 + x2 * x2 + s * s
    outer = (geom.l2 + geom.l3) ** 2
    inner = (geom.l2 - geom.l3) ** 2
    return rho2 <= outer * (1.0 + _REACH_TOL) and rho2 >= inner * (1.0 - _REACH_TOL)
