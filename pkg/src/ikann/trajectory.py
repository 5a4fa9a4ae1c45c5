"""Reference paths and closed-loop tracking evaluation.

A model proposes joint angles for each reference point; forward kinematics
maps them back to Cartesian space and the per-point Euclidean miss in mm is
the tracking error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kinematics import DEFAULT_GEOMETRY, RobotGeometry, forward_kinematics_batch, inverse_kinematics
from .neuralnet import NetworkParams, predict
from .sampler import WorkspaceBox, normalize_input

RECTANGLE = "rectangle"
HEART = "heart"
CUSTOM = "custom"


class PathOutsideBoxWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str
    points: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 points of 3 coordinates")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class EvalReport:
    per_point_error_mm: np.ndarray
    mean_mm: float
    std_mm: float
    max_mm: float
    n_points: int


def make_rectangle_path(box: WorkspaceBox, z_low: float = 10.0, z_high: float = 50.0,
                        margin: float = 10.0, points_per_edge: int = 26) -> TrajectorySpec:
    """Two axis-aligned rectangles in the x1-x2 plane, inset by ``margin`` from
    the box walls, drawn at heights z_low and z_high.

    Each edge carries ``points_per_edge`` uniform samples with shared corners
    counted once, so the total is 2*4*(points_per_edge - 1) points.
    """
    if points_per_edge < 2:
        raise ValueError("points_per_edge must be >= 2")
    if margin < 0:
        raise ValueError("margin must be >= 0")
    x1a, x1b = box.lo[0] + margin, box.hi[0] - margin
    x2a, x2b = box.lo[1] + margin, box.hi[1] - margin
    if not (x1a < x1b and x2a < x2b):
        raise ValueError("margin leaves no rectangle area")
    corners = np.array([[x1a, x2a], [x1b, x2a], [x1b, x2b], [x1a, x2b]])

    ring = []
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        # drop the end corner; it opens the next edge
        seg = np.linspace(a, b, points_per_edge)[:-1]
        ring.append(seg)
    ring = np.vstack(ring)

    pts = np.vstack([
        np.column_stack([ring, np.full(len(ring), z_low)]),
        np.column_stack([ring, np.full(len(ring), z_high)]),
    ])
    return TrajectorySpec(kind=RECTANGLE, points=pts, params={
        "z_low": z_low, "z_high": z_high, "margin": margin,
        "points_per_edge": points_per_edge,
    })


def make_heart_path(center=(50.0, 50.0), scale: float = 25.0, z: float = 30.0,
                    n_points: int = 200) -> TrajectorySpec:
    """Classic parametric heart in the x1-x2 plane at height ``z``:

        x1(t) = cx + scale * 16 sin^3(t) / 16
        x2(t) = cy + scale * (13 cos t - 5 cos 2t - 2 cos 3t - cos 4t) / 16

    with t uniform on [0, 2*pi).
    """
    if n_points < 8:
        raise ValueError("n_points must be >= 8")
    cx, cy = float(center[0]), float(center[1])
    t = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    x1 = cx + scale * 16.0 * np.sin(t) ** 3 / 16.0
    x2 = cy + scale * (13.0 * np.cos(t) - 5.0 * np.cos(2 * t)
                       - 2.0 * np.cos(3 * t) - np.cos(4 * t)) / 16.0
    pts = np.column_stack([x1, x2, np.full(n_points, float(z))])
    return TrajectorySpec(kind=HEART, points=pts, params={
        "center": (cx, cy), "scale": scale, "z": z, "n_points": n_points,
    })


def exact_ik_model(geom: RobotGeometry = DEFAULT_GEOMETRY):
    """Oracle predictor: analytic IK applied point by point (mm in, rad out)."""

    def solve(points_mm: np.ndarray) -> np.ndarray:
        return np.array([inverse_kinematics(p, geom) for p in np.atleast_2d(points_mm)])

    return solve


def tracking_details(model, traj: TrajectorySpec, geom: RobotGeometry, box: WorkspaceBox):
    """Per-point tracking data: (joint predictions, replayed positions, errors).

    ``model`` is either trained NetworkParams (inputs get box-normalized) or a
    callable taking raw mm points and returning joint angles.
    """
    pts = traj.points
    outside = int(np.count_nonzero(~box.contains(pts)))
    if outside:
        warnings.warn(f"{outside} of {len(pts)} path points lie outside the workspace box",
                      PathOutsideBoxWarning, stacklevel=2)
    if isinstance(model, NetworkParams):
        q_hat = predict(model, normalize_input(pts, box))
    else:
        q_hat = np.asarray(model(pts), dtype=float)
    x_hat = forward_kinematics_batch(q_hat, geom)
    err = np.linalg.norm(pts - x_hat, axis=1)
    return q_hat, x_hat, err


def evaluate_tracking(model, traj: TrajectorySpec,
                      geom: RobotGeometry = DEFAULT_GEOMETRY,
                      box: WorkspaceBox | None = None) -> EvalReport:
    """Run the reference path through the model and FK replay; aggregate the
    per-point Euclidean errors in mm."""
    if box is None:
        from .sampler import DEFAULT_BOX
        box = DEFAULT_BOX
    _, _, err = tracking_details(model, traj, geom, box)
    return EvalReport(
        per_point_error_mm=err,
        mean_mm=float(err.mean()),
        std_mm=float(err.std()),
        max_mm=float(err.max()),
        n_points=len(err),
    )


def error_to_spacing(mean_err_mm: float, d_mm: float) -> float:
    """Sample-efficiency ratio: mean tracking error over inter-sample spacing."""
    if d_mm <= 0:
        raise ValueError("spacing must be positive")
    return mean_err_mm / d_mm
