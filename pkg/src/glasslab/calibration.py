"""Damped least-squares refinement of a camera profile from 2D-3D matches.

The solver walks intrinsics, distortion, and pose (axis-angle + translation)
down the reprojection cost. Rotation is parameterized as an axis-angle
3-vector so every iterate stays on the rotation manifold.
"""

from dataclasses import dataclass

import numpy as np

from .camera import (
    CameraError,
    CameraProfile,
    axis_angle_to_matrix,
    distort_normalized,
    matrix_to_axis_angle,
)

# Residual assigned to points that fall behind the camera during a trial
# step; large enough that such steps are always rejected.
_INVALID_RESIDUAL = 1e6

LM_INITIAL_DAMPING = 1e-3
LM_DAMPING_UP = 10.0
LM_DAMPING_DOWN = 0.1
LM_MAX_ITERATIONS = 200
LM_RELATIVE_COST_TOL = 1e-12
_LM_MAX_DAMPING = 1e12


class RankError(CameraError):
    """Too few or degenerate correspondences for a solvable system."""


class NonConvergenceError(CameraError):
    """Solver diverged; .result carries the best profile found."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass
class CalibrationResult:
    profile: CameraProfile
    rms: float
    cost_history: list
    converged: bool
    iterations: int


def _pack(profile: CameraProfile, fix_intrinsics: bool) -> np.ndarray:
    rvec = matrix_to_axis_angle(profile.R)
    extr = np.concatenate([rvec, profile.t])
    if fix_intrinsics:
        return extr
    intr = np.array([profile.fx, profile.fy, profile.cx, profile.cy, *profile.dist])
    return np.concatenate([intr, extr])


def _unpack(theta: np.ndarray, template: CameraProfile, fix_intrinsics: bool) -> CameraProfile:
    n_dist = len(template.dist)
    if fix_intrinsics:
        fx, fy, cx, cy = template.fx, template.fy, template.cx, template.cy
        dist = template.dist
        rvec = theta[0:3]
        t = theta[3:6]
    else:
        fx, fy, cx, cy = theta[0:4]
        dist = tuple(theta[4:4 + n_dist])
        rvec = theta[4 + n_dist:7 + n_dist]
        t = theta[7 + n_dist:10 + n_dist]
    return CameraProfile(
        name=template.name,
        model=template.model,
        fx=float(fx),
        fy=float(fy),
        cx=float(cx),
        cy=float(cy),
        dist=dist,
        R=axis_angle_to_matrix(rvec),
        t=np.asarray(t, dtype=np.float64),
        width=template.width,
        height=template.height,
    )


def _residuals(theta, template, fix_intrinsics, world, pixels) -> np.ndarray:
    n_dist = len(template.dist)
    if fix_intrinsics:
        fx, fy, cx, cy = template.fx, template.fy, template.cx, template.cy
        dist = template.dist
        rvec, t = theta[0:3], theta[3:6]
    else:
        fx, fy, cx, cy = theta[0:4]
        dist = tuple(theta[4:4 + n_dist])
        rvec, t = theta[4 + n_dist:7 + n_dist], theta[7 + n_dist:10 + n_dist]
    R = axis_angle_to_matrix(rvec)
    p_cam = world @ R.T + t
    z = p_cam[:, 2]
    valid = z > 1e-9
    zsafe = np.where(valid, z, 1.0)
    xd, yd = distort_normalized(p_cam[:, 0] / zsafe, p_cam[:, 1] / zsafe, template.model, dist)
    u = fx * xd + cx
    v = fy * yd + cy
    res = np.column_stack([u - pixels[:, 0], v - pixels[:, 1]])
    res[~valid] = _INVALID_RESIDUAL
    return res.ravel()


def _check_rank(correspondences):
    if len(correspondences) < 6:
        raise RankError(f"need at least 6 correspondences, got {len(correspondences)}")
    px = np.array([c.pixel for c in correspondences], dtype=np.float64)
    centered = px - px.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[1] < 1e-6:
        raise RankError("image observations are collinear")
    w = np.array([c.world for c in correspondences], dtype=np.float64)
    sw = np.linalg.svd(w - w.mean(axis=0), compute_uv=False)
    if sw[1] < 1e-9:
        raise RankError("world points are collinear")


def calibrate(correspondences, init: CameraProfile, fix_intrinsics: bool = False) -> CalibrationResult:
    """Refine a profile to minimize the sum of squared pixel residuals.

    Levenberg-Marquardt with multiplicative damping: accepted steps never
    increase the cost, which cost_history records for inspection.
    """
    _check_rank(correspondences)
    world = np.array([c.world for c in correspondences], dtype=np.float64)
    pixels = np.array([c.pixel for c in correspondences], dtype=np.float64)

    theta = _pack(init, fix_intrinsics)
    r = _residuals(theta, init, fix_intrinsics, world, pixels)
    cost = float(r @ r)
    history = [cost]
    lam = LM_INITIAL_DAMPING
    converged = False
    iterations = 0

    for iterations in range(1, LM_MAX_ITERATIONS + 1):
        J = _numeric_jacobian(theta, init, fix_intrinsics, world, pixels)
        JtJ = J.T @ J
        g = J.T @ r
        accepted = False
        while lam <= _LM_MAX_DAMPING:
            damped = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-12))
            try:
                delta = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= LM_DAMPING_UP
                continue
            trial = theta + delta
            r_trial = _residuals(trial, init, fix_intrinsics, world, pixels)
            trial_cost = float(r_trial @ r_trial)
            if trial_cost < cost:
                rel_drop = (cost - trial_cost) / max(cost, 1e-300)
                theta, r, cost = trial, r_trial, trial_cost
                history.append(cost)
                lam = max(lam * LM_DAMPING_DOWN, 1e-15)
                accepted = True
                if rel_drop < LM_RELATIVE_COST_TOL or cost < 1e-24:
                    converged = True
                break
            lam *= LM_DAMPING_UP
        if not accepted:
            # Damping exhausted: either we are at a minimum or diverging.
            if float(np.abs(g).max()) < 1e-6 * max(1.0, np.sqrt(cost)):
                converged = True
            break
        if converged:
            break

    profile = _unpack(theta, init, fix_intrinsics)
    rms = float(np.sqrt(cost / len(correspondences)))
    result = CalibrationResult(profile, rms, history, converged, iterations)
    if not converged and rms > _INVALID_RESIDUAL / 2:
        raise NonConvergenceError("calibration diverged (points behind camera)", result)
    # Terminating by iteration budget with a sane cost still yields a usable
    # profile; flag it via converged=False rather than erroring.
    return result


def _numeric_jacobian(theta, template, fix_intrinsics, world, pixels) -> np.ndarray:
    base = _residuals(theta, template, fix_intrinsics, world, pixels)
    J = np.empty((base.size, theta.size))
    for i in range(theta.size):
        h = 1e-6 * max(1.0, abs(theta[i]))
        plus = theta.copy()
        plus[i] += h
        minus = theta.copy()
        minus[i] -= h
        rp = _residuals(plus, template, fix_intrinsics, world, pixels)
        rm = _residuals(minus, template, fix_intrinsics, world, pixels)
        J[:, i] = (rp - rm) / (2.0 * h)
    return J
