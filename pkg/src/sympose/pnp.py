"""Multiview perspective-n-point for ground-truth pose annotation.

Marker corners detected in the intensity images give 2D-3D correspondences
per camera; the object pose minimizes the summed squared reprojection error
over all cameras. Levenberg-Marquardt on a 6-parameter chart (local
axis-angle increment composed onto the current rotation, plus a translation
increment), initialized by a DLT estimate from the camera with the most
correspondences unless an initial pose is supplied.

Cameras are pinhole without distortion; undistort pixels beforehand if
needed (``undistort`` hook on solve_multiview_pnp).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, SolverError
from .pose import Pose

MAX_ITERATIONS = 100
STEP_TOL = 1e-10


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: intrinsics K plus the camera-from-reference rigid
    transform (X_cam = R X_ref + t)."""

    intrinsics: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        k = np.asarray(self.intrinsics, dtype=np.float64)
        if k.shape != (3, 3):
            raise DataError("intrinsics must be 3x3")
        if np.abs(np.tril(k, -1)).max() > 0:
            raise DataError("intrinsics must be upper triangular")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise DataError("focal entries must be positive")
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    def camera_points(self, points_ref) -> np.ndarray:
        return np.asarray(points_ref, dtype=np.float64) @ self.rotation.T + self.translation

    def project(self, points_ref):
        """Pixel coordinates (N, 2) and camera-frame depths (N,)."""
        pc = self.camera_points(points_ref)
        z = pc[:, 2]
        k = self.intrinsics
        with np.errstate(divide="ignore", invalid="ignore"):
            u = k[0, 0] * pc[:, 0] / z + k[0, 1] * pc[:, 1] / z + k[0, 2]
            v = k[1, 1] * pc[:, 1] / z + k[1, 2]
        return np.stack([u, v], axis=1), z


@dataclass(frozen=True)
class CorrespondenceSet:
    """Per camera: object-frame 3D points (N, 3) and pixel points (N, 2)."""

    points_3d: tuple
    points_2d: tuple

    def __post_init__(self):
        p3 = tuple(np.asarray(x, dtype=np.float64).reshape(-1, 3) for x in self.points_3d)
        p2 = tuple(np.asarray(x, dtype=np.float64).reshape(-1, 2) for x in self.points_2d)
        if len(p3) != len(p2) or any(len(a) != len(b) for a, b in zip(p3, p2)):
            raise DataError("3D and 2D correspondence lists must align per camera")
        object.__setattr__(self, "points_3d", p3)
        object.__setattr__(self, "points_2d", p2)

    @property
    def total(self):
        return sum(len(x) for x in self.points_3d)

    def validate(self):
        if self.total < 3:
            raise SolverError(f"underdetermined: {self.total} correspondences, need >= 3")
        stacked = np.concatenate([x for x in self.points_3d if len(x)], axis=0)
        centered = stacked - stacked.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, np.abs(stacked).max())) < 2:
            raise SolverError("degenerate correspondences: 3D points are collinear")


@dataclass(frozen=True)
class PnPResult:
    pose: Pose
    rms_residual: float
    converged: bool
    n_iterations: int


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _exp_so3(w):
    angle = np.linalg.norm(w)
    if angle < 1e-12:
        k = _skew(w)
        return np.eye(3) + k + 0.5 * (k @ k)
    k = _skew(w / angle)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def reprojection_residuals(pose: Pose, corr: CorrespondenceSet, cams):
    """Per-point residual vectors and a behind-camera flag.

    Returns (residuals, behind): residuals is (N_total, 2) ordered by camera
    then point; behind marks points with non-positive camera depth, whose
    residuals are still reported (projection through the pinhole model) but
    are geometrically meaningless.
    """
    res, behind = [], []
    for cam, x3, p2 in zip(cams, corr.points_3d, corr.points_2d):
        if len(x3) == 0:
            continue
        proj, z = cam.project(pose.apply(x3))
        res.append(proj - p2)
        behind.append(z <= 0)
    if not res:
        return np.zeros((0, 2)), np.zeros(0, dtype=bool)
    return np.concatenate(res, axis=0), np.concatenate(behind)


def pnp_jacobian(pose: Pose, corr: CorrespondenceSet, cams) -> np.ndarray:
    """Analytic Jacobian of the stacked residual vector (2N,) w.r.t. the
    6-parameter local chart [rotation increment, translation increment].

    The rotation is perturbed on the right: R <- R exp([w]x), so
    d(R exp([w]x) X)/dw = -R [X]x at w = 0.
    """
    blocks = []
    for cam, x3 in zip(cams, corr.points_3d):
        if len(x3) == 0:
            continue
        pc = cam.camera_points(pose.apply(x3))
        x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
        k = cam.intrinsics
        fx, s, fy = k[0, 0], k[0, 1], k[1, 1]
        # d(pixel)/d(camera point)
        dpdc = np.zeros((len(x3), 2, 3))
        dpdc[:, 0, 0] = fx / z
        dpdc[:, 0, 1] = s / z
        dpdc[:, 0, 2] = -(fx * x + s * y) / (z * z)
        dpdc[:, 1, 1] = fy / z
        dpdc[:, 1, 2] = -fy * y / (z * z)
        # d(camera point)/d(params): rotation block -Rc R [X]x, translation block Rc
        rcr = cam.rotation @ pose.rotation
        dcdw = -np.einsum("ij,njk->nik", rcr, np.stack([_skew(p) for p in x3]))
        dcdt = np.broadcast_to(cam.rotation, (len(x3), 3, 3))
        jac = np.concatenate([
            np.einsum("nij,njk->nik", dpdc, dcdw),
            np.einsum("nij,njk->nik", dpdc, dcdt),
        ], axis=2)
        blocks.append(jac.reshape(-1, 6))
    return np.concatenate(blocks, axis=0)


def _dlt_init(corr: CorrespondenceSet, cams) -> Pose:
    """Direct linear estimate from the camera with the most correspondences."""
    j = int(np.argmax([len(x) for x in corr.points_3d]))
    x3, p2, cam = corr.points_3d[j], corr.points_2d[j], cams[j]
    if len(x3) < 6:
        raise SolverError(
            f"DLT initialization needs >= 6 points in one camera, best has {len(x3)}; "
            "pass an initial pose")
    a = np.zeros((2 * len(x3), 12))
    for i, (xx, pp) in enumerate(zip(x3, p2)):
        xh = np.array([xx[0], xx[1], xx[2], 1.0])
        a[2 * i, 0:4] = xh
        a[2 * i, 8:12] = -pp[0] * xh
        a[2 * i + 1, 4:8] = xh
        a[2 * i + 1, 8:12] = -pp[1] * xh
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-9 * sv[0]:
        raise SolverError("degenerate correspondences: DLT system is rank deficient "
                          "(coplanar markers?); pass an initial pose")
    p = vt[-1].reshape(3, 4)
    # strip known intrinsics and extrinsics: K^-1 P = s [Rc R | Rc t + tc]
    b = np.linalg.solve(cam.intrinsics, p)
    scale = np.cbrt(np.linalg.det(b[:, :3]))
    if scale == 0:
        raise SolverError("DLT produced a singular rotation block")
    b /= scale
    u, _, vt2 = np.linalg.svd(b[:, :3])
    m = u @ np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt2))]) @ vt2
    rot = cam.rotation.T @ m
    t = cam.rotation.T @ (b[:, 3] - cam.translation)
    return Pose(rot, t)


def solve_multiview_pnp(corr: CorrespondenceSet, cams, init: Pose | None = None,
                        max_iterations: int = MAX_ITERATIONS, step_tol: float = STEP_TOL,
                        undistort=None) -> PnPResult:
    """Pose minimizing the summed squared reprojection error over all cameras.

    Levenberg-Marquardt with gain-ratio damping control; accepted steps never
    increase the objective. ``converged`` is False when the iteration budget
    runs out before the step norm drops below ``step_tol``; callers mirror
    the annotation practice of discarding such instances.
    """
    if len(cams) != len(corr.points_3d):
        raise DataError("one camera per correspondence list required")
    if undistort is not None:
        corr = CorrespondenceSet(
            corr.points_3d,
            tuple(undistort(j, p) for j, p in enumerate(corr.points_2d)))
    corr.validate()
    pose = init if init is not None else _dlt_init(corr, cams)

    def objective(p):
        r, _ = reprojection_residuals(p, corr, cams)
        r = r.reshape(-1)
        return r, float(r @ r)

    res, cost = objective(pose)
    mu = None
    nu = 2.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        jac = pnp_jacobian(pose, corr, cams)
        grad = jac.T @ res
        hess = jac.T @ jac
        if mu is None:
            mu = 1e-3 * hess.diagonal().max()
        try:
            delta = np.linalg.solve(hess + mu * np.eye(6), -grad)
        except np.linalg.LinAlgError as e:
            raise SolverError(f"normal equations are singular: {e}") from e
        candidate = Pose(pose.rotation @ _exp_so3(delta[:3]), pose.translation + delta[3:])
        new_res, new_cost = objective(candidate)
        predicted = float(delta @ (mu * delta - grad))
        rho = (cost - new_cost) / predicted if predicted > 0 else -1.0
        if rho > 0:
            assert new_cost <= cost + 1e-12 * (1.0 + cost)
            pose, res, cost = candidate, new_res, new_cost
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
        else:
            mu *= nu
            nu *= 2.0
        if np.linalg.norm(delta) < step_tol:
            converged = True
            break

    _, behind = reprojection_residuals(pose, corr, cams)
    if behind.all():
        raise SolverError("solution places every point behind the cameras")
    # RMS over the stacked residual components (pixels)
    rms = float(np.sqrt(cost / len(res))) if len(res) else 0.0
    return PnPResult(pose=pose, rms_residual=rms, converged=converged, n_iterations=iterations)
