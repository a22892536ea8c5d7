"""Operations over the space of poses: indexing, averaging, mode finding,
duplicate filtering.

Everything here works in the representative embedding, where the pose
distance is a Euclidean point-to-set distance, so standard Euclidean
machinery (kd-trees, weighted means) applies directly. The kd-tree is used
only to prune candidates; distances that decide query results are always
re-evaluated with the same arithmetic as a linear scan, so query results are
exactly those of the scan (same values bit for bit, same tie-breaks).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from . import symmetry as sym
from .errors import AmbiguousMeanError, DataError
from .metric import representative_points
from .model import ObjectModel
from .pose import Pose, ScoredPose

_PRUNE_SLACK = 1e-9  # relative inflation of kd-tree radii before exact re-ranking


class PoseIndex:
    """Spatial index over the representative points of a pose set.

    Every pose contributes all of its representative points, tagged with the
    pose id; queries deduplicate by pose id keeping the minimum point
    distance. Immutable after construction; concurrent queries are safe.
    """

    def __init__(self, poses, obj: ObjectModel, ids=None):
        poses = list(poses)
        if not poses:
            raise DataError("cannot build an index over an empty pose list")
        self.obj = obj
        self.ids = list(range(len(poses))) if ids is None else list(ids)
        if len(self.ids) != len(poses):
            raise DataError("ids and poses must have equal length")
        self.poses = poses
        reps = [representative_points(p, obj) for p in poses]
        counts = [len(r) for r in reps]
        self.points = np.ascontiguousarray(np.concatenate(reps, axis=0))
        self.point_owner = np.repeat(np.arange(len(poses)), counts)
        self.tree = cKDTree(self.points)

    def __len__(self):
        return len(self.poses)

    def _query_point(self, pose: Pose) -> np.ndarray:
        return representative_points(pose, self.obj)[0]

    def _exact_dists(self, candidate_rows, q):
        # the one canonical distance expression, identical to the linear scan
        return np.sqrt(((self.points[candidate_rows] - q) ** 2).sum(axis=1))

    def nearest(self, query: Pose):
        """(pose_id, distance) of the closest pose; ties -> lowest pose id."""
        q = self._query_point(query)
        k = min(8, len(self.points))
        d, rows = self.tree.query(q, k=k)
        d, rows = np.atleast_1d(d), np.atleast_1d(rows)
        bound = d[0] * (1.0 + _PRUNE_SLACK)
        if d[-1] <= bound and k < len(self.points):
            # dense tie region: fall back to a guaranteed-complete ball query
            rows = np.asarray(self.tree.query_ball_point(q, bound + np.finfo(float).tiny))
        else:
            rows = rows[d <= bound]
        dists = self._exact_dists(rows, q)
        best = dists.min()
        owners = self.point_owner[rows[dists == best]]
        winner = min(self.ids[o] for o in np.unique(owners))
        return winner, float(best)

    def radius_search(self, query: Pose, radius: float):
        """All (pose_id, distance) with distance <= radius, ascending, ties by id."""
        if radius < 0:
            raise DataError("radius must be >= 0")
        q = self._query_point(query)
        ball = radius * (1.0 + _PRUNE_SLACK) + np.finfo(float).tiny
        rows = np.asarray(self.tree.query_ball_point(q, ball), dtype=np.intp)
        if len(rows) == 0:
            return []
        dists = self._exact_dists(rows, q)
        keep = dists <= radius
        rows, dists = rows[keep], dists[keep]
        best = {}
        for owner, dist in zip(self.point_owner[rows], dists):
            pid = self.ids[owner]
            if pid not in best or dist < best[pid]:
                best[pid] = dist
        return sorted(((pid, float(d)) for pid, d in best.items()), key=lambda x: (x[1], x[0]))


def build_index(poses, obj: ObjectModel, ids=None) -> PoseIndex:
    return PoseIndex(poses, obj, ids)


def pose_from_representative(point, obj: ObjectModel) -> Pose:
    """Project a free point of the embedding space back to the nearest pose.

    Finite class: split into (A, t), then the rotation maximizing
    trace(R^T A lam) via SVD of A lam with the determinant sign fixed.
    Revolution classes: renormalize the axis block. Spherical: translation
    only. Raises AmbiguousMeanError when the projection is degenerate.
    """
    point = np.asarray(point, dtype=np.float64)
    kind = obj.group.kind
    if kind == sym.SPHERICAL:
        return Pose(np.eye(3), point)
    if kind == sym.FINITE:
        a = point[:9].reshape(3, 3)
        u, s, vt = np.linalg.svd(a @ obj.lam)
        if s[1] <= 1e-12 * max(s[0], np.finfo(float).tiny):
            raise AmbiguousMeanError("ambiguous mean: rotation projection is rank deficient")
        sign = np.sign(np.linalg.det(u @ vt))
        rot = u @ np.diag([1.0, 1.0, sign]) @ vt
        return Pose(rot, point[9:])
    axis = point[:3]
    norm = np.linalg.norm(axis)
    if norm < 1e-9 * obj.lam_scalar:
        raise AmbiguousMeanError("ambiguous mean: revolution axis cancels out")
    return Pose(_rotation_taking_z_to(axis / norm), point[3:])


def _rotation_taking_z_to(direction: np.ndarray) -> np.ndarray:
    """Minimal rotation mapping e_z onto ``direction`` (unit)."""
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, direction))
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])  # half turn about x
    v = np.cross(z, direction)
    k = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + k + (k @ k) / (1.0 + c)


def average(scored_poses, obj: ObjectModel) -> Pose:
    """Weighted mean pose; weights are the scores.

    Computed in the representative space: the highest-score pose serves as
    reference; every pose contributes its representative point closest to the
    reference point; the weighted mean of those points is projected back to a
    pose. The result is the pose class, not a particular matrix.
    """
    scored_poses = list(scored_poses)
    if not scored_poses:
        raise DataError("cannot average an empty pose set")
    weights = np.array([sp.score for sp in scored_poses], dtype=np.float64)
    if (weights < 0).any() or weights.sum() <= 0:
        raise DataError("weights must be nonnegative with a positive sum")
    ref = max(range(len(scored_poses)), key=lambda i: scored_poses[i].score)
    ref_point = representative_points(scored_poses[ref].pose, obj)[0]
    mean = np.zeros_like(ref_point)
    for sp, w in zip(scored_poses, weights):
        reps = representative_points(sp.pose, obj)
        nearest = reps[((reps - ref_point) ** 2).sum(axis=1).argmin()]
        mean += w * nearest
    mean /= weights.sum()
    return pose_from_representative(mean, obj)


def mean_shift(votes, obj: ObjectModel, bandwidth: float, seeds=None,
               max_iter: int = 100, tol: float | None = None, kernel: str = "epanechnikov",
               n_seeds: int = 20, merge_radius: float | None = None):
    """Mode finding over pose votes by mean shift in the representative space.

    From each seed, repeatedly replace the current pose by the weighted
    average of the votes within ``bandwidth`` (weights: vote score times the
    kernel's shift profile) until the shift drops below ``tol`` (default
    bandwidth * 1e-4) or ``max_iter``. Modes closer than ``merge_radius``
    (default bandwidth / 2) are merged keeping the higher density.

    Returns a list of (pose, density) sorted by density, descending. The
    density is the kernel-weighted vote mass at the mode; for the default
    Epanechnikov kernel the mean update uses the flat shift weights matched
    to it, which makes the density provably non-decreasing along iterations
    (checked at every step). The optional truncated Gaussian kernel has no
    such hard guarantee and is not checked.
    """
    votes = list(votes)
    if not votes:
        raise DataError("mean shift needs at least one vote")
    if not bandwidth > 0:
        raise DataError("bandwidth must be > 0")
    if kernel not in ("epanechnikov", "gaussian"):
        raise DataError(f"unknown kernel '{kernel}'")
    if tol is None:
        tol = 1e-4 * bandwidth
    if merge_radius is None:
        merge_radius = 0.5 * bandwidth
    index = PoseIndex([v.pose for v in votes], obj)
    scores = np.array([v.score for v in votes], dtype=np.float64)
    # (n_votes, rep_count, rep_dim): every vote's representatives, precomputed
    vote_reps = np.stack([representative_points(v.pose, obj) for v in votes])
    search_radius = bandwidth if kernel == "epanechnikov" else 3.0 * bandwidth

    def density_and_mean(pose):
        hits = index.radius_search(pose, search_radius)
        if not hits:
            return 0.0, None
        ids = np.array([h[0] for h in hits])
        dists = np.array([h[1] for h in hits])
        u2 = (dists / bandwidth) ** 2
        if kernel == "epanechnikov":
            shift_w = scores[ids]                       # flat profile
            dens = float((scores[ids] * np.maximum(0.0, 1.0 - u2)).sum())
        else:
            shift_w = scores[ids] * np.exp(-0.5 * u2)
            dens = float(shift_w.sum())
        ref_point = representative_points(pose, obj)[0]
        # per hit, the representative closest to the reference point
        sel = vote_reps[ids]
        nearest = ((sel - ref_point) ** 2).sum(axis=2).argmin(axis=1)
        chosen = np.take_along_axis(sel, nearest[:, None, None], axis=1)[:, 0, :]
        total = shift_w.sum()
        if total <= 0:
            return dens, None
        mean = (shift_w[:, None] * chosen).sum(axis=0) / total
        return dens, pose_from_representative(mean, obj)

    modes = []
    if seeds is None:
        order = sorted(range(len(votes)), key=lambda i: (-votes[i].score, i))
        seeds = [votes[i].pose for i in order[:n_seeds]]
    from .metric import distance  # local import to avoid a cycle at module load

    def check_monotone(dens, prev_dens):
        if kernel == "epanechnikov" and dens < prev_dens - 1e-9 * (1.0 + abs(dens)):
            raise AssertionError("mean shift density decreased; this is a bug")

    for seed in seeds:
        current = seed
        prev_dens = -np.inf
        for _ in range(max_iter):
            dens, shifted = density_and_mean(current)
            check_monotone(dens, prev_dens)
            prev_dens = dens
            if shifted is None:
                break
            step = distance(shifted, current, obj)
            current = shifted
            if step < tol:
                break
        final_dens, _ = density_and_mean(current)
        check_monotone(final_dens, prev_dens)
        modes.append((current, final_dens))

    modes.sort(key=lambda m: -m[1])
    kept = []
    for pose, dens in modes:
        if all(distance(pose, kp, obj) >= merge_radius for kp, _ in kept):
            kept.append((pose, dens))
    return kept


def filter_duplicates(hypotheses, obj: ObjectModel, radius: float, keep: int = 20):
    """Greedy non-maximum suppression over pose hypotheses.

    Walk the hypotheses by descending score (ties: input order) and retain
    each one iff its distance to every retained hypothesis exceeds
    ``radius``; stop after ``keep`` survivors. The default keep of 20 matches
    the usual post-processing budget. Inherently sequential.
    """
    hypotheses = list(hypotheses)
    if radius < 0:
        raise DataError("radius must be >= 0")
    if keep < 1:
        raise DataError("keep must be >= 1")
    order = sorted(range(len(hypotheses)), key=lambda i: (-hypotheses[i].score, i))
    retained = []
    retained_reps = []
    for i in order:
        sp = hypotheses[i]
        q = representative_points(sp.pose, obj)[0]
        if all(np.sqrt(((reps - q) ** 2).sum(axis=1).min()) > radius for reps in retained_reps):
            retained.append(sp)
            retained_reps.append(representative_points(sp.pose, obj))
            if len(retained) >= keep:
                break
    return retained
