"""Detection and pose-estimation evaluation for scenes of many instances.

Matching is mutual-nearest under the symmetry-aware distance with a hard
threshold delta (default 10% of the object diameter): a prediction p and a
ground-truth instance t form a true positive iff d(p, t) < delta, p is the
nearest prediction of t, and t is the nearest ground truth of p. Duplicates
are false positives. Only instances occluded less than delta_o (default 50%)
count for recall; a prediction mutually matched to a more-occluded instance
is neither a true nor a false positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .metric import representative_points
from .model import ObjectModel
from .pose import Pose

DEFAULT_DELTA_FRACTION = 0.1
DEFAULT_DELTA_O = 0.5
DEFAULT_KEEP = 20


@dataclass(frozen=True)
class GroundTruthInstance:
    pose: Pose
    occlusion_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.occlusion_rate <= 1.0:
            raise DataError(f"occlusion rate must be in [0, 1], got {self.occlusion_rate}")


@dataclass(frozen=True)
class SceneEval:
    """Matching outcome of one scene.

    tp holds (prediction_index, gt_index) pairs; fp prediction indices;
    fn ground-truth indices (within the interest subset). Indices refer to
    input order. n_uninteresting_matches counts predictions mutually matched
    to instances above the occlusion threshold.
    """

    tp: tuple = field(default_factory=tuple)
    fp: tuple = field(default_factory=tuple)
    fn: tuple = field(default_factory=tuple)
    n_uninteresting_matches: int = 0

    @property
    def n_tp(self):
        return len(self.tp)

    @property
    def n_fp(self):
        return len(self.fp)

    @property
    def n_fn(self):
        return len(self.fn)


def select_interest(gt, delta_o: float = DEFAULT_DELTA_O):
    """Indices of the instances of interest: occlusion strictly below delta_o."""
    if not 0.0 < delta_o <= 1.0:
        raise DataError(f"delta_o must be in (0, 1], got {delta_o}")
    return [i for i, inst in enumerate(gt) if inst.occlusion_rate < delta_o]


def match_scene(predictions, gt, obj: ObjectModel, delta: float,
                delta_o: float = DEFAULT_DELTA_O) -> SceneEval:
    """Mutual-nearest matching of scored predictions against ground truth.

    Nearest maps are deterministic: the nearest prediction of a ground truth
    breaks distance ties by higher score then lower index; the nearest ground
    truth of a prediction breaks ties by lower index. A match requires
    d < delta (strict).
    """
    predictions = list(predictions)
    gt = list(gt)
    if delta <= 0:
        raise DataError("delta must be > 0")
    interest = set(select_interest(gt, delta_o))
    if not predictions or not gt:
        return SceneEval(fp=tuple(range(len(predictions))),
                         fn=tuple(i for i in range(len(gt)) if i in interest))

    # distance from each prediction to each ground truth; computing the full
    # matrix keeps tie-breaking transparent, and scenes are small.
    dmat = np.empty((len(predictions), len(gt)))
    pred_first_reps = np.stack([representative_points(p.pose, obj)[0] for p in predictions])
    for j, inst in enumerate(gt):
        reps = representative_points(inst.pose, obj)
        d2 = ((reps[None, :, :] - pred_first_reps[:, None, :]) ** 2).sum(axis=2)
        dmat[:, j] = np.sqrt(d2.min(axis=1))

    # nearest gt per prediction: min distance, ties -> lower gt index
    nearest_gt = dmat.argmin(axis=1)
    # nearest prediction per gt: min distance, ties -> higher score, lower index
    scores = np.array([p.score for p in predictions])
    nearest_pred = np.empty(len(gt), dtype=int)
    for j in range(len(gt)):
        col = dmat[:, j]
        best = col.min()
        cand = np.flatnonzero(col == best)
        nearest_pred[j] = min(cand, key=lambda i: (-scores[i], i))

    tp, fp, fn = [], [], []
    n_uninteresting = 0
    for i in range(len(predictions)):
        j = nearest_gt[i]
        mutual = nearest_pred[j] == i and dmat[i, j] < delta
        if not mutual:
            fp.append(i)
        elif j in interest:
            tp.append((i, int(j)))
        else:
            n_uninteresting += 1
    for j in interest:
        i = nearest_pred[j]
        if not (dmat[i, j] < delta and nearest_gt[i] == j):
            fn.append(int(j))

    result = SceneEval(tp=tuple(tp), fp=tuple(fp), fn=tuple(sorted(fn)),
                       n_uninteresting_matches=n_uninteresting)
    assert result.n_tp + result.n_fn == len(interest)
    return result


def precision_recall(ev: SceneEval):
    """Precision and recall; None where the denominator is zero."""
    precision = ev.n_tp / (ev.n_tp + ev.n_fp) if ev.n_tp + ev.n_fp > 0 else None
    recall = ev.n_tp / (ev.n_tp + ev.n_fn) if ev.n_tp + ev.n_fn > 0 else None
    return precision, recall


def recall_limited(ev: SceneEval, n: int) -> float:
    """Recall when at most n results were returned: |TP| / min(n, |T_o|)."""
    if n < 1:
        raise DataError("n must be >= 1")
    denom = min(n, ev.n_fn + ev.n_tp)
    return ev.n_tp / denom if denom > 0 else 0.0


@dataclass(frozen=True)
class PRCurve:
    """Score-threshold sweep: (threshold, precision, recall) points plus AP.

    Points are ordered by descending threshold; thresholds with no surviving
    predictions are omitted (no fabricated precision-1 endpoint). AP is the
    trapezoidal area over recall, the curve extended to recall 0 at the first
    point's precision.
    """

    points: tuple
    ap: float


def _truncate_top_n(predictions, n):
    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i].score, i))
    keep = set(order[:n])
    return [p for i, p in enumerate(predictions) if i in keep]


def pr_curve(dataset, obj: ObjectModel, delta: float, delta_o: float = DEFAULT_DELTA_O,
             n_limit: int | None = None) -> PRCurve:
    """Pooled precision-recall sweep over a dataset of scenes.

    ``dataset`` is a list of (predictions, gt) pairs. A global score
    threshold sweeps over the pooled prediction scores (descending);
    predictions with score >= threshold survive, matching is re-run per
    scene, and TP/FP/FN are aggregated across scenes into one point. With
    ``n_limit``, every scene is truncated to its n_limit highest-scored
    predictions first and the recall denominator becomes
    sum of min(n_limit, |T_o|) per scene.
    """
    dataset = list(dataset)
    if not dataset:
        raise DataError("empty dataset")
    if n_limit is not None:
        dataset = [(_truncate_top_n(preds, n_limit), gt) for preds, gt in dataset]

    interest_sizes = [len(select_interest(gt, delta_o)) for _, gt in dataset]
    if n_limit is None:
        recall_denom = sum(interest_sizes)
    else:
        recall_denom = sum(min(n_limit, s) for s in interest_sizes)

    all_scores = sorted({p.score for preds, _ in dataset for p in preds}, reverse=True)
    points = []
    for threshold in all_scores:
        total_tp = total_fp = 0
        any_survivor = False
        for preds, gt in dataset:
            surviving = [p for p in preds if p.score >= threshold]
            if not surviving:
                continue
            any_survivor = True
            ev = match_scene(surviving, gt, obj, delta, delta_o)
            total_tp += ev.n_tp
            total_fp += ev.n_fp
        if not any_survivor:
            continue
        precision = total_tp / (total_tp + total_fp) if total_tp + total_fp > 0 else None
        if precision is None:
            continue
        recall = total_tp / recall_denom if recall_denom > 0 else 0.0
        points.append((float(threshold), float(precision), float(recall)))

    return PRCurve(points=tuple(points), ap=_average_precision(points))


def _average_precision(points) -> float:
    """Trapezoid over recall of (threshold, precision, recall) points.

    Points are sorted by recall (stable, so equal-recall points keep their
    descending-threshold order) and the curve is extended to recall 0 at the
    first point's precision.
    """
    if not points:
        return 0.0
    ordered = sorted(points, key=lambda p: p[2])
    recalls = [0.0] + [p[2] for p in ordered]
    precisions = [ordered[0][1]] + [p[1] for p in ordered]
    area = 0.0
    for k in range(1, len(recalls)):
        area += (recalls[k] - recalls[k - 1]) * 0.5 * (precisions[k] + precisions[k - 1])
    return float(area)


def ap_at_n(dataset, obj: ObjectModel, delta: float, delta_o: float = DEFAULT_DELTA_O,
            n: int = 1) -> float:
    """Average precision with at most n results returned per scene."""
    if n < 1:
        raise DataError("n must be >= 1")
    return pr_curve(dataset, obj, delta, delta_o, n_limit=n).ap


def per_scene_average_precision(dataset, obj: ObjectModel, delta: float,
                                delta_o: float = DEFAULT_DELTA_O,
                                n_limit: int | None = None) -> float:
    """Macro alternative: mean of single-scene APs (scenes with no interest
    instances are skipped)."""
    dataset = list(dataset)
    if not dataset:
        raise DataError("empty dataset")
    aps = []
    for preds, gt in dataset:
        if not select_interest(gt, delta_o):
            continue
        aps.append(pr_curve([(preds, gt)], obj, delta, delta_o, n_limit=n_limit).ap)
    return float(np.mean(aps)) if aps else 0.0
