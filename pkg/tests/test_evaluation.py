import numpy as np
import pytest

from helpers import brute_match, make_class_objects, random_scene
from sympose import (DataError, GroundTruthInstance, Pose, ScoredPose, ap_at_n,
                     match_scene, pr_curve, precision_recall, random_pose,
                     recall_limited, select_interest)
from sympose.evaluation import (DEFAULT_DELTA_FRACTION, DEFAULT_DELTA_O,
                                DEFAULT_KEEP, SceneEval,
                                per_scene_average_precision)

_ZOO = None


def _obj(name="trivial"):
    global _ZOO
    if _ZOO is None:
        _ZOO = make_class_objects(np.random.default_rng(23))
    return _ZOO[name][0]


def _gt(t, occlusion=0.0):
    return GroundTruthInstance(pose=Pose(np.eye(3), np.asarray(t, dtype=float)),
                               occlusion_rate=occlusion)


def _pred(t, score, pid=0):
    return ScoredPose(pose=Pose(np.eye(3), np.asarray(t, dtype=float)), score=score, id=pid)


class TestSelectInterest:
    def test_strict_threshold(self):
        gt = [_gt([0, 0, 0], occlusion=0.49), _gt([1, 0, 0], occlusion=0.5)]
        assert select_interest(gt, 0.5) == [0]

    def test_empty(self):
        assert select_interest([], 0.5) == []

    def test_delta_o_one_keeps_partially_visible(self):
        gt = [_gt([0, 0, 0], occlusion=0.99), _gt([1, 0, 0], occlusion=1.0)]
        assert select_interest(gt, 1.0) == [0]

    def test_invalid_delta_o(self):
        with pytest.raises(DataError):
            select_interest([], 0.0)


class TestMatchScene:
    def test_single_exact_match(self):
        obj = _obj()
        ev = match_scene([_pred([0, 0, 0], 1.0)], [_gt([0, 0, 0])], obj, delta=0.1)
        assert ev.n_tp == 1 and ev.n_fp == 0 and ev.n_fn == 0

    def test_duplicate_is_false_positive(self):
        obj = _obj()
        delta = 0.1 * obj.diameter
        preds = [_pred([0, 0, 0], 0.9, 0), _pred([delta / 4, 0, 0], 0.8, 1)]
        ev = match_scene(preds, [_gt([0, 0, 0])], obj, delta=delta)
        assert ev.n_tp == 1 and ev.n_fp == 1 and ev.n_fn == 0
        assert ev.tp[0] == (0, 0) and ev.fp == (1,)

    def test_occluded_instance_is_neutral(self):
        obj = _obj()
        ev = match_scene([_pred([0, 0, 0], 1.0)], [_gt([0, 0, 0], occlusion=0.8)],
                         obj, delta=0.1)
        assert ev.n_tp == 0 and ev.n_fp == 0 and ev.n_fn == 0
        assert ev.n_uninteresting_matches == 1

    def test_no_predictions(self):
        obj = _obj()
        ev = match_scene([], [_gt([0, 0, 0]), _gt([1, 0, 0], occlusion=0.9)], obj, delta=0.1)
        assert ev.n_tp == 0 and ev.n_fp == 0 and ev.fn == (0,)

    def test_no_gt(self):
        obj = _obj()
        ev = match_scene([_pred([0, 0, 0], 1.0)], [], obj, delta=0.1)
        assert ev.fp == (0,) and ev.n_tp == 0 and ev.n_fn == 0

    def test_equidistant_tie_goes_to_higher_score(self):
        obj = _obj()
        preds = [_pred([0, 0, 0], 0.5, 0), _pred([0, 0, 0], 0.9, 1)]
        ev = match_scene(preds, [_gt([0, 0, 0])], obj, delta=0.1)
        assert ev.tp == ((1, 0),)
        assert ev.fp == (0,)

    def test_partition_invariant(self, rng):
        obj = _obj("cyclic2")
        delta = 0.1 * obj.diameter
        for _ in range(50):
            preds, gt = random_scene(rng, obj, delta)
            ev = match_scene(preds, gt, obj, delta)
            assert ev.n_tp + ev.n_fn == len(select_interest(gt, DEFAULT_DELTA_O))

    @pytest.mark.parametrize("name", ["trivial", "cyclic2", "revolution"])
    def test_matches_bruteforce_oracle(self, name, rng):
        obj = _obj(name)
        delta = 0.1 * obj.diameter
        for _ in range(100):
            preds, gt = random_scene(rng, obj, delta)
            ev = match_scene(preds, gt, obj, delta)
            tp, fp, fn, n_unint = brute_match(preds, gt, obj, delta, DEFAULT_DELTA_O)
            assert sorted(ev.tp) == sorted(tp)
            assert sorted(ev.fp) == sorted(fp)
            assert list(ev.fn) == fn
            assert ev.n_uninteresting_matches == n_unint

    def test_adding_stray_prediction_only_adds_fp(self, rng):
        obj = _obj()
        delta = 0.1 * obj.diameter
        gt = [_gt([0, 0, 0]), _gt([1, 0, 0])]
        preds = [_pred([0, 0, 0], 0.9, 0)]
        before = match_scene(preds, gt, obj, delta)
        preds_after = preds + [_pred([5.0, 5.0, 5.0], 0.5, 1)]
        after = match_scene(preds_after, gt, obj, delta)
        assert after.n_tp == before.n_tp and after.n_fn == before.n_fn
        assert after.n_fp == before.n_fp + 1


class TestPrecisionRecall:
    def test_formula(self):
        ev = SceneEval(tp=((0, 0), (1, 1), (2, 2)), fp=(3,), fn=(3,))
        assert precision_recall(ev) == (0.75, 0.75)

    def test_undefined_precision(self):
        ev = SceneEval()
        precision, recall = precision_recall(ev)
        assert precision is None and recall is None

    def test_perfect(self):
        ev = SceneEval(tp=((0, 0), (1, 1)))
        assert precision_recall(ev) == (1.0, 1.0)


class TestRecallLimited:
    def test_single_result_out_of_many(self):
        ev = SceneEval(tp=((0, 0),), fn=tuple(range(1, 10)))
        assert recall_limited(ev, 1) == 1.0

    def test_saturates_to_plain_recall(self):
        ev = SceneEval(tp=((0, 0), (1, 1)), fn=(2, 3))
        assert recall_limited(ev, 100) == precision_recall(ev)[1]

    def test_partial(self):
        ev = SceneEval(tp=((0, 0), (1, 1)), fn=(2, 3, 4))
        assert recall_limited(ev, 3) == pytest.approx(2 / 3)

    def test_invalid_n(self):
        with pytest.raises(DataError):
            recall_limited(SceneEval(), 0)


def _two_scene_fixture(obj):
    """The hand-evaluated two-scene PR fixture.

    Scene A: one interest instance, one matching prediction at score 0.9.
    Scene B: one interest instance, a non-matching prediction at score 0.8
    and a matching one at score 0.7. Sweeping thresholds 0.9, 0.8, 0.7 gives
    (precision, recall) = (1, .5), (.5, .5), (2/3, 1), hence
    AP = 0.5 * 1 + 0.5 * (0.5 + 2/3) / 2 = 19/24 and AP1 = 0.5.
    """
    delta = 0.1 * obj.diameter
    scene_a = ([_pred([0, 0, 0], 0.9, 0)], [_gt([0, 0, 0])])
    scene_b = ([_pred([3 * delta, 0, 0], 0.8, 0), _pred([0, 0, 0], 0.7, 1)],
               [_gt([0, 0, 0])])
    return [scene_a, scene_b], delta


class TestPrCurve:
    def test_hand_computed_two_scene_fixture(self):
        obj = _obj()
        dataset, delta = _two_scene_fixture(obj)
        curve = pr_curve(dataset, obj, delta)
        assert [(p, r) for _, p, r in curve.points] == [
            (1.0, 0.5), (0.5, 0.5), (pytest.approx(2 / 3), 1.0)]
        assert curve.ap == pytest.approx(19 / 24, abs=1e-12)

    def test_hand_computed_ap1(self):
        obj = _obj()
        dataset, delta = _two_scene_fixture(obj)
        assert ap_at_n(dataset, obj, delta, n=1) == pytest.approx(0.5, abs=1e-12)

    def test_ap_n_huge_equals_ap(self):
        obj = _obj()
        dataset, delta = _two_scene_fixture(obj)
        assert ap_at_n(dataset, obj, delta, n=10) == pytest.approx(
            pr_curve(dataset, obj, delta).ap, abs=1e-12)

    def test_perfect_detector(self):
        obj = _obj()
        delta = 0.1 * obj.diameter
        dataset = [([_pred([0, 0, 0], 1.0, 0), _pred([9, 0, 0], 1.0, 1)],
                    [_gt([0, 0, 0]), _gt([9, 0, 0])])]
        curve = pr_curve(dataset, obj, delta)
        assert curve.points == ((1.0, 1.0, 1.0),)
        assert curve.ap == 1.0
        assert ap_at_n(dataset, obj, delta, n=1) == 1.0

    def test_null_detector(self):
        obj = _obj()
        delta = 0.1 * obj.diameter
        dataset = [([_pred([5, 5, 5], 0.9, 0)], [_gt([0, 0, 0])])]
        assert pr_curve(dataset, obj, delta).ap == 0.0

    def test_empty_dataset_rejected(self):
        with pytest.raises(DataError):
            pr_curve([], _obj(), 0.1)

    def test_score_scaling_invariance(self, rng):
        obj = _obj()
        delta = 0.1 * obj.diameter
        dataset = []
        for _ in range(4):
            preds, gt = random_scene(rng, obj, delta)
            dataset.append((preds, gt))
        base = pr_curve(dataset, obj, delta)
        scaled_dataset = [([ScoredPose(p.pose, 7.5 * p.score, p.id) for p in preds], gt)
                          for preds, gt in dataset]
        scaled = pr_curve(scaled_dataset, obj, delta)
        assert [(p, r) for _, p, r in base.points] == [(p, r) for _, p, r in scaled.points]
        assert scaled.ap == pytest.approx(base.ap, abs=1e-12)

    def test_recall_monotone_when_gt_well_separated(self, rng):
        # recall is non-increasing as the threshold rises when ground truths
        # are farther than 2 delta apart (mutual-nearest stealing impossible)
        obj = _obj()
        delta = 0.1 * obj.diameter
        gt = [_gt([3.0 * i, 0, 0]) for i in range(5)]
        preds = []
        for i in range(5):
            preds.append(_pred([3.0 * i + float(rng.uniform(-delta, delta)), 0, 0],
                               float(rng.random()), i))
        preds.append(_pred([50, 0, 0], 0.99, 6))
        curve = pr_curve([(preds, gt)], obj, delta)
        recalls = [r for _, _, r in curve.points]  # descending threshold order
        assert all(r1 <= r2 for r1, r2 in zip(recalls, recalls[1:]))

    def test_per_scene_macro_average(self):
        obj = _obj()
        dataset, delta = _two_scene_fixture(obj)
        # scene A alone: AP 1; scene B alone: points (0,?) .8 -> precision 0,
        # then 0.5 precision at recall 1: extended to recall 0 at precision 0
        macro = per_scene_average_precision(dataset, obj, delta)
        assert macro == pytest.approx((1.0 + 0.5) / 2, abs=1e-12)


class TestDefaults:
    def test_paper_constants(self):
        assert DEFAULT_DELTA_FRACTION == 0.1
        assert DEFAULT_DELTA_O == 0.5
        assert DEFAULT_KEEP == 20
