"""Command-line surface: reproducible batch workflows over the library.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every command is deterministic given identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import DataError, NumericalError, SymposeError
from .evaluation import (DEFAULT_DELTA_FRACTION, DEFAULT_DELTA_O, DEFAULT_KEEP,
                         ap_at_n, match_scene, per_scene_average_precision,
                         pr_curve, precision_recall)
from .metric import adi_dissimilarity, adi_symmetric, distance
from .model import load_object, to_centered_frame
from .pnp import solve_multiview_pnp
from .pose import ScoredPose
from .pose_space import filter_duplicates, mean_shift
from .render import occlusion_rates, render_depth
from .scene import SceneSpec, annotate_scene


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_object_arg(p):
    p.add_argument("--object", required=True, help="object descriptor JSON")


def _add_frame_arg(p):
    p.add_argument("--pose-frame", choices=("centered", "original"), default="centered",
                   help="frame the input poses are expressed in (default: centered)")


def _convert(pose, obj, frame):
    return to_centered_frame(pose, obj) if frame == "original" else pose


def _parse_size(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as e:
        raise DataError(f"bad --size '{text}', expected WxH") from e


def build_parser():
    parser = _Parser(prog="sympose",
                     description="Symmetry-aware pose distances and detection evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="distance between two pose files, plus the "
                                        "vertex-matching dissimilarity for comparison")
    _add_object_arg(p)
    _add_frame_arg(p)
    p.add_argument("pose_a")
    p.add_argument("pose_b")
    p.add_argument("--delta-fraction", type=float, default=DEFAULT_DELTA_FRACTION,
                   help="match threshold as a fraction of the diameter (default 0.1)")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("evaluate", help="match predictions against ground truth and report "
                                        "precision/recall, AP, AP1, AP3")
    _add_object_arg(p)
    _add_frame_arg(p)
    p.add_argument("--gt", required=True, help="directory of ground-truth scene JSON files")
    p.add_argument("--pred", required=True,
                   help="directory of prediction JSONL files (same stem as the scene)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--pr-csv", help="also write the PR curve as CSV")
    p.add_argument("--delta-fraction", type=float, default=DEFAULT_DELTA_FRACTION)
    p.add_argument("--delta-o", type=float, default=DEFAULT_DELTA_O)
    p.add_argument("--per-scene-ap", action="store_true",
                   help="also report the macro (per-scene averaged) AP")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("filter", help="score-ordered duplicate filtering")
    _add_object_arg(p)
    _add_frame_arg(p)
    p.add_argument("--hypotheses", required=True, help="scored poses, JSON lines")
    p.add_argument("--out", required=True)
    p.add_argument("--keep", type=int, default=DEFAULT_KEEP)
    p.add_argument("--radius-fraction", type=float, default=DEFAULT_DELTA_FRACTION,
                   help="duplicate radius as a fraction of the diameter (default 0.1)")
    p.add_argument("--radius", type=float, help="absolute duplicate radius (overrides fraction)")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("meanshift", help="mode finding over pose votes")
    _add_object_arg(p)
    _add_frame_arg(p)
    p.add_argument("--votes", required=True, help="scored poses, JSON lines")
    p.add_argument("--out", required=True, help="modes output, JSON lines (score = density)")
    p.add_argument("--bandwidth", type=float, help="absolute bandwidth")
    p.add_argument("--bandwidth-fraction", type=float, default=DEFAULT_DELTA_FRACTION,
                   help="bandwidth as a fraction of the diameter (default 0.1)")
    p.add_argument("--kernel", choices=("epanechnikov", "gaussian"), default="epanechnikov")
    p.add_argument("--seeds", type=int, default=DEFAULT_KEEP,
                   help="number of highest-scored votes used as seeds (default 20)")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--merge-fraction", type=float, default=0.5,
                   help="mode merge radius as a fraction of the bandwidth (default 0.5)")
    p.set_defaults(func=cmd_meanshift)

    p = sub.add_parser("annotate", help="solve instance poses from multiview marker "
                                        "correspondences")
    p.add_argument("--correspondences", required=True)
    p.add_argument("--out", required=True, help="ground-truth scene JSON path")
    p.add_argument("--max-rms", type=float, default=1.0,
                   help="discard instances with RMS reprojection error above this (px)")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("gen-scenes", help="sample annotated synthetic scenes")
    _add_object_arg(p)
    p.add_argument("--count", type=int, required=True, help="number of scenes")
    p.add_argument("--instances", type=int, required=True, help="instances per scene")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--bin", default="auto",
                   help="bin as x0,y0,z0,x1,y1,z1 or 'auto' (wide shallow bin from the "
                        "object diameter)")
    p.add_argument("--size", default="640x480", help="render size WxH")
    p.add_argument("--camera", help="camera JSON (default: top view fitted to the bin)")
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("occlusion", help="recompute occlusion rates for a scene file")
    _add_object_arg(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--camera", help="camera JSON (default: the scene file's camera)")
    p.add_argument("--size", default="640x480")
    p.add_argument("--out", required=True, help="output JSON")
    p.set_defaults(func=cmd_occlusion)

    return parser


def _check_fraction(value, name):
    if not 0.0 < value <= 1.0:
        raise DataError(f"{name} must be in (0, 1], got {value}")


def cmd_distance(args):
    _check_fraction(args.delta_fraction, "--delta-fraction")
    obj = load_object(args.object)
    pose_a = _convert(io.read_pose(args.pose_a), obj, args.pose_frame)
    pose_b = _convert(io.read_pose(args.pose_b), obj, args.pose_frame)
    d = distance(pose_a, pose_b, obj)
    delta = args.delta_fraction * obj.diameter
    print(f"distance: {d!r}")
    print(f"adi_a_to_b: {adi_dissimilarity(pose_a, pose_b, obj)!r}")
    print(f"adi_b_to_a: {adi_dissimilarity(pose_b, pose_a, obj)!r}")
    print(f"adi_symmetric: {adi_symmetric(pose_a, pose_b, obj)!r}")
    print(f"delta: {delta!r}")
    print("verdict:", "MATCH" if d < delta else "NO MATCH")
    return 0


def _paired_scene_files(gt_dir, pred_dir):
    gt_files = sorted(Path(gt_dir).glob("*.json"))
    if not gt_files:
        raise DataError(f"no scene files in {gt_dir}")
    pairs, missing = [], []
    for gt_path in gt_files:
        for candidate in (Path(pred_dir) / f"{gt_path.stem}.jsonl",
                          Path(pred_dir) / f"{gt_path.stem}.json"):
            if candidate.exists():
                pairs.append((gt_path, candidate))
                break
        else:
            missing.append(gt_path.stem)
    if missing:
        raise DataError("missing prediction files for scenes: " + ", ".join(missing))
    return pairs


def cmd_evaluate(args):
    _check_fraction(args.delta_fraction, "--delta-fraction")
    _check_fraction(args.delta_o, "--delta-o")
    obj = load_object(args.object)
    delta = args.delta_fraction * obj.diameter
    pairs = _paired_scene_files(args.gt, args.pred)
    dataset, names = [], []
    for gt_path, pred_path in pairs:
        gt = io.read_scene(gt_path)
        preds = [ScoredPose(_convert(sp.pose, obj, args.pose_frame), sp.score, sp.id)
                 for sp in io.read_scored_poses(pred_path)]
        dataset.append((preds, gt))
        names.append(gt_path.stem)

    per_scene = []
    for name, (preds, gt) in zip(names, dataset):
        ev = match_scene(preds, gt, obj, delta, args.delta_o)
        precision, recall = precision_recall(ev)
        per_scene.append(io.scene_eval_to_json(name, ev, precision, recall))

    curve = pr_curve(dataset, obj, delta, args.delta_o)
    ap1 = ap_at_n(dataset, obj, delta, args.delta_o, n=1)
    ap3 = ap_at_n(dataset, obj, delta, args.delta_o, n=3)
    extra = {}
    if args.per_scene_ap:
        extra["AP_per_scene"] = per_scene_average_precision(dataset, obj, delta, args.delta_o)
    io.write_report(args.out, per_scene, curve.ap, ap1, ap3, delta, args.delta_o, extra=extra)
    if args.pr_csv:
        io.write_pr_csv(curve, args.pr_csv)
    print(f"scenes: {len(dataset)}")
    print(f"AP: {curve.ap!r}")
    print(f"AP1: {ap1!r}")
    print(f"AP3: {ap3!r}")
    return 0


def cmd_filter(args):
    obj = load_object(args.object)
    hyps = [ScoredPose(_convert(sp.pose, obj, args.pose_frame), sp.score, sp.id)
            for sp in io.read_scored_poses(args.hypotheses)]
    radius = args.radius if args.radius is not None else args.radius_fraction * obj.diameter
    kept = filter_duplicates(hyps, obj, radius=radius, keep=args.keep)
    io.write_scored_poses(kept, args.out)
    print(f"retained {len(kept)} of {len(hyps)} hypotheses")
    return 0


def cmd_meanshift(args):
    obj = load_object(args.object)
    votes = [ScoredPose(_convert(sp.pose, obj, args.pose_frame), sp.score, sp.id)
             for sp in io.read_scored_poses(args.votes)]
    bandwidth = args.bandwidth if args.bandwidth is not None \
        else args.bandwidth_fraction * obj.diameter
    modes = mean_shift(votes, obj, bandwidth=bandwidth, kernel=args.kernel,
                       n_seeds=args.seeds, max_iter=args.max_iter,
                       merge_radius=args.merge_fraction * bandwidth)
    io.write_scored_poses(
        [ScoredPose(pose, density, i) for i, (pose, density) in enumerate(modes)], args.out)
    print(f"modes: {len(modes)}")
    return 0


def cmd_annotate(args):
    from .evaluation import GroundTruthInstance

    cams, instances = io.read_correspondences(args.correspondences)
    solved, discarded = [], []
    for inst_id, corr in instances:
        try:
            result = solve_multiview_pnp(corr, cams)
        except SymposeError as e:
            discarded.append((inst_id, str(e)))
            continue
        if not result.converged or result.rms_residual > args.max_rms:
            discarded.append((inst_id, f"rms {result.rms_residual:.3g} px, "
                                       f"converged={result.converged}"))
            continue
        solved.append(GroundTruthInstance(pose=result.pose, occlusion_rate=0.0))
    io.write_scene(solved, args.out)
    for inst_id, reason in discarded:
        print(f"discarded instance {inst_id}: {reason}", file=sys.stderr)
    print(f"solved {len(solved)} of {len(instances)} instances")
    if instances and not solved:
        raise NumericalError("all instances failed to solve")
    return 0


def _parse_bin(text, obj):
    if text == "auto":
        d = obj.diameter
        return np.array([0.0, 0.0, 0.0]), np.array([8.0 * d, 8.0 * d, 1.1 * d])
    try:
        values = [float(x) for x in text.split(",")]
        lo, hi = np.array(values[:3]), np.array(values[3:6])
        if len(values) != 6:
            raise ValueError("need 6 numbers")
    except ValueError as e:
        raise DataError(f"bad --bin '{text}': {e}") from e
    return lo, hi


def cmd_gen_scenes(args):
    obj = load_object(args.object)
    size = _parse_size(args.size)
    lo, hi = _parse_bin(args.bin, obj)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    camera = io.camera_from_json(io.load_json(args.camera)) if args.camera else None
    seeds = np.random.SeedSequence(args.seed).generate_state(args.count)
    for k in range(args.count):
        spec = SceneSpec(instance_count=args.instances, bin_min=lo, bin_max=hi,
                         rng_seed=int(seeds[k]))
        instances, cam = annotate_scene(spec, obj, cam=camera, size=size)
        stem = out_dir / f"scene_{k:03d}"
        io.write_scene(instances, f"{stem}.json", camera=cam, bin_bounds=(lo, hi),
                       extra={"depth_quantum": io.DEPTH_QUANTUM})
        image = render_depth([inst.pose for inst in instances], obj, cam, size)
        io.write_pgm16(io.depth_to_u16(image.depth), f"{stem}_depth.pgm")
        io.write_pgm16(io.ids_to_u16(image.instance_ids), f"{stem}_ids.pgm")
    print(f"wrote {args.count} scenes to {out_dir}")
    return 0


def cmd_occlusion(args):
    obj = load_object(args.object)
    size = _parse_size(args.size)
    instances = io.read_scene(args.scene)
    if args.camera:
        cam = io.camera_from_json(io.load_json(args.camera))
    else:
        cam = io.read_scene_camera(args.scene)
        if cam is None:
            raise DataError("scene file has no camera; pass --camera")
    rates = occlusion_rates([inst.pose for inst in instances], obj, cam, size)
    io.dump_json({"format_version": io.FORMAT_VERSION,
                   "occlusion_rates": [float(r) for r in rates]}, args.out)
    print(f"wrote occlusion rates for {len(rates)} instances")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as e:
        print(f"sympose: numerical failure: {e}", file=sys.stderr)
        return 3
    except SymposeError as e:
        print(f"sympose: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
