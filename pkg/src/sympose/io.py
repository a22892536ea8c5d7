"""File formats: pose files, scored-pose JSONL, scene ground truth, camera
and correspondence descriptors, PGM-16 images, evaluation reports.

All JSON emitted by the package carries a "format_version" field and is
written with sorted keys, so identical inputs give byte-identical files.
Floats round-trip exactly (repr serialization).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .evaluation import GroundTruthInstance, SceneEval
from .pnp import CameraModel, CorrespondenceSet
from .pose import Pose, ScoredPose

FORMAT_VERSION = 1


def _check_version(payload, path):
    version = payload.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format_version {version}")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read {path}: {e}") from e


def dump_json(payload, path):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# --- single poses: a JSON array of 12 floats (row-major rotation + translation)
# or one CSV row with the same 12 numbers.

def read_pose(path) -> Pose:
    path = Path(path)
    text = path.read_text().strip()
    if not text:
        raise DataError(f"{path}: empty pose file")
    if text.startswith("["):
        try:
            values = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: bad pose JSON: {e}") from e
    else:
        try:
            values = [float(x) for x in text.replace(",", " ").split()]
        except ValueError as e:
            raise DataError(f"{path}: bad pose CSV: {e}") from e
    try:
        return Pose.from_flat(values)
    except DataError as e:
        raise DataError(f"{path}: {e}") from e


def write_pose(pose: Pose, path):
    Path(path).write_text(json.dumps(pose.to_flat()) + "\n")


# --- scored poses: JSON lines, one {"R": [9], "t": [3], "score": s, "id": i} per line.

def read_scored_poses(path):
    out = []
    path = Path(path)
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            pose = Pose(np.asarray(rec["R"], dtype=float).reshape(3, 3),
                        np.asarray(rec["t"], dtype=float))
            out.append(ScoredPose(pose=pose, score=float(rec["score"]),
                                  id=rec.get("id", lineno - 1)))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
            raise DataError(f"{path}:{lineno}: bad scored pose: {e}") from e
    return out


def write_scored_poses(scored, path):
    lines = []
    for sp in scored:
        lines.append(json.dumps({
            "R": [float(x) for x in sp.pose.rotation.reshape(9)],
            "t": [float(x) for x in sp.pose.translation],
            "score": float(sp.score),
            "id": sp.id,
        }, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# --- scene ground truth.

def camera_to_json(cam: CameraModel) -> dict:
    return {
        "K": [float(x) for x in cam.intrinsics.reshape(9)],
        "R": [float(x) for x in cam.rotation.reshape(9)],
        "t": [float(x) for x in cam.translation],
    }


def camera_from_json(payload) -> CameraModel:
    try:
        return CameraModel(
            intrinsics=np.asarray(payload["K"], dtype=float).reshape(3, 3),
            rotation=np.asarray(payload["R"], dtype=float).reshape(3, 3),
            translation=np.asarray(payload["t"], dtype=float))
    except (KeyError, ValueError, TypeError) as e:
        raise DataError(f"bad camera spec: {e}") from e


def write_scene(instances, path, camera: CameraModel | None = None,
                bin_bounds=None, extra=None):
    payload = {
        "format_version": FORMAT_VERSION,
        "instances": [{
            "R": [float(x) for x in inst.pose.rotation.reshape(9)],
            "t": [float(x) for x in inst.pose.translation],
            "occlusion_rate": float(inst.occlusion_rate),
        } for inst in instances],
    }
    if camera is not None:
        payload["camera"] = camera_to_json(camera)
    if bin_bounds is not None:
        payload["bin"] = {"min": [float(x) for x in bin_bounds[0]],
                          "max": [float(x) for x in bin_bounds[1]]}
    if extra:
        payload.update(extra)
    dump_json(payload, path)


def read_scene(path):
    """Ground-truth instances of one scene file (occlusion defaults to 0)."""
    payload = load_json(path)
    _check_version(payload, path)
    if "instances" not in payload:
        raise DataError(f"{path}: missing 'instances'")
    out = []
    for i, rec in enumerate(payload["instances"]):
        try:
            pose = Pose(np.asarray(rec["R"], dtype=float).reshape(3, 3),
                        np.asarray(rec["t"], dtype=float))
            out.append(GroundTruthInstance(pose=pose,
                                           occlusion_rate=float(rec.get("occlusion_rate", 0.0))))
        except (KeyError, ValueError, TypeError, DataError) as e:
            raise DataError(f"{path}: instance {i}: {e}") from e
    return out


def read_scene_camera(path) -> CameraModel | None:
    payload = load_json(path)
    return camera_from_json(payload["camera"]) if "camera" in payload else None


# --- PnP correspondence files.

def read_correspondences(path):
    """Cameras plus per-instance correspondence sets.

    Layout: {"cameras": [{K, R, t}, ...], "instances": [{"id": ...,
    "correspondences": [{"camera": j, "X": [3], "p": [2]}, ...]}, ...]}.
    Returns (cameras, [(instance_id, CorrespondenceSet), ...]).
    """
    payload = load_json(path)
    _check_version(payload, path)
    try:
        cams = [camera_from_json(c) for c in payload["cameras"]]
        instances = []
        for rec in payload["instances"]:
            per_cam_3d = [[] for _ in cams]
            per_cam_2d = [[] for _ in cams]
            for c in rec["correspondences"]:
                j = int(c["camera"])
                if not 0 <= j < len(cams):
                    raise DataError(f"camera index {j} out of range")
                per_cam_3d[j].append([float(x) for x in c["X"]])
                per_cam_2d[j].append([float(x) for x in c["p"]])
            corr = CorrespondenceSet(
                tuple(np.asarray(a, dtype=float).reshape(-1, 3) for a in per_cam_3d),
                tuple(np.asarray(a, dtype=float).reshape(-1, 2) for a in per_cam_2d))
            instances.append((rec.get("id", len(instances)), corr))
    except (KeyError, ValueError, TypeError) as e:
        raise DataError(f"{path}: bad correspondence file: {e}") from e
    return cams, instances


# --- PGM-16 (P5, maxval 65535, big-endian), used for depth and id maps.

def write_pgm16(array, path):
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise DataError("PGM-16 wants a 2D array")
    if arr.dtype != np.uint16:
        raise DataError(f"PGM-16 wants uint16 data, got {arr.dtype}")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii"))
        fh.write(arr.astype(">u2").tobytes())


def read_pgm16(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5" or parts[3] != b"65535":
        raise DataError(f"{path}: not a 16-bit PGM")
    width, height = int(parts[1]), int(parts[2])
    pixels = np.frombuffer(parts[4][: width * height * 2], dtype=">u2")
    if pixels.size != width * height:
        raise DataError(f"{path}: truncated PGM payload")
    return pixels.reshape(height, width).astype(np.uint16)


DEPTH_QUANTUM = 1e-4  # depth PGM unit, in model length units


def depth_to_u16(depth, quantum: float = DEPTH_QUANTUM) -> np.ndarray:
    """Quantize a depth buffer for PGM export; 0 stays 'no reading'."""
    return np.clip(np.round(np.asarray(depth) / quantum), 0, 65535).astype(np.uint16)


def ids_to_u16(ids) -> np.ndarray:
    """Shift instance ids by one for PGM export (0 = background)."""
    arr = np.asarray(ids).astype(np.int64) + 1
    if arr.max(initial=0) > 65535 or arr.min(initial=0) < 0:
        raise DataError("instance ids exceed the PGM-16 range")
    return arr.astype(np.uint16)


# --- evaluation report.

def scene_eval_to_json(name, ev: SceneEval, precision, recall) -> dict:
    return {
        "scene": name,
        "tp": [[int(p), int(t)] for p, t in ev.tp],
        "fp": [int(p) for p in ev.fp],
        "fn": [int(t) for t in ev.fn],
        "n_uninteresting_matches": ev.n_uninteresting_matches,
        "precision": precision,
        "recall": recall,
    }


def write_report(path, per_scene, ap, ap1, ap3, delta, delta_o, extra=None):
    payload = {
        "format_version": FORMAT_VERSION,
        "scenes": per_scene,
        "AP": ap,
        "AP1": ap1,
        "AP3": ap3,
        "delta": delta,
        "delta_o": delta_o,
    }
    if extra:
        payload.update(extra)
    dump_json(payload, path)


def write_pr_csv(curve, path):
    lines = ["threshold,precision,recall"]
    for threshold, precision, recall in curve.points:
        lines.append(f"{threshold!r},{precision!r},{recall!r}")
    Path(path).write_text("\n".join(lines) + "\n")
