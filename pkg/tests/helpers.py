"""Shared geometry builders and independent oracles for the test suite.

The oracles here deliberately avoid the library code paths they check:
linear scans instead of the kd-tree, direct set definitions instead of
match_scene, per-pixel point-in-triangle tests instead of the raster kernels.
"""

import numpy as np

from sympose import (GroundTruthInstance, ObjectModel, Pose, ScoredPose,
                     TriangleMesh, random_pose)
from sympose.metric import representative_points
from sympose.symmetry import ProperSymmetryGroup

# --------------------------------------------------------------------------
# meshes


def box_mesh(half_sides=(0.5, 0.5, 0.5), divisions=1) -> TriangleMesh:
    """Axis-aligned box centered at the origin, each face a divisions^2 grid."""
    hx, hy, hz = half_sides
    vertices = []
    faces = []

    def add_face(origin, du, dv):
        base = len(vertices)
        n = divisions
        for j in range(n + 1):
            for i in range(n + 1):
                vertices.append(np.asarray(origin) + du * (i / n) + dv * (j / n))
        for j in range(n):
            for i in range(n):
                a = base + j * (n + 1) + i
                b, c, d = a + 1, a + n + 1, a + n + 2
                faces.append((a, b, d))
                faces.append((a, d, c))

    ex, ey, ez = np.eye(3)
    add_face((-hx, -hy, -hz), 2 * hy * ey, 2 * hz * ez)   # x = -hx
    add_face((hx, -hy, -hz), 2 * hz * ez, 2 * hy * ey)    # x = +hx
    add_face((-hx, -hy, -hz), 2 * hz * ez, 2 * hx * ex)   # y = -hy
    add_face((-hx, hy, -hz), 2 * hx * ex, 2 * hz * ez)    # y = +hy
    add_face((-hx, -hy, -hz), 2 * hx * ex, 2 * hy * ey)   # z = -hz
    add_face((-hx, -hy, hz), 2 * hy * ey, 2 * hx * ex)    # z = +hz
    return TriangleMesh(np.array(vertices), np.array(faces))


_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere_mesh(subdivisions=2, radius=1.0) -> TriangleMesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = list(_ICO_FACES)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return TriangleMesh(np.array(verts) * radius, np.array(faces))


def cylinder_mesh(radius=0.3, height=1.0, segments=48) -> TriangleMesh:
    ang = 2 * np.pi * np.arange(segments) / segments
    bottom = np.stack([radius * np.cos(ang), radius * np.sin(ang),
                       np.full(segments, -height / 2)], axis=1)
    top = bottom + np.array([0.0, 0.0, height])
    verts = np.concatenate([bottom, top, [[0, 0, -height / 2]], [[0, 0, height / 2]]])
    cb, ct = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [(i, j, segments + i), (j, segments + j, segments + i)]
        faces += [(cb, j, i), (ct, segments + i, segments + j)]
    return TriangleMesh(verts, np.array(faces))


def cup_mesh(radius=0.3, height=1.0, segments=64, rings=8) -> TriangleMesh:
    """Open cylinder with a bottom cap: shape nearly identical to its own
    upside-down flip, which is what defeats vertex-matching dissimilarities."""
    zs = np.linspace(-height / 2, height / 2, rings + 1)
    ang = 2 * np.pi * np.arange(segments) / segments
    verts = []
    for z in zs:
        verts.append(np.stack([radius * np.cos(ang), radius * np.sin(ang),
                               np.full(segments, z)], axis=1))
    verts = np.concatenate(verts + [[[0.0, 0.0, -height / 2]]])
    center = len(verts) - 1
    faces = []
    for ring in range(rings):
        base = ring * segments
        for i in range(segments):
            j = (i + 1) % segments
            faces += [(base + i, base + j, base + segments + i),
                      (base + j, base + segments + j, base + segments + i)]
    for i in range(segments):
        faces.append((center, (i + 1) % segments, i))
    return TriangleMesh(verts, np.array(faces))


def single_triangle_mesh(a=(0, 0, 0), b=(1, 0, 0), c=(0, 1, 0)) -> TriangleMesh:
    return TriangleMesh(np.array([a, b, c], dtype=float), np.array([[0, 1, 2]]))


def write_obj(mesh: TriangleMesh, path):
    lines = [f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}" for v in mesh.vertices]
    lines += [f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in mesh.triangles]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ply_ascii(mesh: TriangleMesh, path):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(mesh.vertices)}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write(f"element face {len(mesh.triangles)}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        for v in mesh.vertices:
            fh.write(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def write_ply_binary(mesh: TriangleMesh, path):
    import struct
    with open(path, "wb") as fh:
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {len(mesh.vertices)}\n"
            "property double x\nproperty double y\nproperty double z\n"
            f"element face {len(mesh.triangles)}\n"
            "property list uchar int vertex_indices\nend_header\n")
        fh.write(header.encode("ascii"))
        for v in mesh.vertices:
            fh.write(struct.pack("<3d", *v))
        for t in mesh.triangles:
            fh.write(struct.pack("<B3i", 3, *[int(i) for i in t]))


# --------------------------------------------------------------------------
# point-set objects per symmetry class (group-symmetric by construction, the
# precondition under which the closed form and the vertex-sampled oracle are
# the same quantity)


def ring_points(radii_heights, k=12) -> np.ndarray:
    pts = []
    for r, h in radii_heights:
        ang = 2 * np.pi * np.arange(k) / k
        pts.append(np.stack([r * np.cos(ang), r * np.sin(ang), np.full(k, h)], axis=1))
    return np.concatenate(pts)


def orbit_points(seeds, group: ProperSymmetryGroup) -> np.ndarray:
    return np.concatenate([np.asarray(seeds) @ g.T for g in group.rotations])


def make_class_objects(rng, n_seeds=7):
    """One (ObjectModel, centered sample set) per symmetry class.

    Samples are mean-centered so ObjectModel.from_points and the brute-force
    route share the exact discrete second moment.
    """
    out = {}
    finite = {
        "trivial": ProperSymmetryGroup.trivial(),
        "cyclic2": ProperSymmetryGroup.cyclic(2),
        "cyclic6": ProperSymmetryGroup.cyclic(6),
        "icosahedral": ProperSymmetryGroup.icosahedral(),
    }
    for name, group in finite.items():
        pts = orbit_points(rng.normal(size=(n_seeds, 3)), group)
        pts -= pts.mean(axis=0)
        out[name] = (ObjectModel.from_points(pts, group), pts)
    rings = ring_points([(1.0, -0.4), (0.8, 0.1), (0.5, 0.7)])
    for name, group in [("revolution", ProperSymmetryGroup.revolution()),
                        ("revolution_rotoreflection",
                         ProperSymmetryGroup.revolution(rotoreflection=True))]:
        pts = rings - rings.mean(axis=0)
        out[name] = (ObjectModel.from_points(pts, group), pts)
    pts = rng.normal(size=(30, 3))
    pts -= pts.mean(axis=0)
    out["spherical"] = (ObjectModel.from_points(pts, ProperSymmetryGroup.spherical()), pts)
    return out


# --------------------------------------------------------------------------
# independent oracles


def linear_scan_nearest(poses, ids, obj, query: Pose):
    """Plain linear scan; same tie-break (lowest id) as the index contract."""
    q = representative_points(query, obj)[0]
    best_d, best_id = None, None
    for pid, pose in zip(ids, poses):
        reps = representative_points(pose, obj)
        d = np.sqrt(((reps - q) ** 2).sum(axis=1).min())
        if best_d is None or d < best_d or (d == best_d and pid < best_id):
            best_d, best_id = d, pid
    return best_id, float(best_d)


def linear_scan_radius(poses, ids, obj, query: Pose, radius: float):
    q = representative_points(query, obj)[0]
    hits = []
    for pid, pose in zip(ids, poses):
        reps = representative_points(pose, obj)
        d = np.sqrt(((reps - q) ** 2).sum(axis=1).min())
        if d <= radius:
            hits.append((pid, float(d)))
    return sorted(hits, key=lambda x: (x[1], x[0]))


def brute_match(predictions, gt, obj, delta, delta_o):
    """Exhaustive mutual-nearest matcher, straight from the set definitions.

    Returns (tp_pairs, fp_ids, fn_ids, n_uninteresting) using input indices,
    with the documented tie-breaks.
    """
    from sympose.metric import distance

    interest = [j for j, inst in enumerate(gt) if inst.occlusion_rate < delta_o]
    if not predictions or not gt:
        return [], list(range(len(predictions))), list(interest), 0
    d = np.array([[distance(p.pose, t.pose, obj) for t in gt] for p in predictions])
    nearest_gt = []
    for i in range(len(predictions)):
        nearest_gt.append(min(range(len(gt)), key=lambda j: (d[i, j], j)))
    nearest_pred = []
    for j in range(len(gt)):
        nearest_pred.append(min(range(len(predictions)),
                                key=lambda i: (d[i, j], -predictions[i].score, i)))
    tp, fp, fn = [], [], []
    n_unint = 0
    for i in range(len(predictions)):
        j = nearest_gt[i]
        if not (d[i, j] < delta and nearest_pred[j] == i):
            fp.append(i)
        elif j in interest:
            tp.append((i, j))
        else:
            n_unint += 1
    for j in interest:
        i = nearest_pred[j]
        if not (d[i, j] < delta and nearest_gt[i] == j):
            fn.append(j)
    return tp, fp, sorted(fn), n_unint


def random_scene(rng, obj, delta, n_pred_max=6, n_gt_max=6):
    """Random small scene with a mix of matching and stray predictions."""
    n_gt = int(rng.integers(0, n_gt_max + 1))
    n_pred = int(rng.integers(0, n_pred_max + 1))
    gt = [GroundTruthInstance(pose=random_pose(rng, 1.0),
                              occlusion_rate=float(rng.random()))
          for _ in range(n_gt)]
    preds = []
    for i in range(n_pred):
        if n_gt and rng.random() < 0.6:
            base = gt[int(rng.integers(n_gt))].pose
            jitter = rng.normal(scale=delta * 0.5, size=3)
            pose = Pose(base.rotation, base.translation + jitter)
        else:
            pose = random_pose(rng, 1.0)
        preds.append(ScoredPose(pose=pose, score=float(rng.random()), id=i))
    return preds, gt


def planted_vote_fixture(obj, rng, bandwidth, n_clusters=3, per_cluster=100):
    """Clusters of pose votes with isotropic Gaussian noise in representative
    space whose RMS displacement is bandwidth / 3."""
    from sympose.pose import random_rotation
    from sympose.pose_space import pose_from_representative

    centers = [Pose(random_rotation(rng), np.eye(3)[k % 3] * (1.0 + k // 3))
               for k in range(n_clusters)]
    sigma = bandwidth / 3.0
    dim = obj.rep_dim
    votes = []
    for center in centers:
        base = representative_points(center, obj)[0]
        for _ in range(per_cluster):
            noisy = base + rng.normal(scale=sigma / np.sqrt(dim), size=dim)
            votes.append(ScoredPose(pose=pose_from_representative(noisy, obj),
                                    score=float(rng.uniform(0.5, 1.0)), id=len(votes)))
    return centers, votes


def look_at_camera(eye, target, up=(0.0, 0.0, 1.0), focal=800.0, center=(320.0, 240.0)):
    from sympose import CameraModel
    eye = np.asarray(eye, dtype=float)
    z = np.asarray(target, dtype=float) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, np.asarray(up, dtype=float))
    if np.linalg.norm(x) < 1e-9:
        x = np.cross(z, np.array([0.0, 1.0, 0.0]))
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    rot = np.stack([x, y, z])
    k = np.array([[focal, 0.0, center[0]], [0.0, focal, center[1]], [0.0, 0.0, 1.0]])
    return CameraModel(intrinsics=k, rotation=rot, translation=-(rot @ eye))
