"""sympose: symmetry-aware 6D pose distances, pose-space operations and
detection evaluation for scenes of many rigid-object instances."""

from .errors import (AmbiguousMeanError, DataError, MeshError, NumericalError,
                     SolverError, SymmetryError, SymposeError)
from .evaluation import (GroundTruthInstance, PRCurve, SceneEval, ap_at_n,
                         match_scene, pr_curve, precision_recall, recall_limited,
                         select_interest)
from .mesh import TriangleMesh, compute_lambda, load_mesh, surface_centroid
from .metric import (adi_dissimilarity, adi_symmetric, distance,
                     distance_bruteforce, match_threshold, representatives,
                     representative_points)
from .model import ObjectModel, load_object, to_centered_frame, to_original_frame
from .pnp import (CameraModel, CorrespondenceSet, PnPResult,
                  reprojection_residuals, solve_multiview_pnp)
from .pose import Pose, ScoredPose, random_pose, random_rotation
from .pose_space import (PoseIndex, average, build_index, filter_duplicates,
                         mean_shift, pose_from_representative)
from .render import DepthImage, occlusion_rates, render_depth
from .scene import SceneSpec, annotate_scene, sample_scene, top_view_camera
from .symmetry import ProperSymmetryGroup, validate_group

__version__ = "0.1.0"

__all__ = [
    "AmbiguousMeanError", "CameraModel", "CorrespondenceSet", "DataError",
    "DepthImage", "GroundTruthInstance", "MeshError", "NumericalError",
    "ObjectModel", "PRCurve", "PnPResult", "Pose", "PoseIndex",
    "ProperSymmetryGroup", "SceneEval", "SceneSpec", "ScoredPose",
    "SolverError", "SymmetryError", "SymposeError", "TriangleMesh",
    "adi_dissimilarity", "adi_symmetric", "annotate_scene", "ap_at_n",
    "average", "build_index", "compute_lambda", "distance",
    "distance_bruteforce", "filter_duplicates", "load_mesh", "load_object",
    "match_scene", "match_threshold", "mean_shift", "occlusion_rates",
    "pose_from_representative", "pr_curve", "precision_recall", "random_pose",
    "random_rotation", "recall_limited", "render_depth",
    "representative_points", "representatives", "reprojection_residuals",
    "sample_scene", "select_interest", "solve_multiview_pnp",
    "surface_centroid", "to_centered_frame", "to_original_frame",
    "top_view_camera", "validate_group",
]
