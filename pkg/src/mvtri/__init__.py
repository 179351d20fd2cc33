"""Multi-view triangulation with a shifted-inverse-iteration DLT solver."""

from .camera import CameraRig, load_rig, lookat_camera, project, save_rig
from .dlt import (
    DltSystem,
    Observation,
    SiiConfig,
    TriangulationOutput,
    build_dlt_batch,
    build_dlt_matrix,
    smallest_singular_value,
    solve_oracle_batch,
    solve_sii_batch,
    theorem1_constant,
    triangulate_oracle,
    triangulate_sii,
)
from .diffops import mpjpe_2d, mpjpe_3d, soft_argmax, soft_argmax_jacobian, triangulate_sii_with_jacobian
from .ftl import BlockDiagonalTransform, FeatureBlock, encode_scalar, ftl_apply, ftl_canonicalize
from .synth import RigConfig, make_camera_ring, noise_accuracy_sweep, sample_scene, sigma_min_sweep

__version__ = "0.1.0"
