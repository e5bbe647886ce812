"""Projective and second-order rigidity invariants of medial axes."""
from .branch import (
    AngleQuad,
    AngleTriple,
    BranchConfig2D,
    StratumPointData,
    check_x_branch_compatibility,
    lift_config,
    reduce_to_transverse_plane,
    solve_y_branch_angles,
    validate_blum_config,
    x_branch_beta_family,
    x_branch_config,
    y_branch_config,
)
from .extract import BoundarySample, branch_config_from_graph, extract_medial_2d
from .graph import MedialGraph, parse_medial_graph, serialize
from .invariants import (
    compare_four_sheet,
    compare_y_branch,
    linear_distortion_analysis,
    local_uniqueness_probe,
    triple_cross_ratio,
    triple_from_config,
    triple_from_stratum,
    triple_map_jacobian,
)
from .projective import (
    HyperplanePencil,
    LinePencil2D,
    ProjectiveScalar,
    cross_ratio,
    hyperplane_cross_ratio,
    line_cross_ratio,
    orbit,
    orbit_distance,
)
from .shape_operator import (
    DiffeoPatch,
    MedialSheetPatch,
    check_compatibility,
    distortion_matrix,
    radial_line_variant,
    radial_shape_matrix,
    scale_sigma,
    verify_compatibility,
)
from .svg import emit_svg

__version__ = "0.1.0"
