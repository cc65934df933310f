"""Euler characteristic transforms of embedded simplicial complexes.

Exact and logistic-relaxed transforms on sampled direction-threshold grids,
local per-vertex transform features for graphs, a rotation-invariant
transform distance with gradient-based SO(n) alignment, and seeded synthetic
generators plus a CLI for batch runs.
"""

__version__ = "0.1.0"

from .alignment import (
    AlignmentOptions,
    AlignmentResult,
    align,
    hausdorff,
    local_align_distance,
    rotate,
    rotation_invariant_distance,
)
from .complexes import (
    FeaturedGraph,
    GeometricComplex,
    NeighborhoodSpec,
    embed_graph,
    hop_neighborhood,
    is_isomorphic_featured,
    knn_neighborhood,
)
from .datagen import (
    gen_heterophily_graph,
    gen_k_star,
    gen_point_cloud,
    gen_random_complex,
    gen_wedged_spheres,
    measure_edge_homophily,
)
from .ect import (
    EctMatrix,
    LocalEctSet,
    SamplingGrid,
    cost_estimate,
    ect_hard,
    ect_smooth,
    euler_characteristic,
    grid_error_hint,
    local_ect,
    make_grid,
)
from .pipeline import (
    FeatureTable,
    SplitSpec,
    build_features,
    check_ect_isomorphism_agreement,
    feature_importance,
    make_splits,
    probe_neighborhood_recovery,
    subsample_features,
    train_linear,
)
from .rotations import RotationParams, rotation_from_angle

__all__ = [
    "AlignmentOptions",
    "AlignmentResult",
    "EctMatrix",
    "FeatureTable",
    "FeaturedGraph",
    "GeometricComplex",
    "LocalEctSet",
    "NeighborhoodSpec",
    "RotationParams",
    "SamplingGrid",
    "SplitSpec",
    "align",
    "build_features",
    "check_ect_isomorphism_agreement",
    "cost_estimate",
    "ect_hard",
    "ect_smooth",
    "embed_graph",
    "euler_characteristic",
    "feature_importance",
    "gen_heterophily_graph",
    "gen_k_star",
    "gen_point_cloud",
    "gen_random_complex",
    "gen_wedged_spheres",
    "grid_error_hint",
    "hausdorff",
    "hop_neighborhood",
    "is_isomorphic_featured",
    "knn_neighborhood",
    "local_align_distance",
    "local_ect",
    "make_grid",
    "make_splits",
    "measure_edge_homophily",
    "probe_neighborhood_recovery",
    "rotate",
    "rotation_from_angle",
    "rotation_invariant_distance",
    "subsample_features",
    "train_linear",
]
