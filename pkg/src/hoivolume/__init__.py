"""Normalized 3D human-object spatial configuration volumes, part attention,
cross-modal consistency losses and pose-ambiguity curation."""

from .ambiguity import Pose2D, cluster_and_rank, monster_filter, procrustes_align
from .attention import (
    AttentionHead,
    assemble_att3d,
    attention_map_2d,
    joint_attention_2d,
    kl_attention_consistency,
    part_attention_3d,
    reweight,
)
from .fileio import read_volume, write_volume
from .geometry import (
    BodySummary,
    Box2D,
    Camera,
    SphereEstimate,
    estimate_radius,
    estimate_sphere,
    project_point,
    regularize_depth,
    solve_sphere_center,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    bce_multilabel,
    fuse_scores,
    mine_semi_hard,
    semantic_consistency,
    total_loss,
    triplet_loss,
)
from .maps2d import make_pose_map, make_spatial_map
from .priors import ObjectPrior, PriorTable, load_priors, lookup
from .volume import (
    BodyPoints,
    ConfigurationVolume,
    align_and_normalize,
    assign_part_sets,
    build_volume,
    downsample_body,
    pair_semantics,
    pca_reduce,
    sample_sphere_surface,
)

__version__ = "0.1.0"
