"""Oriented-box geometry, fusion, losses and evaluation for SAR ship detection."""

from .errors import FormatError, InvalidBoxError, InvariantError, ShapeError
from .fusion import FusionCluster, fuse_members, rotated_nms, soft_nms, wrbf, wrbf_clusters
from .geometry import (
    ObbBox,
    canonicalize_obb,
    convex_clip,
    iou_matrix,
    obb_iou,
    obb_iou_raster_oracle,
    obb_to_polygon,
    polygon_area,
    wrap_angle,
)
from .losses import (
    LossConfig,
    RegressionTarget,
    arw_angle_loss,
    denoise_mse,
    detection_loss,
    finite_diff_grad,
    focal_cls_loss,
    joint_loss,
    segmentation_loss,
    smooth_l1,
)
from .masks import (
    GaussParams,
    ellipse_fit,
    extract_components,
    mask_to_obbs,
    min_area_rect,
    rotated_gaussian_mask,
    threshold_mask,
)
from .metrics import (
    MatchResult,
    PRCurve,
    RegionSpec,
    average_precision,
    enl,
    epd_roa,
    evaluate,
    match_detections,
    pr_curve,
    precision_recall_f1,
    simulate_speckle,
)
from .nnkernels import Conv1x1Weights, dfa_fuse, spatial_avg_pool

__version__ = "0.1.0"
