"""polsarkit: dual-polarimetric SAR land-classification toolkit.

Covariance estimation, H/alpha dual-pol decomposition, zone segmentation,
iterative Wishart classification, synthetic-scene simulation with analytic
ground truth, and segmentation training-dataset synthesis.
"""

__version__ = "0.1.0"

from .covariance import (
    CovarianceEstimator,
    change_basis,
    compute_covariance,
    intensity_channels,
)
from .decomposition import (
    HAlphaDecomposer,
    ZoneClassifier,
    eigen2,
    export_halpha_density,
    h_alpha,
    h_alpha_field,
    zone_classify,
    zone_map,
)
from .metrics import ConfusionMatrix, confusion, metrics
from .simulate import (
    analytic_truth,
    default_presets,
    generate_scene,
)
from .types import (
    AcquisitionMeta,
    ClassMap,
    ClassSpec,
    CovarianceField,
    EigenPair2,
    FormatError,
    HAlphaField,
    Herm2,
    IGNORE_LABEL,
    PatchSet,
    SceneSpec,
    SlcImage,
    SplitManifest,
    ValidationError,
    ZoneMap,
)
from .wishart import (
    WishartClassifier,
    class_centers,
    merge_zones_to_classes,
    wishart_distance,
    wishart_iterate,
)

__all__ = [
    "__version__",
    "AcquisitionMeta",
    "SlcImage",
    "Herm2",
    "CovarianceField",
    "EigenPair2",
    "HAlphaField",
    "ClassMap",
    "ZoneMap",
    "PatchSet",
    "SplitManifest",
    "ClassSpec",
    "SceneSpec",
    "IGNORE_LABEL",
    "ValidationError",
    "FormatError",
    "CovarianceEstimator",
    "compute_covariance",
    "intensity_channels",
    "change_basis",
    "HAlphaDecomposer",
    "ZoneClassifier",
    "eigen2",
    "h_alpha",
    "h_alpha_field",
    "zone_classify",
    "zone_map",
    "export_halpha_density",
    "WishartClassifier",
    "wishart_distance",
    "class_centers",
    "wishart_iterate",
    "merge_zones_to_classes",
    "generate_scene",
    "default_presets",
    "analytic_truth",
    "ConfusionMatrix",
    "confusion",
    "metrics",
]
