"""modeseek: mode finding and clustering with mean-shift algorithms.

Kernel density estimation with Gaussian and Epanechnikov profiles,
per-point mean-shift with Newton acceleration, blurring mean-shift with
spectral filters and interleaved merging, connected-components merging,
K-modes and Laplacian K-modes, manifold denoising, conditional-mode
multivalued regression, and an image segmentation pipeline.
"""

from ._kernels import BACKEND
from .blur import (
    BmsConfig,
    FilterSpec,
    WeightedDataSet,
    bms_cluster,
    bms_cluster_accelerated,
    bms_step,
    dataset_entropy,
    gaussian_shrink_rate,
)
from .components import CcResult, cc_naive, cc_tight
from .denoise import MbmsConfig, local_tangent, mbms_run, mbms_step
from .errors import (
    InputError,
    IsolatedPointError,
    NoSolutionError,
    NumericError,
    OutOfSupportError,
    UnsupportedKernelError,
)
from .image import (
    ImageFeatureSpec,
    LabelImage,
    image_to_features,
    ms_discretized,
    segment_image,
)
from .kde import (
    KdeModel,
    Kernel,
    density,
    entropic_bandwidths,
    gradient,
    hessian,
    local_covariance,
    posterior,
)
from .kmodes import (
    AffinityGraph,
    KModesConfig,
    build_knn_graph,
    homotopy_schedule,
    kmodes_fit,
    kmodes_objective,
    lap_kmodes_assignment_step,
    lap_kmodes_fit,
    lap_kmodes_objective,
    lap_kmodes_out_of_sample,
    simplex_project,
)
from .seek import (
    Clustering,
    ModeTrace,
    MsConfig,
    TraceStatus,
    conditional_modes,
    find_mode,
    find_mode_newton,
    mode_continuation,
    ms_cluster,
    ms_jacobian,
    ms_step,
    ms_step_adaptive,
    out_of_sample_assign,
)

__version__ = "0.1.0"
