"""pLogP performance models for MPI-style collective communication."""

from .models import (
    BROADCAST_STRATEGIES,
    CATALOG,
    SCATTER_STRATEGIES,
    SEGMENTED_STRATEGIES,
    CollectiveRequest,
    Prediction,
    TreeShape,
    alltoall_bounds,
    predict,
    predict_alltoall,
    predict_broadcast,
    predict_scatter,
    validate_tree_shape,
)
from .profile import (
    NetworkProfile,
    PLogPSample,
    ProfileError,
    Segmentation,
    load_profile,
    make_segmentation,
    param_at,
    save_profile,
)
from .simulator import Schedule, SimResult, Transfer, build_schedule, run, simulate
from .tuning import (
    GammaModel,
    Measurement,
    MeasurementSet,
    SegmentChoice,
    dyadic_candidates,
    fit_gamma,
    load_measurements,
    optimize_segment,
    rank_strategies,
    save_measurements,
    select_strategy,
)

__version__ = "0.1.0"
