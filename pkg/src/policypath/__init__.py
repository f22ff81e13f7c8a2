"""Temporal SVD analysis of policy parameter paths and the PPTB transform."""
from .errors import PolicyPathError
from .linalg import TemporalSvd, gram_singular_oracle, reconstruct, relative_error, temporal_svd
from .path_metrics import (
    LayerSegment,
    ParameterPath,
    accumulated_change,
    change_report,
    detour_ratio,
    final_change,
    split_periods,
)
from .pptb import PolicyPathBuffer, PptbConfig, ppt, pptb, pptb_transform, scheduler_step
from .svd_analysis import coordinate_curves, info_amount, info_profile, major_dimensionality

__version__ = "0.1.0"
