"""Modal clustering of curves with the kernel pseudo-density."""

__version__ = "0.1.0"

from .density import DensityModel, density, gradient, hessian_form, hessian_summary, make_model
from .errors import (
    AssumptionViolationError,
    DeadZoneError,
    FunModalError,
    GridMismatchError,
    InputFormatError,
    InvalidGridError,
    KernelDomainError,
    NumericalError,
    RankDeficiencyError,
    UndersmoothingError,
)
from .flow import AscentOptions, ascend, ascend_many, assign_clusters, merge_modes, modal_clustering
from .grid import Curve, CurveSample, Grid, SubspaceBasis, gram_schmidt, make_grid, norm_h10, norm_l2
from .kernels import CUBIC, EXPONENTIAL, check_assumptions, get_kernel, kernel_constants
from .reconstruction import Observations, SmootherSpec, gm_smooth, reconstruct_sample
from .significance import ThresholdInputs, classify, phi_match, scan_h
