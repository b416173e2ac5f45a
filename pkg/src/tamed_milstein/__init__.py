"""Explicit tamed Milstein scheme for SDEs with super-linearly growing coefficients."""

from .errors import NumericalFailure, UsageError
from .model import (
    ModelDomain,
    SdeModel,
    diffusion_jacobian,
    eval_diffusion,
    eval_drift,
    gbm_exact,
    lambda_sigma,
    make_builtin,
)
from .noise import (
    IncrementGrid,
    NoiseStream,
    StepRandomness,
    coarsen,
    generate_increments,
    generate_path_increments,
    iterated_integrals,
    levy_area,
)
from .scheme import (
    SchemeConfig,
    Trajectory,
    integrate,
    kappa,
    step_classical,
    step_tamed_euler,
    step_tamed_milstein,
)
from .study import (
    ErrorRecord,
    MomentRecord,
    RateFit,
    StudyConfig,
    fit_rate,
    moment_sweep,
    one_step_sweep,
    strong_error,
    strong_errors,
)
from .taming import TamedValues, TamingConfig, tame_coefficients, taming_factor
from .assumptions import CheckReport, check_a2, check_a3, check_all, check_derivative_regularity

__version__ = "0.1.0"
