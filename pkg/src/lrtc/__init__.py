"""Low multilinear-rank tensor completion with the splitting augmented Lagrangian method."""

from .errors import (
    DimensionError,
    DomainError,
    FormatError,
    LRTCError,
    MetricError,
    ModeError,
    NumericalError,
    ParameterError,
    SpecError,
)
from .problems import GeneratedProblem, ProblemSpec, gen_lowrank, nrmse, rel_err
from .prox import SvdFactors, matrix_shrink, svd_full, vector_shrink
from .solver import (
    IterTrace,
    SamplingMask,
    SolveResult,
    SolverConfig,
    SolverState,
    Status,
    beta_update,
    check_stop,
    multiplier_update,
    project_completion,
    solve,
    x_update,
    y_update,
)
from .tensor import (
    DenseTensor,
    UnfoldedMatrix,
    frobenius_norm,
    inner_product,
    mode_product,
    refold,
    unfold,
)

__version__ = "0.1.0"
