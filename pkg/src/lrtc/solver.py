"""Splitting augmented Lagrangian method (SALM) for low multilinear-rank tensor completion.

Solves

    min  sum_i ||Y_i,(i)||_*   s.t.  X = Y_i (i = 1..N),  X in B

where ``B = {X : X_Omega = M_Omega}`` for completion. One iteration is

    X^{k+1}   = P_B( (sum_i Lambda_i^k + beta^k sum_i Y_i^k) / (N beta^k) )
    Y_i^{k+1} = refold_i( D_{1/beta^k}( X^{k+1}_(i) - Lambda^k_i,(i) / beta^k ) )
    Lambda_i^{k+1} = Lambda_i^k - beta^k (X^{k+1} - Y_i^{k+1})
    beta^{k+1} = min(rho beta^k, beta_max)  if the relative change of X <= eps

and it stops once ``||X^{k+1} - X^k||_F / max(1, ||X^k||_F) < tol``.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, DomainError, NumericalError, ParameterError
from .prox import numerical_rank, shrink_with_sigma
from .tensor import DenseTensor, Shape, as_shape, axis_of, refold_array, unfold_array

Projector = Callable[[DenseTensor], DenseTensor]
TraceSink = Callable[["IterTrace"], None]


@dataclass(frozen=True)
class SamplingMask:
    """Observed entries: sorted flat offsets (first-index-fastest, 0-based) and their values."""

    shape: Shape
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        shape = as_shape(self.shape)
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        total = math.prod(shape)
        if idx.size != vals.size:
            raise DimensionError(f"{idx.size} indices but {vals.size} values")
        if idx.size < 1:
            raise DimensionError("a sampling mask needs at least one observed entry")
        if idx.size > total:
            raise DimensionError(f"{idx.size} observations exceed the {total} entries")
        if idx[0] < 0 or idx[-1] >= total:
            raise DimensionError(f"offsets must lie in [0, {total})")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise DimensionError("offsets must be strictly increasing")
        if not np.isfinite(vals).all():
            raise DomainError("observed values must be finite")
        idx = idx.copy()
        vals = vals.copy()
        idx.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_tensor(cls, t: DenseTensor, indices) -> "SamplingMask":
        """Observe ``t`` at the given flat offsets (any order, no duplicates)."""
        idx = np.sort(np.asarray(indices, dtype=np.int64).reshape(-1))
        return cls(t.shape, idx, t.flat[idx])

    @property
    def size(self) -> int:
        return int(self.indices.size)

    @property
    def total(self) -> int:
        return math.prod(self.shape)

    @property
    def sampling_ratio(self) -> float:
        return self.size / self.total

    def complement(self) -> np.ndarray:
        keep = np.ones(self.total, dtype=bool)
        keep[self.indices] = False
        return np.flatnonzero(keep)

    def __eq__(self, other):
        if not isinstance(other, SamplingMask):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class SolverConfig:
    """SALM parameters. ``eps=None`` picks 1e-3 when sr > 0.5 and 1e-4 otherwise."""

    beta0: float = 0.1
    rho: float = 5.0
    tol: float = 1e-8
    eps: Optional[float] = None
    max_iter: int = 1000
    beta_max: float = 1e12

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ParameterError(f"beta0 must be positive, got {self.beta0}")
        # rho = 1 (frozen penalty) is allowed; it is what the convergence theory needs.
        if not self.rho >= 1:
            raise ParameterError(f"rho must be >= 1, got {self.rho}")
        if not 0 < self.tol < 1:
            raise ParameterError(f"tol must lie in (0, 1), got {self.tol}")
        if self.eps is not None and not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.beta_max >= self.beta0:
            raise ParameterError(f"beta_max ({self.beta_max}) must be >= beta0 ({self.beta0})")

    def resolved_eps(self, sampling_ratio: float) -> float:
        if self.eps is not None:
            return float(self.eps)
        return 1e-3 if sampling_ratio > 0.5 else 1e-4


@dataclass(frozen=True)
class SolverState:
    x: DenseTensor
    y: Tuple[DenseTensor, ...]
    lam: Tuple[DenseTensor, ...]
    beta: float
    iter: int = 0

    def __post_init__(self):
        shape = self.x.shape
        if len(self.y) != len(self.lam) or len(self.y) < 1:
            raise DimensionError("need one split variable and one multiplier per mode")
        for t in (*self.y, *self.lam):
            if t.shape != shape:
                raise DimensionError(f"state tensors disagree in shape: {t.shape} vs {shape}")


@dataclass(frozen=True)
class IterTrace:
    iter: int
    objective: float
    rel_change: float
    residuals: Tuple[float, ...]
    beta: float
    elapsed_ms: float
    ranks: Tuple[int, ...] = ()


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    NUMERICAL_ERROR = "numerical_error"


@dataclass
class SolveResult:
    x: DenseTensor
    trace: List[IterTrace]
    status: Status
    state: SolverState
    eps: float
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.trace)


class StepInfo(NamedTuple):
    rel_change: float
    stop: bool
    residuals: Tuple[float, ...]
    objective: float
    ranks: Tuple[int, ...]


def _norm(a: np.ndarray) -> float:
    v = a.ravel(order="K")
    return math.sqrt(float(np.dot(v, v)))


def project_completion(z: DenseTensor, mask: SamplingMask) -> DenseTensor:
    """Overwrite the observed entries of ``z`` with the mask values."""
    if z.shape != mask.shape:
        raise DimensionError(f"tensor shape {z.shape} does not match mask shape {mask.shape}")
    flat = np.array(z.flat, copy=True)
    flat[mask.indices] = mask.values
    return DenseTensor._wrap(flat.reshape(z.shape, order="F"))


def completion_projector(mask: SamplingMask) -> Projector:
    return lambda z: project_completion(z, mask)


def x_update(state: SolverState, mask) -> DenseTensor:
    """``P_B((sum Lambda_i + beta sum Y_i) / (N beta))``.

    ``mask`` is a :class:`SamplingMask` or any projector ``DenseTensor -> DenseTensor``
    onto the constraint set.
    """
    project = completion_projector(mask) if isinstance(mask, SamplingMask) else mask
    beta = float(state.beta)
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    n = len(state.y)
    lam_sum = np.sum([t.array for t in state.lam], axis=0)
    y_sum = np.sum([t.array for t in state.y], axis=0)
    z = (lam_sum + beta * y_sum) / (n * beta)
    return project(DenseTensor._wrap(z))


def _y_update(x: np.ndarray, lam: np.ndarray, beta: float, axis: int):
    shape = tuple(x.shape)
    m = unfold_array(x, axis) - unfold_array(lam, axis) / beta
    out, s = shrink_with_sigma(m, 1.0 / beta)
    return refold_array(out, axis, shape), s


def y_update(x_new: DenseTensor, lambda_i: DenseTensor, beta: float, mode: int) -> DenseTensor:
    """Mode-``mode`` singular value thresholding step for the split variable ``Y_mode``."""
    beta = float(beta)
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if x_new.shape != lambda_i.shape:
        raise DimensionError(f"shape mismatch: {x_new.shape} vs {lambda_i.shape}")
    ax = axis_of(mode, x_new.ndim)
    out, _ = _y_update(x_new.array, lambda_i.array, beta, ax)
    return DenseTensor._wrap(out)


def multiplier_update(
    lambda_i: DenseTensor, x_new: DenseTensor, y_new_i: DenseTensor, beta: float
) -> DenseTensor:
    return lambda_i - (x_new - y_new_i) * float(beta)


def beta_update(beta: float, rel_change: float, cfg: SolverConfig, eps: Optional[float] = None) -> float:
    """Grow the penalty by ``rho`` (capped at ``beta_max``) after a slow step.

    ``eps`` overrides ``cfg.eps``; one of them must be set.
    """
    if eps is None:
        eps = cfg.eps
    if eps is None:
        raise ParameterError("eps is unresolved; pass it or set cfg.eps")
    if rel_change <= eps:
        return min(cfg.rho * beta, cfg.beta_max)
    return beta


def check_stop(x_prev: DenseTensor, x_new: DenseTensor, tol: float) -> Tuple[bool, float]:
    if x_prev.shape != x_new.shape:
        raise DimensionError(f"shape mismatch: {x_prev.shape} vs {x_new.shape}")
    diff = _norm(x_new.array - x_prev.array)
    rel = diff / max(1.0, _norm(x_prev.array))
    return rel < tol, rel


def initial_state(shape: Sequence[int], n_modes: Optional[int] = None, beta0: float = 0.1) -> SolverState:
    """All-zero X, Y_i and Lambda_i at penalty ``beta0``."""
    shape = as_shape(shape)
    zero = DenseTensor.zeros(shape)
    n = len(shape) if n_modes is None else n_modes
    return SolverState(zero, (zero,) * n, (zero,) * n, float(beta0), 0)


def step(
    state: SolverState,
    project: Projector,
    cfg: SolverConfig,
    eps: float,
    pool: Optional[ThreadPoolExecutor] = None,
) -> Tuple[SolverState, StepInfo]:
    """One SALM iteration from ``state``; returns the next state and diagnostics."""
    beta = state.beta
    x_new = x_update(state, project)
    xa = x_new.array
    axes = range(x_new.ndim)

    def one(ax):
        return _y_update(xa, state.lam[ax].array, beta, ax)

    # Every Y_i reads only X^{k+1} and Lambda_i^k, so the modes are independent.
    results = list(pool.map(one, axes)) if pool is not None else [one(ax) for ax in axes]

    ys, lams, residuals, ranks = [], [], [], []
    objective = 0.0
    for ax, (ya, s) in enumerate(results):
        diff = xa - ya
        ys.append(DenseTensor._wrap(ya))
        lams.append(DenseTensor._wrap(state.lam[ax].array - beta * diff))
        residuals.append(_norm(diff))
        objective += float(np.sum(s))
        ranks.append(numerical_rank(s))

    stop, rel = check_stop(state.x, x_new, cfg.tol)
    new_beta = beta_update(beta, rel, cfg, eps)
    new_state = SolverState(x_new, tuple(ys), tuple(lams), new_beta, state.iter + 1)
    return new_state, StepInfo(rel, stop, tuple(residuals), objective, tuple(ranks))


def solve(
    mask: SamplingMask,
    cfg: Optional[SolverConfig] = None,
    on_iter: Optional[TraceSink] = None,
    *,
    projector: Optional[Projector] = None,
    workers: int = 1,
) -> SolveResult:
    """Run SALM until the stopping test fires or ``cfg.max_iter`` iterations pass.

    ``projector`` replaces the completion projector for other convex
    constraint sets; ``mask`` still fixes the shape and sampling ratio.
    ``workers > 1`` runs the N mode updates in a thread pool.
    """
    cfg = cfg or SolverConfig()
    if len(mask.shape) < 2:
        raise DimensionError("the solver needs a tensor with at least 2 modes")
    project = projector or completion_projector(mask)
    eps = cfg.resolved_eps(mask.sampling_ratio)

    state = initial_state(mask.shape, beta0=cfg.beta0)
    trace: List[IterTrace] = []
    status = Status.MAX_ITER
    message = ""
    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for _ in range(cfg.max_iter):
            try:
                new_state, info = step(state, project, cfg, eps, pool)
            except NumericalError as exc:
                status = Status.NUMERICAL_ERROR
                message = str(exc)
                break
            rec = IterTrace(
                iter=new_state.iter,
                objective=info.objective,
                rel_change=info.rel_change,
                residuals=info.residuals,
                beta=state.beta,
                elapsed_ms=(time.perf_counter() - t0) * 1e3,
                ranks=info.ranks,
            )
            trace.append(rec)
            if on_iter is not None:
                on_iter(rec)
            state = new_state
            if info.stop:
                status = Status.CONVERGED
                break
    finally:
        if pool is not None:
            pool.shutdown()

    x = state.x if trace else project(state.x)
    return SolveResult(x, trace, status, state, eps, message)
