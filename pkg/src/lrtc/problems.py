"""Random low multilinear-rank completion problems and evaluation metrics.

Reproducibility contract
------------------------
A problem is a pure function of its :class:`ProblemSpec`. The seed feeds
``numpy.random.SeedSequence(seed).spawn(4)``; the four children drive PCG64
generators for, in order, the core tensor, the factor matrices (mode 1
first), the noise tensor, and the mask. Normal variates come from the
Box-Muller transform applied to pairs of ``Generator.random()`` doubles
(``u1 -> 1 - u1`` so the log argument lies in (0, 1]), first variate from the
cosine branch. Tensors and factor matrices are filled first-index-fastest.

The mask is the first ``m = max(1, floor(sr * prod(n) + 1/2))`` slots of a
partial Fisher-Yates shuffle of ``0..prod(n)-1``: step ``i`` swaps slot
``i`` with slot ``i + floor(u_i * (prod(n) - i))`` for uniform doubles
``u_i``. The chosen offsets are then sorted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, MetricError, ParameterError, SpecError
from .prox import numerical_rank
from .solver import SamplingMask
from .tensor import DenseTensor, Shape, as_shape, mode_product, unfold_array


@dataclass(frozen=True)
class ProblemSpec:
    shape: Shape
    ranks: Tuple[int, ...]
    sampling_ratio: float
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        try:
            shape = as_shape(self.shape)
        except DimensionError as exc:
            raise SpecError(str(exc)) from exc
        ranks = tuple(int(r) for r in self.ranks)
        if len(ranks) != len(shape):
            raise SpecError(f"{len(ranks)} ranks given for a {len(shape)}-way tensor")
        for i, (r, n) in enumerate(zip(ranks, shape), start=1):
            if r < 1:
                raise SpecError(f"rank r_{i} = {r} must be positive")
            if r > n:
                raise SpecError(f"rank r_{i} = {r} exceeds extent n_{i} = {n}")
        if not 0 < self.sampling_ratio <= 1:
            raise SpecError(f"sampling ratio must lie in (0, 1], got {self.sampling_ratio}")
        if not self.noise_sigma >= 0:
            raise SpecError(f"noise sigma must be nonnegative, got {self.noise_sigma}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "sampling_ratio", float(self.sampling_ratio))
        object.__setattr__(self, "noise_sigma", float(self.noise_sigma))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class GeneratedProblem:
    truth: DenseTensor
    observed: DenseTensor
    mask: SamplingMask
    spec: Optional[ProblemSpec] = None


def substreams(seed: int):
    """PCG64 generators for (core, factors, noise, mask)."""
    children = np.random.SeedSequence(int(seed) & ((1 << 64) - 1)).spawn(4)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


def standard_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` standard normal variates by Box-Muller."""
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:n]


def mask_count(sampling_ratio: float, total: int) -> int:
    return max(1, int(math.floor(sampling_ratio * total + 0.5)))


def sample_offsets(rng: np.random.Generator, total: int, count: int) -> np.ndarray:
    """Sorted uniform sample of ``count`` distinct offsets in ``[0, total)``."""
    if not 1 <= count <= total:
        raise ParameterError(f"cannot draw {count} of {total} offsets")
    pool = np.arange(total, dtype=np.int64)
    u = rng.random(count)
    jumps = np.floor(u * (total - np.arange(count))).astype(np.int64)
    for i in range(count):
        j = i + int(jumps[i])
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:count])


def gen_lowrank(spec: ProblemSpec) -> GeneratedProblem:
    """Tucker-form random problem: Gaussian core times Gaussian factors, plus optional noise."""
    core_rng, factor_rng, noise_rng, mask_rng = substreams(spec.seed)
    total = math.prod(spec.shape)

    truth = DenseTensor.from_flat(standard_normal(core_rng, math.prod(spec.ranks)), spec.ranks)
    for mode, (n, r) in enumerate(zip(spec.shape, spec.ranks), start=1):
        u = standard_normal(factor_rng, n * r).reshape((n, r), order="F")
        truth = mode_product(truth, u, mode)

    if spec.noise_sigma > 0:
        noise = DenseTensor.from_flat(standard_normal(noise_rng, total), spec.shape)
        observed = truth + noise * spec.noise_sigma
    else:
        observed = truth

    idx = sample_offsets(mask_rng, total, mask_count(spec.sampling_ratio, total))
    mask = SamplingMask(spec.shape, idx, observed.flat[idx])
    return GeneratedProblem(truth, observed, mask, spec)


def multilinear_rank(t: DenseTensor, rtol: float = 1e-9) -> Tuple[int, ...]:
    """Numerical rank of every unfolding (singular values above ``rtol * max``)."""
    ranks = []
    for ax in range(t.ndim):
        s = np.linalg.svd(unfold_array(t.array, ax), compute_uv=False)
        ranks.append(numerical_rank(s, rtol))
    return tuple(ranks)


def rel_err(x_sol: DenseTensor, m: DenseTensor) -> float:
    """``||x_sol - m||_F / ||m||_F``."""
    if x_sol.shape != m.shape:
        raise DimensionError(f"shape mismatch: {x_sol.shape} vs {m.shape}")
    denom = float(np.linalg.norm(m.flat))
    if denom == 0:
        raise MetricError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(x_sol.flat - m.flat)) / denom


def nrmse(x_opt: DenseTensor, m_bar: DenseTensor, mask: SamplingMask) -> float:
    """Root-mean-square error on the unobserved entries, divided by the truth's range there."""
    if x_opt.shape != m_bar.shape or m_bar.shape != mask.shape:
        raise DimensionError("x_opt, m_bar and mask must share one shape")
    comp = mask.complement()
    if comp.size == 0:
        raise MetricError("NRMSE is undefined when every entry is observed")
    truth = m_bar.flat[comp]
    spread = float(truth.max() - truth.min())
    if spread <= 0:
        raise MetricError("NRMSE is undefined when the truth is constant off the mask")
    err = float(np.linalg.norm(x_opt.flat[comp] - truth))
    return err / (spread * math.sqrt(comp.size))
