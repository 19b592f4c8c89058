"""Shrinkage operators: nonnegative vector shrinkage and singular value thresholding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, ParameterError

# Singular values below this fraction of the largest count as zero when a
# numerical rank is reported.
RANK_RTOL = 1e-13


@dataclass(frozen=True)
class SvdFactors:
    """Economy SVD ``a = u @ diag(sigma) @ v.T`` with ``r = min(m, n)``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0 or not np.isfinite(tau):
        raise ParameterError(f"shrinkage threshold must be positive and finite, got {tau}")
    return tau


def vector_shrink(x, tau: float) -> np.ndarray:
    """Nonnegative shrinkage: ``x_i - tau`` where that is positive, else 0.

    Parameters
    ----------
    x : array_like
        Nonnegative vector (typically singular values).
    tau : float
        Positive threshold.

    Returns
    -------
    ndarray
        Shrunk copy of ``x``.
    """
    tau = _check_tau(tau)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("vector shrinkage is defined for nonnegative vectors only")
    d = x - tau
    return np.where(d > 0, d, 0.0)


def svd_full(a) -> SvdFactors:
    """Economy-size SVD of a dense matrix (LAPACK ``gesdd`` via numpy).

    Raises :class:`NumericalError` when the input is not finite or the
    decomposition does not converge.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ParameterError(f"svd_full expects a matrix, got ndim={a.ndim}")
    if not np.isfinite(a).all():
        raise NumericalError("SVD input contains NaN or Inf")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge on a {a.shape[0]}x{a.shape[1]} matrix") from exc
    return SvdFactors(u, s, vt.T)


def shrink_with_sigma(a, tau: float):
    """Singular value thresholding returning ``(D_tau(a), shrunk singular values)``.

    The shrunk singular values are those of the returned matrix (up to
    rounding), which lets callers get its nuclear norm and rank for free.
    """
    tau = _check_tau(tau)
    f = svd_full(a)
    s = vector_shrink(f.sigma, tau)
    k = int(np.count_nonzero(s))
    if k == 0:
        return np.zeros(np.shape(a)), s
    # gesdd returns sigma nonincreasing, so the support is a prefix.
    out = (f.u[:, :k] * s[:k]) @ f.v[:, :k].T
    return out, s


def matrix_shrink(a, tau: float) -> np.ndarray:
    """Singular value thresholding ``U diag(s_tau(sigma)) V^T``.

    This is the proximal map of ``tau * ||.||_*``.
    """
    return shrink_with_sigma(a, tau)[0]


def nuclear_norm(a) -> float:
    return float(np.sum(svd_full(a).sigma))


def numerical_rank(sigma, rtol: float = RANK_RTOL) -> int:
    """Count singular values above ``rtol * max(sigma)``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size == 0 or sigma.max() <= 0:
        return 0
    return int(np.count_nonzero(sigma > rtol * sigma.max()))
