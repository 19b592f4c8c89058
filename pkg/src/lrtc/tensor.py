"""Dense N-way tensors and their multilinear algebra.

Entries are stored first-index-fastest (Fortran order), so the flat offset of
the multi-index ``(i_1, ..., i_N)`` (0-based) is ``sum_k i_k * prod_{m<k} n_m``.
Modes are numbered from 1 in every public function, as in the usual
matricization notation; :func:`axis_of` is the single place where a mode is
turned into a 0-based numpy axis.

The mode-n unfolding places tensor element ``(i_1, ..., i_N)`` at row ``i_n``
and column

    j = 1 + sum_{k != n} (i_k - 1) V_k,   V_k = prod_{m < k, m != n} n_m

(1-based), i.e. the remaining indices enumerate columns first-index-fastest.
With Fortran storage, mode-1 unfolding is a reshape and every other mode is a
single axis move followed by a reshape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, ModeError

Shape = Tuple[int, ...]

_INDEX_LIMIT = np.iinfo(np.int64).max


def as_shape(dims: Iterable[int]) -> Shape:
    """Validate extents and return them as a tuple of Python ints."""
    shape = tuple(int(d) for d in dims)
    if len(shape) < 1:
        raise DimensionError("a tensor needs at least one mode")
    if any(d < 1 for d in shape):
        raise DimensionError(f"extents must be positive, got {shape}")
    count = 1
    for d in shape:
        count *= d
    if count > _INDEX_LIMIT:
        raise DimensionError(f"element count of {shape} overflows the index range")
    return shape


def axis_of(mode: int, ndim: int) -> int:
    """Map a 1-based mode to a 0-based axis, checking its range."""
    if isinstance(mode, bool) or not isinstance(mode, (int, np.integer)):
        raise ModeError(f"mode must be an integer, got {mode!r}")
    if not 1 <= mode <= ndim:
        raise ModeError(f"mode {mode} out of range 1..{ndim}")
    return int(mode) - 1


class DenseTensor:
    """Immutable dense real tensor (float64, first-index-fastest storage).

    ``DenseTensor(a)`` takes an array whose numpy index ``a[i_1, ..., i_N]``
    is the tensor entry at that (0-based) multi-index. Use :meth:`from_flat`
    to build one from data already laid out first-index-fastest.
    """

    __slots__ = ("_a",)
    __array_priority__ = 100

    def __init__(self, data):
        if isinstance(data, DenseTensor):
            self._a = data._a
            return
        a = np.array(data, dtype=np.float64, order="F", copy=True)
        if a.ndim == 0:
            raise DimensionError("a tensor needs at least one mode")
        as_shape(a.shape)
        a.setflags(write=False)
        self._a = a

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "DenseTensor":
        # Takes ownership of a freshly computed array, no copy unless the
        # layout is not Fortran.
        a = np.asfortranarray(a, dtype=np.float64)
        if a.flags.writeable and a.base is not None:
            a = a.copy(order="F")
        a.setflags(write=False)
        t = cls.__new__(cls)
        t._a = a
        return t

    @classmethod
    def from_flat(cls, data, shape: Sequence[int]) -> "DenseTensor":
        shape = as_shape(shape)
        flat = np.asarray(data, dtype=np.float64).reshape(-1)
        if flat.size != math.prod(shape):
            raise DimensionError(
                f"data length {flat.size} does not match shape {shape} "
                f"({math.prod(shape)} entries)"
            )
        return cls._wrap(flat.reshape(shape, order="F").copy(order="F"))

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> "DenseTensor":
        return cls._wrap(np.zeros(as_shape(shape), order="F"))

    @classmethod
    def full(cls, shape: Sequence[int], value: float) -> "DenseTensor":
        return cls._wrap(np.full(as_shape(shape), float(value), order="F"))

    @property
    def shape(self) -> Shape:
        return tuple(int(d) for d in self._a.shape)

    @property
    def ndim(self) -> int:
        return self._a.ndim

    @property
    def size(self) -> int:
        return int(self._a.size)

    @property
    def array(self) -> np.ndarray:
        """Read-only view indexed by (0-based) multi-index."""
        return self._a

    @property
    def flat(self) -> np.ndarray:
        """Read-only first-index-fastest view of the entries."""
        return self._a.reshape(-1, order="F")

    def __getitem__(self, index):
        return self._a[index]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self._a).all())

    def _other(self, other):
        if isinstance(other, DenseTensor):
            if other.shape != self.shape:
                raise DimensionError(f"shape mismatch: {self.shape} vs {other.shape}")
            return other._a
        if np.isscalar(other):
            return float(other)
        return NotImplemented

    def __add__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return DenseTensor._wrap(self._a + b)

    __radd__ = __add__

    def __sub__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return DenseTensor._wrap(self._a - b)

    def __rsub__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return DenseTensor._wrap(b - self._a)

    def __mul__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return DenseTensor._wrap(self._a * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return DenseTensor._wrap(self._a / float(other))

    def __neg__(self):
        return DenseTensor._wrap(-self._a)

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._a, other._a))

    __hash__ = None

    def __repr__(self):
        dims = "x".join(str(d) for d in self.shape)
        return f"DenseTensor({dims}, norm={frobenius_norm(self):.6g})"


@dataclass(frozen=True)
class UnfoldedMatrix:
    """Mode-``mode`` unfolding of a tensor of shape ``origin_shape``."""

    matrix: np.ndarray
    mode: int
    origin_shape: Shape

    def __post_init__(self):
        shape = as_shape(self.origin_shape)
        object.__setattr__(self, "origin_shape", shape)
        ax = axis_of(self.mode, len(shape))
        rows = shape[ax]
        cols = math.prod(shape) // rows
        if np.ndim(self.matrix) != 2 or np.shape(self.matrix) != (rows, cols):
            raise DimensionError(
                f"mode-{self.mode} unfolding of {shape} must be {rows}x{cols}, "
                f"got {np.shape(self.matrix)}"
            )


def _check_same_shape(a: DenseTensor, b: DenseTensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def inner_product(a: DenseTensor, b: DenseTensor) -> float:
    """Sum of the entrywise products of two equally shaped tensors."""
    _check_same_shape(a, b)
    # fsum is exactly rounded, so the result does not depend on entry order.
    return math.fsum((a.flat * b.flat).tolist())


def frobenius_norm(a: Union[DenseTensor, UnfoldedMatrix, np.ndarray]) -> float:
    """Frobenius norm of a tensor, an unfolding, or a plain array.

    The sum of squares is exactly rounded, so any reordering of the same
    entries (e.g. an unfolding) yields the identical value.
    """
    if isinstance(a, DenseTensor):
        x = a.flat
    elif isinstance(a, UnfoldedMatrix):
        x = np.asarray(a.matrix).reshape(-1)
    else:
        x = np.asarray(a, dtype=np.float64).reshape(-1)
    return math.sqrt(math.fsum((x * x).tolist()))


def unfold_array(a: np.ndarray, axis: int) -> np.ndarray:
    """Unfold an ndarray along a 0-based axis (internal fast path)."""
    if axis == 0:
        return a.reshape(a.shape[0], -1, order="F")
    return np.moveaxis(a, axis, 0).reshape(a.shape[axis], -1, order="F")


def refold_array(m: np.ndarray, axis: int, shape: Shape) -> np.ndarray:
    """Inverse of :func:`unfold_array`; returns a Fortran-ordered array."""
    moved = (shape[axis],) + shape[:axis] + shape[axis + 1:]
    t = np.reshape(m, moved, order="F")
    if axis != 0:
        t = np.moveaxis(t, 0, axis)
    return np.asfortranarray(t)


def unfold(x: DenseTensor, mode: int) -> UnfoldedMatrix:
    """Mode-``mode`` matricization ``X_(mode)`` of shape ``n_mode x J_mode``."""
    ax = axis_of(mode, x.ndim)
    m = unfold_array(x.array, ax)
    return UnfoldedMatrix(m, int(mode), x.shape)


def refold(m: UnfoldedMatrix) -> DenseTensor:
    """Rebuild the tensor whose mode-``m.mode`` unfolding is ``m.matrix``."""
    shape = as_shape(m.origin_shape)
    ax = axis_of(m.mode, len(shape))
    mat = np.asarray(m.matrix, dtype=np.float64)
    rows = shape[ax]
    if mat.shape != (rows, math.prod(shape) // rows):
        raise DimensionError(
            f"matrix of shape {mat.shape} cannot be refolded to {shape} along mode {m.mode}"
        )
    return DenseTensor._wrap(refold_array(mat, ax, shape))


def mode_product(x: DenseTensor, u, mode: int) -> DenseTensor:
    """``x`` times the ``L x n_mode`` matrix ``u`` along ``mode``."""
    ax = axis_of(mode, x.ndim)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != x.shape[ax]:
        raise DimensionError(
            f"matrix of shape {u.shape} cannot multiply mode {mode} of extent {x.shape[ax]}"
        )
    out_shape = as_shape(x.shape[:ax] + (u.shape[0],) + x.shape[ax + 1:])
    prod = u @ unfold_array(x.array, ax)
    return DenseTensor._wrap(refold_array(prod, ax, out_shape))
