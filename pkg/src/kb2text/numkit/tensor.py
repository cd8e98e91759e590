"""Dense tensor value type: validated, immutable, row-major float arrays."""

from __future__ import annotations

import numpy as np

DEFAULT_DTYPE = np.float64


class Tensor:
    """A dense real-valued array with finite entries.

    Wraps a read-only numpy array. Construction rejects NaN/Inf, which makes
    divergence surface immediately wherever values re-enter the type (e.g.
    after an optimizer step).
    """

    __slots__ = ("data",)

    def __init__(self, data, dtype=None):
        if dtype is None:
            # keep an existing float precision (32-bit mode survives
            # optimizer round-trips); everything else becomes float64
            if isinstance(data, Tensor):
                dtype = data.data.dtype
            elif isinstance(data, np.ndarray) and data.dtype.kind == "f":
                dtype = data.dtype
            else:
                dtype = DEFAULT_DTYPE
        arr = np.array(data, dtype=dtype)
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite values in tensor")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self):
        return self.data.dtype

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"

    def tolist(self):
        return self.data.tolist()


def as_array(x) -> np.ndarray:
    """Unwrap a Tensor or pass through an ndarray/scalar as float array."""
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=DEFAULT_DTYPE) if not isinstance(x, np.ndarray) else x
