"""Numeric functions that accept either plain numpy arrays or tape Nodes.

Model code is written once against these; inference runs it on raw arrays,
training runs the identical formulas on Nodes and gets gradients for free.
"""

from __future__ import annotations

import numpy as np

from . import tape as T
from .tape import Node, ShapeError
from .tensor import as_array


def tanh(x):
    return T.tanh(x) if isinstance(x, Node) else np.tanh(as_array(x))


def sigmoid(x):
    return T.sigmoid(x) if isinstance(x, Node) else T._sigmoid_stable(as_array(x))


def log(x):
    return T.log(x) if isinstance(x, Node) else np.log(as_array(x))


def softmax(x, mask=None):
    """Numerically stable softmax over a vector.

    Masked-out positions come back exactly 0. Raises on an empty vector or an
    all-false mask ("degenerate softmax").
    """
    if isinstance(x, Node):
        return T.softmax(x, mask=mask)
    m = None if mask is None else np.asarray(mask, dtype=bool)
    return T._softmax_stable(as_array(x), m)


def concat(parts, axis=0):
    if any(isinstance(p, Node) for p in parts):
        return T.concat(list(parts), axis=axis)
    return np.concatenate([as_array(p) for p in parts], axis=axis)


def rows(x, indices):
    if isinstance(x, Node):
        return T.rows(x, indices)
    return as_array(x)[np.asarray(indices, dtype=np.intp)]


def take(x, index):
    return T.take(x, index) if isinstance(x, Node) else as_array(x)[index]


def outer(a, b):
    if isinstance(a, Node) or isinstance(b, Node):
        return T.outer(a, b)
    return np.outer(as_array(a), as_array(b))


def minimum(a, b):
    if isinstance(a, Node) or isinstance(b, Node):
        return T.minimum(a, b)
    return np.minimum(as_array(a), as_array(b))


def sum_all(x):
    return T.sum_all(x) if isinstance(x, Node) else np.sum(as_array(x))


def transpose(x):
    return T.transpose(x) if isinstance(x, Node) else as_array(x).T


def softmax_rows(x):
    return T.softmax_rows(x) if isinstance(x, Node) else T._softmax_rows_stable(as_array(x))


def dot(a, b):
    if isinstance(a, Node) or isinstance(b, Node):
        return T.matmul(a, b)
    return as_array(a) @ as_array(b)


def matmul(a, b):
    if isinstance(a, Node) or isinstance(b, Node):
        return T.matmul(a, b)
    av, bv = as_array(a), as_array(b)
    if av.shape[-1] != bv.shape[0]:
        raise ShapeError(f"matmul dimension mismatch: {av.shape} @ {bv.shape}")
    return av @ bv


class GRUCellParams:
    """Weight/bias set for one GRU cell direction.

    Field values are arrays during inference and Nodes during training; the
    container itself is just a bag of references.
    """

    __slots__ = (
        "w_update", "u_update", "b_update",
        "w_reset", "u_reset", "b_reset",
        "w_cand", "u_cand", "b_cand",
    )

    def __init__(self, w_update, u_update, b_update, w_reset, u_reset, b_reset,
                 w_cand, u_cand, b_cand):
        self.w_update = w_update
        self.u_update = u_update
        self.b_update = b_update
        self.w_reset = w_reset
        self.u_reset = u_reset
        self.b_reset = b_reset
        self.w_cand = w_cand
        self.u_cand = u_cand
        self.b_cand = b_cand


def gru_cell(x, h_prev, p: GRUCellParams):
    """One GRU step: update/reset gates and a tanh candidate.

        z = sigmoid(Wz x + Uz h + bz)
        r = sigmoid(Wr x + Ur h + br)
        n = tanh(Wn x + Un (r * h) + bn)
        h' = z * h + (1 - z) * n

    On tape nodes this records a single fused entry with a closed-form
    backward (covered by the finite-difference suite); on plain arrays it
    evaluates the gates directly.
    """
    _check_gru_shapes(x, h_prev, p)
    fields = (p.w_update, p.u_update, p.b_update, p.w_reset, p.u_reset, p.b_reset,
              p.w_cand, p.u_cand, p.b_cand)
    if isinstance(x, Node) or isinstance(h_prev, Node) or any(isinstance(f, Node) for f in fields):
        return T.gru_cell_fused(x, h_prev, *fields)
    z = sigmoid(matmul(p.w_update, x) + matmul(p.u_update, h_prev) + p.b_update)
    r = sigmoid(matmul(p.w_reset, x) + matmul(p.u_reset, h_prev) + p.b_reset)
    n = tanh(matmul(p.w_cand, x) + matmul(p.u_cand, r * h_prev) + p.b_cand)
    return z * h_prev + (1.0 - z) * n


def _check_gru_shapes(x, h_prev, p: GRUCellParams) -> None:
    xs = np.shape(x.value if isinstance(x, Node) else as_array(x))
    hs = np.shape(h_prev.value if isinstance(h_prev, Node) else as_array(h_prev))
    w = p.w_update
    ws = np.shape(w.value if isinstance(w, Node) else as_array(w))
    u = p.u_update
    us = np.shape(u.value if isinstance(u, Node) else as_array(u))
    if len(xs) != 1 or len(hs) != 1 or ws[1] != xs[0] or us[1] != hs[0] or ws[0] != hs[0]:
        raise ShapeError(
            f"gru_cell shape mismatch: x {xs}, h {hs}, input weights {ws}, hidden weights {us}"
        )
