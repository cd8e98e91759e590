"""Reverse-mode autodiff on an explicit tape of primitive operations.

A Tape records every primitive op in creation order, which is automatically
topological (an op can only consume previously created nodes). ``backward``
walks the record once in reverse and accumulates gradients for the named
leaves. First-order only; a tape lives for one forward/backward pass.

Primitives: add, mul, neg, matmul, outer, tanh, sigmoid, log, softmax,
softmax_rows, transpose, concat, rows / take / narrow (slicing), sum_all,
minimum, and a fused GRU cell for cheap long recurrences.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, as_array


class ShapeError(ValueError):
    pass


class Node:
    """Handle to one tape entry. Supports +, -, *, @ against Nodes,
    arrays, and scalars."""

    __slots__ = ("tape", "idx", "value")

    # keep numpy from absorbing Nodes into object arrays; binary ops then
    # fall back to our __radd__/__rmul__/__rmatmul__
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", idx: int, value: np.ndarray):
        self.tape = tape
        self.idx = idx
        self.value = value

    @property
    def shape(self):
        return np.shape(self.value)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __repr__(self):
        return f"Node(idx={self.idx}, shape={self.shape})"


class Tape:
    def __init__(self):
        self._values: list = []
        self._backward: list = []
        # leaf index -> parameter name, for grads keyed by parameter
        self._names: dict[int, str] = {}

    def __len__(self):
        return len(self._values)

    def leaf(self, value, name: str | None = None) -> Node:
        """Register an input node. Named leaves are parameters: backward
        reports a gradient for each of them (zero if unused)."""
        arr = as_array(value)
        node = self._emit(arr, None)
        if name is not None:
            if name in set(self._names.values()):
                raise ValueError(f"duplicate parameter name {name!r}")
            self._names[node.idx] = name
        return node

    def leaves(self, params: dict) -> dict[str, Node]:
        """Register a whole parameter dict as named leaves."""
        return {name: self.leaf(value, name=name) for name, value in params.items()}

    def _emit(self, value: np.ndarray, bwd) -> Node:
        idx = len(self._values)
        self._values.append(value)
        self._backward.append(bwd)
        return Node(self, idx, value)


def backward(tape: Tape, loss: Node) -> dict[str, Tensor]:
    """Propagate d(loss)/d(node) back through the tape.

    Returns one gradient per named leaf, shape-matching the leaf; parameters
    the loss never touched get zeros. Visits each node exactly once.
    """
    if loss.tape is not tape:
        raise ValueError("loss was not produced on this tape")
    if np.shape(loss.value) != ():
        raise ShapeError(f"loss must be scalar, got shape {np.shape(loss.value)}")

    grads: list = [None] * (loss.idx + 1)
    grads[loss.idx] = np.asarray(1.0, dtype=np.asarray(loss.value).dtype)
    backs = tape._backward
    for idx in range(loss.idx, -1, -1):
        g = grads[idx]
        if g is None:
            continue
        bwd = backs[idx]
        if bwd is not None:
            bwd(g, grads)
            grads[idx] = None  # interior node: release as we go; leaves keep theirs

    out: dict[str, Tensor] = {}
    for idx, name in tape._names.items():
        g = grads[idx] if idx <= loss.idx else None
        if g is None:
            g = np.zeros_like(np.asarray(tape._values[idx]))
        out[name] = Tensor(g)
    return out


def _acc(grads: list, idx: int, g: np.ndarray) -> None:
    cur = grads[idx]
    grads[idx] = g if cur is None else cur + g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum g down to `shape` after a numpy broadcast."""
    if np.shape(g) == shape:
        return g
    g = np.asarray(g)
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Node):
            return a.tape
    raise TypeError("at least one operand must be a Node")


def _val(x):
    if isinstance(x, Node):
        return x.value
    if isinstance(x, (int, float)):
        return x  # keep python scalars weakly typed so float32 survives
    return as_array(x)


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def add(a, b) -> Node:
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av + bv
    a_shape, b_shape = np.shape(av), np.shape(bv)

    def bwd(g, grads):
        if isinstance(a, Node):
            _acc(grads, a.idx, _unbroadcast(g, a_shape))
        if isinstance(b, Node):
            _acc(grads, b.idx, _unbroadcast(g, b_shape))

    return tape._emit(out, bwd)


def neg(a) -> Node:
    if not isinstance(a, Node):
        return -as_array(a)
    tape = a.tape

    def bwd(g, grads):
        _acc(grads, a.idx, -g)

    return tape._emit(-a.value, bwd)


def mul(a, b) -> Node:
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av * bv
    a_shape, b_shape = np.shape(av), np.shape(bv)

    def bwd(g, grads):
        if isinstance(a, Node):
            _acc(grads, a.idx, _unbroadcast(g * bv, a_shape))
        if isinstance(b, Node):
            _acc(grads, b.idx, _unbroadcast(g * av, b_shape))

    return tape._emit(out, bwd)


def matmul(a, b) -> Node:
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    a_nd, b_nd = np.ndim(av), np.ndim(bv)
    if a_nd not in (1, 2) or b_nd not in (1, 2):
        raise ShapeError(f"matmul supports 1-D/2-D operands, got {np.shape(av)} @ {np.shape(bv)}")
    if np.shape(av)[-1] != np.shape(bv)[0]:
        raise ShapeError(f"matmul dimension mismatch: {np.shape(av)} @ {np.shape(bv)}")
    out = av @ bv

    def bwd(g, grads):
        if isinstance(a, Node):
            if a_nd == 2 and b_nd == 2:
                ga = g @ bv.T
            elif a_nd == 2 and b_nd == 1:
                ga = np.outer(g, bv)
            elif a_nd == 1 and b_nd == 2:
                ga = bv @ g
            else:  # 1-D @ 1-D -> scalar
                ga = g * bv
            _acc(grads, a.idx, ga)
        if isinstance(b, Node):
            if a_nd == 2 and b_nd == 2:
                gb = av.T @ g
            elif a_nd == 2 and b_nd == 1:
                gb = av.T @ g
            elif a_nd == 1 and b_nd == 2:
                gb = np.outer(av, g)
            else:
                gb = g * av
            _acc(grads, b.idx, gb)

    return tape._emit(out, bwd)


def outer(a, b) -> Node:
    """Outer product of two vectors: (m,) x (n,) -> (m, n)."""
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    if np.ndim(av) != 1 or np.ndim(bv) != 1:
        raise ShapeError(f"outer expects vectors, got {np.shape(av)} x {np.shape(bv)}")
    out = np.outer(av, bv)

    def bwd(g, grads):
        if isinstance(a, Node):
            _acc(grads, a.idx, g @ bv)
        if isinstance(b, Node):
            _acc(grads, b.idx, av @ g)

    return tape._emit(out, bwd)


def tanh(a: Node) -> Node:
    out = np.tanh(a.value)

    def bwd(g, grads):
        _acc(grads, a.idx, g * (1.0 - out * out))

    return a.tape._emit(out, bwd)


def sigmoid(a: Node) -> Node:
    out = _sigmoid_stable(a.value)

    def bwd(g, grads):
        _acc(grads, a.idx, g * out * (1.0 - out))

    return a.tape._emit(out, bwd)


def _sigmoid_stable(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log(a: Node) -> Node:
    av = a.value
    out = np.log(av)

    def bwd(g, grads):
        _acc(grads, a.idx, g / av)

    return a.tape._emit(out, bwd)


def _softmax_stable(x: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    x = np.asarray(x)
    if x.dtype.kind != "f":
        x = x.astype(np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ShapeError("degenerate softmax: input must be a non-empty vector")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ShapeError(f"softmax mask shape {mask.shape} != logits shape {x.shape}")
        if not mask.any():
            raise ValueError("degenerate softmax: all positions masked out")
        shifted = np.where(mask, x, -np.inf)
        m = shifted.max()
        e = np.exp(shifted - m)
        e = np.where(mask, e, 0.0)
    else:
        e = np.exp(x - x.max())
    return e / e.sum()


def softmax(a: Node, mask=None) -> Node:
    """Probability vector over a's entries; masked-out entries are exactly 0.
    Max-subtraction keeps any finite logits stable."""
    mask_arr = None if mask is None else np.asarray(mask, dtype=bool)
    out = _softmax_stable(a.value, mask_arr)

    def bwd(g, grads):
        # d softmax: p * (g - <g, p>)
        _acc(grads, a.idx, out * (g - np.dot(g, out)))

    return a.tape._emit(out, bwd)


def transpose(a: Node) -> Node:
    av = a.value
    if np.ndim(av) != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {np.shape(av)}")

    def bwd(g, grads):
        _acc(grads, a.idx, g.T)

    return a.tape._emit(av.T, bwd)


def _softmax_rows_stable(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] == 0:
        raise ShapeError("degenerate softmax: input must have non-empty rows")
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows(a: Node) -> Node:
    """Softmax applied independently to each row of a matrix."""
    out = _softmax_rows_stable(a.value)

    def bwd(g, grads):
        inner = (g * out).sum(axis=1, keepdims=True)
        _acc(grads, a.idx, out * (g - inner))

    return a.tape._emit(out, bwd)


def concat(parts: list, axis: int = 0) -> Node:
    tape = _tape_of(*parts)
    vals = [_val(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    def bwd(g, grads):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if isinstance(p, Node):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _acc(grads, p.idx, g[tuple(sl)])

    return tape._emit(out, bwd)


def rows(a: Node, indices) -> Node:
    """Gather rows of a 2-D node: a[indices]. Backward scatter-adds."""
    idx = np.asarray(indices, dtype=np.intp)
    av = a.value
    out = av[idx]

    def bwd(g, grads):
        buf = np.zeros_like(av)
        np.add.at(buf, idx, g)
        _acc(grads, a.idx, buf)

    return a.tape._emit(out, bwd)


def take(a: Node, index: int) -> Node:
    """Pick one element (vector -> scalar) or one row (matrix -> vector)."""
    av = a.value
    out = av[index]

    def bwd(g, grads):
        buf = np.zeros_like(av)
        buf[index] = g
        _acc(grads, a.idx, buf)

    return a.tape._emit(out, bwd)


def narrow(a: Node, start: int, stop: int) -> Node:
    """Contiguous 1-D slice a[start:stop]."""
    av = a.value
    out = av[start:stop]

    def bwd(g, grads):
        buf = np.zeros_like(av)
        buf[start:stop] = g
        _acc(grads, a.idx, buf)

    return a.tape._emit(out, bwd)


def sum_all(a: Node) -> Node:
    av = a.value
    shape = np.shape(av)

    def bwd(g, grads):
        _acc(grads, a.idx, np.full(shape, g))

    return a.tape._emit(np.sum(av), bwd)


def gru_cell_fused(x, h_prev, w_update, u_update, b_update, w_reset, u_reset, b_reset,
                   w_cand, u_cand, b_cand) -> Node:
    """One GRU step as a single tape entry.

        z = sigmoid(Wz x + Uz h + bz)
        r = sigmoid(Wr x + Ur h + br)
        n = tanh(Wn x + Un (r * h) + bn)
        out = z * h + (1 - z) * n

    The closed-form backward updates every Node operand; recording one node
    instead of ~20 keeps long recurrences cheap.
    """
    operands = (x, h_prev, w_update, u_update, b_update, w_reset, u_reset, b_reset,
                w_cand, u_cand, b_cand)
    tape = _tape_of(*operands)
    xv, hv, wz, uz, bz, wr, ur, br, wn, un, bn = (_val(o) for o in operands)
    z = _sigmoid_stable(wz @ xv + uz @ hv + bz)
    r = _sigmoid_stable(wr @ xv + ur @ hv + br)
    rh = r * hv
    n = np.tanh(wn @ xv + un @ rh + bn)
    out = z * hv + (1.0 - z) * n

    def bwd(g, grads):
        dz = g * (hv - n)
        dn = g * (1.0 - z)
        daz = dz * z * (1.0 - z)
        dan = dn * (1.0 - n * n)
        drh = un.T @ dan
        dar = (drh * hv) * r * (1.0 - r)
        for operand, grad in (
            (w_update, lambda: np.outer(daz, xv)),
            (u_update, lambda: np.outer(daz, hv)),
            (b_update, lambda: daz),
            (w_reset, lambda: np.outer(dar, xv)),
            (u_reset, lambda: np.outer(dar, hv)),
            (b_reset, lambda: dar),
            (w_cand, lambda: np.outer(dan, xv)),
            (u_cand, lambda: np.outer(dan, rh)),
            (b_cand, lambda: dan),
            (x, lambda: wz.T @ daz + wr.T @ dar + wn.T @ dan),
            (h_prev, lambda: g * z + uz.T @ daz + ur.T @ dar + drh * r),
        ):
            if isinstance(operand, Node):
                _acc(grads, operand.idx, grad())

    return tape._emit(out, bwd)


def minimum(a, b) -> Node:
    """Elementwise min; ties route the gradient to the first argument."""
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = np.minimum(av, bv)
    a_le = av <= bv

    def bwd(g, grads):
        if isinstance(a, Node):
            _acc(grads, a.idx, _unbroadcast(g * a_le, np.shape(av)))
        if isinstance(b, Node):
            _acc(grads, b.idx, _unbroadcast(g * ~a_le, np.shape(bv)))

    return tape._emit(out, bwd)
