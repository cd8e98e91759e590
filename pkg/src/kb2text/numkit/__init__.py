"""Dense numeric kernels, tape autodiff, Adam, and gradient checking."""

from .funcs import (
    GRUCellParams,
    concat,
    dot,
    gru_cell,
    log,
    matmul,
    minimum,
    outer,
    rows,
    sigmoid,
    softmax,
    softmax_rows,
    sum_all,
    take,
    tanh,
    transpose,
)
from .gradcheck import GradCheckReport, NondeterministicClosure, gradient_check
from .optim import AdamState, adam_step, clip_gradients, init_adam
from .rng import make_rng, split_rngs
from .tape import Node, ShapeError, Tape, backward, narrow
from .tensor import Tensor, as_array

__all__ = [
    "AdamState",
    "GRUCellParams",
    "GradCheckReport",
    "Node",
    "NondeterministicClosure",
    "ShapeError",
    "Tape",
    "Tensor",
    "adam_step",
    "as_array",
    "backward",
    "clip_gradients",
    "concat",
    "dot",
    "gradient_check",
    "gru_cell",
    "init_adam",
    "log",
    "make_rng",
    "matmul",
    "minimum",
    "narrow",
    "outer",
    "rows",
    "sigmoid",
    "softmax",
    "softmax_rows",
    "split_rngs",
    "sum_all",
    "take",
    "tanh",
    "transpose",
]
