"""Minimal float64 tensors with reverse-mode differentiation."""

from .functional import BatchNormState, batch_norm, dropout, gelu, linear
from .tensor import (
    Parameter,
    Tensor,
    absolute,
    add,
    as_tensor,
    concat,
    div,
    flatten,
    getitem,
    is_grad_enabled,
    make_op,
    matmul,
    mean,
    mul,
    no_grad,
    permute,
    reshape,
    sqrt,
    square,
    stack,
    sub,
    swapaxes,
    tensor,
    tsum,
    zero_grad,
)

__all__ = [
    "BatchNormState", "Parameter", "Tensor", "absolute", "add", "as_tensor", "batch_norm",
    "concat", "div", "dropout", "flatten", "gelu", "getitem", "is_grad_enabled", "linear",
    "make_op", "matmul", "mean", "mul", "no_grad", "permute", "reshape", "sqrt", "square",
    "stack", "sub", "swapaxes", "tensor", "tsum", "zero_grad",
]
