from .tensor import Tensor, no_grad, is_grad_enabled
from .functional import (
    center_tap_sample,
    conv2d,
    conv_output_size,
    cross_entropy,
    flatten,
    linear,
    mse,
    pad2d,
)
from .optim import ParamGroup, SgdConfig, sgd_step, zero_grad
from .gradcheck import gradcheck, numerical_grad

__all__ = [
    "Tensor",
    "no_grad",
    "is_grad_enabled",
    "center_tap_sample",
    "conv2d",
    "conv_output_size",
    "cross_entropy",
    "flatten",
    "linear",
    "mse",
    "pad2d",
    "ParamGroup",
    "SgdConfig",
    "sgd_step",
    "zero_grad",
    "gradcheck",
    "numerical_grad",
]
