"""최소 수치 엔진: 레이어, 손실, 역전파, 옵티마이저."""

from evse_fedfuse.nn.functional import (
    conv1d_forward,
    cross_entropy_loss,
    dense_forward,
    maxpool1d_forward,
    mse_loss,
    relu,
    softmax,
)
from evse_fedfuse.nn.layers import (
    Conv1d,
    Dense,
    Flatten,
    MaxPool1d,
    Module,
    ReLU,
    Reshape,
    Sequential,
    Softmax,
    backward,
)
from evse_fedfuse.nn.losses import CrossEntropyLoss, MSELoss
from evse_fedfuse.nn.optim import SGD, Adam, AdamState, adam_step, sgd_step
from evse_fedfuse.nn.tensor import ModelParams, ParamTensor, Tensor

__all__ = [
    "SGD",
    "Adam",
    "AdamState",
    "Conv1d",
    "CrossEntropyLoss",
    "Dense",
    "Flatten",
    "MSELoss",
    "MaxPool1d",
    "ModelParams",
    "Module",
    "ParamTensor",
    "ReLU",
    "Reshape",
    "Sequential",
    "Softmax",
    "Tensor",
    "adam_step",
    "backward",
    "conv1d_forward",
    "cross_entropy_loss",
    "dense_forward",
    "maxpool1d_forward",
    "mse_loss",
    "relu",
    "sgd_step",
    "softmax",
]
