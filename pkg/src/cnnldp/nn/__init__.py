"""Small NumPy CNN: conv / max-pool / dense layers, SGD, and the scheduling losses."""

from .layers import Conv2D, Dense, Flatten, MaxPool2D, SoftmaxOutput
from .losses import cross_entropy, loss_ce_l1, loss_ldp_shared, neighbor_allocation_indicators
from .model import REFERENCE_CONV_FILTERS, REFERENCE_DENSE_UNITS, CnnModel, backward, build_cnn, forward
from .serialize import load_model, load_tensor, save_model, save_tensor
from .train import EpochRecord, Samples, TrainReport, accuracy, backward_and_step, loss_and_grad, train

__all__ = [
    "Conv2D",
    "Dense",
    "Flatten",
    "MaxPool2D",
    "SoftmaxOutput",
    "CnnModel",
    "build_cnn",
    "forward",
    "backward",
    "cross_entropy",
    "loss_ce_l1",
    "loss_ldp_shared",
    "neighbor_allocation_indicators",
    "Samples",
    "EpochRecord",
    "TrainReport",
    "accuracy",
    "backward_and_step",
    "loss_and_grad",
    "train",
    "save_model",
    "load_model",
    "save_tensor",
    "load_tensor",
    "REFERENCE_CONV_FILTERS",
    "REFERENCE_DENSE_UNITS",
]
