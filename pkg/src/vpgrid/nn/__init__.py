"""From-scratch convolutional network for VP existence and localization."""

from .gradcheck import GradCheckResult, grad_check
from .layers import Conv, Dense, Flatten, MaxPool, ReLU, infer_shapes
from .loss import softmax, softmax_cross_entropy
from .network import Network, build_network, reference_network, reference_specs
from .serialize import decode_model, encode_model, load_model, save_model
from .train import (
    TrainConfig,
    fit,
    predict_existence,
    predict_localization,
    predict_proba,
    preprocess,
    rank_batch,
    train,
)

__all__ = [
    "Conv", "Dense", "Flatten", "GradCheckResult", "MaxPool", "Network", "ReLU",
    "TrainConfig", "build_network", "decode_model", "encode_model", "fit", "grad_check",
    "infer_shapes", "load_model", "predict_existence", "predict_localization",
    "predict_proba", "preprocess", "rank_batch", "reference_network", "reference_specs",
    "save_model", "softmax", "softmax_cross_entropy", "train",
]
