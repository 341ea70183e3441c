from .gradcheck import finite_difference_check
from .layers import (Conv3d, Flatten, LayerSpec, Linear, ReLU, conv3d_backward,
                     conv3d_forward, conv3d_output_shape, make_layer)
from .loss import batch_bce, sigmoid, sigmoid_bce
from .network import Network, build_network, validate_chain
from .optim import AdamState, adam_step

__all__ = [
    "Conv3d", "Flatten", "LayerSpec", "Linear", "ReLU",
    "conv3d_backward", "conv3d_forward", "conv3d_output_shape", "make_layer",
    "batch_bce", "sigmoid", "sigmoid_bce",
    "Network", "build_network", "validate_chain",
    "AdamState", "adam_step", "finite_difference_check",
]
