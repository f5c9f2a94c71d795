"""CNN compute engine: separable convolutions, a lightweight 23-conv-layer
detection network with a single-shot multi-box head, a complexity analyzer,
a toy-scale trainer, and binary model serialization."""

from .ops import (ConvKernel, batchnorm, compose_separable, conv2d,
                  depthwise_conv, factorization_deviation, out_spatial,
                  pointwise_conv, relu, softmax)
from .complexity import (complexity, conventional_macs, reduction_factor,
                         separable_macs, layer_table, model_macs, model_params)
from .architecture import (LiteCnn, build_conventional_twin, build_lite_cnn,
                           default_layer_specs, image_to_tensor, LayerSpec,
                           specs_from_dict, specs_to_dict)
from .ssd import SsdHeadConfig, decode_boxes, default_boxes, encode_box, match_anchors, ssd_detect
from .train import ToyTrainer, mse_softmax_loss, smooth_l1_loss, train_toy
from .serialize import load_model, save_model

__all__ = [
    "ConvKernel", "batchnorm", "compose_separable", "conv2d", "depthwise_conv",
    "factorization_deviation", "out_spatial", "pointwise_conv", "relu",
    "softmax", "complexity", "conventional_macs", "reduction_factor",
    "separable_macs", "layer_table", "model_macs", "model_params", "LiteCnn",
    "build_conventional_twin", "build_lite_cnn", "default_layer_specs",
    "image_to_tensor", "LayerSpec", "specs_from_dict", "specs_to_dict",
    "SsdHeadConfig", "decode_boxes", "default_boxes", "encode_box",
    "match_anchors", "ssd_detect", "ToyTrainer", "mse_softmax_loss",
    "smooth_l1_loss", "train_toy", "load_model", "save_model",
]
