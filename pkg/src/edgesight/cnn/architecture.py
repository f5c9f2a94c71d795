"""The lightweight detection network: one conventional stem convolution plus
eleven depthwise+pointwise pairs (23 convolution layers in all, counting the
two halves of a pair separately), each followed by batch normalization and
ReLU. Spatial downsizing happens in stride-2 depthwise steps; the head taps
the last two resolution stages.

The channel schedule is data, not code: `default_layer_specs` produces it
and any schedule with the same structure can be fed back through
`specs_from_dict`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from ..image import Image
from .layers import (BatchNormLayer, ConvLayer, DepthwiseConvLayer, Layer,
                     PointwiseConvLayer, ReLULayer)
from .ops import out_spatial
from .ssd import SsdHead, SsdHeadConfig

STEM_CHANNELS = 32
PAIR_OUT_CHANNELS = (64, 128, 128, 256, 256, 512, 512, 512, 512, 512, 1024)
PAIR_STRIDES = (1, 2, 1, 2, 1, 2, 1, 1, 1, 1, 2)
TAP_PAIRS = (9, 10)  # 0-based pair indices whose outputs feed the head

CONV_OPS = ("conv", "depthwise", "pointwise")


@dataclass(frozen=True)
class LayerSpec:
    """Shape-level description of one layer; weights live elsewhere."""

    op: str  # conv | depthwise | pointwise | batchnorm | relu
    in_channels: int
    out_channels: int
    kernel: int = 1
    stride: int = 1
    padding: int = 0
    in_size: int = 0
    out_size: int = 0

    @property
    def is_conv(self) -> bool:
        return self.op in CONV_OPS

    @property
    def param_count(self) -> int:
        if self.op == "conv":
            return self.out_channels * self.in_channels * self.kernel ** 2
        if self.op == "depthwise":
            return self.in_channels * self.kernel ** 2
        if self.op == "pointwise":
            return self.out_channels * self.in_channels
        if self.op == "batchnorm":
            return 2 * self.out_channels  # learnable gamma/beta
        return 0


def _scaled(channels: int, width_mult: float) -> int:
    return max(1, int(round(channels * width_mult)))


def default_layer_specs(width_mult: float = 1.0, input_size: int = 224,
                        pair_channels=PAIR_OUT_CHANNELS,
                        pair_strides=PAIR_STRIDES) -> list[LayerSpec]:
    """Backbone layer sequence (convolutions with their BN+ReLU triplets)."""
    if width_mult <= 0:
        raise ConfigError(f"width multiplier must be > 0, got {width_mult}")
    if len(pair_channels) != len(pair_strides):
        raise ConfigError("pair channel and stride lists must align")
    specs: list[LayerSpec] = []
    size = input_size

    def bn_relu(channels, size):
        specs.append(LayerSpec("batchnorm", channels, channels,
                               in_size=size, out_size=size))
        specs.append(LayerSpec("relu", channels, channels,
                               in_size=size, out_size=size))

    c = _scaled(STEM_CHANNELS, width_mult)
    out = out_spatial(size, 3, 2, 1)
    specs.append(LayerSpec("conv", 3, c, kernel=3, stride=2, padding=1,
                           in_size=size, out_size=out))
    size = out
    bn_relu(c, size)

    for out_channels, stride in zip(pair_channels, pair_strides):
        n = _scaled(out_channels, width_mult)
        out = out_spatial(size, 3, stride, 1)
        specs.append(LayerSpec("depthwise", c, c, kernel=3, stride=stride,
                               padding=1, in_size=size, out_size=out))
        size = out
        bn_relu(c, size)
        specs.append(LayerSpec("pointwise", c, n, kernel=1, stride=1,
                               padding=0, in_size=size, out_size=size))
        bn_relu(n, size)
        c = n
    return specs


def specs_to_dict(specs) -> dict:
    return {"layers": [vars(s) | {} for s in specs]}


def specs_from_dict(data: dict) -> list[LayerSpec]:
    try:
        return [LayerSpec(**{k: (str(v) if k == "op" else int(v))
                             for k, v in entry.items()})
                for entry in data["layers"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid architecture description: {exc}") from exc


class LiteCnn:
    """Backbone layers plus a multi-box head tapping two feature maps."""

    def __init__(self, layers: list[Layer], tap_layer_indices: tuple[int, ...],
                 head: SsdHead, input_size: int, width_mult: float):
        self.layers = layers
        self.tap_layer_indices = tuple(tap_layer_indices)
        self.head = head
        self.input_size = input_size
        self.width_mult = width_mult

    @property
    def conv_layer_count(self) -> int:
        return sum(1 for l in self.layers if l.op in CONV_OPS)

    def parameter_count(self) -> int:
        total = sum(l.param_count() for l in self.layers)
        total += sum(l.param_count() for l in self.head.conv_layers())
        return total

    def parameter_bytes(self) -> int:
        total = 0
        for layer in list(self.layers) + self.head.conv_layers():
            for p in layer.params.values():
                total += p.nbytes
            if isinstance(layer, BatchNormLayer):
                total += layer.running_mean.nbytes + layer.running_var.nbytes
        return total

    def specs(self) -> list[LayerSpec]:
        out: list[LayerSpec] = []
        size = self.input_size
        channels = 3
        for l in self.layers:
            if l.op in CONV_OPS:
                nxt = out_spatial(size, l.kernel_size, l.stride, l.padding)
                out.append(LayerSpec(l.op, l.in_channels, l.out_channels,
                                     kernel=l.kernel_size, stride=l.stride,
                                     padding=l.padding, in_size=size,
                                     out_size=nxt))
                size = nxt
                channels = l.out_channels
            else:
                c = getattr(l, "out_channels", channels)
                out.append(LayerSpec(l.op, c, c, in_size=size, out_size=size))
        return out

    def forward_backbone(self, x, train: bool = False) -> list[np.ndarray]:
        """Activations at the tap points, in tap order."""
        taps = []
        tap_set = set(self.tap_layer_indices)
        for idx, layer in enumerate(self.layers):
            x = layer.forward(x, train=train)
            if idx in tap_set:
                taps.append(x)
        return taps

    def backward_backbone(self, dtaps) -> None:
        """Backpropagate head gradients injected at the tap points."""
        grad_at = dict(zip(self.tap_layer_indices, dtaps))
        last = len(self.layers) - 1
        d = grad_at[last]
        for idx in range(last, -1, -1):
            if idx != last and idx in grad_at:
                d = d + grad_at[idx]
            d = self.layers[idx].backward(d)

    def predict(self, x, train: bool = False):
        """(class logits (A, 2), box offsets (A, 4)) for A default boxes."""
        if x.shape != (3, self.input_size, self.input_size):
            raise ShapeError(
                f"expected (3, {self.input_size}, {self.input_size}), got {x.shape}")
        taps = self.forward_backbone(x, train=train)
        return self.head.forward(taps, train=train)

    def zero_grads(self):
        for layer in list(self.layers) + self.head.conv_layers():
            layer.zero_grads()

    def trainable_layers(self) -> list[Layer]:
        return [l for l in list(self.layers) + self.head.conv_layers() if l.params]


def _build_backbone(specs, rng, dtype):
    layers: list[Layer] = []
    for s in specs:
        if s.op == "conv":
            layers.append(ConvLayer(s.in_channels, s.out_channels, s.kernel,
                                    s.stride, s.padding, rng=rng, dtype=dtype))
        elif s.op == "depthwise":
            layers.append(DepthwiseConvLayer(s.in_channels, s.kernel, s.stride,
                                             s.padding, rng=rng, dtype=dtype))
        elif s.op == "pointwise":
            layers.append(PointwiseConvLayer(s.in_channels, s.out_channels,
                                             rng=rng, dtype=dtype))
        elif s.op == "batchnorm":
            layers.append(BatchNormLayer(s.out_channels, dtype=dtype))
        elif s.op == "relu":
            layers.append(ReLULayer())
        else:
            raise ConfigError(f"unknown layer op {s.op!r}")
    return layers


def _tap_info(specs, tap_pairs):
    """Layer indices of the ReLU closing each tapped pair, with channel/size."""
    # pair p's closing relu is layer 3 + 6*p + 5 in the conv/bn/relu stream
    indices, channels, sizes = [], [], []
    for p in tap_pairs:
        idx = 3 + 6 * p + 5
        indices.append(idx)
        channels.append(specs[idx].out_channels)
        sizes.append(specs[idx].out_size)
    return tuple(indices), tuple(channels), tuple(sizes)


def build_lite_cnn(width_mult: float = 1.0, input_size: int = 224,
                   seed: int = 0, dtype=np.float32) -> LiteCnn:
    """Default 23-convolution detection network with a two-tap head."""
    specs = default_layer_specs(width_mult, input_size)
    rng = np.random.default_rng(seed)
    layers = _build_backbone(specs, rng, dtype)
    tap_idx, tap_channels, tap_sizes = _tap_info(specs, TAP_PAIRS)
    head_cfg = SsdHeadConfig(img_size=input_size, map_sizes=tap_sizes)
    head = SsdHead(head_cfg, tap_channels, rng=rng, dtype=dtype)
    return LiteCnn(layers, tap_idx, head, input_size, width_mult)


def build_conventional_twin(width_mult: float = 1.0, input_size: int = 224,
                            seed: int = 0, dtype=np.float32) -> LiteCnn:
    """Same 23-layer channel schedule with every layer as a conventional
    convolution; the depthwise steps become full in->in 3x3 convolutions.

    Used to quantify the footprint and compute saved by the separable pairs.
    """
    specs = default_layer_specs(width_mult, input_size)
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    for s in specs:
        if s.op in ("depthwise", "pointwise"):
            layers.append(ConvLayer(s.in_channels, s.out_channels, s.kernel,
                                    s.stride, s.padding, rng=rng, dtype=dtype))
        else:
            layers.extend(_build_backbone([s], rng, dtype))
    tap_idx, tap_channels, tap_sizes = _tap_info(specs, TAP_PAIRS)
    head_cfg = SsdHeadConfig(img_size=input_size, map_sizes=tap_sizes)
    head = SsdHead(head_cfg, tap_channels, rng=rng, dtype=dtype)
    return LiteCnn(layers, tap_idx, head, input_size, width_mult)


def image_to_tensor(img: Image, dtype=np.float32) -> np.ndarray:
    """(3, h, w) tensor in [-0.5, 0.5]; gray images are replicated to RGB."""
    arr = img.pixels / 255.0 - 0.5
    if img.channels == 1:
        arr = np.repeat(arr, 3, axis=2)
    return np.ascontiguousarray(arr.transpose(2, 0, 1).astype(dtype))
