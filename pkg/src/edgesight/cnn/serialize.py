"""Binary model files: magic ``LCNN``, little-endian u32 header fields, one
record per layer (type tag, shape integers, raw float32 weights) and a
trailing CRC32 over everything before it. A sidecar ``<path>.json`` mirrors
the architecture for human inspection; the binary alone is authoritative.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..errors import FormatError
from .architecture import LiteCnn, specs_to_dict
from .layers import (BatchNormLayer, ConvLayer, DepthwiseConvLayer,
                     PointwiseConvLayer, ReLULayer)
from .ssd import SsdHead, SsdHeadConfig

MAGIC = b"LCNN"
FORMAT_VERSION = 1

TAG_META = 0
TAG_CONV = 1
TAG_DEPTHWISE = 2
TAG_POINTWISE = 3
TAG_BATCHNORM = 4
TAG_RELU = 5


def _u32(*values) -> bytes:
    return struct.pack("<%dI" % len(values), *values)


def _f32s(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _layer_record(layer) -> bytes:
    if isinstance(layer, ConvLayer):
        has_bias = 1 if "b" in layer.params else 0
        blob = _u32(TAG_CONV, layer.out_channels, layer.in_channels,
                    layer.kernel_size, layer.stride, layer.padding, has_bias)
        blob += _f32s(layer.params["w"])
        if has_bias:
            blob += _f32s(layer.params["b"])
        return blob
    if isinstance(layer, DepthwiseConvLayer):
        return _u32(TAG_DEPTHWISE, layer.in_channels, layer.kernel_size,
                    layer.stride, layer.padding) + _f32s(layer.params["w"])
    if isinstance(layer, PointwiseConvLayer):
        return _u32(TAG_POINTWISE, layer.out_channels,
                    layer.in_channels) + _f32s(layer.params["w"])
    if isinstance(layer, BatchNormLayer):
        return (_u32(TAG_BATCHNORM, layer.in_channels)
                + _f32s(layer.params["gamma"]) + _f32s(layer.params["beta"])
                + _f32s(layer.running_mean) + _f32s(layer.running_var))
    if isinstance(layer, ReLULayer):
        return _u32(TAG_RELU)
    raise FormatError(f"cannot serialize layer {type(layer).__name__}")


def save_model(model: LiteCnn, path) -> None:
    """Write the binary model plus its JSON architecture sidecar."""
    cfg = model.head.cfg
    blob = MAGIC + _u32(FORMAT_VERSION)
    meta = _u32(TAG_META, model.input_size, len(model.layers),
                len(model.tap_layer_indices))
    meta += _u32(*model.tap_layer_indices)
    meta += _u32(len(cfg.map_sizes)) + _u32(*cfg.map_sizes)
    meta += _u32(len(cfg.aspect_ratios)) + _f32s(cfg.aspect_ratios)
    meta += _f32s([cfg.scale_min, cfg.scale_max])
    meta += _f32s(cfg.variances)
    meta += _f32s([model.width_mult])
    blob += meta
    for layer in model.layers:
        blob += _layer_record(layer)
    for layer in model.head.cls_convs + model.head.box_convs:
        blob += _layer_record(layer)
    blob += _u32(zlib.crc32(blob) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(blob)
    sidecar = {
        "format": "LCNN",
        "version": FORMAT_VERSION,
        "input_size": model.input_size,
        "width_multiplier": model.width_mult,
        "conv_layers": model.conv_layer_count,
        "parameters": model.parameter_count(),
        "architecture": specs_to_dict(model.specs()),
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def u32(self, count=1):
        end = self.pos + 4 * count
        if end > len(self.data):
            raise FormatError("truncated file: integer field missing")
        vals = struct.unpack("<%dI" % count, self.data[self.pos:end])
        self.pos = end
        return vals[0] if count == 1 else vals

    def f32(self, count) -> np.ndarray:
        end = self.pos + 4 * count
        if end > len(self.data):
            raise FormatError("truncated file: weight payload missing")
        arr = np.frombuffer(self.data[self.pos:end], dtype="<f4").copy()
        self.pos = end
        return arr

    def done(self) -> bool:
        return self.pos == len(self.data)


def _read_layer(cur: _Cursor):
    tag = cur.u32()
    if tag == TAG_CONV:
        out_c, in_c, k, stride, pad, has_bias = cur.u32(6)
        layer = ConvLayer(in_c, out_c, k, stride, pad, bias=bool(has_bias))
        layer.params["w"] = cur.f32(out_c * in_c * k * k).reshape(out_c, in_c, k, k)
        layer.grads["w"] = np.zeros_like(layer.params["w"])
        if has_bias:
            layer.params["b"] = cur.f32(out_c)
            layer.grads["b"] = np.zeros_like(layer.params["b"])
        return layer
    if tag == TAG_DEPTHWISE:
        c, k, stride, pad = cur.u32(4)
        layer = DepthwiseConvLayer(c, k, stride, pad)
        layer.params["w"] = cur.f32(c * k * k).reshape(c, k, k)
        layer.grads["w"] = np.zeros_like(layer.params["w"])
        return layer
    if tag == TAG_POINTWISE:
        out_c, in_c = cur.u32(2)
        layer = PointwiseConvLayer(in_c, out_c)
        layer.params["w"] = cur.f32(out_c * in_c).reshape(out_c, in_c)
        layer.grads["w"] = np.zeros_like(layer.params["w"])
        return layer
    if tag == TAG_BATCHNORM:
        c = cur.u32()
        layer = BatchNormLayer(c)
        layer.params["gamma"] = cur.f32(c)
        layer.params["beta"] = cur.f32(c)
        layer.grads["gamma"] = np.zeros_like(layer.params["gamma"])
        layer.grads["beta"] = np.zeros_like(layer.params["beta"])
        layer.running_mean = cur.f32(c)
        layer.running_var = cur.f32(c)
        return layer
    if tag == TAG_RELU:
        return ReLULayer()
    raise FormatError(f"unknown layer tag {tag}")


def load_model(path) -> LiteCnn:
    """Read a binary model; magic, version and checksum are all verified."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise FormatError("file too short to be a model")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise FormatError("checksum mismatch: file is corrupted")

    cur = _Cursor(data[4:-4])
    version = cur.u32()
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    tag = cur.u32()
    if tag != TAG_META:
        raise FormatError("missing model metadata record")
    input_size, n_layers, n_taps = cur.u32(3)
    taps = cur.u32(n_taps)
    taps = (taps,) if n_taps == 1 else tuple(taps)
    n_maps = cur.u32()
    map_sizes = cur.u32(n_maps)
    map_sizes = (map_sizes,) if n_maps == 1 else tuple(map_sizes)
    n_ratios = cur.u32()
    ratios = tuple(float(v) for v in cur.f32(n_ratios))
    scale_min, scale_max = (float(v) for v in cur.f32(2))
    variances = tuple(float(v) for v in cur.f32(2))
    width_mult = float(cur.f32(1)[0])

    layers = [_read_layer(cur) for _ in range(n_layers)]
    cfg = SsdHeadConfig(img_size=input_size, map_sizes=map_sizes,
                        aspect_ratios=ratios, scale_min=scale_min,
                        scale_max=scale_max, variances=variances)
    # channel count flowing out of each layer (ReLU layers carry none)
    flowing = []
    current = 0
    for layer in layers:
        current = getattr(layer, "out_channels", current)
        flowing.append(current)
    tap_channels = tuple(flowing[i] for i in taps)
    head = SsdHead(cfg, tap_channels)
    head.cls_convs = [_read_layer(cur) for _ in range(n_maps)]
    head.box_convs = [_read_layer(cur) for _ in range(n_maps)]
    if not cur.done():
        raise FormatError("trailing bytes after the last layer record")
    for conv in head.cls_convs + head.box_convs:
        if not isinstance(conv, ConvLayer):
            raise FormatError("head records must be convolution layers")
    return LiteCnn(layers, taps, head, input_size, width_mult)
