import numpy as np
import pytest

from edgesight.cnn.architecture import (build_conventional_twin,
                                        build_lite_cnn, default_layer_specs,
                                        image_to_tensor, specs_from_dict,
                                        specs_to_dict)
from edgesight.errors import ConfigError, ShapeError
from edgesight.image import Image


def test_default_build_has_23_conv_layers():
    model = build_lite_cnn(width_mult=0.25)
    assert model.conv_layer_count == 23
    assert model.layers[0].op == "conv"


def test_conv_bn_relu_triplets():
    specs = default_layer_specs()
    conv_ops = [s.op for s in specs if s.is_conv]
    assert conv_ops[0] == "conv"
    assert all(op in ("depthwise", "pointwise") for op in conv_ops[1:])
    # depthwise and pointwise strictly alternate after the stem
    assert conv_ops[1::2] == ["depthwise"] * 11
    assert conv_ops[2::2] == ["pointwise"] * 11
    for i, s in enumerate(specs):
        if s.is_conv:
            assert specs[i + 1].op == "batchnorm"
            assert specs[i + 2].op == "relu"


def test_spec_shapes_chain():
    specs = default_layer_specs()
    prev_out = 3
    for s in specs:
        assert s.in_channels == prev_out
        prev_out = s.out_channels


def test_forward_pass_full_input_and_tap_sides():
    model = build_lite_cnn(width_mult=0.125, seed=1)
    x = np.random.default_rng(0).normal(size=(3, 224, 224)).astype(np.float32)
    logits, offsets = model.predict(x)
    assert logits.shape == (model.head.cfg.num_anchors, 2)
    assert offsets.shape == (model.head.cfg.num_anchors, 4)
    assert model.head.cfg.map_sizes == (14, 7)
    assert np.all(np.isfinite(logits)) and np.all(np.isfinite(offsets))


def test_parameter_budget_default_width():
    model = build_lite_cnn()
    assert model.parameter_count() < 6_000_000


def test_footprint_ratio_vs_conventional_twin():
    lite = build_lite_cnn()
    twin = build_conventional_twin()
    assert twin.conv_layer_count == 23
    assert twin.parameter_bytes() >= 5 * lite.parameter_bytes()


def test_width_multiplier_scales_channels():
    full = default_layer_specs(1.0)
    half = default_layer_specs(0.5)
    assert half[0].out_channels == full[0].out_channels // 2
    assert half[-1].out_channels == full[-1].out_channels // 2
    with pytest.raises(ConfigError):
        default_layer_specs(0.0)


def test_specs_dict_round_trip():
    specs = default_layer_specs(0.5, input_size=128)
    back = specs_from_dict(specs_to_dict(specs))
    assert back == specs
    with pytest.raises(ConfigError):
        specs_from_dict({"wrong": []})


def test_predict_rejects_wrong_input_size():
    model = build_lite_cnn(width_mult=0.125)
    with pytest.raises(ShapeError):
        model.predict(np.zeros((3, 112, 112), dtype=np.float32))


def test_image_to_tensor_range_and_gray():
    gray = Image(np.full((4, 4, 1), 255.0))
    t = image_to_tensor(gray)
    assert t.shape == (3, 4, 4)
    assert np.allclose(t, 0.5)
    rgb = Image(np.zeros((4, 4, 3)))
    assert np.allclose(image_to_tensor(rgb), -0.5)


def test_builds_are_deterministic_by_seed():
    a = build_lite_cnn(width_mult=0.125, seed=7)
    b = build_lite_cnn(width_mult=0.125, seed=7)
    for la, lb in zip(a.layers, b.layers):
        for k in la.params:
            assert np.array_equal(la.params[k], lb.params[k])
