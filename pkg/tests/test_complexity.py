import numpy as np
import pytest

from edgesight.cnn.architecture import LayerSpec, default_layer_specs
from edgesight.cnn.complexity import (complexity, conventional_macs,
                                      layer_table, model_macs, model_params,
                                      reduction_factor, separable_macs)
from edgesight.cnn.ops import ConvKernel
from edgesight.cnn.reference import (conv2d_reference, depthwise_reference,
                                     pointwise_reference)


def conv_spec(dk, m, n, df, op="conv"):
    return LayerSpec(op, m, n, kernel=dk, stride=1, padding=dk // 2,
                     in_size=df, out_size=df)


def test_reference_mobile_shape_values():
    # D_k=3, M=32, N=64, D_f=112
    assert conventional_macs(3, 32, 64, 112) == 231_211_008
    assert separable_macs(3, 32, 64, 112) == 29_302_784
    assert reduction_factor(3, 64) == pytest.approx(1 / 64 + 1 / 9, abs=1e-15)
    assert reduction_factor(3, 64) == pytest.approx(0.126736, abs=5e-7)


def test_separable_costlier_for_tiny_kernels():
    # N=1, D_k=1: the split costs twice the conventional convolution
    assert reduction_factor(1, 1) == 2.0
    r = complexity(conv_spec(1, 8, 1, 10))
    assert r.separable / r.conventional == 2.0
    assert r.reduction > 1.0


def test_eq7_identity_on_random_tuples(rng):
    for _ in range(300):
        dk = int(rng.integers(1, 8))
        m = int(rng.integers(1, 512))
        n = int(rng.integers(1, 512))
        df = int(rng.integers(1, 256))
        ratio = separable_macs(dk, m, n, df) / conventional_macs(dk, m, n, df)
        assert abs(ratio - (1 / n + 1 / dk ** 2)) < 1e-12


def test_complexity_rejects_non_conv():
    with pytest.raises(TypeError):
        complexity(LayerSpec("relu", 3, 3))
    with pytest.raises(TypeError):
        complexity("conv")


def test_instrumented_counts_match_formulas(rng):
    for _ in range(5):
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 6))
        dk = int(rng.choice([1, 3]))
        df = int(rng.integers(dk, 10))
        x = rng.normal(size=(m, df, df))
        conv_k = ConvKernel("conventional", rng.normal(size=(n, m, dk, dk)),
                            stride=1, padding=dk // 2)
        _, count = conv2d_reference(x, conv_k)
        assert count == conventional_macs(dk, m, n, df)

        dw_k = ConvKernel("depthwise", rng.normal(size=(m, dk, dk)),
                          stride=1, padding=dk // 2)
        _, dw_count = depthwise_reference(x, dw_k)
        pw_k = ConvKernel("pointwise", rng.normal(size=(n, m, 1, 1)))
        _, pw_count = pointwise_reference(x, pw_k)
        assert dw_count + pw_count == separable_macs(dk, m, n, df)


def test_layer_table_default_network():
    specs = default_layer_specs()
    rows = layer_table(specs)
    conv_rows = [r for r in rows if r["layer"] != "total"]
    assert len(conv_rows) == 23
    assert conv_rows[0]["op"] == "conv"
    total = rows[-1]
    assert total["macs"] == sum(r["macs"] for r in conv_rows)
    assert total["params"] == sum(r["params"] for r in conv_rows)
    assert total["reduction"] < 0.2  # separable network is far cheaper


def test_single_layer_reduction_column():
    rows = layer_table([conv_spec(3, 32, 64, 112)])
    assert rows[0]["reduction"] == pytest.approx(0.126736, abs=5e-7)


def test_model_macs_and_params_consistency():
    specs = default_layer_specs(width_mult=0.5)
    totals = model_macs(specs)
    assert totals["actual"] < totals["conventional_equivalent"]
    assert model_params([s for s in specs if s.is_conv]) > 0
