"""Multiply-accumulate cost model for convolution layers.

For a D_k x D_k kernel mapping M channels to N channels on a D_f x D_f
output grid:

    conventional cost  = D_k^2 * M * N * D_f^2
    separable cost     = D_k^2 * M * D_f^2  +  N * M * D_f^2
    separable / conventional = 1/N + 1/D_k^2

The instrumented loops in `reference` reproduce these counts multiply-for-
multiply when run with stride 1 and same-padding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .architecture import CONV_OPS, LayerSpec


def conventional_macs(dk: int, m: int, n: int, df: int) -> int:
    return dk * dk * m * n * df * df


def separable_macs(dk: int, m: int, n: int, df: int) -> int:
    return dk * dk * m * df * df + n * m * df * df


def reduction_factor(dk: int, n: int) -> float:
    """Separable cost over conventional cost; > 1 means separable is costlier."""
    return (dk * dk + n) / float(dk * dk * n)


@dataclass(frozen=True)
class ComplexityResult:
    macs: int              # cost of the layer as configured
    conventional: int      # cost if done as one conventional convolution
    separable: int         # cost if done as a depthwise+pointwise pair
    reduction: float       # separable / conventional


def complexity(layer: LayerSpec) -> ComplexityResult:
    """Cost of one convolution-type layer plus both alternatives at its shape.

    Raises TypeError for non-convolution layers.
    """
    if not isinstance(layer, LayerSpec) or not layer.is_conv:
        raise TypeError(f"complexity is defined for convolution layers, got "
                        f"{getattr(layer, 'op', type(layer).__name__)!r}")
    dk, m, n, df = layer.kernel, layer.in_channels, layer.out_channels, layer.out_size
    conv = conventional_macs(dk, m, n, df)
    sep = separable_macs(dk, m, n, df)
    if layer.op == "conv":
        macs = conv
    elif layer.op == "depthwise":
        macs = dk * dk * m * df * df
    else:  # pointwise
        macs = n * m * df * df
    return ComplexityResult(macs, conv, sep, reduction_factor(dk, n))


def model_macs(specs) -> dict:
    """Actual and conventional-equivalent totals over a layer-spec sequence.

    The conventional equivalent of a depthwise layer is a full in->in
    convolution of the same kernel and output grid (a pointwise layer is
    already a 1x1 conventional convolution).
    """
    actual = 0
    equivalent = 0
    for s in specs:
        if not s.is_conv:
            continue
        r = complexity(s)
        actual += r.macs
        equivalent += r.conventional
    return {"actual": actual, "conventional_equivalent": equivalent,
            "reduction": actual / equivalent if equivalent else float("nan")}


def model_params(specs) -> int:
    return sum(s.param_count for s in specs)


def layer_table(specs) -> list[dict]:
    """One row per convolution layer plus a totals row.

    The reduction column evaluates the separable/conventional cost ratio at
    the row's kernel size and output channels.
    """
    rows = []
    idx = 0
    for s in specs:
        if not s.is_conv:
            continue
        idx += 1
        r = complexity(s)
        rows.append({
            "layer": idx,
            "op": s.op,
            "in_channels": s.in_channels,
            "out_channels": s.out_channels,
            "kernel": s.kernel,
            "stride": s.stride,
            "out_size": s.out_size,
            "macs": r.macs,
            "macs_conventional": r.conventional,
            "reduction": r.reduction,
            "params": s.param_count,
        })
    totals = model_macs(specs)
    rows.append({
        "layer": "total",
        "op": "",
        "in_channels": "",
        "out_channels": "",
        "kernel": "",
        "stride": "",
        "out_size": "",
        "macs": totals["actual"],
        "macs_conventional": totals["conventional_equivalent"],
        "reduction": totals["reduction"],
        "params": model_params([s for s in specs if s.is_conv]),
    })
    return rows
