"""Haar-like rectangle features, AdaBoost training, and cascaded detection.

A feature is a signed set of rectangles inside a fixed training window. Its
response on an image window is the weighted sum of rectangle pixel sums
(white minus black), evaluated in O(1) per rectangle via an integral image
and normalized by the window area so responses are comparable across scales.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import boost
from .errors import BoundsError, ConfigError, FormatError, InputError
from .geometry import BoundingBox, Detection, clamp_box, nms
from .image import Image
from .integral import IntegralImage, integral, rect_sum
from .pyramid import build_pyramid

KINDS = ("two-rect", "three-rect", "four-rect")

CASCADE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class HaarFeature:
    """Signed rectangles relative to a window_w x window_h training window.

    Weights are +1 (white) or -1 (black) and every archetype built by
    `generate_haar_features` has weighted areas summing to zero, so the
    response on any uniform image is exactly 0. The three-rect archetype
    splits 1:2:1 (the middle rectangle is twice as wide/tall as each outer
    one) so that +/-1 weights balance with three rectangles.
    """

    kind: str
    rects: tuple[tuple[BoundingBox, int], ...]
    window_w: int
    window_h: int

    def __post_init__(self):
        expected = {"two-rect": 2, "three-rect": 3, "four-rect": 4}
        if self.kind not in expected:
            raise ConfigError(f"unknown feature kind {self.kind!r}")
        if len(self.rects) != expected[self.kind]:
            raise ConfigError(
                f"{self.kind} feature needs {expected[self.kind]} rects, "
                f"got {len(self.rects)}")
        for rect, weight in self.rects:
            if weight not in (1, -1):
                raise ConfigError(f"rect weight must be +/-1, got {weight}")
            if rect.x < 0 or rect.y < 0 or rect.right > self.window_w \
                    or rect.bottom > self.window_h:
                raise ConfigError("feature rect outside its window")


@dataclass(frozen=True)
class WeakLearner:
    """Thresholded feature response with its ensemble weight."""

    feature: HaarFeature
    threshold: float
    polarity: int
    alpha: float

    def predict(self, ii: IntegralImage, window: BoundingBox, scale: float = 1.0) -> int:
        r = eval_feature(self.feature, ii, window, scale)
        return 1 if self.polarity * (r - self.threshold) >= 0 else -1


@dataclass(frozen=True)
class CascadeStage:
    learners: tuple[WeakLearner, ...]
    threshold: float

    def __post_init__(self):
        if not self.learners:
            raise ConfigError("cascade stage needs at least one learner")

    def score(self, ii: IntegralImage, window: BoundingBox, scale: float = 1.0) -> float:
        return sum(l.alpha * l.predict(ii, window, scale) for l in self.learners)


@dataclass(frozen=True)
class CascadeModel:
    """Ordered rejection stages over a fixed detection window."""

    stages: tuple[CascadeStage, ...]
    window_w: int
    window_h: int

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("cascade needs at least one stage")

    def classify_window(self, ii: IntegralImage, window: BoundingBox,
                        scale: float = 1.0) -> tuple[bool, float]:
        """(passed all stages, final-stage margin)."""
        margin = 0.0
        for stage in self.stages:
            s = stage.score(ii, window, scale)
            margin = s - stage.threshold
            if margin < 0:
                return False, margin
        return True, margin


def eval_feature(feature: HaarFeature, ii: IntegralImage, window: BoundingBox,
                 scale: float = 1.0) -> float:
    """Feature response at a window position, normalized by the window area.

    Rectangles are scaled by `scale` (rounded to the pixel grid) and offset
    by the window origin. The window's scaled extent must lie inside the
    image.
    """
    wx, wy = int(window.x), int(window.y)
    ww = int(round(feature.window_w * scale))
    wh = int(round(feature.window_h * scale))
    if wx < 0 or wy < 0 or wx + ww > ii.width or wy + wh > ii.height:
        raise BoundsError(
            f"window ({wx},{wy},{ww},{wh}) outside {ii.width}x{ii.height} image")
    total = 0.0
    for rect, weight in feature.rects:
        scaled = BoundingBox(
            wx + int(round(rect.x * scale)),
            wy + int(round(rect.y * scale)),
            max(1, int(round(rect.w * scale))),
            max(1, int(round(rect.h * scale))),
        )
        total += weight * rect_sum(ii, scaled)
    return total / float(ww * wh)


def generate_haar_features(window_w: int = 24, window_h: int = 24,
                           stride: int = 4) -> list[HaarFeature]:
    """All two/three/four-rect features on the window at the given stride.

    Positions and base cell sizes advance in `stride`-pixel steps. stride=4
    on a 24x24 window yields a desk-scale candidate pool; stride=1 recovers
    the full exhaustive set (hundreds of thousands of features).
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    feats: list[HaarFeature] = []

    def add(kind, rects):
        feats.append(HaarFeature(kind, tuple(
            (BoundingBox(x, y, w, h), wt) for x, y, w, h, wt in rects),
            window_w, window_h))

    for a in range(stride, window_w + 1, stride):
        for b in range(stride, window_h + 1, stride):
            for x in range(0, window_w, stride):
                for y in range(0, window_h, stride):
                    # two-rect, side by side (white left)
                    if x + 2 * a <= window_w and y + b <= window_h:
                        add("two-rect",
                            [(x, y, a, b, 1), (x + a, y, a, b, -1)])
                    # two-rect, stacked (white top)
                    if x + a <= window_w and y + 2 * b <= window_h:
                        add("two-rect",
                            [(x, y, a, b, 1), (x, y + b, a, b, -1)])
                    # three-rect 1:2:1, horizontal
                    if x + 4 * a <= window_w and y + b <= window_h:
                        add("three-rect",
                            [(x, y, a, b, 1), (x + a, y, 2 * a, b, -1),
                             (x + 3 * a, y, a, b, 1)])
                    # three-rect 1:2:1, vertical
                    if x + a <= window_w and y + 4 * b <= window_h:
                        add("three-rect",
                            [(x, y, a, b, 1), (x, y + b, a, 2 * b, -1),
                             (x, y + 3 * b, a, b, 1)])
                    # four-rect checkerboard
                    if x + 2 * a <= window_w and y + 2 * b <= window_h:
                        add("four-rect",
                            [(x, y, a, b, 1), (x + a, y, a, b, -1),
                             (x, y + b, a, b, -1), (x + a, y + b, a, b, 1)])
    return feats


def response_matrix(features, samples) -> np.ndarray:
    """(n_features, n_samples) matrix of full-window responses at scale 1."""
    resp = np.empty((len(features), len(samples)), dtype=np.float64)
    for fi, feat in enumerate(features):
        window = BoundingBox(0, 0, feat.window_w, feat.window_h)
        for si, ii in enumerate(samples):
            resp[fi, si] = eval_feature(feat, ii, window)
    return resp


def weak_learner_error(learner: WeakLearner, samples, labels, weights) -> float:
    """Weighted misclassification rate of one learner; weights must sum to 1."""
    if len(samples) == 0:
        raise InputError("empty sample set")
    w = np.asarray(weights, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if len(samples) != y.shape[0] or y.shape[0] != w.shape[0]:
        raise InputError("samples, labels and weights disagree on count")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InputError(f"weights must sum to 1, got {w.sum()}")
    window = BoundingBox(0, 0, learner.feature.window_w, learner.feature.window_h)
    err = 0.0
    for ii, label, weight in zip(samples, y, w):
        if learner.predict(ii, window) != label:
            err += weight
    return float(err)


def adaboost_train(samples, labels, rounds: int, candidate_features,
                   history: list | None = None) -> list[WeakLearner]:
    """Boost decision stumps over Haar responses of window-sized samples.

    `samples` are integral images of the candidate features' window size,
    `labels` are +/-1. Appends per-round stats dicts to `history` if given.
    """
    if len(samples) == 0:
        raise InputError("empty sample set")
    if not candidate_features:
        raise InputError("no candidate features")
    resp = response_matrix(candidate_features, samples)
    stumps, hist = boost.adaboost(resp, labels, rounds)
    if history is not None:
        history.extend(hist)
    return [WeakLearner(candidate_features[s.feature_index], s.threshold,
                        s.polarity, s.alpha) for s in stumps]


def train_cascade(pos_samples, neg_samples, candidate_features,
                  stage_plan=((8, 0.0),), window_w: int = 24,
                  window_h: int = 24) -> CascadeModel:
    """Attentional cascade: each stage trains on all positives plus the
    negatives that survived earlier stages.

    `stage_plan` lists (boosting rounds, stage threshold) per stage; the
    default is a single stage with threshold 0. Stage targets are caller
    policy, not derived here.
    """
    if not pos_samples or not neg_samples:
        raise InputError("need both positive and negative samples")
    negs = list(neg_samples)
    stages = []
    window = BoundingBox(0, 0, window_w, window_h)
    for rounds, threshold in stage_plan:
        if not negs:
            break
        samples = list(pos_samples) + negs
        labels = [1] * len(pos_samples) + [-1] * len(negs)
        learners = adaboost_train(samples, labels, rounds, candidate_features)
        stage = CascadeStage(tuple(learners), float(threshold))
        stages.append(stage)
        negs = [ii for ii in negs if stage.score(ii, window) >= threshold]
    return CascadeModel(tuple(stages), window_w, window_h)


def cascade_detect(model: CascadeModel, img: Image, step: int = 4,
                   scale_factor: float = 1.25, nms_iou: float = 0.3,
                   label: str = "human") -> list[Detection]:
    """Sliding-window detection over an image pyramid.

    A window is reported when every stage's weighted vote clears its
    threshold; the detection score is the final-stage margin. Overlapping
    hits are merged by NMS. Returns boxes in original-image pixels.
    """
    if img.channels != 1:
        raise InputError("cascade detection requires a single-channel image")
    if step < 1:
        raise ConfigError(f"step must be >= 1, got {step}")
    min_side = max(8, min(model.window_w, model.window_h))
    detections: list[Detection] = []
    for level in build_pyramid(img, scale_factor, min_side):
        lw, lh = level.image.width, level.image.height
        if lw < model.window_w or lh < model.window_h:
            continue
        ii = integral(level.image)
        for y in range(0, lh - model.window_h + 1, step):
            for x in range(0, lw - model.window_w + 1, step):
                window = BoundingBox(x, y, model.window_w, model.window_h)
                passed, margin = model.classify_window(ii, window)
                if passed:
                    box = BoundingBox(x * level.scale, y * level.scale,
                                      model.window_w * level.scale,
                                      model.window_h * level.scale)
                    box = clamp_box(box, img.width, img.height)
                    if box is not None:
                        detections.append(Detection(box, label, margin))
    return nms(detections, nms_iou)


def cascade_to_dict(model: CascadeModel) -> dict:
    return {
        "version": CASCADE_FORMAT_VERSION,
        "window": [model.window_w, model.window_h],
        "stages": [
            {
                "threshold": stage.threshold,
                "learners": [
                    {
                        "kind": l.feature.kind,
                        "rects": [[r.x, r.y, r.w, r.h, wt]
                                  for r, wt in l.feature.rects],
                        "threshold": l.threshold,
                        "polarity": l.polarity,
                        "alpha": l.alpha,
                    }
                    for l in stage.learners
                ],
            }
            for stage in model.stages
        ],
    }


def cascade_from_dict(data: dict) -> CascadeModel:
    try:
        if data["version"] != CASCADE_FORMAT_VERSION:
            raise FormatError(f"unsupported cascade version {data['version']!r}")
        ww, wh = (int(v) for v in data["window"])
        stages = []
        for sdata in data["stages"]:
            learners = []
            for ldata in sdata["learners"]:
                feature = HaarFeature(
                    ldata["kind"],
                    tuple((BoundingBox(x, y, w, h), int(wt))
                          for x, y, w, h, wt in ldata["rects"]),
                    ww, wh)
                learners.append(WeakLearner(feature, float(ldata["threshold"]),
                                            int(ldata["polarity"]),
                                            float(ldata["alpha"])))
            stages.append(CascadeStage(tuple(learners), float(sdata["threshold"])))
        return CascadeModel(tuple(stages), ww, wh)
    except (KeyError, TypeError, ValueError, ConfigError, InputError) as exc:
        raise FormatError(f"invalid cascade model data: {exc}") from exc


def save_cascade(model: CascadeModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cascade_to_dict(model), fh, indent=1)


def load_cascade(path) -> CascadeModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("cascade file must hold a JSON object")
    return cascade_from_dict(data)
