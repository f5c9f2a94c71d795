"""Desk-scale trainer: SGD on a mean-squared error over softmax class scores
plus a smooth-L1 penalty on the box offsets of matched default boxes.

Meant for overfitting tiny synthetic sets to exercise the full forward and
backward paths, not for real training runs.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, InputError
from ..image import Image
from .architecture import image_to_tensor
from .ops import softmax
from .ssd import CLASS_HUMAN, encode_box, match_anchors


def mse_softmax_loss(logits: np.ndarray, targets: np.ndarray):
    """Mean squared error between softmax scores and targets.

    Returns (loss, dloss/dlogits); the mean runs over every score entry.
    """
    p = softmax(np.asarray(logits, dtype=np.float64), axis=1)
    diff = p - targets
    loss = float(np.mean(diff * diff))
    dp = 2.0 * diff / diff.size
    dz = p * (dp - (dp * p).sum(axis=1, keepdims=True))
    return loss, dz


def smooth_l1_loss(pred: np.ndarray, target: np.ndarray):
    """Huber-style loss, mean over elements; returns (loss, dloss/dpred)."""
    u = np.asarray(pred, dtype=np.float64) - target
    au = np.abs(u)
    quad = au < 1.0
    loss = float(np.mean(np.where(quad, 0.5 * u * u, au - 0.5)))
    dpred = np.where(quad, u, np.sign(u)) / u.size
    return loss, dpred


class ToyTrainer:
    """Plain SGD with optional momentum and global-norm gradient clipping."""

    def __init__(self, model, lr: float, momentum: float = 0.9,
                 match_iou: float = 0.5, clip_norm: float = 5.0):
        if lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {lr}")
        self.model = model
        self.lr = lr
        self.momentum = momentum
        self.match_iou = match_iou
        self.clip_norm = clip_norm
        self._velocity = {}
        if momentum > 0:
            for li, layer in enumerate(model.trainable_layers()):
                for name, p in layer.params.items():
                    self._velocity[(li, name)] = np.zeros_like(p)

    def _targets(self, gt_boxes):
        anchors = self.model.head.anchors
        positive, matched = match_anchors(gt_boxes, anchors, self.match_iou)
        cls_targets = np.zeros((anchors.shape[0], 2))
        cls_targets[:, 1 - CLASS_HUMAN] = 1.0
        cls_targets[positive, 1 - CLASS_HUMAN] = 0.0
        cls_targets[positive, CLASS_HUMAN] = 1.0
        box_targets = np.zeros((anchors.shape[0], 4))
        variances = self.model.head.cfg.variances
        for i in np.flatnonzero(positive):
            box_targets[i] = encode_box(gt_boxes[matched[i]], anchors[i],
                                        variances)
        return positive, cls_targets, box_targets

    def image_loss(self, x: np.ndarray, gt_boxes) -> float:
        """Forward + backward for one image; gradients accumulate."""
        taps = self.model.forward_backbone(x, train=True)
        logits, offsets = self.model.head.forward(taps, train=True)
        positive, cls_targets, box_targets = self._targets(gt_boxes)

        cls_loss, dlogits = mse_softmax_loss(logits, cls_targets)
        doffsets = np.zeros_like(offsets, dtype=np.float64)
        box_loss = 0.0
        if np.any(positive):
            box_loss, dpos = smooth_l1_loss(offsets[positive],
                                            box_targets[positive])
            doffsets[positive] = dpos
        dtaps = self.model.head.backward(dlogits.astype(offsets.dtype),
                                         doffsets.astype(offsets.dtype))
        self.model.backward_backbone(dtaps)
        return cls_loss + box_loss

    def step(self, batch) -> float:
        """One SGD update on the gradient averaged over (tensor, boxes) pairs."""
        if not batch:
            raise InputError("empty batch")
        self.model.zero_grads()
        total = 0.0
        for x, gt_boxes in batch:
            total += self.image_loss(x, gt_boxes)
        scale = self.lr / len(batch)
        for li, layer in enumerate(self.model.trainable_layers()):
            for name, p in layer.params.items():
                g = layer.grads[name]
                if self.momentum > 0:
                    v = self._velocity[(li, name)]
                    v *= self.momentum
                    v -= scale * g
                    p += v
                else:
                    p -= scale * g
        return total / len(batch)


def freeze_batchnorm(model) -> None:
    """Pin all normalization layers to their current running statistics."""
    from .layers import BatchNormLayer

    for layer in model.layers:
        if isinstance(layer, BatchNormLayer):
            layer.frozen = True


def train_toy(model, dataset, steps: int = 200, lr: float = 0.1,
              momentum: float = 0.5, freeze_stats_after: int | None = None) -> list[float]:
    """Overfit `model` on [(image_or_tensor, [BoundingBox, ...]), ...].

    Normalization layers use per-image statistics for the first third of the
    run (warming up their running averages), then freeze so the remaining
    steps train against exactly the statistics inference will use. Returns
    the per-step batch loss history. Deterministic for a given model
    initialization (no data shuffling at this scale).
    """
    if not dataset:
        raise InputError("dataset must not be empty")
    if freeze_stats_after is None:
        freeze_stats_after = max(1, steps // 3)
    batch = []
    for img, boxes in dataset:
        x = image_to_tensor(img) if isinstance(img, Image) else np.asarray(img)
        batch.append((x, list(boxes)))
    trainer = ToyTrainer(model, lr=lr, momentum=momentum)
    losses = []
    for step in range(steps):
        if step == freeze_stats_after:
            freeze_batchnorm(model)
        losses.append(trainer.step(batch))
    return losses
