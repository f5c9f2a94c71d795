"""Linear SVM trained with Pegasos-style primal SGD on the hinge loss.

Minimizes (lambda/2)*||w||^2 + mean(max(0, 1 - y*(w.x + b))) with the step
schedule eta_t = 1/(lambda*t). The bias is unregularized. Deterministic
given the seed.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .hog import HogConfig, HogSvmModel


def hinge_objective(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                    lam: float) -> float:
    margins = y * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * lam * np.dot(w, w) + hinge.mean())


def train_linear_svm(X, y, lam: float = 1e-3, epochs: int = 20, seed: int = 0):
    """Fit (weights, bias) on rows of X with labels +/-1.

    Returns (w, b, objectives) where objectives holds the value of the
    regularized hinge objective after each epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("X must be a nonempty 2-D sample matrix")
    if y.shape != (X.shape[0],):
        raise InputError("labels must match sample count")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise InputError("both classes must be present")

    n, d = X.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    objectives = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (X[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * X[i]
                b += eta * y[i]
        objectives.append(hinge_objective(X, y, w, b, lam))
    return w, b, objectives


def svm_train(descriptors, labels, config: HogConfig = HogConfig(),
              lam: float = 1e-3, epochs: int = 20, seed: int = 0) -> HogSvmModel:
    """Train a descriptor classifier and wrap it as a HogSvmModel."""
    w, b, _ = train_linear_svm(descriptors, labels, lam=lam, epochs=epochs,
                               seed=seed)
    if w.shape[0] != config.descriptor_length:
        raise InputError(
            f"descriptor length {w.shape[0]} does not match config "
            f"({config.descriptor_length})")
    return HogSvmModel(config, w.astype(np.float32), float(b))


def training_accuracy(X, y, w, b) -> float:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    pred = np.where(X @ w + b >= 0, 1.0, -1.0)
    return float(np.mean(pred == y))
