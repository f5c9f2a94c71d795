import numpy as np
import pytest

from edgesight.errors import InputError
from edgesight.svm import (hinge_objective, train_linear_svm,
                           training_accuracy)


def separable_set(rng, n=20, d=6, gap=2.0):
    """Two well-separated Gaussian blobs; linearly separable by margin."""
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    half = n // 2
    X = rng.normal(scale=0.3, size=(n, d))
    X[:half] += gap * direction
    X[half:] -= gap * direction
    y = np.array([1.0] * half + [-1.0] * half)
    # verify separability by construction
    margins = y * (X @ direction)
    assert np.all(margins > 0)
    return X, y


def test_separable_set_reaches_full_accuracy(rng):
    X, y = separable_set(rng)
    w, b, _ = train_linear_svm(X, y, lam=1e-3, epochs=30, seed=1)
    assert training_accuracy(X, y, w, b) == 1.0


def test_objective_decreases(rng):
    X, y = separable_set(rng)
    _, _, objectives = train_linear_svm(X, y, lam=1e-3, epochs=30, seed=1)
    assert objectives[-1] < objectives[0]


def test_all_zero_descriptors_bias_decides(rng):
    X = np.zeros((10, 4))
    y = np.array([1.0, -1.0] * 5)
    w, b, _ = train_linear_svm(X, y, lam=1e-2, epochs=10, seed=0)
    assert np.all(w == 0.0)
    pred = np.where(X @ w + b >= 0, 1.0, -1.0)
    assert np.all(pred == np.sign(b) if b != 0 else pred == 1.0)


def test_doubling_lambda_never_grows_weights(rng):
    X, y = separable_set(rng)
    norms = []
    for lam in (1e-4, 2e-4, 4e-4, 8e-4):
        w, _, _ = train_linear_svm(X, y, lam=lam, epochs=50, seed=3)
        norms.append(np.linalg.norm(w))
    assert all(b <= a + 1e-9 for a, b in zip(norms, norms[1:]))


def test_deterministic_given_seed(rng):
    X, y = separable_set(rng)
    w1, b1, _ = train_linear_svm(X, y, epochs=5, seed=9)
    w2, b2, _ = train_linear_svm(X, y, epochs=5, seed=9)
    assert np.array_equal(w1, w2) and b1 == b2


def test_input_validation():
    with pytest.raises(InputError):
        train_linear_svm(np.zeros((0, 3)), np.zeros(0))
    with pytest.raises(InputError):
        train_linear_svm(np.zeros((3, 2)), np.ones(3))  # one class


def test_hinge_objective_value():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([1.0, -1.0])
    w = np.array([1.0, 0.0])
    # margins: 1*1=1 (hinge 0), -1*0=0 (hinge 1); reg = lam/2
    assert hinge_objective(X, y, w, 0.0, 0.2) == pytest.approx(0.1 + 0.5)
