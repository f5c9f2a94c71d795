"""Decision stumps and discrete AdaBoost over precomputed feature responses.

The boosting core is agnostic to where responses come from: rows of the
response matrix are candidate features, columns are samples. The Haar module
wraps this core, mapping selected rows back to rectangle features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

EPSILON_FLOOR = 1e-10  # weighted error is clamped away from 0 and 1


@dataclass(frozen=True)
class Stump:
    """Threshold rule on one response row: +1 iff polarity*(r - threshold) >= 0."""

    feature_index: int
    threshold: float
    polarity: int
    alpha: float

    def predict(self, responses: np.ndarray) -> np.ndarray:
        return stump_predict(responses, self.threshold, self.polarity)


def stump_predict(responses: np.ndarray, threshold: float, polarity: int) -> np.ndarray:
    """Vector of +/-1 labels for one response row."""
    r = np.asarray(responses, dtype=np.float64)
    return np.where(polarity * (r - threshold) >= 0, 1, -1).astype(np.int64)


def fit_stump(responses: np.ndarray, labels: np.ndarray, weights: np.ndarray):
    """Best (feature_index, threshold, polarity) under weighted 0/1 loss.

    Thresholds are searched at midpoints between consecutive sorted responses
    plus one below the minimum, for both polarities. Ties resolve to the
    lowest feature index, then the lowest threshold, for determinism.

    Returns (stump_without_alpha_fields, weighted_error).
    """
    resp = np.atleast_2d(np.asarray(responses, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)

    best = None  # (err, feature_index, threshold, polarity)
    for fi in range(resp.shape[0]):
        r = resp[fi]
        order = np.argsort(r, kind="stable")
        rs = r[order]
        ws = w[order]
        ys = y[order]

        # cum_pos[k] = weight of positives among the k smallest responses
        wpos = np.where(ys > 0, ws, 0.0)
        wneg = np.where(ys < 0, ws, 0.0)
        cum_pos = np.concatenate(([0.0], np.cumsum(wpos)))
        cum_neg = np.concatenate(([0.0], np.cumsum(wneg)))
        total_pos = cum_pos[-1]
        total_neg = cum_neg[-1]

        # candidate k: first k samples fall below the threshold
        thresholds = np.concatenate(([rs[0] - 1.0], (rs[:-1] + rs[1:]) / 2.0))
        valid = np.concatenate(([True], rs[:-1] != rs[1:]))
        ks = np.flatnonzero(valid)

        # polarity +1 predicts +1 for r >= thr; polarity -1 is the complement
        err_plus = cum_pos[ks] + (total_neg - cum_neg[ks])
        err_minus = (total_pos + total_neg) - err_plus
        for pol, errs in ((1, err_plus), (-1, err_minus)):
            j = int(np.argmin(errs))
            key = (float(errs[j]), fi, float(thresholds[ks[j]]), pol)
            if best is None or key < best:
                best = key
    if best is None:
        raise InputError("no candidate features")
    err, fi, thr, pol = best
    return Stump(fi, float(thr), int(pol), alpha=0.0), float(err)


def alpha_from_error(error: float) -> float:
    """Ensemble weight 0.5*ln((1-e)/e); zero exactly at e = 0.5."""
    e = min(max(error, EPSILON_FLOOR), 1.0 - EPSILON_FLOOR)
    return 0.5 * math.log((1.0 - e) / e)


def ensemble_predict(stumps, responses: np.ndarray) -> np.ndarray:
    """Sign of the weighted stump sum; zero scores count as +1."""
    scores = ensemble_score(stumps, responses)
    return np.where(scores >= 0, 1, -1).astype(np.int64)


def ensemble_score(stumps, responses: np.ndarray) -> np.ndarray:
    resp = np.atleast_2d(np.asarray(responses, dtype=np.float64))
    scores = np.zeros(resp.shape[1], dtype=np.float64)
    for s in stumps:
        scores += s.alpha * s.predict(resp[s.feature_index])
    return scores


def adaboost(responses: np.ndarray, labels, rounds: int):
    """Discrete AdaBoost with exponential reweighting.

    Each round fits the best stump under the current sample weights, assigns
    it alpha = 0.5*ln((1-e)/e), reweights w_i *= exp(-alpha*y_i*h(x_i)) and
    renormalizes. A perfect stump has its error clamped to EPSILON_FLOOR and
    boosting continues.

    Returns (stumps, history) where history maps round -> dict with the
    round's weighted error and the ensemble 0/1 training error so far.
    """
    resp = np.atleast_2d(np.asarray(responses, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    if resp.shape[1] != y.shape[0]:
        raise InputError("responses and labels disagree on sample count")
    if y.shape[0] == 0:
        raise InputError("empty sample set")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise InputError("both classes must be present")
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")

    n = y.shape[0]
    w = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    history: list[dict] = []
    scores = np.zeros(n, dtype=np.float64)
    for _ in range(rounds):
        base, err = fit_stump(resp, y, w)
        alpha = alpha_from_error(err)
        stump = Stump(base.feature_index, base.threshold, base.polarity, alpha)
        stumps.append(stump)

        h = stump.predict(resp[stump.feature_index])
        w = w * np.exp(-alpha * y * h)
        w /= w.sum()

        scores += alpha * h
        pred = np.where(scores >= 0, 1, -1)
        history.append({
            "weighted_error": err,
            "ensemble_error": float(np.mean(pred != y)),
            "weight_sum": float(w.sum()),
        })
    return stumps, history
