"""Multiclass evaluation: one-vs-rest training, Platt calibration and splits.

A *trainer* is any callable ``trainer(X, y) -> model`` where ``y`` is a
+-1 vector and ``model.decision_function(X)`` returns real scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import accuracy, macro_f1, precision_recall_f1  # noqa: F401  (re-exported)
from .perceptron import PerceptronConfig, train_linear_perceptron, train_product_perceptron
from .svm import SvmConfig, train_svm

PLATT_MAX_ITER = 100
PLATT_MIN_STEP = 1e-10
PLATT_SIGMA = 1e-12


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def _platt_loss(A, B, s, t):
    # -sum t log p + (1 - t) log(1 - p) with p = 1 / (1 + exp(A s + B))
    f = A * s + B
    return float(np.sum(t * f + _log1pexp(-f)))


def platt_scale(scores, labels):
    """Fit ``P(y = 1 | s) = 1 / (1 + exp(A s + B))`` to classifier scores.

    Uses regularized targets ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)`` and a
    Newton iteration with backtracking line search (at most
    ``PLATT_MAX_ITER`` steps, Hessian ridge ``PLATT_SIGMA``).
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.size == 0:
        raise ValueError("scores and labels must be non-empty and of equal length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    pos = y == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("Platt scaling needs both labels")
    t = np.where(pos, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    A, B = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    loss = _platt_loss(A, B, s, t)
    for _ in range(PLATT_MAX_ITER):
        f = A * s + B
        p = np.exp(-_log1pexp(f))  # 1 / (1 + exp(f))
        q = 1.0 - p
        d2 = p * q
        h11 = float(np.sum(s * s * d2)) + PLATT_SIGMA
        h22 = float(np.sum(d2)) + PLATT_SIGMA
        h21 = float(np.sum(s * d2))
        d1 = t - p
        g1 = float(np.sum(s * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= PLATT_MIN_STEP:
            nA, nB = A + step * dA, B + step * dB
            nloss = _platt_loss(nA, nB, s, t)
            if nloss < loss + 1e-4 * step * gd:
                A, B, loss = nA, nB, nloss
                break
            step /= 2
        else:
            break
    return float(A), float(B)


def platt_proba(A, B, scores):
    f = A * np.asarray(scores, dtype=float) + B
    return np.exp(-_log1pexp(f))


@dataclass
class OvrModel:
    classes: np.ndarray
    models: list
    platt: list

    def proba(self, X):
        """Per-class calibrated probabilities, shape ``(n, n_classes)``."""
        cols = [platt_proba(A, B, m.decision_function(X)) for m, (A, B) in zip(self.models, self.platt)]
        return np.column_stack(cols)


def one_vs_rest_train(X, labels, trainer, classes=None):
    """Train one class-vs-rest model per class and calibrate each on its training scores."""
    labels = np.asarray(labels)
    classes = np.unique(labels) if classes is None else np.asarray(classes)
    if classes.size < 2:
        raise ValueError("one-vs-rest needs at least two classes")
    models, platt = [], []
    for c in classes:
        yb = np.where(labels == c, 1, -1)
        if not np.any(yb == 1):
            raise ValueError(f"class {c} has no training samples")
        m = trainer(X, yb)
        models.append(m)
        platt.append(platt_scale(m.decision_function(X), yb))
    return OvrModel(classes, models, platt)


def ovr_predict(ovr, X):
    """Class with the largest calibrated probability; ties go to the lowest class index."""
    return ovr.classes[np.argmax(ovr.proba(X), axis=1)]


def train_test_split(n, seed, train_fraction=0.6):
    """Seeded shuffle split; both index arrays are returned in ascending order."""
    if n < 2:
        raise ValueError("need at least two points to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    k = min(max(1, int(round(train_fraction * n))), n - 1)
    return np.sort(perm[:k]), np.sort(perm[k:])


# -- trainer factories -------------------------------------------------------


def perceptron_trainer(signature, R=None, max_passes=1000, single_pass=False):
    def fit(X, y):
        return train_product_perceptron(X, y, PerceptronConfig(signature, R, max_passes, single_pass))

    return fit


def linear_trainer(max_passes=1000):
    def fit(X, y):
        return train_linear_perceptron(X, y, max_passes=max_passes)

    return fit


def svm_trainer(signature, R=None, config=None):
    config = config or SvmConfig()

    def fit(X, y):
        return train_svm(X, y, signature, R, config)

    return fit


def evaluate_binary(model, X, y):
    """Macro-F1 and accuracy of a +-1 model."""
    pred = model.predict(X)
    return {"macro_f1": macro_f1(pred, y), "accuracy": accuracy(pred, y)}
