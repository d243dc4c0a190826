"""Classification scores."""

import numpy as np


def precision_recall_f1(preds, labels, classes=None):
    """Per-class precision, recall and F1 over the label universe of ``labels``.

    A class that is never predicted gets precision 0, so its F1 is 0 as well.
    Returns ``(classes, precision, recall, f1)`` as numpy arrays.
    """
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise ValueError("preds and labels must have equal length")
    if labels.size == 0:
        raise ValueError("cannot score an empty prediction set")
    classes = np.unique(labels) if classes is None else np.asarray(classes)
    tp = np.array([np.sum((preds == c) & (labels == c)) for c in classes], dtype=float)
    n_pred = np.array([np.sum(preds == c) for c in classes], dtype=float)
    n_true = np.array([np.sum(labels == c) for c in classes], dtype=float)
    prec = np.divide(tp, n_pred, out=np.zeros_like(tp), where=n_pred > 0)
    rec = np.divide(tp, n_true, out=np.zeros_like(tp), where=n_true > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros_like(tp), where=denom > 0)
    return classes, prec, rec, f1


def macro_f1(preds, labels):
    """Unweighted mean of per-class F1 scores."""
    return float(np.mean(precision_recall_f1(preds, labels)[3]))


def accuracy(preds, labels):
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape or labels.size == 0:
        raise ValueError("preds and labels must be non-empty and of equal length")
    return float(np.mean(preds == labels))
