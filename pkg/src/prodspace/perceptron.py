"""Perceptrons for product spaces and for the hyperboloid.

The product-space perceptron is a kernel perceptron whose kernel is

    K(x, x') = 1 + sum_E x_E . x'_E
                 + sum_S alpha_S asin(C_S x_S . x'_S)
                 + sum_H alpha_H asin(x_H . x'_H / R_H^2)

where every dot product is the ordinary Euclidean one (also for the
hyperbolic blocks). Training keeps the decision values of all training
points up to date, so each update costs one Gram column.

The hyperbolic perceptron updates ``w <- w + y H x`` with
``H = diag(-1, 1, ..., 1)``. The normalized "robust" variant used as a
baseline is :func:`normalized_step` / :func:`train_normalized_perceptron`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .classify import sign_label
from .errors import DegenerateNormalizationError, DimensionError, DomainError
from .geometry import Kind
from .metrics import macro_f1
from .product import Signature

#: relative slack on the hyperbolic norm bound before a point counts as outside it
R_SLACK = 1e-12
#: ``[u, u] <= DEGENERATE_REL * |u|^2`` is treated as a failed normalization
DEGENERATE_REL = 1e-12

MODEL_FORMAT = "prodspace-perceptron"
MODEL_VERSION = 1


def hyperbolic_norm_bounds(signature, X):
    """Largest Euclidean norm of each hyperbolic block over the rows of ``X``."""
    parts = signature.split(X)
    return tuple(
        float(np.max(np.linalg.norm(parts[i], axis=-1))) for i in signature.indices(Kind.HYPERBOLIC)
    )


def resolve_radii(signature, X, R=None):
    """Per-hyperbolic-block radii: the data maxima, or ``R`` after checking it covers the data."""
    data_R = hyperbolic_norm_bounds(signature, X)
    if R is None:
        return data_R
    R = (float(R),) * len(data_R) if np.isscalar(R) else tuple(float(r) for r in R)
    if len(R) != len(data_R):
        raise DimensionError(f"{len(R)} radii for {len(data_R)} hyperbolic blocks")
    for r, dr in zip(R, data_R):
        if not r > 0:
            raise DomainError("radius must be positive")
        if dr > r * (1 + R_SLACK):
            raise DomainError(f"supplied radius {r:.9g} is below the data bound {dr:.9g}")
    return R


def _check_radius(xh, r, name):
    n = np.max(np.linalg.norm(xh, axis=-1)) if xh.size else 0.0
    if n > r * (1 + R_SLACK):
        raise DomainError(f"{name}: hyperbolic coordinate norm {n:.9g} exceeds R = {r:.9g}")


def kernel_matrix(signature, radii, X, Y=None):
    """Composite kernel between the rows of ``X`` and ``Y`` (``Y = X`` when omitted)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    xs, ys = signature.split(X), signature.split(Y)
    K = np.ones((X.shape[0], Y.shape[0]))
    h = 0
    for b, a, xb, yb in zip(signature.blocks, signature.alphas, xs, ys):
        if b.kind is Kind.EUCLIDEAN:
            K += xb @ yb.T
        elif b.kind is Kind.SPHERICAL:
            K += a * np.arcsin(geo.clamp_unit(b.curvature * (xb @ yb.T)))
        else:
            r = radii[h]
            h += 1
            _check_radius(xb, r, "x")
            _check_radius(yb, r, "x'")
            K += a * np.arcsin(geo.clamp_unit((xb @ yb.T) / r**2))
    return K


def kernel_eval(signature, radii, x, xp):
    """Scalar composite kernel value for two product points."""
    return float(kernel_matrix(signature, radii, x, xp)[0, 0])


def linear_kernel_matrix(X, Y=None):
    """``1 + x . x'``: the kernel of an ordinary perceptron with bias."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    return 1.0 + X @ Y.T


@dataclass
class PerceptronConfig:
    """Training options for the product-space perceptron.

    ``R`` holds one radius per hyperbolic block (a scalar is broadcast);
    ``None`` uses the data maxima. ``single_pass`` visits each point once.
    """

    signature: Signature
    R: object = None
    max_passes: int = 1000
    single_pass: bool = False
    record_curve: bool = False

    def __post_init__(self):
        if int(self.max_passes) < 1:
            raise ValueError("max_passes must be positive")

    @property
    def passes(self):
        return 1 if self.single_pass else int(self.max_passes)


@dataclass
class CyclicRun:
    """Outcome of a cyclic mistake-driven scan."""

    updates: list
    converged: bool
    points_scanned: int
    curve: list = field(default_factory=list)


def _labels(y):
    y = np.asarray(y)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("training set is empty")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    return y.astype(float)


def cyclic_scan(y, column, max_passes, max_updates=None, record_curve=False):
    """Run the cyclic perceptron scan on decision values kept in memory.

    ``column(j)`` returns the change of every training decision value when
    point ``j`` is added with coefficient +1. A point is a mistake when
    ``y * g <= 0``. Each update is placed exactly where a literal scan in
    index order would place it, so the update sequence matches the
    textbook loop while skipping the correct points in bulk.
    """
    n = y.size
    g = np.zeros(n)
    updates = []
    curve = []
    pos = 0
    scanned = 0
    limit = max_passes * n
    converged = False
    while True:
        viol = np.flatnonzero(y * g <= 0)
        if viol.size == 0:
            converged = True
            break
        k = np.searchsorted(viol, pos)
        j = int(viol[k] if k < viol.size else viol[0])
        gap = (j - pos) % n
        if scanned + gap >= limit:
            scanned = limit
            break
        if max_updates is not None and len(updates) >= max_updates:
            scanned += gap
            break
        scanned += gap + 1
        g += y[j] * column(j)
        updates.append(j)
        pos = (j + 1) % n
        if record_curve:
            curve.append(macro_f1(sign_label(g), y))
    if converged:
        # the confirming pass over the remaining points
        scanned += n
    return CyclicRun(updates, converged, scanned, curve), g


class PerceptronModel:
    """Dual form of a trained kernel perceptron.

    The decision function is ``sum over updates of y_n K(x, x_n)``. Only the
    training points that received an update are kept.
    """

    def __init__(self, signature, radii, updates, labels, support, converged=False,
                 points_scanned=0, curve=None, linear=False):
        self.signature = signature
        self.radii = tuple(radii)
        self.updates = [(int(i), int(lab)) for i, lab in zip(updates, labels)]
        self.support = {int(k): np.asarray(v, dtype=float) for k, v in support.items()}
        self.converged = bool(converged)
        self.points_scanned = int(points_scanned)
        self.curve = list(curve or [])
        self.linear = bool(linear)

    @property
    def n_updates(self):
        return len(self.updates)

    def coefficients(self):
        """Indices of support points and their summed labels."""
        idx = sorted(self.support)
        coef = {i: 0.0 for i in idx}
        for i, lab in self.updates:
            coef[i] += lab
        return np.array(idx, dtype=int), np.array([coef[i] for i in idx])

    def _kernel(self, X, S):
        if self.linear:
            return linear_kernel_matrix(X, S)
        return kernel_matrix(self.signature, self.radii, X, S)

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.updates:
            return np.zeros(X.shape[0])
        idx, coef = self.coefficients()
        S = np.stack([self.support[i] for i in idx])
        return self._kernel(X, S) @ coef

    def predict(self, X):
        return sign_label(self.decision_function(X))

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "signature": self.signature.to_dict(),
            "radii": list(self.radii),
            "linear": self.linear,
            "converged": self.converged,
            "points_scanned": self.points_scanned,
            "updates": [list(u) for u in self.updates],
            "support": {str(k): v.tolist() for k, v in sorted(self.support.items())},
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("unrecognized perceptron record")
        ups = d["updates"]
        return cls(
            Signature.from_dict(d["signature"]),
            d["radii"],
            [u[0] for u in ups],
            [u[1] for u in ups],
            {int(k): v for k, v in d["support"].items()},
            d["converged"],
            d["points_scanned"],
            linear=d.get("linear", False),
        )

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _fit_kernel(K, signature, radii, X, y, config, linear=False):
    y = _labels(y)
    if K.shape != (y.size, y.size):
        raise DimensionError("Gram matrix does not match the number of labels")
    run, _ = cyclic_scan(y, lambda j: K[:, j], config.passes, record_curve=config.record_curve)
    support = {j: X[j] for j in set(run.updates)}
    return PerceptronModel(
        signature, radii, run.updates, [int(y[j]) for j in run.updates], support,
        run.converged, run.points_scanned, run.curve, linear=linear,
    )


def train_product_perceptron(X, y, config):
    """Kernel perceptron over a product signature; returns a :class:`PerceptronModel`."""
    sig = config.signature
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    radii = resolve_radii(sig, X, config.R)
    K = kernel_matrix(sig, radii, X)
    return _fit_kernel(K, sig, radii, X, y, config)


def train_linear_perceptron(X, y, max_passes=1000, record_curve=False):
    """Ordinary perceptron with bias on flat coordinates (kernel ``1 + x . x'``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    sig = Signature((geo.SpaceFormSpec.euclidean(X.shape[1]),))
    config = PerceptronConfig(sig, max_passes=max_passes, record_curve=record_curve)
    return _fit_kernel(linear_kernel_matrix(X), sig, (), X, y, config, linear=True)


def euclidean_radius(signature, X):
    """Largest norm of the concatenated Euclidean blocks over the rows of ``X``."""
    parts = signature.split(X)
    idx = signature.indices(Kind.EUCLIDEAN)
    if not idx:
        return 0.0
    sq = sum(np.sum(parts[i] ** 2, axis=-1) for i in idx)
    return float(np.sqrt(np.max(sq)))


def theoretical_update_bound(w_star, radii, R_E, epsilon):
    """Mistake bound ``B * Phi / epsilon^2`` for the product perceptron.

    ``B = 1 + R_E^2 + sum over curved blocks of alpha * pi/2`` bounds the
    kernel diagonal, and ``Phi`` is the squared feature-space norm of the
    reference classifier ``w_star``:
    ``b^2 + |w_E|^2 + sum_S alpha asin(|w_S|^2 / C) + sum_H alpha asin(R^2 |w_H|^2)``.
    Requires ``|w_H| <= 1/R`` for every hyperbolic block.
    """
    if not epsilon > 0:
        raise DomainError("margin must be positive")
    sig = w_star.signature
    B = 1.0 + float(R_E) ** 2
    phi = w_star.bias**2
    h = 0
    for b, a, w in zip(sig.blocks, sig.alphas, w_star.weights):
        if b.kind is Kind.EUCLIDEAN:
            phi += float(w @ w)
            continue
        B += a * np.pi / 2
        if b.kind is Kind.SPHERICAL:
            phi += a * np.arcsin(geo.clamp_unit(float(w @ w) / b.curvature))
        else:
            r = radii[h]
            h += 1
            s = r**2 * float(w @ w)
            if s > 1 + 1e-9:
                raise DomainError(f"hyperbolic weight violates |w_H| <= 1/R (R^2 |w_H|^2 = {s:.9g})")
            phi += a * np.arcsin(min(s, 1.0))
    return float(B * phi / epsilon**2)


# -- hyperbolic perceptron ---------------------------------------------------


@dataclass
class HyperbolicPerceptronState:
    """Normal vector, update history and stopping status of a hyperbolic perceptron."""

    w: np.ndarray
    updates: list
    converged: bool
    points_scanned: int = 0
    degenerate_events: int = 0

    @property
    def n_updates(self):
        return len(self.updates)

    def to_dict(self):
        return {
            "w": self.w.tolist(),
            "updates": list(self.updates),
            "converged": self.converged,
            "points_scanned": self.points_scanned,
            "degenerate_events": self.degenerate_events,
        }


def _check_hyperbolic_data(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    if X.shape[1] < 3:
        raise DimensionError("hyperbolic points need at least 3 coordinates")
    return X


def train_hyperbolic_perceptron(X, y, max_updates=None, max_passes=10**6):
    """Perceptron on the hyperboloid with update ``w <- w + y H x`` from ``w = 0``.

    A point is a mistake when ``y [w, x] <= 0``. Stops when every point is
    correct, after ``max_updates`` updates, or after ``max_passes`` passes.
    """
    X = _check_hyperbolic_data(X)
    y = _labels(y)
    # [H x_j, x_m] is the Euclidean dot x_j . x_m
    run, _ = cyclic_scan(y, lambda j: X @ X[j], max_passes, max_updates)
    w = np.zeros(X.shape[1])
    for j in run.updates:
        w += y[j] * geo.minkowski_flip(X[j])
    return HyperbolicPerceptronState(w, run.updates, run.converged, run.points_scanned)


def hyperbolic_bound(R, w_norm, epsilon):
    """Update bound ``(R |w*| / sinh(epsilon))^2``."""
    if not epsilon > 0:
        raise DomainError("margin must be positive")
    return float((R * w_norm / np.sinh(epsilon)) ** 2)


def hyperbolic_decision_values(w, X):
    """``asinh([w, x])`` for each row of ``X``."""
    return np.arcsinh(geo.lorentz_product(np.atleast_2d(X), w))


def normalized_step(w, x, y):
    """One normalized update ``u = w + y x``, ``w' = u / min(1, sqrt([u, u]))``.

    Raises :class:`DegenerateNormalizationError` when ``[u, u] <= 0`` up to a
    relative tolerance, since the square root is then zero or imaginary.
    """
    u = np.asarray(w, dtype=float) + y * np.asarray(x, dtype=float)
    q = float(geo.lorentz_product(u, u))
    if q <= DEGENERATE_REL * float(u @ u):
        raise DegenerateNormalizationError(f"[u, u] = {q:.3e} is not positive", q)
    return u / min(1.0, np.sqrt(q))


def train_normalized_perceptron(X, y, w0=None, max_updates=None, max_passes=10**6):
    """Baseline hyperbolic perceptron with the normalized update of :func:`normalized_step`.

    The classifier of this variant is ``sgn(-[w, x])``; a point is updated
    when ``-y [w, x] <= 0``. Starts from ``e_2`` unless ``w0`` is given.
    A degenerate normalization is counted, the unnormalized ``u`` is kept
    and training continues.
    """
    X = _check_hyperbolic_data(X)
    y = _labels(y)
    n = y.size
    if w0 is None:
        w = np.zeros(X.shape[1])
        w[1] = 1.0
    else:
        w = np.array(w0, dtype=float)
    flipped = geo.minkowski_flip(X)
    updates = []
    degenerate = 0
    pos = 0
    scanned = 0
    limit = max_passes * n
    converged = False
    while True:
        g = -(flipped @ w)
        viol = np.flatnonzero(y * g <= 0)
        if viol.size == 0:
            converged = True
            scanned += n
            break
        k = np.searchsorted(viol, pos)
        j = int(viol[k] if k < viol.size else viol[0])
        gap = (j - pos) % n
        if scanned + gap >= limit:
            scanned = limit
            break
        if max_updates is not None and len(updates) >= max_updates:
            scanned += gap
            break
        scanned += gap + 1
        try:
            w = normalized_step(w, X[j], y[j])
        except DegenerateNormalizationError:
            degenerate += 1
            w = w + y[j] * X[j]
        updates.append(j)
        pos = (j + 1) % n
    return HyperbolicPerceptronState(w, updates, converged, scanned, degenerate)


def normalized_predict(w, X):
    return sign_label(-geo.lorentz_product(np.atleast_2d(X), w))
