"""Synthetic margin-separated datasets and explicit shattering configurations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from . import geometry as geo
from .classify import ClassifierParams, product_decision
from .errors import ConstructionError, DomainError, GenerationStallError
from .geometry import Kind, SpaceFormSpec
from .io import Dataset
from .product import Signature

#: a generation window is this many draws
STALL_WINDOW = 20000
#: windows with a lower acceptance rate than this raise a stall error
STALL_RATE = 1e-3
BATCH = 4096


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _nonzero_gaussian(rng, n):
    while True:
        v = rng.standard_normal(n)
        if np.linalg.norm(v) > 1e-8:
            return v


def sample_w_star(signature, seed, R=None):
    """Random reference classifier with zero bias.

    Euclidean blocks get ``|w_E| = alpha_E``, spherical blocks ``<w, w> = C``
    and hyperbolic blocks ``[w, w] = -C``. When radii ``R`` (one per
    hyperbolic block) are given, each hyperbolic weight is then rescaled to
    Euclidean norm ``1/R`` so that the perceptron bound is finite; the result
    is returned with norm checks disabled because ``[w, w] = -C`` no longer
    holds.
    """
    rng = _rng(seed)
    weights = []
    for b, a in zip(signature.blocks, signature.alphas):
        if b.kind is Kind.EUCLIDEAN:
            v = _nonzero_gaussian(rng, b.dim)
            weights.append(a * v / np.linalg.norm(v))
        elif b.kind is Kind.SPHERICAL:
            v = _nonzero_gaussian(rng, b.ambient_dim)
            weights.append(np.sqrt(b.curvature) * v / np.linalg.norm(v))
        else:
            while True:
                v = _nonzero_gaussian(rng, b.ambient_dim)
                q = geo.lorentz_product(v, v)
                if q > 1e-3 * (v @ v):
                    break
            weights.append(np.sqrt(-b.curvature / q) * v)
    if R is not None:
        radii = (float(R),) * len(signature.indices(Kind.HYPERBOLIC)) if np.isscalar(R) else tuple(R)
        for r, i in zip(radii, signature.indices(Kind.HYPERBOLIC)):
            weights[i] = weights[i] / (r * np.linalg.norm(weights[i]))
    return ClassifierParams(signature, weights, 0.0, strict=R is None)


def default_radius(spec, scale=1.0, quantile=0.999):
    """Radius cap for lifted Gaussian hyperbolic samples.

    A lifted point has squared norm ``(1 + 2|z|^2)/(-C)``, so the cap keeps
    all but a fraction ``1 - quantile`` of the draws.
    """
    return float(np.sqrt((1 + 2 * scale**2 * chi2.ppf(quantile, spec.dim)) / -spec.curvature))


@dataclass
class GenConfig:
    """Options for :func:`generate_margin_dataset`.

    ``R`` caps the Euclidean norm of each hyperbolic block (a scalar is
    broadcast, ``None`` picks :func:`default_radius`); draws above the cap
    are rejected.
    """

    signature: Signature
    n: int
    epsilon: float
    seed: int
    scale: float = 1.0
    R: object = None
    w_star: ClassifierParams = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("margin epsilon must be positive")
        if int(self.n) < 1:
            raise DomainError("n must be at least 1")
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    def radii(self):
        hyp = [self.signature.blocks[i] for i in self.signature.indices(Kind.HYPERBOLIC)]
        if self.R is None:
            return tuple(default_radius(b, self.scale) for b in hyp)
        if np.isscalar(self.R):
            return (float(self.R),) * len(hyp)
        return tuple(float(r) for r in self.R)


@dataclass
class GeneratedData:
    dataset: Dataset
    w_star: ClassifierParams
    radius_cap: tuple
    draws: int
    accepted: int
    margins: np.ndarray = field(repr=False, default=None)


def _draw(sig, rng, size, scale):
    return sig.join([geo.random_points(b, rng, size, scale) for b in sig.blocks])


def generate_margin_dataset(config):
    """Rejection-sample points whose reference decision has magnitude at least ``epsilon``.

    Labels are the sign of the decision. The reference classifier satisfies
    ``|w_H| <= 1/R`` for the radius caps, and every kept point has
    ``|x_H| <= R``, so the generated set meets the perceptron bound's
    preconditions.
    """
    sig = config.signature
    rng = np.random.default_rng(config.seed)
    radii = config.radii()
    w_star = config.w_star if config.w_star is not None else sample_w_star(sig, rng, radii)
    hyp = sig.indices(Kind.HYPERBOLIC)
    kept, labels, margins = [], [], []
    total = 0
    draws = accepted = 0
    win_draws = win_acc = 0
    while total < config.n:
        X = _draw(sig, rng, BATCH, config.scale)
        parts = sig.split(X)
        ok = np.ones(BATCH, dtype=bool)
        for r, i in zip(radii, hyp):
            ok &= np.linalg.norm(parts[i], axis=-1) <= r
        dec = product_decision(w_star, X)
        ok &= np.abs(dec) >= config.epsilon
        idx = np.flatnonzero(ok)[: config.n - total]
        used = BATCH if total + idx.size < config.n else int(idx[-1]) + 1
        draws += used
        win_draws += used
        accepted += idx.size
        win_acc += idx.size
        kept.append(X[idx])
        labels.append(np.where(dec[idx] > 0, 1, -1))
        margins.append(np.abs(dec[idx]))
        total += idx.size
        if total < config.n and win_draws >= STALL_WINDOW:
            if win_acc / win_draws < STALL_RATE:
                raise GenerationStallError(
                    f"accepted {win_acc} of {win_draws} draws (margin {config.epsilon}, "
                    f"{total}/{config.n} points so far); lower epsilon or change the scale"
                )
            win_draws = win_acc = 0
    X = np.concatenate(kept)
    y = np.concatenate(labels)
    data_R = tuple(float(np.max(np.linalg.norm(sig.split(X)[i], axis=-1))) for i in hyp)
    for r, dr, i in zip(radii, data_R, hyp):
        wn = np.linalg.norm(w_star.weights[i])
        if dr > r or wn > 1.0 / r * (1 + 1e-12):
            raise ConstructionError("generated data violates the hyperbolic norm precondition")
    ds = Dataset(sig, X, y, R=radii)
    return GeneratedData(ds, w_star, radii, draws, accepted, np.concatenate(margins))


def flat_view(dataset):
    """All ambient coordinates as one Euclidean vector per point."""
    return np.asarray(dataset.X, dtype=float)


def tangent_view(signature, X):
    """Intrinsic Euclidean coordinates: each block log-mapped at its base point.

    Spherical and hyperbolic blocks are mapped at the pole / apex, where the
    first tangent coordinate is identically zero and is dropped, so the
    result has ``signature.dim`` columns.
    """
    cols = []
    for b, xb in zip(signature.blocks, signature.split(X)):
        if b.kind is Kind.EUCLIDEAN:
            cols.append(xb)
            continue
        p = geo.base_point_of(b)
        v = geo.log_map(b, np.broadcast_to(p, xb.shape), xb, check=False)
        cols.append(v[..., 1:])
    return np.concatenate(cols, axis=-1)


# -- hyperbolic decimated sets ----------------------------------------------


def sample_unit_timelike_normal(rng, d):
    """Random ``w`` in R^{d+1} with ``[w, w] = 1``."""
    while True:
        v = rng.standard_normal(d + 1)
        q = geo.lorentz_product(v, v)
        if q > 1e-3 * (v @ v):
            return v / np.sqrt(q)


def hyperbolic_cloud(rng, d, n, scale=1.0):
    """``n`` lifted Gaussian points on the curvature -1 hyperboloid."""
    return geo.random_points(SpaceFormSpec.hyperbolic(d, -1.0), rng, n, scale)


def decimate(w_star, X, epsilon):
    """Keep points with ``|[w*, x]| >= sinh(epsilon)``, labelled by the sign of ``[w*, x]``."""
    s = geo.lorentz_product(X, w_star)
    keep = np.abs(s) >= np.sinh(epsilon)
    return X[keep], np.where(s[keep] > 0, 1, -1)


# -- shattering constructions -----------------------------------------------


def shatter_points_hyperbolic(d):
    """``d + 1`` points on the curvature -1 hyperboloid: the apex and the lifts of ``e_1..e_d``."""
    if d < 2:
        raise DomainError("need d >= 2")
    spec = SpaceFormSpec.hyperbolic(d, -1.0)
    Z = np.vstack([np.zeros(d), np.eye(d)])
    return geo.lift_to_hyperboloid(spec, Z)


def solve_shatter_weights(labels, k=3.0):
    """Normal vector realizing ``labels`` on :func:`shatter_points_hyperbolic`.

    With targets ``t_1 = y_1`` and ``t_n = k y_n``, ``w = H (X^T)^{-1} t`` has
    the closed form ``(-t_1, t_2 - sqrt(2) t_1, ..., t_{d+1} - sqrt(2) t_1)``
    and satisfies ``[w, x_n] = t_n``. ``k > 1 + sqrt(2)`` makes ``[w, w] > 0``.
    """
    y = np.asarray(labels, dtype=float)
    if not k > np.sqrt(2) + 1:
        raise DomainError(f"k must exceed 1 + sqrt(2), got {k}")
    if y.ndim != 1 or y.size < 3 or not np.all(np.isin(y, (-1, 1))):
        raise DomainError("labels must be a +-1 vector of length d + 1 >= 3")
    t = k * y
    t[0] = y[0]
    return np.concatenate([[-t[0]], t[1:] - np.sqrt(2) * t[0]])


def _anchor_and_points(spec):
    """Anchor point and ``dim`` own points for one block."""
    d = spec.dim
    if spec.kind is Kind.EUCLIDEAN:
        return np.zeros(d), np.eye(d)
    if spec.kind is Kind.SPHERICAL:
        E = np.eye(d + 1) / np.sqrt(spec.curvature)
        return E[0], E[1:]
    Z = np.vstack([np.zeros(d), np.eye(d)])
    L = geo.lift_to_hyperboloid(spec, Z)
    return L[0], L[1:]


def _solve(A, rhs, what):
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError(f"singular interpolation system for {what}") from exc
    if not np.all(np.isfinite(sol)):
        raise ConstructionError(f"non-finite interpolation solution for {what}")
    return sol


@dataclass
class ShatterSet:
    """Points of a product shattering configuration plus their block layout."""

    signature: Signature
    points: np.ndarray
    anchors: list
    owner: list  # (block index, local index) per point, None for the last point

    def interpolating_weights(self, labels):
        """Weights whose block values put point ``n`` at target ``y_n`` and the anchor on every boundary."""
        sig = self.signature
        y = np.asarray(labels, dtype=float)
        weights, bias = [], 0.0
        for bi, (b, anc) in enumerate(zip(sig.blocks, self.anchors)):
            rows = [i for i, o in enumerate(self.owner) if o is not None and o[0] == bi]
            own = sig.split(self.points[rows])[bi]
            t = y[rows]
            if b.kind is Kind.EUCLIDEAN:
                A = np.vstack([np.column_stack([own, np.ones(len(rows))]), np.append(anc, 1.0)])
                sol = _solve(A, np.append(t, 0.0), f"block {bi}")
                weights.append(sol[:-1])
                bias += sol[-1]
            elif b.kind is Kind.SPHERICAL:
                A = np.vstack([own, anc])
                weights.append(_solve(A, np.append(np.sin(t), 0.0), f"block {bi}"))
            else:
                A = geo.minkowski_flip(np.vstack([own, anc]))
                weights.append(_solve(A, np.append(np.sinh(t), 0.0), f"block {bi}"))
        return weights, bias

    def perturbed_params(self, labels, eps):
        """Interpolating weights nudged towards the last point's label."""
        sig = self.signature
        weights, bias = self.interpolating_weights(labels)
        tN = float(labels[-1])
        out = []
        for b, w, anc in zip(sig.blocks, weights, self.anchors):
            if b.kind is Kind.HYPERBOLIC:
                out.append(w - eps * tN * anc)
            else:
                out.append(w + eps * tN * anc)
        return ClassifierParams(sig, out, bias + eps * tN, strict=False)

    def realize(self, labels, eps_start=1e-2, eps_stop=1e-10, factor=10.0):
        """Search ``eps`` downward until the perturbed classifier reproduces ``labels``.

        Returns ``(params, eps)``; raises :class:`ConstructionError` if no
        ``eps`` on the schedule works.
        """
        from .classify import predict

        labels = np.asarray(labels)
        eps = eps_start
        while eps >= eps_stop * (1 - 1e-12):
            params = self.perturbed_params(labels, eps)
            if np.array_equal(predict(params, self.points), labels):
                return params, eps
            eps /= factor
        raise ConstructionError("no margin on the schedule reproduces the labelling")


def shatter_points_product(signature):
    """``dim + 1`` product points that linear product classifiers shatter.

    Every point except the last sits at its block's anchor in all blocks but
    one, where it takes one of that block's own points; the last point is
    the anchor everywhere.
    """
    anchors, owns = [], []
    for b in signature.blocks:
        a, own = _anchor_and_points(b)
        anchors.append(a)
        owns.append(own)
    rows, owner = [], []
    for bi, own in enumerate(owns):
        for li, p in enumerate(own):
            parts = list(anchors)
            parts[bi] = p
            rows.append(signature.join([np.asarray(q) for q in parts]))
            owner.append((bi, li))
    rows.append(signature.join(anchors))
    owner.append(None)
    return ShatterSet(signature, np.vstack(rows), anchors, owner)
