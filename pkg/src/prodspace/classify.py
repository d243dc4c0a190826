"""Distance-based linear classifiers for each space form and their product.

Each block contributes a signed value whose magnitude is (up to a curvature
scale) the geodesic distance to that block's decision boundary:

* Euclidean: ``w_E . x_E + b``
* spherical: ``asin(<w_S, x_S>)`` with ``<w_S, w_S> = C_S``
* hyperbolic: ``asinh([w_H, x_H])`` with ``[w_H, w_H] = -C_H``

The product classifier adds the block values, weighting the non-Euclidean
ones by their metric weights. The Euclidean weight is carried by the norm of
``w_E`` itself (``|w_E| = alpha_E``), so no extra factor multiplies ``w_E``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import DimensionError, ParameterError, SingularityError
from .geometry import Kind
from .product import Signature

#: relative tolerance on parameter norm constraints
TAU_W = 1e-6
#: base-point projections shorter than this are treated as degenerate
PROJ_EPS = 1e-12

PARAMS_FORMAT = "prodspace-classifier"
PARAMS_VERSION = 1


def _vec(x):
    return np.asarray(x, dtype=float)


def euclidean_decision(w, b, x):
    w, x = _vec(w), _vec(x)
    if w.shape[-1] != x.shape[-1]:
        raise DimensionError(f"weight has {w.shape[-1]} coordinates, point has {x.shape[-1]}")
    return x @ w + float(b)


def _check_spherical_weight(w, curvature):
    q = float(np.dot(w, w))
    if abs(q / curvature - 1.0) > TAU_W:
        raise ParameterError(f"spherical weight has <w,w> = {q:.9g}, expected {curvature:.9g}")


def _check_hyperbolic_weight(w, curvature):
    q = float(geo.lorentz_product(w, w))
    if q <= 0:
        raise ParameterError(f"hyperbolic weight must have [w,w] > 0, got {q:.9g}")
    if abs(q / -curvature - 1.0) > TAU_W:
        raise ParameterError(f"hyperbolic weight has [w,w] = {q:.9g}, expected {-curvature:.9g}")


def spherical_decision(w, x, curvature=1.0, check=True):
    """``asin(<w, x>)``; its magnitude over ``sqrt(C)`` is the distance to the boundary."""
    w, x = _vec(w), _vec(x)
    if w.shape[-1] != x.shape[-1]:
        raise DimensionError("weight and point dimensions differ")
    if check:
        _check_spherical_weight(w, curvature)
    return np.arcsin(geo.clamp_unit(x @ w))


def hyperbolic_decision(w, x, curvature=-1.0, check=True):
    """``asinh([w, x])``; its magnitude over ``sqrt(-C)`` is the distance to the boundary."""
    w, x = _vec(w), _vec(x)
    if w.shape[-1] != x.shape[-1]:
        raise DimensionError("weight and point dimensions differ")
    if check:
        _check_hyperbolic_weight(w, curvature)
    return np.arcsinh(geo.lorentz_product(x, w))


def base_point(spec, w, x):
    """Closest boundary point to ``x``: the normalized projection of ``x`` onto ``w``'s complement."""
    w, x = _vec(w), _vec(x)
    if spec.kind is Kind.SPHERICAL:
        proj = x - (np.dot(w, x) / np.dot(w, w)) * w
        norm = np.linalg.norm(proj)
        if norm < PROJ_EPS:
            raise SingularityError("point is a pole of the decision boundary; projection is degenerate")
        return proj / (np.sqrt(spec.curvature) * norm)
    if spec.kind is Kind.HYPERBOLIC:
        proj = x - (geo.lorentz_product(w, x) / geo.lorentz_product(w, w)) * w
        q = -geo.lorentz_product(proj, proj)
        if not q > PROJ_EPS**2:
            raise SingularityError("projection onto the decision boundary is degenerate")
        return proj / (np.sqrt(-spec.curvature) * np.sqrt(q))
    raise ValueError("base_point is defined for spherical and hyperbolic blocks only")


@dataclass
class ClassifierParams:
    """Per-block weights and a bias for a product-space classifier.

    ``strict=False`` skips the norm checks; this is used for reference
    classifiers that are deliberately rescaled and for shattering witnesses.
    """

    signature: Signature
    weights: list
    bias: float = 0.0
    strict: bool = True

    def __post_init__(self):
        self.weights = [_vec(w).copy() for w in self.weights]
        self.bias = float(self.bias)
        self.validate()

    def validate(self):
        sig = self.signature
        if len(self.weights) != len(sig.blocks):
            raise DimensionError(f"{len(self.weights)} weight vectors for {len(sig.blocks)} blocks")
        for i, (b, w) in enumerate(zip(sig.blocks, self.weights)):
            if w.shape != (b.ambient_dim,):
                raise DimensionError(f"block {i} weight needs shape ({b.ambient_dim},), got {w.shape}")
            if not np.all(np.isfinite(w)):
                raise ParameterError(f"block {i} weight is not finite")
            if not self.strict:
                continue
            if b.kind is Kind.EUCLIDEAN:
                n = float(np.linalg.norm(w))
                if abs(n / sig.alphas[i] - 1.0) > TAU_W:
                    raise ParameterError(f"block {i}: |w_E| = {n:.9g}, expected {sig.alphas[i]:.9g}")
            elif b.kind is Kind.SPHERICAL:
                _check_spherical_weight(w, b.curvature)
            else:
                _check_hyperbolic_weight(w, b.curvature)

    def block_values(self, x):
        """Unweighted block decision values, shape ``(..., n_blocks)``; bias excluded."""
        sig = self.signature
        vals = []
        for b, w, xb in zip(sig.blocks, self.weights, sig.split(x)):
            if b.kind is Kind.EUCLIDEAN:
                vals.append(xb @ w)
            elif b.kind is Kind.SPHERICAL:
                vals.append(spherical_decision(w, xb, b.curvature, check=False))
            else:
                vals.append(hyperbolic_decision(w, xb, b.curvature, check=False))
        return np.stack(vals, axis=-1)

    def to_dict(self):
        return {
            "format": PARAMS_FORMAT,
            "version": PARAMS_VERSION,
            "signature": self.signature.to_dict(),
            "weights": [w.tolist() for w in self.weights],
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, d, strict=True):
        if d.get("format") != PARAMS_FORMAT or d.get("version") != PARAMS_VERSION:
            raise ValueError("unrecognized classifier record")
        return cls(Signature.from_dict(d["signature"]), d["weights"], d["bias"], strict=strict)

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def product_decision(params, x):
    """Signed product decision value for a point or a batch of points."""
    sig = params.signature
    vals = params.block_values(x)
    weights = np.array(
        [1.0 if b.kind is Kind.EUCLIDEAN else a for b, a in zip(sig.blocks, sig.alphas)]
    )
    return vals @ weights + params.bias


def sign_label(value):
    """Map decision values to labels, sending 0 to -1."""
    return np.where(np.asarray(value) > 0, 1, -1)


def predict(params, x):
    return sign_label(product_decision(params, x))


def margin_surrogate(params, x, y):
    """``y * decision``, a margin proxy built from summed per-block distances.

    Positive iff the point is correctly classified. It is not the geodesic
    distance to the product decision boundary.
    """
    return np.asarray(y) * product_decision(params, x)
