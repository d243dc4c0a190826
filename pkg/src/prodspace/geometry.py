"""Closed-form operators for Euclidean, spherical and hyperbolic space forms.

Points are plain numpy arrays in ambient coordinates: ``dim`` coordinates for
Euclidean blocks and ``dim + 1`` for spherical and hyperbolic ('Loid model)
blocks. Every operator broadcasts over leading axes, so a ``(n, ambient)``
array is treated as ``n`` points.

The spherical block of curvature ``C > 0`` is ``{x : <x, x> = 1/C}``; the
hyperbolic block of curvature ``C < 0`` is the upper sheet
``{x : [x, x] = 1/C, x_1 > 0}`` where ``[u, v] = -u_1 v_1 + sum_i u_i v_i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, SingularityError

#: relative tolerance for manifold membership and tangency checks
TAU_PT = 1e-8
#: slack allowed before an asin/acos-type argument is treated as out of domain
CLAMP_SLACK = 1e-9
#: below this angle the removable singularities are evaluated by series
SERIES_EPS = 1e-6


class Kind(str, enum.Enum):
    EUCLIDEAN = "E"
    SPHERICAL = "S"
    HYPERBOLIC = "H"


@dataclass(frozen=True)
class SpaceFormSpec:
    """A single space form: kind, intrinsic dimension and curvature."""

    kind: Kind
    dim: int
    curvature: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "curvature", float(self.curvature))
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        c = self.curvature
        if self.kind is Kind.EUCLIDEAN:
            if c != 0.0:
                raise DomainError("Euclidean blocks have curvature 0")
        else:
            if self.dim < 2:
                raise DomainError("spherical and hyperbolic blocks need dim >= 2")
            if self.kind is Kind.SPHERICAL and not c > 0:
                raise DomainError(f"spherical curvature must be positive, got {c}")
            if self.kind is Kind.HYPERBOLIC and not c < 0:
                raise DomainError(f"hyperbolic curvature must be negative, got {c}")
            if not np.isfinite(c):
                raise DomainError("curvature must be finite")

    @classmethod
    def euclidean(cls, dim):
        return cls(Kind.EUCLIDEAN, dim, 0.0)

    @classmethod
    def spherical(cls, dim, curvature=1.0):
        return cls(Kind.SPHERICAL, dim, curvature)

    @classmethod
    def hyperbolic(cls, dim, curvature=-1.0):
        return cls(Kind.HYPERBOLIC, dim, curvature)

    @property
    def ambient_dim(self):
        return self.dim if self.kind is Kind.EUCLIDEAN else self.dim + 1

    def __str__(self):
        if self.kind is Kind.EUCLIDEAN:
            return f"E{self.dim}"
        return f"{self.kind.value}{self.dim}:{self.curvature:g}"


def _as_array(x):
    return np.asarray(x, dtype=float)


def _check_ambient(spec, x, name="x"):
    if x.ndim == 0 or x.shape[-1] != spec.ambient_dim:
        raise DimensionError(
            f"{name} has {x.shape[-1] if x.ndim else 0} coordinates, "
            f"{spec} needs {spec.ambient_dim}"
        )


def lorentz_product(u, v):
    """Lorentzian product ``[u, v] = -u_1 v_1 + sum_{i>=2} u_i v_i`` along the last axis."""
    u = _as_array(u)
    v = _as_array(v)
    if u.ndim == 0 or v.ndim == 0 or u.shape[-1] != v.shape[-1]:
        raise DimensionError("Lorentzian product needs vectors of equal length")
    if u.shape[-1] < 2:
        raise DimensionError("Lorentzian product needs at least two coordinates")
    return np.sum(u[..., 1:] * v[..., 1:], axis=-1) - u[..., 0] * v[..., 0]


def minkowski_flip(x):
    """Apply ``H = diag(-1, 1, ..., 1)`` to the last axis."""
    y = np.array(x, dtype=float, copy=True)
    y[..., 0] = -y[..., 0]
    return y


def inner(spec, u, v):
    """The bilinear form of the block: dot product, or Lorentzian product for H."""
    if spec.kind is Kind.HYPERBOLIC:
        return lorentz_product(u, v)
    return np.sum(_as_array(u) * _as_array(v), axis=-1)


def membership_residual(spec, x):
    """Relative deviation of ``x`` from the block (0 for Euclidean points)."""
    x = _as_array(x)
    _check_ambient(spec, x)
    if spec.kind is Kind.EUCLIDEAN:
        return np.zeros(x.shape[:-1])
    c = spec.curvature
    if spec.kind is Kind.SPHERICAL:
        return np.abs(c * np.sum(x * x, axis=-1) - 1.0)
    # cancellation in [x, x] grows with the Euclidean norm of x
    scale = np.maximum(1.0, -c * np.sum(x * x, axis=-1))
    return np.abs(c * lorentz_product(x, x) - 1.0) / scale


def on_manifold(spec, x, tol=TAU_PT):
    x = _as_array(x)
    ok = membership_residual(spec, x) <= tol
    if spec.kind is Kind.HYPERBOLIC:
        ok = ok & (x[..., 0] > 0)
    return ok


def check_point(spec, x, tol=TAU_PT, name="x"):
    """Raise :class:`DomainError` unless every point in ``x`` lies on the block."""
    x = _as_array(x)
    _check_ambient(spec, x, name)
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite coordinates")
    ok = on_manifold(spec, x, tol)
    if not np.all(ok):
        bad = int(np.flatnonzero(~np.atleast_1d(ok))[0])
        raise DomainError(
            f"{name} is not on {spec} (first offending index {bad}, "
            f"residual {np.atleast_1d(membership_residual(spec, x))[bad]:.3e})"
        )
    return x


def check_tangent(spec, p, v, tol=TAU_PT):
    v = _as_array(v)
    _check_ambient(spec, v, "v")
    if spec.kind is Kind.EUCLIDEAN:
        return v
    scale = np.linalg.norm(p, axis=-1) * np.linalg.norm(v, axis=-1)
    dev = np.abs(inner(spec, v, p))
    if np.any(dev > tol * np.maximum(scale, 1e-300) + 1e-300):
        raise DomainError(f"vector is not tangent to {spec} at the base point")
    return v


def project_to_tangent(spec, p, v):
    """Orthogonal projection of an ambient vector onto ``T_p`` (w.r.t. the block form)."""
    p = _as_array(p)
    v = _as_array(v)
    if spec.kind is Kind.EUCLIDEAN:
        return v
    c = spec.curvature
    coef = c * inner(spec, v, p)
    return v - coef[..., None] * p


def _clamp(a, lo, hi):
    a = _as_array(a)
    if np.any(a < lo - CLAMP_SLACK) or np.any(a > hi + CLAMP_SLACK):
        raise DomainError(f"argument outside [{lo}, {hi}] beyond clamp slack")
    return np.clip(a, lo, hi)


def clamp_unit(a):
    """Clamp into ``[-1, 1]``, raising if the violation exceeds the clamp slack."""
    return _clamp(a, -1.0, 1.0)


def distance(spec, x, y, check=True):
    """Geodesic distance between points of one block.

    Spherical and hyperbolic distances are evaluated through the chord
    length, which is algebraically identical to ``acos(C<x,y>)/sqrt(C)`` and
    ``acosh(C[x,y])/sqrt(-C)`` but keeps full precision for nearby points.
    """
    x = _as_array(x)
    y = _as_array(y)
    if check:
        check_point(spec, x, name="x")
        check_point(spec, y, name="y")
    diff = x - y
    if spec.kind is Kind.EUCLIDEAN:
        return np.linalg.norm(diff, axis=-1)
    c = spec.curvature
    if spec.kind is Kind.SPHERICAL:
        half_chord = np.sqrt(c) * np.linalg.norm(diff, axis=-1) / 2.0
        return 2.0 * np.arcsin(np.clip(half_chord, 0.0, 1.0)) / np.sqrt(c)
    q = np.maximum(lorentz_product(diff, diff), 0.0)
    return 2.0 * np.arcsinh(np.sqrt(-c * q) / 2.0) / np.sqrt(-c)


def tangent_norm(spec, v):
    """Norm of a tangent vector under the block metric."""
    v = _as_array(v)
    if spec.kind is Kind.HYPERBOLIC:
        return np.sqrt(np.maximum(lorentz_product(v, v), 0.0))
    return np.linalg.norm(v, axis=-1)


def metric(spec, p, u, v, check=True):
    """Riemannian metric ``g_p(u, v)``: dot product, or Lorentzian product for H."""
    u = _as_array(u)
    v = _as_array(v)
    if check:
        p = check_point(spec, p, name="p")
        check_tangent(spec, p, u)
        check_tangent(spec, p, v)
    return inner(spec, u, v)


def _sin_over(theta):
    # sin(theta)/theta with its series near 0
    small = theta < SERIES_EPS
    safe = np.where(small, 1.0, theta)
    return np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)


def _sinh_over(theta):
    small = theta < SERIES_EPS
    safe = np.where(small, 1.0, theta)
    return np.where(small, 1.0 + theta**2 / 6.0, np.sinh(safe) / safe)


def _over_sin(theta, s):
    # theta / sin(theta), given s = sin(theta)
    small = theta < SERIES_EPS
    safe = np.where(small, 1.0, s)
    return np.where(small, 1.0 + theta**2 / 6.0, theta / safe)


def _over_sinh(theta, s):
    small = theta < SERIES_EPS
    safe = np.where(small, 1.0, s)
    return np.where(small, 1.0 - theta**2 / 6.0, theta / safe)


def exp_map(spec, p, v, check=True):
    """Exponential map ``exp_p(v)``; ``v = 0`` returns ``p`` exactly."""
    p = _as_array(p)
    v = _as_array(v)
    if check:
        check_point(spec, p, name="p")
        check_tangent(spec, p, v)
    if spec.kind is Kind.EUCLIDEAN:
        return p + v
    c = spec.curvature
    theta = np.sqrt(abs(c)) * tangent_norm(spec, v)
    if spec.kind is Kind.SPHERICAL:
        return np.cos(theta)[..., None] * p + _sin_over(theta)[..., None] * v
    return np.cosh(theta)[..., None] * p + _sinh_over(theta)[..., None] * v


def log_map(spec, p, x, check=True):
    """Logarithmic map ``log_p(x)``, normalized so that its metric norm is ``d(p, x)``."""
    p = _as_array(p)
    x = _as_array(x)
    if check:
        check_point(spec, p, name="p")
        check_point(spec, x, name="x")
    if spec.kind is Kind.EUCLIDEAN:
        return x - p
    c = spec.curvature
    if spec.kind is Kind.SPHERICAL:
        cos_t = c * np.sum(x * p, axis=-1)
        u = x - cos_t[..., None] * p
        sin_t = np.sqrt(c) * np.linalg.norm(u, axis=-1)
        theta = np.arctan2(sin_t, cos_t)
        if np.any(np.pi - theta < 1e-8):
            raise SingularityError("logarithm of an antipodal spherical pair is undefined")
        return _over_sin(theta, sin_t)[..., None] * u
    cosh_t = c * lorentz_product(x, p)
    u = x - cosh_t[..., None] * p
    sinh_t = np.sqrt(-c) * np.sqrt(np.maximum(lorentz_product(u, u), 0.0))
    theta = np.arcsinh(sinh_t)
    return _over_sinh(theta, sinh_t)[..., None] * u


def project_to_sphere(spec, z):
    """Radial projection ``z / (sqrt(C) |z|)`` onto the sphere of curvature ``C``."""
    if spec.kind is not Kind.SPHERICAL:
        raise DomainError("project_to_sphere needs a spherical block")
    z = _as_array(z)
    _check_ambient(spec, z, "z")
    nrm = np.linalg.norm(z, axis=-1)
    if np.any(nrm == 0):
        raise DomainError("cannot project the zero vector onto a sphere")
    return z / (np.sqrt(spec.curvature) * nrm)[..., None]


def lift_to_hyperboloid(spec, z):
    """Lift ``z`` in R^d to the hyperboloid; ``z = 0`` maps to the apex.

    Returns ``(sqrt(1 + |z|^2), z) / sqrt(-C)``.
    """
    if spec.kind is not Kind.HYPERBOLIC:
        raise DomainError("lift_to_hyperboloid needs a hyperbolic block")
    z = _as_array(z)
    if z.ndim == 0 or z.shape[-1] != spec.dim:
        raise DimensionError(f"z must have {spec.dim} coordinates")
    time = np.sqrt(1.0 + np.sum(z * z, axis=-1))
    return np.concatenate([time[..., None], z], axis=-1) / np.sqrt(-spec.curvature)


def base_point_of(spec):
    """Canonical base point: origin, north pole ``e_1/sqrt(C)`` or apex."""
    p = np.zeros(spec.ambient_dim)
    if spec.kind is not Kind.EUCLIDEAN:
        p[0] = 1.0 / np.sqrt(abs(spec.curvature))
    return p


def random_points(spec, rng, size, scale=1.0):
    """Gaussian draws mapped onto the block (projection for S, lift for H)."""
    if spec.kind is Kind.EUCLIDEAN:
        return scale * rng.standard_normal((size, spec.dim))
    if spec.kind is Kind.SPHERICAL:
        z = scale * rng.standard_normal((size, spec.dim + 1))
        return project_to_sphere(spec, z)
    z = scale * rng.standard_normal((size, spec.dim))
    return lift_to_hyperboloid(spec, z)
