"""Large-margin product-space classifier solved as a second-order cone program.

The classifier is ``f(x) = sum_n beta_n K(x_n, x)`` with the composite
kernel of :mod:`prodspace.perceptron`. The norm constraints of a
distance-based product classifier become quadratic constraints on ``beta``:

* Euclidean: ``beta^T K_E beta <= alpha_E^2`` (Gram of the Euclidean part,
  bias column excluded)
* spherical: ``beta^T K_S beta <= pi/2`` with ``K_S = asin(C <x_i, x_j>)``
* hyperbolic: ``K_H = asinh([x_i, x_j] / R^2)`` is indefinite; with
  ``K_H = K_plus - K_minus`` both ``beta^T K_minus beta <= r`` and
  ``beta^T K_plus beta <= r + asinh(-R^2 C)`` are imposed.

The program maximizes ``epsilon - lambda * sum(zeta)`` subject to
``y_n f(x_n) >= epsilon - zeta_n``, ``zeta >= 0``. The default
``lambda = 1`` is the unweighted objective.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from . import geometry as geo
from .classify import sign_label
from .errors import DimensionError, SolverError
from .geometry import Kind
from .perceptron import kernel_matrix, resolve_radii
from .product import Signature

SOLUTION_FORMAT = "prodspace-svm"
SOLUTION_VERSION = 1


@dataclass
class QuadConstraint:
    """``beta^T Q beta <= bound`` for one block (``name`` identifies it in reports)."""

    name: str
    Q: np.ndarray
    bound: float


@dataclass
class KernelSet:
    """Per-block kernel matrices of a training set and the composite Gram matrix."""

    signature: Signature
    radii: tuple
    composite: np.ndarray
    euclidean: list = field(default_factory=list)
    spherical: list = field(default_factory=list)
    hyperbolic: list = field(default_factory=list)
    hyperbolic_plus: list = field(default_factory=list)
    hyperbolic_minus: list = field(default_factory=list)

    @property
    def n(self):
        return self.composite.shape[0]


def build_kernel_matrices(signature, X, R=None):
    """Assemble the block kernels of the constraint sets and the composite kernel."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    radii = resolve_radii(signature, X, R)
    parts = signature.split(X)
    ks = KernelSet(signature, radii, kernel_matrix(signature, radii, X))
    h = 0
    for b, xb in zip(signature.blocks, parts):
        if b.kind is Kind.EUCLIDEAN:
            ks.euclidean.append(xb @ xb.T)
        elif b.kind is Kind.SPHERICAL:
            ks.spherical.append(np.arcsin(geo.clamp_unit(b.curvature * (xb @ xb.T))))
        else:
            r = radii[h]
            h += 1
            L = geo.lorentz_product(xb[:, None, :], xb[None, :, :])
            KH = np.arcsinh(L / r**2)
            plus, minus = split_indefinite(KH)
            ks.hyperbolic.append(KH)
            ks.hyperbolic_plus.append(plus)
            ks.hyperbolic_minus.append(minus)
    return ks


def split_indefinite(K, sym_tol=1e-10):
    """Split a symmetric matrix into ``K_plus - K_minus`` with both parts PSD."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionError("split_indefinite needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(K)))) if K.size else 1.0
    if np.max(np.abs(K - K.T), initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((K + K.T) / 2)
    pos = np.clip(vals, 0, None)
    neg = np.clip(-vals, 0, None)
    plus = (vecs * pos) @ vecs.T
    minus = (vecs * neg) @ vecs.T
    return (plus + plus.T) / 2, (minus + minus.T) / 2


def _factor(Q):
    """``L`` with ``Q ~= L L^T`` from the nonnegative part of the spectrum."""
    vals, vecs = np.linalg.eigh((Q + Q.T) / 2)
    keep = vals > 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    return vecs[:, keep] * np.sqrt(vals[keep])


@dataclass
class SvmConfig:
    """Solver options.

    ``r`` is the slack of the hyperbolic constraint pair (``None`` picks
    ``1e-2 * asinh(-R^2 C)`` per block). ``drop_hyperbolic`` leaves the
    hyperbolic pair out entirely. ``slack_weight`` multiplies ``sum(zeta)``.
    """

    r: float = None
    tolerance: float = 1e-6
    max_iters: int = 10000
    drop_hyperbolic: bool = False
    slack_weight: float = 1.0
    solver: str = "CLARABEL"


def constraint_sets(kernels, config):
    sig = kernels.signature
    out = []
    e = s = h = 0
    for bi, (b, a) in enumerate(zip(sig.blocks, sig.alphas)):
        if b.kind is Kind.EUCLIDEAN:
            out.append(QuadConstraint(f"euclidean[{bi}]", kernels.euclidean[e], a**2))
            e += 1
        elif b.kind is Kind.SPHERICAL:
            out.append(QuadConstraint(f"spherical[{bi}]", kernels.spherical[s], np.pi / 2))
            s += 1
        else:
            R = kernels.radii[h]
            target = float(np.arcsinh(-(R**2) * b.curvature))
            r = 1e-2 * target if config.r is None else float(config.r)
            if not config.drop_hyperbolic:
                out.append(QuadConstraint(f"hyperbolic_minus[{bi}]", kernels.hyperbolic_minus[h], r))
                out.append(QuadConstraint(f"hyperbolic_plus[{bi}]", kernels.hyperbolic_plus[h], r + target))
            h += 1
    return out


@dataclass
class SvmSolution:
    beta: np.ndarray
    epsilon: float
    zeta: np.ndarray
    objective: float
    residuals: dict
    status: str
    converged: bool
    constraint_values: dict = field(default_factory=dict)

    def max_residual(self):
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_dict(self):
        return {
            "beta": self.beta.tolist(),
            "epsilon": self.epsilon,
            "zeta": self.zeta.tolist(),
            "objective": self.objective,
            "residuals": dict(sorted(self.residuals.items())),
            "constraint_values": dict(sorted(self.constraint_values.items())),
            "status": self.status,
            "converged": self.converged,
        }


def _best_margin(margins, weight):
    """Maximize ``eps - weight * sum(max(0, eps - m))`` over ``eps``; ties pick the smallest."""
    cands = np.unique(np.concatenate([[0.0], margins[margins > 0]]))
    best_eps, best_val = 0.0, -np.inf
    for c in cands:
        val = c - weight * np.sum(np.maximum(0.0, c - margins))
        if val > best_val + 1e-15 * max(1.0, abs(val)):
            best_eps, best_val = float(c), float(val)
    return best_eps, best_val


def residual_report(beta, epsilon, zeta, K, y, constraints, slack_weight=1.0):
    """Constraint violations recomputed from scratch (0 means satisfied)."""
    margins = y * (K @ beta)
    res = {
        "margin": float(max(0.0, np.max(epsilon - zeta - margins))),
        "zeta_nonneg": float(max(0.0, -np.min(zeta))),
        "epsilon_nonneg": float(max(0.0, -epsilon)),
    }
    values = {}
    for c in constraints:
        v = float(beta @ c.Q @ beta)
        values[c.name] = v
        res[c.name] = max(0.0, v - c.bound)
    return res, values


def _attempts(config):
    if config.solver == "CLARABEL":
        tight = dict(max_iter=int(config.max_iters), tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
        return [("CLARABEL", tight), ("CLARABEL", dict(max_iter=int(config.max_iters))),
                ("SCS", dict(max_iters=int(config.max_iters) * 10, eps=1e-9))]
    return [(config.solver, {})]


def _solve_with_fallback(prob, config):
    """Try the configured solver, then looser settings; returns the final status."""
    status = "not solved"
    for name, opts in _attempts(config):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(solver=name, **opts)
        except cp.error.SolverError:
            status = f"{name} failed"
            continue
        status = prob.status
        if status == "optimal":
            break
    if status not in ("optimal", "optimal_inaccurate"):
        raise SolverError(f"cone solver did not converge (last status: {status})")
    return status


def solve_svm(kernels, labels, config=None):
    """Solve the relaxed large-margin program; returns an :class:`SvmSolution`.

    After the cone solve, ``beta`` is rescaled so the tightest quadratic
    constraint is met with equality (when the objective is positive) and
    ``epsilon`` and ``zeta`` are re-optimized exactly for that ``beta``.
    """
    config = config or SvmConfig()
    y = np.asarray(labels, dtype=float)
    K = kernels.composite
    n = K.shape[0]
    if y.shape != (n,):
        raise DimensionError(f"{y.size} labels for a {n}x{n} kernel")
    if n < 2 or np.unique(y).size < 2:
        raise SolverError("need at least two points with both labels present")
    if not np.all(np.isin(y, (-1, 1))):
        raise SolverError("labels must be -1 or +1")
    cons = constraint_sets(kernels, config)

    beta = cp.Variable(n)
    eps = cp.Variable()
    zeta = cp.Variable(n)
    YK = y[:, None] * K
    c_list = [YK @ beta >= eps - zeta, zeta >= 0, eps >= 0]
    for c in cons:
        L = _factor(c.Q)
        if L.shape[1] == 0:
            continue
        c_list.append(cp.norm(L.T @ beta, 2) <= np.sqrt(c.bound))
    prob = cp.Problem(cp.Maximize(eps - config.slack_weight * cp.sum(zeta)), c_list)
    status = _solve_with_fallback(prob, config)
    if beta.value is None:
        raise SolverError(f"cone solver returned status {status}")
    b = np.asarray(beta.value, dtype=float)

    # polish: push the tightest constraint onto its boundary, then re-fit eps, zeta
    margins = y * (K @ b)
    _, obj0 = _best_margin(margins, config.slack_weight)
    ratios = [c.bound / v for c in cons if (v := float(b @ c.Q @ b)) > 0]
    if ratios:
        s = float(np.sqrt(min(ratios)))
        b = b * (s if obj0 > 0 else min(s, 1.0))
    margins = y * (K @ b)
    e, obj = _best_margin(margins, config.slack_weight)
    z = np.maximum(0.0, e - margins)
    res, values = residual_report(b, e, z, K, y, cons, config.slack_weight)
    return SvmSolution(b, e, z, obj, res, status, status == "optimal", values)


def svm_decision(beta, kernel_rows):
    """``kernel_rows @ beta``; rows are ``K(x, x_n)`` for the training points ``x_n``."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=float))
    beta = np.asarray(beta, dtype=float)
    if rows.shape[-1] != beta.shape[0]:
        raise DimensionError(f"kernel rows have {rows.shape[-1]} columns for {beta.shape[0]} weights")
    return rows @ beta


def svm_predict(beta, kernel_rows):
    return sign_label(svm_decision(beta, kernel_rows))


class SvmModel:
    """A solved program together with its training points, usable for prediction."""

    def __init__(self, signature, radii, X, solution, config=None):
        self.signature = signature
        self.radii = tuple(radii)
        self.X = np.asarray(X, dtype=float)
        self.solution = solution
        self.config = config or SvmConfig()

    def decision_function(self, X):
        rows = kernel_matrix(self.signature, self.radii, np.atleast_2d(X), self.X)
        return svm_decision(self.solution.beta, rows)

    def predict(self, X):
        return sign_label(self.decision_function(X))

    def to_dict(self):
        cfg = self.config
        return {
            "format": SOLUTION_FORMAT,
            "version": SOLUTION_VERSION,
            "signature": self.signature.to_dict(),
            "radii": list(self.radii),
            "config": {
                "r": cfg.r,
                "tolerance": cfg.tolerance,
                "max_iters": cfg.max_iters,
                "drop_hyperbolic": cfg.drop_hyperbolic,
                "slack_weight": cfg.slack_weight,
                "solver": cfg.solver,
            },
            "solution": self.solution.to_dict(),
            "support": self.X.tolist(),
        }

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def train_svm(X, y, signature, R=None, config=None):
    """Build kernels, solve and wrap the result in an :class:`SvmModel`."""
    config = config or SvmConfig()
    ks = build_kernel_matrices(signature, X, R)
    sol = solve_svm(ks, y, config)
    return SvmModel(signature, ks.radii, X, sol, config)
