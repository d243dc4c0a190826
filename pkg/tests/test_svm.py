import json

import numpy as np
import pytest

from prodspace import geometry as geo
from prodspace.datagen import GenConfig, generate_margin_dataset
from prodspace.errors import DimensionError, SolverError
from prodspace.perceptron import kernel_eval
from prodspace.product import Signature
from prodspace.svm import (
    SvmConfig,
    build_kernel_matrices,
    constraint_sets,
    solve_svm,
    split_indefinite,
    svm_decision,
    svm_predict,
    train_svm,
)

ESH = Signature.parse("E2,S2:1,H2:-1")


@pytest.fixture(scope="module")
def separable():
    gen = generate_margin_dataset(GenConfig(ESH, 60, 0.2, 11))
    ds = gen.dataset
    ks = build_kernel_matrices(ESH, ds.X, ds.R)
    return ds, ks, solve_svm(ks, ds.y)


def test_kernel_diagonals(rng):
    sig = Signature.parse("S2:1,H2:-1")
    X = sig.random_points(rng, 10)
    ks = build_kernel_matrices(sig, X)
    assert np.allclose(np.diag(ks.spherical[0]), np.pi / 2)
    R = ks.radii[0]
    assert np.allclose(np.diag(ks.hyperbolic[0]), np.arcsinh(-1 / R**2))
    apex = np.tile(np.concatenate([[1.0, 0, 0], [1.0, 0, 0]]), (3, 1))
    ks1 = build_kernel_matrices(sig, apex, R=1.0)
    assert np.allclose(np.diag(ks1.hyperbolic[0]), np.arcsinh(-1.0))


def test_two_point_kernels_match_scalar_kernel(rng):
    X = ESH.random_points(rng, 2)
    ks = build_kernel_matrices(ESH, X)
    for i in range(2):
        for j in range(2):
            assert ks.composite[i, j] == pytest.approx(kernel_eval(ESH, ks.radii, X[i], X[j]), abs=1e-14)
    assert np.allclose(ks.euclidean[0], X[:, :2] @ X[:, :2].T)


def test_split_indefinite_examples(rng):
    plus, minus = split_indefinite(np.array([[0.0, 1], [1, 0]]))
    assert np.allclose(plus, 0.5 * np.ones((2, 2)))
    assert np.allclose(minus, 0.5 * np.array([[1, -1], [-1, 1]]))
    A = rng.standard_normal((6, 6))
    _, m = split_indefinite(A @ A.T)
    assert np.allclose(m, 0, atol=1e-12)
    B = rng.standard_normal((20, 20))
    B = B + B.T
    p, m = split_indefinite(B)
    assert np.max(np.abs(p - m - B)) <= 1e-10
    with pytest.raises(ValueError):
        split_indefinite(np.array([[0.0, 1], [0, 0]]))


def test_symmetric_pair_gives_antisymmetric_beta():
    sig = Signature.parse("E2")
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    ks = build_kernel_matrices(sig, X)
    sol = solve_svm(ks, np.array([1, -1]))
    assert sol.beta[0] == pytest.approx(-sol.beta[1], abs=1e-8)
    assert sol.epsilon > 0


def test_separable_solution(separable):
    ds, ks, sol = separable
    margins = ds.y * (ks.composite @ sol.beta)
    assert np.all(margins >= sol.epsilon - 1e-6)
    assert np.max(sol.zeta) <= 1e-6
    assert sol.max_residual() <= 1e-6
    cons = constraint_sets(ks, SvmConfig())
    slack = [c.bound - float(sol.beta @ c.Q @ sol.beta) for c in cons]
    assert min(slack) <= 1e-6  # some constraint is active
    assert np.all(svm_predict(sol.beta, ks.composite) == ds.y)


def test_residuals_recomputed_independently(separable):
    ds, ks, sol = separable
    for c in constraint_sets(ks, SvmConfig()):
        v = float(sol.beta @ c.Q @ sol.beta)
        assert sol.constraint_values[c.name] == pytest.approx(v, rel=1e-12, abs=1e-15)
        assert sol.residuals[c.name] == pytest.approx(max(0.0, v - c.bound), abs=1e-15)


def test_label_swap_negates_beta(separable):
    ds, ks, sol = separable
    neg = solve_svm(ks, -ds.y)
    assert np.allclose(neg.beta, -sol.beta, atol=1e-5 * np.max(np.abs(sol.beta)))
    assert neg.epsilon == pytest.approx(sol.epsilon, rel=1e-5)


def test_relaxation_soundness(rng):
    X = ESH.random_points(rng, 15)
    ks = build_kernel_matrices(ESH, X)
    R = ks.radii[0]
    target = np.arcsinh(R**2)
    r = 1e-2 * target
    KH, Kp, Km = ks.hyperbolic[0], ks.hyperbolic_plus[0], ks.hyperbolic_minus[0]
    hits = 0
    for _ in range(200):
        beta = rng.standard_normal(15)
        q = beta @ KH @ beta
        if q <= 0:
            continue
        beta *= np.sqrt(target / q)  # on the equality set
        if beta @ Km @ beta <= r:
            hits += 1
            assert beta @ Kp @ beta <= r + target + 1e-9
    assert hits > 0


def test_drop_hyperbolic_flag(separable):
    _, ks, _ = separable
    names = [c.name for c in constraint_sets(ks, SvmConfig(drop_hyperbolic=True))]
    assert not any(n.startswith("hyperbolic") for n in names)
    names = [c.name for c in constraint_sets(ks, SvmConfig())]
    assert "hyperbolic_minus[2]" in names and "hyperbolic_plus[2]" in names


def test_default_r(separable):
    _, ks, _ = separable
    c = {c.name: c for c in constraint_sets(ks, SvmConfig())}
    R = ks.radii[0]
    assert c["hyperbolic_minus[2]"].bound == pytest.approx(1e-2 * np.arcsinh(R**2))


def test_decision_linear_and_zero_rule():
    rows = np.array([[1.0, 2.0], [0.5, -1.0]])
    assert np.array_equal(svm_decision(np.zeros(2), rows), [0, 0])
    assert np.array_equal(svm_predict(np.zeros(2), rows), [-1, -1])
    b = np.array([0.3, -0.2])
    assert np.allclose(svm_decision(2 * b, rows), 2 * svm_decision(b, rows))
    with pytest.raises(DimensionError):
        svm_decision(np.zeros(3), rows)


def test_one_class_is_solver_error(rng):
    X = ESH.random_points(rng, 5)
    ks = build_kernel_matrices(ESH, X)
    with pytest.raises(SolverError):
        solve_svm(ks, np.ones(5))
    with pytest.raises(SolverError):
        solve_svm(build_kernel_matrices(ESH, X[:1]), np.array([1]))


def test_model_serialization(separable):
    ds, _, _ = separable
    m = train_svm(ds.X, ds.y, ESH, ds.R)
    d = json.loads(m.dumps())
    assert d["format"] == "prodspace-svm"
    assert d["solution"]["epsilon"] == m.solution.epsilon
    assert m.dumps() == train_svm(ds.X, ds.y, ESH, ds.R).dumps()
