import itertools

import numpy as np
import pytest

from prodspace import geometry as geo
from prodspace.classify import predict, product_decision
from prodspace.datagen import (
    GenConfig,
    decimate,
    default_radius,
    flat_view,
    generate_margin_dataset,
    hyperbolic_cloud,
    sample_unit_timelike_normal,
    sample_w_star,
    shatter_points_hyperbolic,
    shatter_points_product,
    solve_shatter_weights,
    tangent_view,
)
from prodspace.errors import DomainError, GenerationStallError
from prodspace.geometry import Kind, SpaceFormSpec
from prodspace.io import load_dataset, save_dataset
from prodspace.product import Signature

ESH = Signature.parse("E2,S2:1,H2:-1")
R2 = np.sqrt(2.0)


def test_w_star_norms_and_determinism():
    sig = Signature.parse("E3,S2:0.25,H2:-4", alphas=(2.0, 1.0, 1.0))
    for seed in range(10):
        w = sample_w_star(sig, seed)
        wE, wS, wH = w.weights
        assert abs(np.linalg.norm(wE) - 2.0) <= 1e-10
        assert abs(wS @ wS - 0.25) <= 1e-10
        q = geo.lorentz_product(wH, wH)
        assert abs(q - 4.0) <= 1e-10 and q > 0
        assert w.bias == 0
    a, b = sample_w_star(sig, 7), sample_w_star(sig, 7)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))


def test_w_star_rescaled_to_radius():
    w = sample_w_star(ESH, 3, R=4.0)
    assert np.linalg.norm(w.weights[2]) == pytest.approx(0.25)
    assert not w.strict


def test_margin_dataset_properties(tmp_path):
    gen = generate_margin_dataset(GenConfig(ESH, 200, 0.1, 5))
    ds = gen.dataset
    assert len(ds) == 200
    dec = product_decision(gen.w_star, ds.X)
    assert np.all(ds.y * dec >= 0.1)
    ds.validate()
    for r, h in zip(ds.R, ESH.indices(Kind.HYPERBOLIC)):
        assert np.max(np.linalg.norm(ESH.split(ds.X)[h], axis=1)) <= r
        assert np.linalg.norm(gen.w_star.weights[h]) <= 1 / r * (1 + 1e-12)
    path = tmp_path / "d.csv"
    save_dataset(path, ds)
    back = load_dataset(path)
    assert np.array_equal(back.X, ds.X)
    assert np.array_equal(ds.y * product_decision(gen.w_star, back.X), ds.y * dec)


def test_generation_deterministic_and_validated():
    a = generate_margin_dataset(GenConfig(ESH, 50, 0.2, 1)).dataset
    b = generate_margin_dataset(GenConfig(ESH, 50, 0.2, 1)).dataset
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    with pytest.raises(DomainError):
        GenConfig(ESH, 10, 0.0, 1)
    with pytest.raises(DomainError):
        GenConfig(ESH, 0, 0.1, 1)


def test_generation_stall():
    with pytest.raises(GenerationStallError):
        generate_margin_dataset(GenConfig(Signature.parse("S2:1"), 10, 1.6, 0))


def test_default_radius_covers_most_draws(rng):
    spec = SpaceFormSpec.hyperbolic(2, -1.0)
    X = geo.random_points(spec, rng, 100_000)
    frac = np.mean(np.linalg.norm(X, axis=1) <= default_radius(spec))
    assert 0.998 <= frac <= 1.0


def test_views():
    ds = generate_margin_dataset(GenConfig(ESH, 20, 0.1, 2)).dataset
    assert flat_view(ds).shape == (20, 8)
    T = tangent_view(ESH, ds.X)
    assert T.shape == (20, 6)
    assert np.array_equal(T[:, :2], ds.X[:, :2])
    # tangent coordinates have the geodesic distance to the base point as norm
    S = ESH.blocks[1]
    assert np.allclose(np.linalg.norm(T[:, 2:4], axis=1),
                       geo.distance(S, geo.base_point_of(S), ds.X[:, 2:5]), atol=1e-12)


def test_decimate():
    rng = np.random.default_rng(0)
    w = sample_unit_timelike_normal(rng, 2)
    assert geo.lorentz_product(w, w) == pytest.approx(1.0)
    X = hyperbolic_cloud(rng, 2, 1000)
    Xd, y = decimate(w, X, 0.5)
    s = geo.lorentz_product(Xd, w)
    assert np.all(np.abs(s) >= np.sinh(0.5))
    assert np.array_equal(y, np.where(s > 0, 1, -1))


# -- shattering -------------------------------------------------------------------


def test_hyperbolic_shatter_points():
    P = shatter_points_hyperbolic(2)
    assert np.allclose(P, [[1, 0, 0], [R2, 1, 0], [R2, 0, 1]])
    for d in (2, 3, 4, 5):
        P = shatter_points_hyperbolic(d)
        assert P.shape == (d + 1, d + 1)
        assert np.allclose(geo.lorentz_product(P, P), -1)


def test_shatter_weights_example():
    w = solve_shatter_weights(np.array([1, 1, 1]), 3.0)
    assert np.allclose(w, [-1, 3 - R2, 3 - R2])
    assert geo.lorentz_product(w, w) == pytest.approx(21 - 12 * R2)
    assert np.allclose(solve_shatter_weights(-np.ones(3), 3.0), -w)
    with pytest.raises(DomainError):
        solve_shatter_weights(np.ones(3), 2.0)


def test_shatter_interpolation_targets():
    for d in (2, 4):
        P = shatter_points_hyperbolic(d)
        for labels in itertools.product((-1, 1), repeat=d + 1):
            y = np.array(labels)
            w = solve_shatter_weights(y, 3.0)
            t = 3.0 * y
            t[0] = y[0]
            assert np.allclose(geo.lorentz_product(P, w), t)
            assert geo.lorentz_product(w, w) > 0


def test_product_shatter_structure():
    ss = shatter_points_product(ESH)
    assert ss.points.shape == (7, 8)
    ESH.check_points(ss.points)
    # the last point is the anchor in every block, where the interpolating classifier is zero
    labels = np.array([1, -1, 1, 1, -1, -1, 1])
    params = ss.perturbed_params(labels, 0.0)
    assert product_decision(params, ss.points[-1]) == pytest.approx(0.0, abs=1e-12)
    params, eps = ss.realize(labels)
    assert np.array_equal(predict(params, ss.points), labels)
    assert 1e-10 <= eps <= 1e-2


def test_product_shatter_last_label_follows_sign():
    ss = shatter_points_product(ESH)
    for tN in (1, -1):
        labels = np.array([1, 1, -1, 1, -1, 1, tN])
        p = ss.perturbed_params(labels, 1e-4)
        assert np.sign(product_decision(p, ss.points[-1])) == tN
