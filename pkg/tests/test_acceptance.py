"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines are repeated in the terminal summary) or
directly with ``python3 tests/test_acceptance.py``.
"""

import itertools
import json
import math
import os
import subprocess
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import acos_distance, min_boundary_distance, random_weight, vc_upper_brute  # noqa: E402
from prodspace import geometry as geo  # noqa: E402
from prodspace.classify import base_point, hyperbolic_decision, predict, spherical_decision  # noqa: E402
from prodspace.datagen import (  # noqa: E402
    GenConfig,
    generate_margin_dataset,
    shatter_points_hyperbolic,
    shatter_points_product,
    solve_shatter_weights,
)
from prodspace.errors import DegenerateNormalizationError  # noqa: E402
from prodspace.evaluation import perceptron_trainer, train_test_split  # noqa: E402
from prodspace.experiments import Fig5Config, Fig7Config, run_fig5_experiment, run_fig7_experiment  # noqa: E402
from prodspace.geometry import Kind, SpaceFormSpec  # noqa: E402
from prodspace.metrics import accuracy, macro_f1  # noqa: E402
from prodspace.perceptron import normalized_step  # noqa: E402
from prodspace.product import Signature  # noqa: E402
from prodspace.signature import (  # noqa: E402
    BlockSliceProvider,
    SearchConfig,
    greedy_signature_search,
    vc_lower_bound,
    vc_upper_bound,
)
from prodspace.svm import SvmConfig, build_kernel_matrices, split_indefinite, train_svm  # noqa: E402

ESH = Signature.parse("E2,S2:1,H2:-1")
R2 = math.sqrt(2.0)
RESULTS = []


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# -- 1 -------------------------------------------------------------------------


def test_roundtrip_exp_log():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    n_specs = 0
    for c in (1.0, 0.25, -1.0, -0.25):
        for d in (2, 3, 4, 5):
            spec = SpaceFormSpec.spherical(d, c) if c > 0 else SpaceFormSpec.hyperbolic(d, c)
            P = geo.random_points(spec, rng, 1000)
            X = geo.random_points(spec, rng, 1000)
            if c > 0:
                # replace near-antipodal pairs
                near = c * np.sum(P * X, axis=1) < -1 + 1e-3
                X[near] = -X[near]
            back = geo.exp_map(spec, P, geo.log_map(spec, P, X))
            worst = max(worst, float(np.max(np.abs(back - X))))
            n_specs += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 5.0
    assert record(1, "exp/log roundtrips", ok,
                  f"{n_specs} space forms x 1000 pairs, max error {worst:.2e} (tol 1e-09), {dt:.2f} s (limit 5 s)")


# -- 2 -------------------------------------------------------------------------


def test_distance_identities():
    rng = np.random.default_rng(2)
    worst_exact = worst_sampled = 0.0
    specs = [SpaceFormSpec.spherical(2, 1.0), SpaceFormSpec.spherical(2, 0.25),
             SpaceFormSpec.hyperbolic(2, -1.0), SpaceFormSpec.hyperbolic(2, -0.25)]
    for spec in specs:
        for _ in range(100):
            w = random_weight(spec, rng)
            x = geo.random_points(spec, rng, 1)[0]
            if spec.kind is Kind.SPHERICAL:
                dec = spherical_decision(w, x, spec.curvature)
            else:
                dec = hyperbolic_decision(w, x, spec.curvature)
            target = abs(dec) / math.sqrt(abs(spec.curvature))
            p = base_point(spec, w, x)
            worst_exact = max(worst_exact, abs(target - acos_distance(spec, x, p)))
            worst_sampled = max(worst_sampled, abs(target - min_boundary_distance(spec, w, x)))
    ok = worst_exact <= 1e-9 and worst_sampled <= 1e-4
    assert record(2, "decision value equals distance to boundary", ok,
                  f"4 space forms x 100 (w, x): base-point error {worst_exact:.2e} (tol 1e-09), "
                  f"10^4-sample error {worst_sampled:.2e} (tol 1e-04)")


# -- 3 -------------------------------------------------------------------------


def test_product_perceptron_bound_grid():
    t0 = time.perf_counter()
    rep = run_fig5_experiment(Fig5Config())
    dt = time.perf_counter() - t0
    runs = [r for c in rep["cells"] for r in c["runs"]]
    good = sum(r["product_converged"] and r["product_accuracy"] == 1.0 and r["within_bound"] for r in runs)
    worst = max(r["product_updates"] / r["bound"] for r in runs)
    ok = good == 60 and len(runs) == 60 and dt < 120
    assert record(3, "product perceptron within update bound", ok,
                  f"{good}/{len(runs)} runs reach 100% within the bound (max updates/bound {worst:.2e}), "
                  f"{dt:.1f} s (limit 120 s)")


# -- 4 -------------------------------------------------------------------------


def test_hyperbolic_perceptron_bound():
    rep = run_fig7_experiment(Fig7Config())
    runs = [r for r in rep["runs"] if r["n"] > 0]
    good = sum(r["ours_within_bound"] and r["quadratic"]["ours_accuracy"] == 1.0 for r in runs)
    skipped = len(rep["runs"]) - len(runs)
    ok = good == len(runs) and len(runs) > 0 and skipped == 0
    assert record(4, "hyperbolic perceptron within update bound", ok,
                  f"{good}/{len(runs)} runs (100 margins x 5 seeds) converge within (R|w*|/sinh eps)^2; "
                  f"empty decimated sets {skipped}")


# -- 5 -------------------------------------------------------------------------


def _lorentz_sq_of_failed_step(w, x, y):
    try:
        normalized_step(w, x, y)
    except DegenerateNormalizationError as exc:
        return exc.lorentz_sq
    return None


def test_normalized_update_counterexamples():
    x1 = np.array([R2, 1.0, 0.0])
    w0 = np.array([(3 - R2) / 4, (3 * R2 - 1) / 4, 0.0])
    q_a = _lorentz_sq_of_failed_step(w0, x1, 1)
    q_b = _lorentz_sq_of_failed_step(np.zeros(3), x1, 1)
    ok = q_a is not None and abs(q_a) <= 1e-12 and q_b is not None and abs(q_b + 1) <= 1e-12
    assert record(5, "normalized update counterexamples", ok,
                  f"[u,u] = {q_a!r} from the crafted start (want 0 to 1e-12), "
                  f"{q_b!r} from w=0 (want -1); both raise a degenerate-normalization error")


# -- 6 -------------------------------------------------------------------------


def test_shattering():
    t0 = time.perf_counter()
    hyp_ok = hyp_total = 0
    for d in (2, 3, 4, 5):
        P = shatter_points_hyperbolic(d)
        for labels in itertools.product((-1, 1), repeat=d + 1):
            y = np.array(labels)
            w = solve_shatter_weights(y, 3.0)
            hyp_total += 1
            hyp_ok += bool(np.array_equal(np.where(np.arcsinh(geo.lorentz_product(P, w)) > 0, 1, -1), y)
                           and geo.lorentz_product(w, w) > 0)
    ss = shatter_points_product(ESH)
    prod_ok = 0
    eps_used = []
    for labels in itertools.product((-1, 1), repeat=7):
        y = np.array(labels)
        params, eps = ss.realize(y)
        prod_ok += bool(np.array_equal(predict(params, ss.points), y))
        eps_used.append(eps)
    dt = time.perf_counter() - t0
    ok = hyp_ok == hyp_total == 8 + 16 + 32 + 64 and prod_ok == 128 and dt < 30
    assert record(6, "shattering constructions", ok,
                  f"hyperbolic d=2..5: {hyp_ok}/{hyp_total} labelings; E2xS2xH2: {prod_ok}/128 labelings "
                  f"(eps in [{min(eps_used):.0e}, {max(eps_used):.0e}]), {dt:.2f} s (limit 30 s)")


# -- 7 -------------------------------------------------------------------------


def test_vc_bounds():
    sig = Signature.parse("S2,H2")
    up = vc_upper_bound(sig)
    oracle = vc_upper_brute(6)
    rng = np.random.default_rng(7)
    pairs_ok = 0
    for _ in range(50):
        k = int(rng.integers(1, 5))
        parts = []
        for _ in range(k):
            kind = "ESH"[int(rng.integers(3))]
            dim = int(rng.integers(1 if kind == "E" else 2, 8))
            parts.append(f"{kind}{dim}")
        s = Signature.parse(",".join(parts))
        pairs_ok += vc_lower_bound(s) <= vc_upper_bound(s)
    ok = up == oracle == 29 and pairs_ok == 50
    assert record(7, "VC-dimension bounds", ok,
                  f"upper(S2xH2) = {up}, brute-force oracle {oracle}; lower <= upper on {pairs_ok}/50 random signatures")


# -- 8 -------------------------------------------------------------------------


def test_svm_property_suite():
    wins = feasible = fitted = 0
    worst_res = 0.0
    slowest = 0.0
    for seed in range(5):
        ds = generate_margin_dataset(GenConfig(ESH, 60, 0.2, seed)).dataset
        tr, te = train_test_split(len(ds), seed)
        t0 = time.perf_counter()
        svm = train_svm(ds.X[tr], ds.y[tr], ESH, ds.R, SvmConfig())
        slowest = max(slowest, time.perf_counter() - t0)
        res = svm.solution.max_residual()
        worst_res = max(worst_res, res)
        feasible += res <= 1e-6
        fitted += accuracy(svm.predict(ds.X[tr]), ds.y[tr]) == 1.0
        perc = perceptron_trainer(ESH, ds.R)(ds.X[tr], ds.y[tr])
        f_svm = macro_f1(svm.predict(ds.X[te]), ds.y[te])
        f_perc = macro_f1(perc.predict(ds.X[te]), ds.y[te])
        wins += f_svm >= f_perc
    ok = feasible == 5 and fitted == 5 and wins >= 4 and slowest < 60
    assert record(8, "SVM feasibility and held-out F1", ok,
                  f"feasible {feasible}/5 (max residual {worst_res:.1e}, tol 1e-06), 100% train accuracy {fitted}/5, "
                  f"held-out F1 >= perceptron in {wins}/5 (need 4), slowest solve {slowest:.2f} s (limit 60 s)")


# -- 9 -------------------------------------------------------------------------


def _min_rel_eig(M):
    vals = np.linalg.eigvalsh(M)
    return float(vals[0] / max(1.0, np.max(np.abs(vals))))


def test_kernel_structure():
    rng = np.random.default_rng(9)
    worst_psd = math.inf
    worst_rec = 0.0
    for _ in range(20):
        X = ESH.random_points(rng, 50)
        ks = build_kernel_matrices(ESH, X)
        KH = ks.hyperbolic[0]
        plus, minus = split_indefinite(KH)
        worst_rec = max(worst_rec, float(np.max(np.abs(plus - minus - KH))))
        for M in (ks.euclidean[0], ks.spherical[0], plus, minus):
            worst_psd = min(worst_psd, _min_rel_eig(M))
    ok = worst_psd >= -1e-8 and worst_rec <= 1e-10
    assert record(9, "kernel structure", ok,
                  f"20 instances of 50x50: min relative eigenvalue of K_E, K_S, K_H+, K_H- {worst_psd:.1e} "
                  f"(tol -1e-08), split reconstruction error {worst_rec:.1e} (tol 1e-10)")


# -- 10 -------------------------------------------------------------------------


def test_signature_search_beats_flat_baseline():
    wins = 0
    details = []
    for seed in range(5):
        ds = generate_margin_dataset(GenConfig(ESH, 300, 0.1, seed)).dataset
        cfg = SearchConfig(seed=seed)
        prov = BlockSliceProvider(ds, cfg)
        res = greedy_signature_search(prov, cfg)
        base = prov.euclidean_baseline()
        wins += res.score >= base
        details.append(f"{res.signature}:{res.score:.3f}/{base:.3f}")
    ok = wins >= 4
    assert record(10, "greedy signature search vs flat E6", ok,
                  f"search F1 >= E6 baseline in {wins}/5 seeds (need 4); " + ", ".join(details))


# -- 11 -------------------------------------------------------------------------


def _cli(args, cwd):
    cmd = [sys.executable, "-m", "prodspace.cli"] + [str(a) for a in args]
    return subprocess.run(cmd, cwd=cwd, capture_output=True, text=True)


def test_cli_determinism():
    commands = [
        ["gen", "--seed", 4, "--n", 60, "--epsilon", 0.2, "--out", "{d}/data.csv", "--w-star-out", "{d}/w.json"],
        ["train-perceptron", "--data", "{d}/data.csv", "--w-star", "{d}/w.json", "--epsilon", 0.2],
        ["train-svm", "--data", "{d}/data.csv"],
        ["eval", "--data", "{d}/data.csv", "--seed", 1],
        ["signature-search", "--data", "{d}/data.csv", "--seed", 2, "--baseline"],
        ["bounds", "--signature", "E2,S2,H2"],
        ["fig5", "--seed", 3, "--ns", "60", "--epsilons", "0.1,0.2", "--repeats", 2, "--out-dir", "{d}/f5"],
        ["fig7", "--seed", 3, "--n-points", 600, "--n-eps", 4, "--repeats", 2, "--out-dir", "{d}/f7"],
    ]
    identical = 0
    failures = []
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [os.path.join(tmp, "a"), os.path.join(tmp, "b")]
        for d in dirs:
            os.makedirs(d)
        for i, cmd in enumerate(commands):
            outs = []
            for d in dirs:
                args = [str(a).format(d=d) for a in cmd] + ["--report", os.path.join(d, f"r{i}.json")]
                # the data file of run b must match run a, so later commands read their own copy
                proc = _cli(args, tmp)
                if proc.returncode != 0:
                    failures.append(f"{cmd[0]} exit {proc.returncode}: {proc.stderr.strip()}")
                with open(os.path.join(d, f"r{i}.json"), "rb") as fh:
                    outs.append(fh.read())
            identical += outs[0] == outs[1]
        extra = ["data.csv", "f5/fig5_summary.csv", "f5/fig5_curves.svg", "f7/fig7_runs.csv", "f7/fig7_accuracy.svg"]
        same_files = sum(
            open(os.path.join(dirs[0], f), "rb").read() == open(os.path.join(dirs[1], f), "rb").read()
            for f in extra
        )
    ok = identical == len(commands) and same_files == len(extra) and not failures
    assert record(11, "CLI determinism", ok,
                  f"{identical}/{len(commands)} reports byte-identical across repeated runs, "
                  f"{same_files}/{len(extra)} data/CSV/SVG outputs identical"
                  + (f"; errors: {failures}" if failures else ""))


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    print(f"{len(RESULTS) - failed}/{len(RESULTS)} criteria passed")
    sys.exit(1 if failed else 0)
