"""Experiment drivers: perceptron convergence grids and hyperbolic perceptron comparisons.

Each driver returns a plain ``dict`` report (JSON-serializable, no
wall-clock values) and can write a bundle of JSON, CSV and SVG files whose
numbers are taken from that report.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .datagen import GenConfig, decimate, generate_margin_dataset, hyperbolic_cloud, sample_unit_timelike_normal
from .metrics import accuracy, macro_f1
from .perceptron import (
    PerceptronConfig,
    euclidean_radius,
    hyperbolic_bound,
    theoretical_update_bound,
    train_hyperbolic_perceptron,
    train_linear_perceptron,
    train_product_perceptron,
    normalized_predict,
)
from .classify import sign_label
from .perceptron import hyperbolic_decision_values
from .product import Signature


def cell_seed(*keys):
    """Deterministic 32-bit seed derived from integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


# -- product perceptron grid -----------------------------------------------


@dataclass
class Fig5Config:
    signature: str = "E2,S2:1,H2:-1"
    ns: tuple = (100, 200, 300)
    epsilons: tuple = (0.01, 0.05, 0.1, 0.2)
    repeats: int = 5
    seed: int = 0
    scale: float = 1.0
    euclidean_max_passes: int = 100
    record_curves: bool = True


def run_fig5_cell(sig, n, epsilon, seed, config):
    gen = generate_margin_dataset(GenConfig(sig, n, epsilon, seed, config.scale))
    ds = gen.dataset
    model = train_product_perceptron(
        ds.X, ds.y, PerceptronConfig(sig, R=ds.R, record_curve=config.record_curves)
    )
    bound = theoretical_update_bound(gen.w_star, ds.R, euclidean_radius(sig, ds.X), epsilon)
    flat = train_linear_perceptron(ds.X, ds.y, config.euclidean_max_passes, config.record_curves)
    prod_pred = model.predict(ds.X)
    flat_pred = flat.predict(ds.X)
    return {
        "n": n,
        "epsilon": epsilon,
        "data_seed": seed,
        "bound": bound,
        "product_updates": model.n_updates,
        "product_converged": model.converged,
        "product_accuracy": accuracy(prod_pred, ds.y),
        "product_macro_f1": macro_f1(prod_pred, ds.y),
        "within_bound": bool(model.n_updates <= bound),
        "euclidean_updates": flat.n_updates,
        "euclidean_converged": flat.converged,
        "euclidean_accuracy": accuracy(flat_pred, ds.y),
        "euclidean_macro_f1": macro_f1(flat_pred, ds.y),
        "product_curve": model.curve,
        "euclidean_curve": flat.curve,
    }


def run_fig5_experiment(config=None):
    """Product vs. flattened-Euclidean perceptron over a grid of sizes and margins."""
    config = config or Fig5Config()
    sig = Signature.parse(config.signature)
    cells = []
    for n in config.ns:
        for ei, eps in enumerate(config.epsilons):
            runs = [
                run_fig5_cell(sig, n, eps, cell_seed(config.seed, n, ei, rep), config)
                for rep in range(config.repeats)
            ]
            cells.append({"n": n, "epsilon": eps, "bound": max(r["bound"] for r in runs), "runs": runs})
    runs = [r for c in cells for r in c["runs"]]
    summary = {
        "runs": len(runs),
        "converged": sum(r["product_converged"] for r in runs),
        "within_bound": sum(r["within_bound"] for r in runs),
        "perfect_accuracy": sum(r["product_accuracy"] == 1.0 for r in runs),
    }
    return {
        "experiment": "fig5",
        "version": __version__,
        "config": _config_echo(config),
        "summary": summary,
        "cells": cells,
    }


# -- hyperbolic perceptron comparison --------------------------------------


@dataclass
class Fig7Config:
    n_points: int = 5000
    eps_min: float = 0.1
    eps_max: float = 1.0
    n_eps: int = 100
    repeats: int = 5
    seed: int = 0
    dim: int = 2
    scale: float = 1.0

    def epsilons(self):
        return np.linspace(self.eps_min, self.eps_max, self.n_eps)


def _run_pair(X, y, budget):
    ours = train_hyperbolic_perceptron(X, y, max_updates=budget)
    base = _normalized_baseline(X, y, budget)
    acc_ours = accuracy(sign_label(hyperbolic_decision_values(ours.w, X)), y)
    acc_base = accuracy(normalized_predict(base.w, X), y)
    return ours, base, acc_ours, acc_base


def _normalized_baseline(X, y, budget):
    from .perceptron import train_normalized_perceptron

    return train_normalized_perceptron(X, y, max_updates=budget)


def run_fig7_experiment(config=None):
    """Compare the ``w + yHx`` perceptron with the normalized baseline on decimated sets.

    For every margin the points with ``|[w*, x]| < sinh(eps)`` are removed
    and both methods run until all points are correct or a budget is hit:
    the quadratic budget ``(R |w*| / sinh eps)^2`` and the linear budget
    ``R |w*| / sinh eps``.
    """
    config = config or Fig7Config()
    eps_grid = config.epsilons()
    runs = []
    for rep in range(config.repeats):
        rng = np.random.default_rng(cell_seed(config.seed, rep))
        w_star = sample_unit_timelike_normal(rng, config.dim)
        cloud = hyperbolic_cloud(rng, config.dim, config.n_points, config.scale)
        w_norm = float(np.linalg.norm(w_star))
        for eps in eps_grid:
            X, y = decimate(w_star, cloud, eps)
            if X.shape[0] == 0:
                runs.append({"repeat": rep, "epsilon": float(eps), "n": 0})
                continue
            R = float(np.max(np.linalg.norm(X, axis=1)))
            bound = hyperbolic_bound(R, w_norm, eps)
            linear_budget = R * w_norm / np.sinh(eps)
            rec = {"repeat": rep, "epsilon": float(eps), "n": int(X.shape[0]), "R": R,
                   "w_star_norm": w_norm, "bound": float(bound), "linear_budget": float(linear_budget)}
            for tag, budget in (("quadratic", int(np.floor(bound))), ("linear", int(np.floor(linear_budget)))):
                ours, base, acc_o, acc_b = _run_pair(X, y, budget)
                rec[tag] = {
                    "budget": budget,
                    "ours_updates": ours.n_updates,
                    "ours_converged": ours.converged,
                    "ours_accuracy": acc_o,
                    "baseline_updates": base.n_updates,
                    "baseline_converged": base.converged,
                    "baseline_accuracy": acc_b,
                    "baseline_degenerate_events": base.degenerate_events,
                }
            rec["ours_within_bound"] = bool(rec["quadratic"]["ours_converged"]
                                            and rec["quadratic"]["ours_updates"] <= bound)
            runs.append(rec)
    valid = [r for r in runs if r["n"] > 0]
    summary = {
        "runs": len(valid),
        "ours_within_bound": sum(r["ours_within_bound"] for r in valid),
        "baseline_converged_quadratic": sum(r["quadratic"]["baseline_converged"] for r in valid),
        "ours_converged_linear": sum(r["linear"]["ours_converged"] for r in valid),
        "baseline_converged_linear": sum(r["linear"]["baseline_converged"] for r in valid),
        "baseline_degenerate_events": sum(
            r["quadratic"]["baseline_degenerate_events"] + r["linear"]["baseline_degenerate_events"] for r in valid
        ),
    }
    return {
        "experiment": "fig7",
        "version": __version__,
        "config": _config_echo(config),
        "epsilons": [float(e) for e in eps_grid],
        "summary": summary,
        "runs": runs,
    }


def fig7_mean_accuracy(report):
    """Per-margin mean accuracies for each method and budget, taken from the report."""
    eps = report["epsilons"]
    out = {}
    for tag in ("quadratic", "linear"):
        for who in ("ours", "baseline"):
            means = []
            for e in eps:
                vals = [r[tag][f"{who}_accuracy"] for r in report["runs"] if r["n"] > 0 and r["epsilon"] == e]
                means.append(float(np.mean(vals)) if vals else float("nan"))
            out[(tag, who)] = means
    return out


# -- bundle writing ----------------------------------------------------------


def _config_echo(config):
    d = asdict(config) if hasattr(config, "__dataclass_fields__") else dict(config)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def write_fig5_bundle(report, out_dir):
    from .plotting import plot_fig5_curves

    os.makedirs(out_dir, exist_ok=True)
    dump_json(report, os.path.join(out_dir, "fig5_report.json"))
    cols = ["n", "epsilon", "data_seed", "bound", "product_updates", "product_converged",
            "product_accuracy", "product_macro_f1", "within_bound", "euclidean_updates",
            "euclidean_converged", "euclidean_accuracy", "euclidean_macro_f1"]
    rows = [[r[c] for c in cols] for cell in report["cells"] for r in cell["runs"]]
    _write_csv(os.path.join(out_dir, "fig5_summary.csv"), cols, rows)
    curve_rows = []
    for cell in report["cells"]:
        for rep, r in enumerate(cell["runs"]):
            for which in ("product", "euclidean"):
                for k, v in enumerate(r[f"{which}_curve"], start=1):
                    curve_rows.append([cell["n"], cell["epsilon"], rep, which, k, v])
    _write_csv(os.path.join(out_dir, "fig5_curves.csv"),
               ["n", "epsilon", "repeat", "method", "update", "macro_f1"], curve_rows)
    plot_fig5_curves(report["cells"], os.path.join(out_dir, "fig5_curves.svg"))


def write_fig7_bundle(report, out_dir):
    from .plotting import plot_fig7_accuracy

    os.makedirs(out_dir, exist_ok=True)
    dump_json(report, os.path.join(out_dir, "fig7_report.json"))
    cols = ["repeat", "epsilon", "n", "R", "bound", "linear_budget"]
    sub = ["budget", "ours_updates", "ours_converged", "ours_accuracy", "baseline_updates",
           "baseline_converged", "baseline_accuracy", "baseline_degenerate_events"]
    header = cols + [f"{t}_{s}" for t in ("quadratic", "linear") for s in sub]
    rows = []
    for r in report["runs"]:
        if r["n"] == 0:
            continue
        rows.append([r[c] for c in cols] + [r[t][s] for t in ("quadratic", "linear") for s in sub])
    _write_csv(os.path.join(out_dir, "fig7_runs.csv"), header, rows)
    means = fig7_mean_accuracy(report)
    series = {
        "budget (R|w*|/sinh eps)^2": {"w + yHx": means[("quadratic", "ours")],
                                       "normalized baseline": means[("quadratic", "baseline")]},
        "budget R|w*|/sinh eps": {"w + yHx": means[("linear", "ours")],
                                   "normalized baseline": means[("linear", "baseline")]},
    }
    mean_rows = [[e] + [means[k][i] for k in sorted(means)] for i, e in enumerate(report["epsilons"])]
    _write_csv(os.path.join(out_dir, "fig7_mean_accuracy.csv"),
               ["epsilon"] + [f"{t}_{w}" for t, w in sorted(means)], mean_rows)
    plot_fig7_accuracy(report["epsilons"], series, os.path.join(out_dir, "fig7_accuracy.svg"))
