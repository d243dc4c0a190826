"""Command-line interface.

Every subcommand prints a short tab-separated summary on stdout and can
write a JSON report with ``--report``. Defaults for any flag can be given in
a JSON file with ``--config``; flags on the command line take precedence.

Exit codes: 0 success, 1 usage error, 2 bad input data or parameters,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .errors import (
    ConstructionError,
    DatasetFormatError,
    DegenerateNormalizationError,
    DimensionError,
    DomainError,
    GenerationStallError,
    ParameterError,
    SolverError,
)

DATA_ERRORS = (DatasetFormatError, DomainError, DimensionError, ParameterError, OSError, ValueError)
NUMERIC_ERRORS = (SolverError, GenerationStallError, ConstructionError, DegenerateNormalizationError)

#: subcommands whose results depend on a random seed
STOCHASTIC = {"gen", "eval", "signature-search", "fig5", "fig7"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


# -- output helpers ----------------------------------------------------------


def _emit(rows):
    for k, v in rows:
        if isinstance(v, (float, np.floating)):
            v = repr(float(v))
        print(f"{k}\t{v}")


def _write_report(args, report, started):
    if getattr(args, "timing", False):
        report["wall_clock_seconds"] = time.perf_counter() - started
    if args.report:
        from .experiments import dump_json

        dump_json(report, args.report)


def _load(args):
    from .io import load_dataset

    return load_dataset(args.data)


def _radii(args, ds):
    if args.R is not None:
        return tuple(_floats(args.R))
    return ds.R


# -- subcommands ------------------------------------------------------------


def cmd_gen(args):
    from .datagen import GenConfig, generate_margin_dataset
    from .io import save_dataset
    from .product import Signature

    sig = Signature.parse(args.signature, _floats(args.alphas) if args.alphas else None)
    R = _floats(args.R) if args.R is not None else None
    gen = generate_margin_dataset(GenConfig(sig, args.n, args.epsilon, args.seed, args.scale, R))
    save_dataset(args.out, gen.dataset)
    if args.w_star_out:
        with open(args.w_star_out, "w", encoding="utf-8") as fh:
            fh.write(gen.w_star.dumps() + "\n")
    y = gen.dataset.y
    report = {
        "command": "gen",
        "signature": sig.format(),
        "n": len(gen.dataset),
        "epsilon": args.epsilon,
        "seed": args.seed,
        "radius_cap": list(gen.radius_cap),
        "draws": gen.draws,
        "positives": int(np.sum(y == 1)),
        "negatives": int(np.sum(y != 1)),
        "min_margin": float(np.min(gen.margins)),
        "w_star": gen.w_star.to_dict(),
    }
    _emit([("points", report["n"]), ("positives", report["positives"]),
           ("negatives", report["negatives"]), ("draws", report["draws"]),
           ("min_margin", report["min_margin"])])
    return report


def cmd_train_perceptron(args):
    from .classify import ClassifierParams
    from .metrics import accuracy, macro_f1
    from .perceptron import PerceptronConfig, euclidean_radius, theoretical_update_bound, train_product_perceptron

    ds = _load(args)
    R = _radii(args, ds)
    model = train_product_perceptron(
        ds.X, ds.y, PerceptronConfig(ds.signature, R, args.max_passes, args.single_pass)
    )
    pred = model.predict(ds.X)
    report = {
        "command": "train-perceptron",
        "signature": ds.signature.format(),
        "radii": list(model.radii),
        "updates": model.n_updates,
        "converged": model.converged,
        "points_scanned": model.points_scanned,
        "train_accuracy": accuracy(pred, ds.y),
        "train_macro_f1": macro_f1(pred, ds.y),
    }
    if args.w_star:
        with open(args.w_star, encoding="utf-8") as fh:
            w_star = ClassifierParams.from_dict(json.load(fh), strict=False)
        if args.epsilon is None:
            raise ParameterError("--w-star needs --epsilon for the update bound")
        report["bound"] = theoretical_update_bound(
            w_star, model.radii, euclidean_radius(ds.signature, ds.X), args.epsilon
        )
        report["within_bound"] = bool(model.n_updates <= report["bound"])
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as fh:
            fh.write(model.dumps() + "\n")
    rows = [("updates", model.n_updates), ("converged", model.converged),
            ("train_accuracy", report["train_accuracy"])]
    if "bound" in report:
        rows.append(("bound", report["bound"]))
    _emit(rows)
    return report


def _hyperbolic_rows(ds):
    from .geometry import Kind

    sig = ds.signature
    if len(sig.blocks) != 1 or sig.blocks[0].kind is not Kind.HYPERBOLIC:
        raise ParameterError("train-hyperbolic needs a dataset with a single hyperbolic block")
    return ds.X


def cmd_train_hyperbolic(args):
    from .classify import sign_label
    from .metrics import accuracy
    from .perceptron import (
        hyperbolic_decision_values,
        train_hyperbolic_perceptron,
        train_normalized_perceptron,
        normalized_predict,
    )

    ds = _load(args)
    X = _hyperbolic_rows(ds)
    if args.algorithm == "baseline":
        state = train_normalized_perceptron(X, ds.y, max_updates=args.max_updates, max_passes=args.max_passes)
        pred = normalized_predict(state.w, X)
    else:
        state = train_hyperbolic_perceptron(X, ds.y, max_updates=args.max_updates, max_passes=args.max_passes)
        pred = sign_label(hyperbolic_decision_values(state.w, X))
    report = {"command": "train-hyperbolic", "algorithm": args.algorithm,
              "train_accuracy": accuracy(pred, ds.y), **state.to_dict()}
    report["n_updates"] = state.n_updates
    _emit([("updates", state.n_updates), ("converged", state.converged),
           ("train_accuracy", report["train_accuracy"]),
           ("degenerate_events", state.degenerate_events)])
    return report


def cmd_train_svm(args):
    from .metrics import accuracy
    from .svm import SvmConfig, train_svm

    ds = _load(args)
    config = SvmConfig(r=args.r, drop_hyperbolic=args.drop_hyperbolic, slack_weight=args.slack_weight)
    model = train_svm(ds.X, ds.y, ds.signature, _radii(args, ds), config)
    sol = model.solution
    pred = model.predict(ds.X)
    report = {"command": "train-svm", "signature": ds.signature.format(),
              "train_accuracy": accuracy(pred, ds.y), "solution": sol.to_dict()}
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as fh:
            fh.write(model.dumps() + "\n")
    _emit([("status", sol.status), ("epsilon", float(sol.epsilon)), ("objective", float(sol.objective)),
           ("max_residual", float(sol.max_residual())), ("train_accuracy", report["train_accuracy"])])
    return report


def _trainer(name, sig, R, max_passes):
    from .evaluation import linear_trainer, perceptron_trainer, svm_trainer

    if name == "svm":
        return svm_trainer(sig, R)
    if name == "linear":
        return linear_trainer(max_passes)
    return perceptron_trainer(sig, R, max_passes=max_passes)


def cmd_eval(args):
    from .evaluation import one_vs_rest_train, ovr_predict, train_test_split
    from .metrics import accuracy, precision_recall_f1

    ds = _load(args)
    tr, te = train_test_split(len(ds), args.seed, args.train_fraction)
    classes = np.unique(ds.y)
    trainer = _trainer(args.trainer, ds.signature, _radii(args, ds), args.max_passes)
    ovr = one_vs_rest_train(ds.X[tr], ds.y[tr], trainer, classes)
    pred = ovr_predict(ovr, ds.X[te])
    cls, prec, rec, f1 = precision_recall_f1(pred, ds.y[te], classes)
    report = {
        "command": "eval",
        "trainer": args.trainer,
        "seed": args.seed,
        "n_train": int(tr.size),
        "n_test": int(te.size),
        "classes": cls.tolist(),
        "precision": prec.tolist(),
        "recall": rec.tolist(),
        "f1": f1.tolist(),
        "macro_f1": float(np.mean(f1)),
        "accuracy": accuracy(pred, ds.y[te]),
        "platt": [list(p) for p in ovr.platt],
    }
    _emit([("macro_f1", report["macro_f1"]), ("accuracy", report["accuracy"]),
           ("n_test", report["n_test"])])
    return report


def cmd_signature_search(args):
    from .signature import BlockSliceProvider, SearchConfig, greedy_signature_search

    ds = _load(args)
    config = SearchConfig(delta=args.delta, max_blocks=args.max_blocks, trainer=args.trainer,
                          max_passes=args.max_passes, train_fraction=args.train_fraction, seed=args.seed)
    provider = BlockSliceProvider(ds, config)
    result = greedy_signature_search(provider, config)
    report = {"command": "signature-search", "seed": args.seed, **result.to_dict()}
    if args.baseline:
        report["euclidean_baseline"] = provider.euclidean_baseline()
    rows = [("signature", report["signature"]), ("score", report["score"])]
    if args.baseline:
        rows.append(("euclidean_baseline", report["euclidean_baseline"]))
    _emit(rows)
    return report


def cmd_bounds(args):
    from .product import Signature
    from .signature import signature_search_space_size, vc_lower_bound, vc_upper_bound

    sig = Signature.parse(args.signature)
    report = {"command": "bounds", "signature": sig.format(),
              "vc_lower": vc_lower_bound(sig), "vc_upper": vc_upper_bound(sig)}
    rows = [("vc_lower", report["vc_lower"]), ("vc_upper", report["vc_upper"])]
    if sig.dim % 2 == 0:
        full, greedy = signature_search_space_size(sig.dim)
        report["search_space"] = {"all": full, "greedy": greedy}
        rows += [("signatures_all", full), ("signatures_greedy", greedy)]
    _emit(rows)
    return report


def cmd_fig5(args):
    from .experiments import Fig5Config, run_fig5_experiment, write_fig5_bundle

    config = Fig5Config(signature=args.signature, ns=tuple(_ints(args.ns)), epsilons=tuple(_floats(args.epsilons)),
                        repeats=args.repeats, seed=args.seed, scale=args.scale,
                        euclidean_max_passes=args.euclidean_max_passes)
    report = run_fig5_experiment(config)
    if args.out_dir:
        write_fig5_bundle(report, args.out_dir)
    _emit(sorted(report["summary"].items()))
    return report


def cmd_fig7(args):
    from .experiments import Fig7Config, run_fig7_experiment, write_fig7_bundle

    config = Fig7Config(n_points=args.n_points, eps_min=args.eps_min, eps_max=args.eps_max,
                        n_eps=args.n_eps, repeats=args.repeats, seed=args.seed, dim=args.dim)
    report = run_fig7_experiment(config)
    if args.out_dir:
        write_fig7_bundle(report, args.out_dir)
    _emit(sorted(report["summary"].items()))
    return report


# -- parser ------------------------------------------------------------------


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of default flag values")
    common.add_argument("--report", help="write a JSON report to this path")
    common.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    common.add_argument("--seed", type=int, default=None, help="random seed (required for stochastic commands)")

    p = _Parser(prog="prodspace", description="Linear classifiers on products of constant-curvature spaces.")
    p.add_argument("--version", action="version", version=f"prodspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a margin-separated dataset")
    g.add_argument("--signature", default="E2,S2:1,H2:-1")
    g.add_argument("--alphas")
    g.add_argument("--n", type=int, default=300)
    g.add_argument("--epsilon", type=float, default=0.1)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--R", help="radius cap per hyperbolic block (comma separated)")
    g.add_argument("--out", required=True)
    g.add_argument("--w-star-out", help="write the reference classifier as JSON")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train-perceptron", parents=[common], help="train the product-space perceptron")
    t.add_argument("--data", required=True)
    t.add_argument("--R")
    t.add_argument("--max-passes", type=int, default=1000)
    t.add_argument("--single-pass", action="store_true")
    t.add_argument("--w-star", help="reference classifier JSON; reports the update bound")
    t.add_argument("--epsilon", type=float, help="margin of the reference classifier")
    t.add_argument("--model-out")
    t.set_defaults(func=cmd_train_perceptron)

    h = sub.add_parser("train-hyperbolic", parents=[common], help="train a hyperbolic perceptron")
    h.add_argument("--data", required=True)
    h.add_argument("--algorithm", choices=["ours", "baseline"], default="ours")
    h.add_argument("--max-updates", type=int)
    h.add_argument("--max-passes", type=int, default=10000)
    h.set_defaults(func=cmd_train_hyperbolic)

    s = sub.add_parser("train-svm", parents=[common], help="train the product-space SVM")
    s.add_argument("--data", required=True)
    s.add_argument("--R")
    s.add_argument("--r", type=float, help="hyperbolic constraint radius")
    s.add_argument("--drop-hyperbolic", action="store_true")
    s.add_argument("--slack-weight", type=float, default=1.0)
    s.add_argument("--model-out")
    s.set_defaults(func=cmd_train_svm)

    e = sub.add_parser("eval", parents=[common], help="one-vs-rest evaluation with calibrated scores")
    e.add_argument("--data", required=True)
    e.add_argument("--R")
    e.add_argument("--trainer", choices=["perceptron", "svm", "linear"], default="perceptron")
    e.add_argument("--train-fraction", type=float, default=0.6)
    e.add_argument("--max-passes", type=int, default=1000)
    e.set_defaults(func=cmd_eval)

    q = sub.add_parser("signature-search", parents=[common], help="greedy signature selection")
    q.add_argument("--data", required=True)
    q.add_argument("--trainer", choices=["perceptron", "svm"], default="perceptron")
    q.add_argument("--delta", type=float, default=0.01)
    q.add_argument("--max-blocks", type=int, default=3)
    q.add_argument("--max-passes", type=int, default=200)
    q.add_argument("--train-fraction", type=float, default=0.6)
    q.add_argument("--baseline", action="store_true", help="also score a flat Euclidean perceptron")
    q.set_defaults(func=cmd_signature_search)

    b = sub.add_parser("bounds", parents=[common], help="VC-dimension bounds for a signature")
    b.add_argument("--signature", required=True)
    b.set_defaults(func=cmd_bounds)

    f5 = sub.add_parser("fig5", parents=[common], help="product vs. Euclidean perceptron grid")
    f5.add_argument("--signature", default="E2,S2:1,H2:-1")
    f5.add_argument("--ns", default="100,200,300")
    f5.add_argument("--epsilons", default="0.01,0.05,0.1,0.2")
    f5.add_argument("--repeats", type=int, default=5)
    f5.add_argument("--scale", type=float, default=1.0)
    f5.add_argument("--euclidean-max-passes", type=int, default=100)
    f5.add_argument("--out-dir")
    f5.set_defaults(func=cmd_fig5)

    f7 = sub.add_parser("fig7", parents=[common], help="hyperbolic perceptron comparison")
    f7.add_argument("--n-points", type=int, default=5000)
    f7.add_argument("--eps-min", type=float, default=0.1)
    f7.add_argument("--eps-max", type=float, default=1.0)
    f7.add_argument("--n-eps", type=int, default=100)
    f7.add_argument("--repeats", type=int, default=5)
    f7.add_argument("--dim", type=int, default=2)
    f7.add_argument("--out-dir")
    f7.set_defaults(func=cmd_fig7)
    return p, sub


def _apply_config(parser, sub, argv):
    """Parse ``argv`` with defaults taken from the ``--config`` file, if one was given."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if not a.startswith("-")), None)
    if known.config and command in sub.choices:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ParameterError("config file must hold a JSON object")
        sp = sub.choices[command]
        known_dests = {a.dest for a in sp._actions}
        defaults = {}
        for k, v in cfg.items():
            dest = k.replace("-", "_")
            if dest not in known_dests or dest in ("config", "help"):
                raise UsageError(f"unknown config key {k!r} for {command}")
            defaults[dest] = v
        sp.set_defaults(**defaults)
        # required flags may come from the file
        for a in sp._actions:
            if a.dest in defaults:
                a.required = False
    return parser.parse_args(argv)


def main(argv=None):
    parser, sub = build_parser()
    try:
        args = _apply_config(parser, sub, argv)
        if args.command in STOCHASTIC and args.seed is None:
            raise UsageError(f"{args.command} needs --seed")
    except UsageError as exc:
        print(f"prodspace: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"prodspace: error: {exc}", file=sys.stderr)
        return 2
    started = time.perf_counter()
    try:
        report = args.func(args)
        report["version"] = __version__
        _write_report(args, report, started)
    except NUMERIC_ERRORS as exc:
        print(f"prodspace: numerical failure: {exc}", file=sys.stderr)
        return 3
    except DATA_ERRORS as exc:
        print(f"prodspace: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
