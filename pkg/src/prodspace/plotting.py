"""Static SVG line charts for experiment bundles.

Figures are rendered with the Agg backend and a fixed SVG hash salt and no
date metadata, so the same inputs always produce the same bytes.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "svg.hashsalt": "prodspace",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_fig5_curves(cells, path):
    """One panel per (N, epsilon) cell: macro-F1 after each update for both perceptrons.

    ``cells`` is a list of dicts with keys ``n``, ``epsilon``, ``bound`` and
    ``runs``; each run has ``product_curve`` and ``euclidean_curve``.
    """
    ns = sorted({c["n"] for c in cells})
    eps = sorted({c["epsilon"] for c in cells})
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(len(ns), len(eps), figsize=(2.6 * len(eps), 2.1 * len(ns)),
                                 squeeze=False, sharey=True)
        for c in cells:
            ax = axes[ns.index(c["n"])][eps.index(c["epsilon"])]
            for k, run in enumerate(c["runs"]):
                ax.plot(range(1, len(run["euclidean_curve"]) + 1), run["euclidean_curve"],
                        color="tab:blue", alpha=0.5, label="Euclidean" if k == 0 else None)
                ax.plot(range(1, len(run["product_curve"]) + 1), run["product_curve"],
                        color="tab:red", alpha=0.8, label="product" if k == 0 else None)
            ax.set_xscale("log")
            ax.set_ylim(0, 1.05)
            ax.set_title(f"N={c['n']}, eps={c['epsilon']:g}, bound={c['bound']:.3g}")
            ax.set_xlabel("updates")
        for row in axes:
            row[0].set_ylabel("macro-F1")
        axes[0][0].legend(loc="lower right", frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_fig7_accuracy(epsilons, series, path):
    """Two panels of mean accuracy against margin, one per stopping budget.

    ``series`` maps panel title to ``{label: list of accuracies}``.
    """
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(series), figsize=(4.2 * len(series), 3.0), squeeze=False)
        for ax, (title, lines) in zip(axes[0], series.items()):
            for label, acc in lines.items():
                ax.plot(epsilons, acc, label=label)
            ax.set_title(title)
            ax.set_xlabel("margin epsilon")
            ax.set_ylabel("training accuracy")
            ax.set_ylim(0, 1.05)
            ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        _save(fig, path)
