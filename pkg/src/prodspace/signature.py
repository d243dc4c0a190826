"""Greedy signature search and VC-dimension bounds for product signatures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .datagen import tangent_view
from .errors import DomainError
from .evaluation import linear_trainer, perceptron_trainer, svm_trainer, train_test_split
from .geometry import Kind, SpaceFormSpec
from .io import Dataset
from .metrics import macro_f1
from .product import Signature

CANDIDATES = (
    SpaceFormSpec.euclidean(2),
    SpaceFormSpec.spherical(2, 1.0),
    SpaceFormSpec.hyperbolic(2, -1.0),
)


class UnavailableSignature(Exception):
    """A provider cannot produce features for the requested signature."""


@dataclass
class SearchConfig:
    """Greedy search options; ``delta`` is the minimum score gain needed to add a block."""

    candidates: tuple = CANDIDATES
    delta: float = 0.01
    max_blocks: int = 3
    trainer: str = "perceptron"
    max_passes: int = 200
    train_fraction: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise DomainError("delta must be nonnegative")
        if int(self.max_blocks) < 1:
            raise DomainError("max_blocks must be at least 1")
        if self.trainer not in ("perceptron", "svm"):
            raise DomainError(f"unknown trainer {self.trainer!r}")


def make_trainer(config, signature, R=None):
    if config.trainer == "svm":
        return svm_trainer(signature, R)
    return perceptron_trainer(signature, R, max_passes=config.max_passes)


def _holdout_score(trainer, X, y, train_idx, val_idx):
    model = trainer(X[train_idx], y[train_idx])
    return macro_f1(model.predict(X[val_idx]), y[val_idx])


class BlockSliceProvider:
    """Scores candidate signatures by selecting matching blocks of an existing dataset.

    A candidate block is matched to the first unused dataset block with the
    same kind, dimension and curvature. Labels must be +-1.
    """

    def __init__(self, dataset, config):
        self.dataset = dataset
        self.config = config
        self.train_idx, self.val_idx = train_test_split(len(dataset), config.seed, config.train_fraction)

    def _select(self, signature):
        used, cols, R = set(), [], []
        data_sig = self.dataset.signature
        hyp = data_sig.indices(Kind.HYPERBOLIC)
        blocks = []
        for want in signature.blocks:
            for i, have in enumerate(data_sig.blocks):
                if i not in used and have == want:
                    used.add(i)
                    cols.append(data_sig.slices()[i])
                    blocks.append((i, have))
                    if have.kind is Kind.HYPERBOLIC and self.dataset.R is not None:
                        R.append(self.dataset.R[hyp.index(i)])
                    break
            else:
                raise UnavailableSignature(f"no unused {want} block in the data")
        X = np.concatenate([self.dataset.X[:, s] for s in cols], axis=1)
        alphas = [data_sig.alphas[i] for i, _ in blocks]
        sub = Signature(tuple(b for _, b in blocks), alphas)
        return sub, X, (tuple(R) if R else None)

    def score(self, signature):
        sub, X, R = self._select(signature)
        trainer = make_trainer(self.config, sub, R)
        return _holdout_score(trainer, X, self.dataset.y, self.train_idx, self.val_idx)

    def euclidean_baseline(self):
        """Score of a Euclidean perceptron on the intrinsic (tangent) coordinates of all blocks."""
        X = tangent_view(self.dataset.signature, self.dataset.X)
        trainer = linear_trainer(self.config.max_passes)
        return _holdout_score(trainer, X, self.dataset.y, self.train_idx, self.val_idx)


class EmbeddingProvider:
    """Scores candidate signatures on features produced by ``embed(signature) -> Dataset``.

    This is the re-embedding mode: ``embed`` may regenerate or re-extract
    features for each candidate. The hold-out split depends only on the seed.
    """

    def __init__(self, embed, config):
        self.embed = embed
        self.config = config

    def score(self, signature):
        ds = self.embed(signature)
        if not isinstance(ds, Dataset):
            raise UnavailableSignature("embedding function returned no dataset")
        tr, va = train_test_split(len(ds), self.config.seed, self.config.train_fraction)
        trainer = make_trainer(self.config, ds.signature, ds.R)
        return _holdout_score(trainer, ds.X, ds.y, tr, va)


@dataclass
class SearchResult:
    signature: Signature
    score: float
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "signature": self.signature.format(),
            "score": self.score,
            "trace": self.trace,
        }


def greedy_signature_search(provider, config):
    """Grow a signature one 2-dimensional block at a time.

    The first block is the best single candidate. Each later step tries
    appending every candidate and keeps the best one if it improves the
    score by at least ``config.delta``. Ties go to the earliest candidate.
    """
    trace = []
    current = None
    current_score = -np.inf
    for step in range(int(config.max_blocks)):
        best = None
        for ci, cand in enumerate(config.candidates):
            sig = Signature((cand,)) if current is None else current.extend(cand)
            try:
                s = float(provider.score(sig))
            except UnavailableSignature as exc:
                trace.append({"step": step, "candidate": ci, "signature": sig.format(),
                              "score": None, "skipped": str(exc)})
                continue
            trace.append({"step": step, "candidate": ci, "signature": sig.format(), "score": s})
            if best is None or s > best[1]:
                best = (sig, s)
        if best is None:
            break
        if current is not None and best[1] - current_score < config.delta:
            break
        current, current_score = best
    if current is None:
        raise UnavailableSignature("no candidate signature could be scored")
    return SearchResult(current, current_score, trace)


# -- VC-dimension bounds -----------------------------------------------------


def _pooled_terms(signature):
    e_dim = sum(b.dim for b in signature.blocks if b.kind is Kind.EUCLIDEAN)
    terms = [e_dim + 1] if e_dim else []
    terms += [b.dim + 1 for b in signature.blocks if b.kind is not Kind.EUCLIDEAN]
    return terms


def vc_upper_bound(signature):
    """Largest ``N >= 2`` with ``N / log2(N) <= sum_k (d_k + 1)``, Euclidean dims pooled."""
    for b in signature.blocks:
        if b.kind is not Kind.EUCLIDEAN and b.dim < 2:
            raise DomainError("curved blocks need dimension >= 2")
    total = sum(_pooled_terms(signature))
    best = None
    n = 2
    while True:
        ok = n <= total * math.log2(n)
        if ok:
            best = n
        elif n >= 3:
            # n / log2(n) is increasing from n = 3 on
            break
        n += 1
    if not best > signature.dim + 1:
        raise AssertionError(f"upper bound {best} is not above dim + 1 = {signature.dim + 1}")
    return best


def vc_lower_bound(signature):
    return signature.dim + 1


def signature_search_space_size(d):
    """``(sum_{K=1}^{d/2} 3^K K^d, 3^{d/2})``: all signatures vs. the greedy search."""
    if int(d) != d or d < 2 or d % 2:
        raise DomainError("d must be an even integer >= 2")
    d = int(d)
    full = sum(3**K * K**d for K in range(1, d // 2 + 1))
    return full, 3 ** (d // 2)
