"""Labelled product-space datasets and their text file format.

A dataset file is plain text::

    # prodspace dataset v1
    # signature E2,S2:1.0,H2:-1.0
    # alphas 1.0,1.0,1.0
    # R 3.7                       (optional, one value per hyperbolic block)
    0.12,-1.3,...,1

Each data row holds the block coordinates in signature order followed by an
integer label. Coordinates are written with 17 significant digits so a
save/load cycle is lossless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import DatasetFormatError, DomainError
from .product import Signature

MAGIC = "# prodspace dataset v1"


@dataclass
class Dataset:
    """Points stored as flat coordinate rows with integer labels."""

    signature: Signature
    X: np.ndarray
    y: np.ndarray
    R: tuple = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y).astype(int)
        if self.X.shape[0] != self.y.shape[0]:
            raise DatasetFormatError(f"{self.X.shape[0]} rows but {self.y.shape[0]} labels")
        if self.X.shape[1] != self.signature.ambient_dim:
            raise DatasetFormatError(
                f"rows have {self.X.shape[1]} coordinates, signature needs {self.signature.ambient_dim}"
            )
        if self.R is not None:
            self.R = tuple(float(r) for r in self.R)

    def __len__(self):
        return self.X.shape[0]

    def subset(self, idx):
        return Dataset(self.signature, self.X[idx], self.y[idx], self.R)

    def validate(self, tol=geo.TAU_PT):
        """Check every row against its block manifolds; errors name the row and block."""
        for i, (b, xb) in enumerate(zip(self.signature.blocks, self.signature.split(self.X))):
            ok = geo.on_manifold(b, xb, tol) & np.all(np.isfinite(xb), axis=-1)
            if not np.all(ok):
                row = int(np.flatnonzero(~ok)[0])
                raise DatasetFormatError(f"row {row}: block {i} ({b}) is not on its manifold")
        return self


def format_float(v):
    return "%.17g" % v


def save_dataset(path, dataset):
    sig = dataset.signature
    lines = [
        MAGIC,
        f"# signature {sig.format()}",
        "# alphas " + ",".join(format_float(a) for a in sig.alphas),
    ]
    if dataset.R is not None:
        lines.append("# R " + ",".join(format_float(r) for r in dataset.R))
    for x, lab in zip(dataset.X, dataset.y):
        lines.append(",".join(format_float(v) for v in x) + f",{int(lab)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_floats(text, lineno, what):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DatasetFormatError(f"cannot parse {what}", lineno) from None


def load_dataset(path, validate=True):
    """Read a dataset file; raises :class:`DatasetFormatError` with the offending line."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc}") from None
    if not lines or lines[0].strip() != MAGIC:
        raise DatasetFormatError("missing or unsupported format header", 1)
    sig_text = alphas = R = None
    rows, labels, linenos = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(" ")
            if key == "signature":
                sig_text = val.strip()
            elif key == "alphas":
                alphas = _parse_floats(val, lineno, "alphas")
            elif key == "R":
                R = _parse_floats(val, lineno, "R")
            continue
        if sig_text is None:
            raise DatasetFormatError("data row before the signature header", lineno)
        fields = line.split(",")
        try:
            vals = [float(t) for t in fields[:-1]]
            lab = int(fields[-1])
        except ValueError:
            raise DatasetFormatError(f"row {len(rows)}: malformed value", lineno) from None
        rows.append(vals)
        labels.append(lab)
        linenos.append(lineno)
    if sig_text is None:
        raise DatasetFormatError("missing signature header")
    try:
        sig = Signature.parse(sig_text, alphas)
    except DomainError as exc:
        raise DatasetFormatError(f"bad signature header: {exc}") from None
    width = sig.ambient_dim
    for r, (vals, ln) in enumerate(zip(rows, linenos)):
        if len(vals) != width:
            raise DatasetFormatError(f"row {r} has {len(vals)} coordinates, expected {width}", ln)
    X = np.array(rows, dtype=float).reshape(len(rows), width)
    ds = Dataset(sig, X, np.array(labels, dtype=int), R)
    if validate:
        for i, (b, xb) in enumerate(zip(sig.blocks, sig.split(X))):
            ok = geo.on_manifold(b, xb) & np.all(np.isfinite(xb), axis=-1)
            if not np.all(ok):
                r = int(np.flatnonzero(~ok)[0])
                raise DatasetFormatError(f"row {r}: block {i} ({b}) is not on its manifold", linenos[r])
    return ds
