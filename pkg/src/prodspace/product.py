"""Product manifolds built from an ordered list of space-form blocks.

A product point is stored as one flat array whose coordinates are the block
coordinates concatenated in signature order. :meth:`Signature.split` turns
that array (or a batch of them) into per-block views.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import DimensionError, DomainError
from .geometry import Kind, SpaceFormSpec

_BLOCK_RE = re.compile(r"^([ESH])(\d+)(?::([-+0-9.eE]+))?$")


@dataclass(frozen=True)
class Signature:
    """Ordered blocks with one positive metric weight per block."""

    blocks: tuple
    alphas: tuple = field(default=None)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise DomainError("a signature needs at least one block")
        for b in blocks:
            if not isinstance(b, SpaceFormSpec):
                raise DomainError(f"not a SpaceFormSpec: {b!r}")
        alphas = (1.0,) * len(blocks) if self.alphas is None else tuple(float(a) for a in self.alphas)
        if len(alphas) != len(blocks):
            raise DomainError(f"{len(alphas)} weights for {len(blocks)} blocks")
        if not all(np.isfinite(a) and a > 0 for a in alphas):
            raise DomainError("metric weights must be positive and finite")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def parse(cls, text, alphas=None):
        """Parse ``"E2,S2:1,H2:-1"``; curvatures default to +1 / -1.

        ``x`` may be used instead of ``,`` as a separator.
        """
        parts = [t.strip() for t in re.split(r"[,x×]", text.strip()) if t.strip()]
        blocks = []
        for part in parts:
            m = _BLOCK_RE.match(part)
            if not m:
                raise DomainError(f"cannot parse block {part!r}")
            kind, dim, c = m.group(1), int(m.group(2)), m.group(3)
            if kind == "E":
                if c is not None and float(c) != 0.0:
                    raise DomainError("Euclidean blocks have curvature 0")
                blocks.append(SpaceFormSpec.euclidean(dim))
            elif kind == "S":
                blocks.append(SpaceFormSpec.spherical(dim, 1.0 if c is None else float(c)))
            else:
                blocks.append(SpaceFormSpec.hyperbolic(dim, -1.0 if c is None else float(c)))
        return cls(tuple(blocks), alphas)

    def format(self):
        out = []
        for b in self.blocks:
            if b.kind is Kind.EUCLIDEAN:
                out.append(f"E{b.dim}")
            else:
                out.append(f"{b.kind.value}{b.dim}:{b.curvature!r}")
        return ",".join(out)

    def __str__(self):
        return "x".join(
            f"{b.kind.value}{b.dim}" for b in self.blocks
        )

    def __len__(self):
        return len(self.blocks)

    @property
    def dim(self):
        """Total intrinsic dimension."""
        return sum(b.dim for b in self.blocks)

    @property
    def ambient_dim(self):
        return sum(b.ambient_dim for b in self.blocks)

    @property
    def offsets(self):
        off = [0]
        for b in self.blocks:
            off.append(off[-1] + b.ambient_dim)
        return tuple(off)

    def slices(self):
        off = self.offsets
        return [slice(off[i], off[i + 1]) for i in range(len(self.blocks))]

    def indices(self, kind):
        return [i for i, b in enumerate(self.blocks) if b.kind is Kind(kind)]

    def with_alphas(self, alphas):
        return Signature(self.blocks, alphas)

    def extend(self, block, alpha=1.0):
        return Signature(self.blocks + (block,), self.alphas + (float(alpha),))

    def split(self, x):
        """Split flat coordinates (``(..., ambient_dim)``) into per-block views."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.ambient_dim:
            raise DimensionError(
                f"expected {self.ambient_dim} coordinates for {self}, "
                f"got {x.shape[-1] if x.ndim else 0}"
            )
        return [x[..., s] for s in self.slices()]

    def join(self, parts):
        if len(parts) != len(self.blocks):
            raise DimensionError(f"expected {len(self.blocks)} blocks, got {len(parts)}")
        parts = [np.asarray(p, dtype=float) for p in parts]
        for p, b in zip(parts, self.blocks):
            if p.shape[-1] != b.ambient_dim:
                raise DimensionError(f"block {b} needs {b.ambient_dim} coordinates")
        return np.concatenate(parts, axis=-1)

    def check_points(self, x, tol=geo.TAU_PT):
        """Validate every block of ``x``; errors name the block index."""
        x = np.asarray(x, dtype=float)
        for i, (b, xb) in enumerate(zip(self.blocks, self.split(x))):
            try:
                geo.check_point(b, xb, tol=tol, name=f"block {i} ({b})")
            except DomainError as exc:
                raise DomainError(str(exc)) from None
        return x

    def base_point(self):
        return self.join([geo.base_point_of(b) for b in self.blocks])

    def random_points(self, rng, size, scale=1.0):
        return self.join([geo.random_points(b, rng, size, scale) for b in self.blocks])

    def to_dict(self):
        return {"blocks": self.format(), "alphas": list(self.alphas)}

    @classmethod
    def from_dict(cls, d):
        return cls.parse(d["blocks"], d.get("alphas"))


def block_distances(sig, x, y, check=True):
    """Per-block geodesic distances, stacked on the last axis."""
    xs, ys = sig.split(x), sig.split(y)
    return np.stack(
        [geo.distance(b, xb, yb, check=check) for b, xb, yb in zip(sig.blocks, xs, ys)],
        axis=-1,
    )


def product_distance(sig, x, y, check=True):
    """``sqrt(sum_k alpha_k^2 d_k(x_k, y_k)^2)``."""
    d = block_distances(sig, x, y, check=check)
    a = np.asarray(sig.alphas)
    return np.sqrt(np.sum((a * d) ** 2, axis=-1))


def product_exp(sig, p, v, check=True):
    return sig.join(
        [geo.exp_map(b, pb, vb, check=check) for b, pb, vb in zip(sig.blocks, sig.split(p), sig.split(v))]
    )


def product_log(sig, p, x, check=True):
    return sig.join(
        [geo.log_map(b, pb, xb, check=check) for b, pb, xb in zip(sig.blocks, sig.split(p), sig.split(x))]
    )


def product_metric(sig, p, u, v, check=True):
    """Weighted sum of block metrics at ``p``."""
    total = 0.0
    for a, b, pb, ub, vb in zip(sig.alphas, sig.blocks, sig.split(p), sig.split(u), sig.split(v)):
        total = total + a * geo.metric(b, pb, ub, vb, check=check)
    return total


def project_to_tangent(sig, p, v):
    return sig.join(
        [geo.project_to_tangent(b, pb, vb) for b, pb, vb in zip(sig.blocks, sig.split(p), sig.split(v))]
    )
