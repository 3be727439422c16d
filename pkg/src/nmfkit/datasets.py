"""Synthetic nonnegative test matrices with known ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .objective import Factorization
from .separable import AnchorSet, planted_separable

_KINDS = {
    "dense": "dense", "dense-lowrank": "dense",
    "sparse": "sparse", "sparse-lowrank": "sparse",
    "separable": "separable", "near-separable": "separable",
}


@dataclass
class GenSpec:
    kind: str
    p: int
    n: int
    r: int
    noise: float = 0.0
    density: float = 1.0
    seed: int = 0

    def __post_init__(self):
        try:
            self.kind = _KINDS[self.kind]
        except KeyError:
            raise ValueError(f"unknown generator kind {self.kind!r}") from None
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if self.noise < 0:
            raise ValueError("noise level must be >= 0")
        if min(self.p, self.n, self.r) < 1:
            raise ValueError("p, n and r must be positive")
        if self.kind == "separable" and self.n < self.r:
            raise ValueError("separable instances need n >= r")


def _sparsify(M, density):
    """Zero every entry below the (1 - density) quantile."""
    if density >= 1:
        return M
    cut = np.quantile(M, 1.0 - density)
    return np.where(M > cut, M, 0.0)


def gen_lowrank(spec: GenSpec):
    """Return ``(X, truth)`` with ``X = max(WH + N, 0)``.

    ``W`` and ``H`` are uniform on [0, 1]. Gaussian noise has standard
    deviation ``noise * ||WH||_F / sqrt(#entries)`` so that
    ``||N||_F ~ noise * ||WH||_F``. For the sparse kind both factors are
    thresholded to the requested density, the noise only touches the
    nonzeros of ``WH`` and ``X`` is returned in CSC form.
    """
    rng = np.random.default_rng(spec.seed)
    W = rng.uniform(0.0, 1.0, (spec.p, spec.r))
    H = rng.uniform(0.0, 1.0, (spec.r, spec.n))
    if spec.kind == "sparse":
        W = _sparsify(W, spec.density)
        H = _sparsify(H, spec.density)
        X = sp.csc_matrix(sp.csc_matrix(W) @ sp.csc_matrix(H))
        X.eliminate_zeros()
        if spec.noise > 0 and X.nnz:
            scale = spec.noise * np.linalg.norm(X.data) / np.sqrt(X.nnz)
            X.data = np.maximum(X.data + scale * rng.standard_normal(X.nnz), 0.0)
            X.eliminate_zeros()
        return X, Factorization(W, H)
    if spec.kind != "dense":
        raise ValueError("gen_lowrank handles the dense and sparse kinds")
    H = _sparsify(H, spec.density)
    X = W @ H
    if spec.noise > 0:
        scale = spec.noise * np.linalg.norm(X) / np.sqrt(X.size)
        X = np.maximum(X + scale * rng.standard_normal(X.shape), 0.0)
    return X, Factorization(W, H)


def gen_near_separable(spec: GenSpec):
    """Return ``(X, anchors, truth)`` for ``X = max(W [I, H'] Pi + N, 0)``.

    Columns of ``H'`` are Dirichlet(1) draws (they sum to one) and every noise
    column has l2 norm at most ``spec.noise``; clamping at zero can only
    shrink it. ``anchors.indices[k]`` is the column holding ``W[:, k]``.
    """
    if spec.kind != "separable":
        raise ValueError("gen_near_separable needs kind='separable'")
    rng = np.random.default_rng(spec.seed)
    W = rng.uniform(0.0, 1.0, (spec.p, spec.r))
    Hp = rng.dirichlet(np.ones(spec.r), spec.n - spec.r).T if spec.n > spec.r else np.zeros((spec.r, 0))
    X, anchors, Hfull = planted_separable(W, Hp, spec.noise, rng)
    X = np.maximum(X, 0.0)
    return X, AnchorSet(anchors), Factorization(W, Hfull)
