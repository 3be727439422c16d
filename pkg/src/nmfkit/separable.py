"""Near-separable NMF: successive projection, refinement and H recovery."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .matrix import as_matrix, column_norms, normalize_columns_l1
from .nnls import nnls_solve

_RANK_TOL = 1e-12


class RankDeficientError(ValueError):
    pass


@dataclass
class AnchorSet:
    """Ordered anchor column indices and the residual norm seen at each pick."""

    indices: np.ndarray
    residual_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=int)
        self.residual_norms = np.asarray(self.residual_norms, dtype=np.float64)
        if np.unique(self.indices).size != self.indices.size:
            raise ValueError("anchor indices must be distinct")

    def __len__(self):
        return self.indices.size

    def __iter__(self):
        return iter(self.indices.tolist())


def _column(X, j) -> np.ndarray:
    if sp.issparse(X):
        return X[:, j].toarray().ravel()
    return np.array(X[:, j], dtype=np.float64)


def spa(X, r: int, normalize: bool = False) -> AnchorSet:
    """Successive projection algorithm.

    Picks the column of largest residual l2 norm, projects every column on
    the orthogonal complement of that residual, and repeats ``r`` times.
    Residual norms are downdated through ``||(I - uu')v||^2 = ||v||^2 -
    (u'v)^2`` so the residual matrix is never formed; ties go to the
    smallest index. With ``normalize``, columns are first scaled to unit l1
    norm (zero columns are never selected) and the returned indices refer to
    the original columns.
    """
    X = as_matrix(X)
    p, n = X.shape
    if not 1 <= r <= min(p, n):
        raise ValueError(f"rank {r} must lie in [1, min(p, n) = {min(p, n)}]")
    sel = None
    if normalize:
        X, sel = normalize_columns_l1(X)
        if X.shape[1] < r:
            raise RankDeficientError(f"only {X.shape[1]} nonzero columns for rank {r}")
    norms2 = column_norms(X) ** 2
    max0 = float(np.sqrt(norms2.max()))
    U = np.zeros((p, r))
    picked, res = [], []
    for k in range(r):
        j = int(np.argmax(norms2))
        v = _column(X, j)
        for _ in range(2):
            v -= U[:, :k] @ (U[:, :k].T @ v)
        nv = float(np.linalg.norm(v))
        if nv <= _RANK_TOL * max0:
            raise RankDeficientError(
                f"numerical rank deficient: residual norms vanish after {k} extractions"
            )
        u = v / nv
        U[:, k] = u
        proj = np.asarray(X.T @ u).ravel()
        norms2 = np.maximum(norms2 - proj**2, 0.0)
        norms2[picked + [j]] = 0.0
        picked.append(j)
        res.append(nv)
    idx = np.array(picked)
    if sel is not None:
        idx = sel.to_original(idx)
    return AnchorSet(idx, np.array(res))


def _complement_norms(X, cols) -> np.ndarray:
    """Column l2 norms of X projected on the complement of span(X[:, cols])."""
    norms2 = column_norms(X) ** 2
    if len(cols) == 0:
        return np.sqrt(norms2)
    B = X[:, cols]
    B = B.toarray() if sp.issparse(B) else np.asarray(B)
    Q, _ = np.linalg.qr(B)
    proj = np.asarray(X.T @ Q)
    return np.sqrt(np.maximum(norms2 - np.sum(proj**2, axis=1), 0.0))


def reconstruction_residual(X, K) -> float:
    """``||X - X[:, K] H||_F`` with ``H >= 0`` the NNLS optimum."""
    H = recover_h(X, K)
    D = X[:, np.asarray(K, dtype=int)]
    D = D.toarray() if sp.issparse(D) else np.asarray(D)
    R = (X.toarray() if sp.issparse(X) else X) - D @ H
    return float(np.linalg.norm(R))


def spa_refine(X, K) -> AnchorSet:
    """One post-processing pass over the anchors.

    For each position ``k`` in ``K`` the data is projected onto the
    orthogonal complement of the other anchors and ``k`` is replaced by the
    column of largest projected norm. A replacement is kept only when it
    does not increase the NNLS reconstruction residual.
    """
    X = as_matrix(X)
    K = [int(k) for k in (K.indices if isinstance(K, AnchorSet) else K)]
    if len(set(K)) != len(K):
        raise ValueError("anchor indices must be distinct")
    best = reconstruction_residual(X, K)
    norms_at = []
    for pos in range(len(K)):
        others = K[:pos] + K[pos + 1:]
        cn = _complement_norms(X, others)
        cn[others] = -1.0
        j = int(np.argmax(cn))
        norms_at.append(float(cn[j]))
        if j == K[pos]:
            continue
        trial = K[:pos] + [j] + K[pos + 1:]
        res = reconstruction_residual(X, trial)
        if res <= best:
            K, best = trial, res
    return AnchorSet(np.array(K), np.array(norms_at))


def recover_h(X, K, tol: float = 1e-10) -> np.ndarray:
    """Nonnegative ``H`` (r-by-n) minimizing ``||X - X[:, K] H||_F``."""
    X = as_matrix(X)
    K = np.asarray(K.indices if isinstance(K, AnchorSet) else K, dtype=int)
    if np.unique(K).size != K.size:
        raise ValueError("anchor indices must be distinct")
    D = X[:, K]
    D = D.toarray() if sp.issparse(D) else np.asarray(D)
    # min ||X' - H' D'||: rows of H' are the columns of H
    return nnls_solve(D.T, X.T, tol=tol).solution.T


def anchor_error(Xt, K, W) -> float:
    """``max_j min_{k in K} ||Xt[:, k] - W[:, j]||_2``."""
    C = np.asarray(Xt[:, np.asarray(K, dtype=int)])
    d = np.linalg.norm(C[:, :, None] - W[:, None, :], axis=0)
    return float(d.min(axis=0).max())


def planted_separable(W, Hprime, eps: float, rng):
    """``W [I, H'] Pi + N`` with every noise column of l2 norm at most ``eps``.

    Returns ``(X, anchors, H)`` where ``X[:, anchors[k]]`` carries ``W[:, k]``
    and ``H = [I, H'] Pi``. Negative entries created by the noise are kept.
    """
    W = np.asarray(W, dtype=np.float64)
    Hprime = np.asarray(Hprime, dtype=np.float64)
    p, r = W.shape
    M = np.hstack([np.eye(r), Hprime])
    n = M.shape[1]
    perm = rng.permutation(n)
    Hfull = np.empty_like(M)
    Hfull[:, perm] = M
    X = W @ Hfull
    if eps > 0:
        N = rng.standard_normal((p, n))
        N *= eps * rng.uniform(0.0, 1.0, n) / np.linalg.norm(N, axis=0)
        X = X + N
    return X, perm[:r].copy(), Hfull


def spa_noise_sweep(W, Hprime, epsilons, seeds, normalize: bool = False):
    """Anchor error of SPA over a grid of noise levels.

    Returns rows ``{"eps", "seed", "anchor_error"}``, one per (eps, seed).
    """
    W = np.asarray(W, dtype=np.float64)
    rows = []
    for eps in epsilons:
        for seed in seeds:
            rng = np.random.default_rng(seed)
            Xt, _, _ = planted_separable(W, Hprime, float(eps), rng)
            K = spa(Xt, W.shape[1], normalize=normalize)
            rows.append({"eps": float(eps), "seed": int(seed),
                         "anchor_error": anchor_error(Xt, K.indices, W)})
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["eps", "seed", "anchor_error"])
        w.writeheader()
        w.writerows(rows)

