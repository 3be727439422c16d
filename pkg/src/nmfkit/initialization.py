"""Initial factorizations: random, SVD split, k-means and column subset."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
from sklearn.cluster import KMeans
from sklearn.utils.extmath import randomized_svd

from .matrix import as_matrix
from .nnls import nnls_solve
from .objective import Factorization, optimal_scaling, scale_pair
from .separable import spa

EXACT_SVD_MAX_DIM = 64


class InitWarning(UserWarning):
    """Emitted when an initializer had to fall back or saw a degenerate input."""


def _rescaled(X, W, H):
    if X is not None and np.any(W) and np.any(H):
        W, H = scale_pair(W, H, optimal_scaling(X, W, H))
    return W, H


def init_random(p: int, n: int, r: int, seed=None, X=None) -> Factorization:
    """Uniform [0, 1] entries; rescaled by the optimal constant if ``X`` is given."""
    if r < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.0, 1.0, (p, r))
    H = rng.uniform(0.0, 1.0, (r, n))
    return Factorization(*_rescaled(X, W, H))


def truncated_svd(X, r: int, seed=0):
    """Leading ``r`` singular triplets.

    Exact for small inputs, otherwise randomized subspace iteration with two
    power iterations and an oversampling of 8.
    """
    if min(X.shape) <= EXACT_SVD_MAX_DIM:
        D = X.toarray() if sp.issparse(X) else np.asarray(X)
        U, s, Vt = np.linalg.svd(D, full_matrices=False)
        return U[:, :r], s[:r], Vt[:r]
    return randomized_svd(X, r, n_oversamples=8, n_iter=2, random_state=seed)


def nonnegative_split(u, v):
    """The two nonnegative rank-one pieces of ``u v'``.

    ``u v' = u+ v+' + u- v-' - u- v+' - u+ v-'`` with ``u+ = max(u, 0)`` and
    ``u- = max(-u, 0)``; the first two terms are returned as pairs.
    """
    up, un = np.maximum(u, 0.0), np.maximum(-u, 0.0)
    vp, vn = np.maximum(v, 0.0), np.maximum(-v, 0.0)
    return (up, vp), (un, vn)


def init_svd_split(X, r: int, seed=0) -> Factorization:
    """SVD-based nonnegative initialization (rank-one split).

    Each leading term ``s_k u_k v_k'`` is replaced by whichever of its two
    nonnegative pieces has the larger norm, scaled by the 1-d least-squares
    fit to ``s_k u_k v_k'`` (which works out to ``s_k``). Terms are ordered
    by decreasing norm. Terms lost to numerical rank deficiency are refilled
    at random and reported through :class:`InitWarning`.
    """
    X = as_matrix(X)
    p, n = X.shape
    if not 1 <= r <= min(p, n):
        raise ValueError(f"rank {r} must lie in [1, {min(p, n)}]")
    U, s, Vt = truncated_svd(X, r, seed)
    flags = []
    if np.any(U[:, 0] < 0) and np.any(U[:, 0] > 0):
        flags.append("leading singular vector has mixed signs")
    W = np.zeros((p, r))
    H = np.zeros((r, n))
    contrib = np.zeros(r)
    tol = s[0] * max(p, n) * np.finfo(float).eps
    for k in range(r):
        if s[k] <= tol:
            continue
        (a1, b1), (a2, b2) = nonnegative_split(U[:, k], Vt[k])
        n1 = np.linalg.norm(a1) * np.linalg.norm(b1)
        n2 = np.linalg.norm(a2) * np.linalg.norm(b2)
        a, b, nrm = (a1, b1, n1) if n1 >= n2 else (a2, b2, n2)
        if nrm == 0:
            continue
        # least-squares weight c = s <uv', ab'> / ||ab'||^2 = s for either piece
        c = s[k] * (U[:, k] @ a) * (Vt[k] @ b) / (a @ a) / (b @ b)
        W[:, k] = np.sqrt(c) * a
        H[k] = np.sqrt(c) * b
        contrib[k] = c * nrm
    order = np.argsort(-contrib, kind="stable")
    W, H, contrib = W[:, order], H[order], contrib[order]
    missing = np.flatnonzero(contrib == 0)
    if missing.size:
        rng = np.random.default_rng(seed)
        level = np.sqrt(float(X.mean()) / r) if X.mean() > 0 else 1.0
        W[:, missing] = level * rng.uniform(0.0, 1.0, (p, missing.size))
        H[missing] = level * rng.uniform(0.0, 1.0, (missing.size, n))
        flags.append(f"{missing.size} trailing factor(s) filled at random (numerical rank < r)")
    for msg in flags:
        warnings.warn(msg, InitWarning, stacklevel=2)
    return Factorization(W, H, flags)


def init_clustering(X, r: int, seed=None, max_iter: int = 50) -> Factorization:
    """k-means centroids as ``W`` and a scaled cluster indicator as ``H``.

    Column ``j`` of ``H`` has one nonzero, in the row of its cluster, equal
    to ``<x_j, w_k> / ||w_k||^2``.
    """
    X = as_matrix(X)
    p, n = X.shape
    if n < r:
        raise ValueError(f"need at least r={r} columns, got {n}")
    D = X.toarray() if sp.issparse(X) else X
    if np.unique(D.T, axis=0).shape[0] < r:
        raise ValueError(f"fewer than r={r} distinct columns")
    km = KMeans(n_clusters=r, init="k-means++", n_init=1, max_iter=max_iter,
                algorithm="lloyd", random_state=seed)
    labels = km.fit_predict(D.T)
    W = np.maximum(km.cluster_centers_.T, 0.0)
    H = np.zeros((r, n))
    wn2 = np.sum(W**2, axis=0)
    cols = np.arange(n)
    dots = np.einsum("ij,ij->j", D, W[:, labels])
    H[labels, cols] = np.divide(dots, wn2[labels], out=np.zeros(n), where=wn2[labels] > 0)
    return Factorization(W, np.maximum(H, 0.0))


def init_colsubset(X, r: int, normalize: bool = True) -> Factorization:
    """``W = X[:, K]`` with ``K`` from SPA, ``H`` from exact NNLS."""
    X = as_matrix(X)
    if r > X.shape[1]:
        raise ValueError(f"rank {r} exceeds the number of columns {X.shape[1]}")
    K = spa(X, r, normalize=normalize)
    W = X[:, K.indices]
    W = W.toarray() if sp.issparse(W) else np.array(W)
    H = nnls_solve(W.T, X.T).solution.T
    return Factorization(W, H, [f"anchors {K.indices.tolist()}"])
