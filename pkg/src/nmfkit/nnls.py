"""Multi-right-hand-side nonnegative least squares.

Solves ``min_{W >= 0} ||X - W H||_F`` one row of ``W`` at a time. Row ``i``
is the quadratic program ``min_w  w G w' - 2 w b_i`` with ``G = H H'`` and
``b_i = (X H')[i]``; rows never interact, so the same Gram matrix is shared
by all of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(np.float64).eps


@dataclass
class NnlsSolution:
    solution: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(self.residual.max(initial=0.0))


def regularize_gram(G: np.ndarray) -> np.ndarray:
    """Add a tiny ridge to a singular Gram matrix, leave others alone."""
    r = G.shape[0]
    tr = float(np.trace(G))
    if tr <= 0.0:
        return G
    ev = np.linalg.eigvalsh(G)
    if ev[0] > 1e-13 * ev[-1]:
        return G
    return G + (1e-12 * tr / r) * np.eye(r)


def row_kkt(G, B, W) -> np.ndarray:
    """Per-row three-term KKT residual of the NNLS subproblem."""
    grad = W @ G - B
    return (
        np.linalg.norm(np.minimum(W, 0.0), axis=1)
        + np.linalg.norm(np.minimum(grad, 0.0), axis=1)
        + np.linalg.norm(W * grad, axis=1)
    )


def _masked_solve(G, B, P):
    """Solve ``G[P_i, P_i] s = B[i, P_i]`` for every row at once.

    Each row's system is embedded in an r-by-r matrix that is the identity
    outside its passive set, so one stacked LAPACK call handles all rows.
    Entries outside the passive sets come back as exactly zero.
    """
    m, r = P.shape
    if m == 0:
        return np.zeros((0, r))
    mask2 = P[:, :, None] & P[:, None, :]
    A = np.where(mask2, G[None], 0.0)
    A[:, np.arange(r), np.arange(r)] += ~P
    rhs = np.where(P, B, 0.0)[:, :, None]
    S = np.linalg.solve(A, rhs)
    # one step of iterative refinement keeps the dual residual near eps
    S += np.linalg.solve(A, rhs - A @ S)
    S = S[:, :, 0]
    S[~P] = 0.0
    return S


def _back_off(G, B, X, P):
    """Inner Lawson-Hanson loop for a block of rows.

    ``X`` is feasible with support ``P`` on entry. Rows whose passive-set
    optimum has a nonpositive coordinate take the longest feasible step
    towards it and drop the blocking variable, then retry. Returns the
    updated ``(X, P)`` and the number of back-off steps per row.
    """
    steps = np.zeros(X.shape[0], dtype=int)
    rows = np.arange(X.shape[0])
    for _ in range(X.shape[1] + 1):
        if rows.size == 0:
            break
        S = _masked_solve(G, B[rows], P[rows])
        bad = P[rows] & (S <= 0)
        ok = ~bad.any(axis=1)
        X[rows[ok]] = S[ok]
        rows, S, bad = rows[~ok], S[~ok], bad[~ok]
        if rows.size == 0:
            break
        steps[rows] += 1
        Xr = X[rows]
        denom = Xr - S
        ratio = np.full_like(Xr, np.inf)
        np.divide(Xr, denom, out=ratio, where=bad & (denom > 0))
        ratio[bad & ~(denom > 0)] = 0.0
        k = np.argmin(ratio, axis=1)
        alpha = ratio[np.arange(rows.size), k]
        Xr = Xr + alpha[:, None] * (S - Xr)
        Xr[np.arange(rows.size), k] = 0.0
        Pr = P[rows] & (Xr > 0)
        Xr[~Pr] = 0.0
        X[rows] = Xr
        P[rows] = Pr
    if rows.size:
        X[rows] = np.maximum(_masked_solve(G, B[rows], P[rows]), 0.0)
        P[rows] = X[rows] > 0
    return X, P, steps


def nnls_gram(G, B, warm_start=None, tol: float = 1e-10, max_iter: int | None = None):
    """Active-set NNLS from precomputed ``G = H H'`` (r-by-r) and ``B = X H'``.

    ``warm_start`` (p-by-r) seeds each row's passive set with its positive
    entries. Returns an :class:`NnlsSolution`.
    """
    G = np.asarray(G, dtype=np.float64)
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    p, r = B.shape
    if r == 0:
        raise ValueError("rank must be at least 1")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(B))):
        raise ValueError("non-finite input to nnls")
    if np.trace(G) <= 0.0:
        W = np.zeros((p, r))
        return NnlsSolution(W, row_kkt(G, B, W), np.zeros(p, dtype=int))
    Gr = regularize_gram(G)
    if max_iter is None:
        max_iter = 3 * r + 10
    dual_tol = max(tol, 10.0 * _EPS * r * np.abs(Gr).sum(axis=0).max())
    iters = np.zeros(p, dtype=int)
    if warm_start is None:
        W = np.zeros((p, r))
        P = np.zeros((p, r), dtype=bool)
    else:
        W0 = np.asarray(warm_start, dtype=np.float64)
        if W0.shape != (p, r):
            raise ValueError(f"warm start has shape {W0.shape}, expected {(p, r)}")
        P = W0 > 0
        W = np.where(P, W0, 0.0)
        W, P, iters = _back_off(Gr, B, W, P)
    live = np.arange(p)
    for _ in range(max_iter):
        dual = B[live] - W[live] @ Gr
        dual[P[live]] = -np.inf
        j = np.argmax(dual, axis=1)
        enter = dual[np.arange(live.size), j] > dual_tol
        live, j = live[enter], j[enter]
        if live.size == 0:
            break
        iters[live] += 1
        P[live, j] = True
        Wl, Pl, steps = _back_off(Gr, B[live], W[live], P[live])
        W[live], P[live] = Wl, Pl
        iters[live] += steps
    return NnlsSolution(W, row_kkt(G, B, W), iters)


def nnls_solve(H, X, warm_start=None, tol: float = 1e-10) -> NnlsSolution:
    """Solve ``min_{W >= 0} ||X - W H||_F`` exactly by an active-set method.

    Parameters
    ----------
    H : (r, n) array
    X : (p, n) array or sparse matrix
    warm_start : (p, r) array, optional
        Previous solution; its support seeds the passive sets.
    tol : float
        Dual feasibility threshold for termination.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] == 0:
        raise ValueError("H must be a 2-d array with at least one row")
    if X.shape[1] != H.shape[1]:
        raise ValueError(f"dimension mismatch: X {X.shape}, H {H.shape}")
    B = np.asarray(X @ H.T)
    return nnls_gram(H @ H.T, B, warm_start=warm_start, tol=tol)


def nnls_pg(H, X, W0, max_inner: int = 500, tol: float = 1e-10) -> NnlsSolution:
    """Projected gradient NNLS with constant step ``1 / lambda_max(H H')``.

    Each step cannot increase the objective. Stops after ``max_inner`` steps
    or once the projected gradient norm drops below ``tol``.
    """
    H = np.asarray(H, dtype=np.float64)
    W = np.array(W0, dtype=np.float64)
    if W.min(initial=0.0) < 0:
        raise ValueError("W0 must be nonnegative")
    G = H @ H.T
    B = np.asarray(X @ H.T)
    L = float(np.linalg.eigvalsh(G)[-1]) if G.size else 0.0
    it = 0
    if L > 0.0:
        for it in range(1, max_inner + 1):
            grad = W @ G - B
            pgrad = np.where(W > 0, grad, np.minimum(grad, 0.0))
            if np.linalg.norm(pgrad) <= tol:
                it -= 1
                break
            W = np.maximum(W - grad / L, 0.0)
    return NnlsSolution(W, row_kkt(G, B, W), np.full(W.shape[0], it))
