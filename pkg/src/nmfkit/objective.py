"""Objective, gradients and first-order optimality diagnostics.

Everything refers to ``F(W, H) = 0.5 * ||X - WH||_F^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Factorization:
    """A nonnegative pair ``(W, H)`` with ``W`` p-by-r and ``H`` r-by-n."""

    W: np.ndarray
    H: np.ndarray
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.H = np.asarray(self.H, dtype=np.float64)
        if self.W.ndim != 2 or self.H.ndim != 2 or self.W.shape[1] != self.H.shape[0]:
            raise ValueError(f"incompatible factors {self.W.shape} and {self.H.shape}")

    @property
    def rank(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "Factorization":
        return Factorization(self.W.copy(), self.H.copy(), list(self.flags))


@dataclass(frozen=True)
class KktReport:
    c_w: float
    c_h: float

    @property
    def total(self) -> float:
        return self.c_w + self.c_h


def _check(X, W, H):
    if W.shape[0] != X.shape[0] or H.shape[1] != X.shape[1] or W.shape[1] != H.shape[0]:
        raise ValueError(f"dimension mismatch: X {X.shape}, W {W.shape}, H {H.shape}")


def gradient_w(X, W, H) -> np.ndarray:
    """``W (H H^T) - X H^T``; the Gram matrix is formed first."""
    _check(X, W, H)
    return W @ (H @ H.T) - np.asarray(X @ H.T)


def gradient_h(X, W, H) -> np.ndarray:
    """``(W^T W) H - W^T X``."""
    _check(X, W, H)
    return (W.T @ W) @ H - np.asarray((X.T @ W).T)


def _block_residual(M, G) -> float:
    return float(
        np.linalg.norm(np.minimum(M, 0.0))
        + np.linalg.norm(np.minimum(G, 0.0))
        + np.linalg.norm(M * G)
    )


def kkt_residual(W, H, grad_w, grad_h) -> KktReport:
    """Sum of the three stationarity violations for each block.

    ``||min(W,0)|| + ||min(grad_W,0)|| + ||W o grad_W||`` and the same for
    ``H``. The value depends on the scaling of the rank-one pairs, so run
    :func:`balance_factors` first when comparing iterates.
    """
    if grad_w.shape != W.shape or grad_h.shape != H.shape:
        raise ValueError("gradient shapes do not match the factors")
    return KktReport(_block_residual(W, grad_w), _block_residual(H, grad_h))


def kkt_report(X, W, H, balance: bool = True) -> KktReport:
    """Convenience wrapper: optionally balance, then evaluate the residual."""
    if balance:
        W, H = balance_factors(W, H)
    return kkt_residual(W, H, gradient_w(X, W, H), gradient_h(X, W, H))


def balanced_kkt(W, H, grad_w, grad_h) -> KktReport:
    """KKT residual of the balanced pair, from the unbalanced gradients.

    With ``W' = W D`` and ``H' = D^-1 H`` the gradients transform as
    ``grad_W D^-1`` and ``D grad_H``; pairs zeroed by balancing get zero
    gradient slices. Same value as balancing and recomputing from scratch.
    """
    nw = np.linalg.norm(W, axis=0)
    nh = np.linalg.norm(H, axis=1)
    live = (nw > 0) & (nh > 0)
    d = np.ones_like(nw)
    d[live] = np.sqrt(nh[live] / nw[live])
    Wb = W * np.where(live, d, 0.0)
    Hb = np.where(live[:, None], H / d[:, None], 0.0)
    gw = np.where(live, grad_w / d, 0.0)
    gh = np.where(live[:, None], grad_h * d[:, None], 0.0)
    return kkt_residual(Wb, Hb, gw, gh)


def optimal_scaling(X, W, H) -> float:
    """argmin over alpha >= 0 of ``||X - alpha WH||_F``.

    Evaluated as ``<X H^T, W> / <W^T W, H H^T>`` so nothing of size p-by-n
    is formed.
    """
    _check(X, W, H)
    denom = float(np.vdot(W.T @ W, H @ H.T))
    if denom <= 0.0:
        raise ValueError("WH is identically zero; optimal scaling undefined")
    num = float(np.vdot(np.asarray(X @ H.T), W))
    return max(num / denom, 0.0)


def scale_pair(W, H, alpha: float):
    """Multiply ``WH`` by ``alpha``, splitting the factor evenly."""
    s = np.sqrt(alpha)
    return W * s, H * s


def balance_factors(W, H):
    """Rescale each rank-one pair so ``||W[:,k]||_2 == ||H[k,:]||_2``.

    The product ``WH`` is unchanged. A pair with one zero side is zeroed on
    both sides.
    """
    W = np.array(W, dtype=np.float64)
    H = np.array(H, dtype=np.float64)
    nw = np.linalg.norm(W, axis=0)
    nh = np.linalg.norm(H, axis=1)
    live = (nw > 0) & (nh > 0)
    d = np.zeros_like(nw)
    d[live] = np.sqrt(nh[live] / nw[live])
    W *= d
    H[live] /= d[live, None]
    H[~live] = 0.0
    return W, H
