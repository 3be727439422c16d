"""Two-block coordinate descent for Frobenius NMF.

Every rule is written once as a step on precomputed products
``A = X H'`` (p-by-r) and ``G = H H'`` (r-by-r). :func:`run_cd` applies it to
``W`` and then, on the transposed problem ``X' ~ H' W'``, to ``H``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .matrix import relative_error, squared_frobenius
from .nnls import nnls_gram, regularize_gram
from .objective import Factorization, balanced_kkt, scale_pair

RULES = ("mu", "als", "anls", "hals")


@dataclass
class SolverConfig:
    """Update rule and stopping parameters for :func:`run_cd`.

    ``err_tol`` triggers when the relative error moved by less than that
    fraction over the last 10 iterations; ``kkt_tol`` compares against the
    balanced KKT residual. ``inner`` repeats the W (and H) update with the
    same products before switching blocks.
    """

    rule: str = "hals"
    max_iter: int = 500
    max_time: float = math.inf
    kkt_tol: float = 1e-12
    err_tol: float = 1e-12
    inner: int = 1
    eps: float = 1e-16
    seed: int | None = None
    mu_fix: bool = True
    nnls_tol: float = 1e-10
    track_kkt: bool = True

    def __post_init__(self):
        self.rule = self.rule.lower()
        if self.rule not in RULES:
            raise ValueError(f"unknown update rule {self.rule!r}; choose from {RULES}")
        if self.max_iter < 1 or not self.max_time > 0:
            raise ValueError("iteration and time budgets must be positive")
        if self.inner < 1:
            raise ValueError("inner must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")


class TraceEntry(NamedTuple):
    iteration: int
    elapsed: float
    rel_error: float
    kkt_total: float
    rel_error_unscaled: float


@dataclass
class Trace:
    entries: list[TraceEntry] = field(default_factory=list)
    stop_reason: str = ""
    skipped_columns: int = 0

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def rel_errors(self) -> np.ndarray:
        return np.array([e.rel_error for e in self.entries])

    @property
    def elapsed(self) -> np.ndarray:
        return np.array([e.elapsed for e in self.entries])

    @property
    def kkt(self) -> np.ndarray:
        return np.array([e.kkt_total for e in self.entries])

    @property
    def final_error(self) -> float:
        return self.entries[-1].rel_error


# -- single-block steps on precomputed products -----------------------------


def _mu_step(A, G, W, eps, fix):
    if fix:
        grad = W @ G - A
        W = np.where((W <= 0) & (grad < 0), eps, W)
    return W * A / np.maximum(W @ G, eps)


def _als_step(A, G):
    G = regularize_gram(G)
    if np.trace(G) <= 0:
        return np.zeros_like(A)
    return np.maximum(np.linalg.solve(G, A.T).T, 0.0)


def _hals_step(A, G, W, eps):
    W = np.array(W, dtype=np.float64, order="F")
    skipped = []
    for l in range(W.shape[1]):
        gll = G[l, l]
        if gll < eps:
            skipped.append(l)
            continue
        col = W[:, l] + (A[:, l] - W @ G[:, l]) / gll
        W[:, l] = np.maximum(col, 0.0)
    return W, skipped


def _anls_step(A, G, W, tol):
    return nnls_gram(G, A, warm_start=W, tol=tol).solution


def _products(X, H, counter=None):
    if counter is not None:
        counter["products"] = counter.get("products", 0) + 1
    return np.asarray(X @ H.T), H @ H.T


# -- public single-update API ---------------------------------------------------


def mu_update(X, H, W, eps: float = 1e-16, fix: bool = True) -> np.ndarray:
    """Multiplicative update ``W <- W o (X H') / (W H H')``.

    The denominator is floored at ``eps``. With ``fix`` (the default), zero
    entries whose partial derivative is negative are first reset to ``eps``
    so they are not locked at zero.
    """
    A, G = _products(X, H)
    return _mu_step(A, G, np.asarray(W, dtype=np.float64), eps, fix)


def als_update(X, H) -> np.ndarray:
    """Unconstrained least squares in ``W``, projected on ``W >= 0``."""
    A, G = _products(X, H)
    return _als_step(A, G)


def anls_update(X, H, W=None, tol: float = 1e-10) -> np.ndarray:
    """Exact NNLS update; ``W`` is only used as a warm start."""
    A, G = _products(X, H)
    return _anls_step(A, G, W, tol)


def hals_update(X, W, H, eps: float = 1e-16, return_skipped: bool = False):
    """One HALS sweep over the columns of ``W`` in ascending order.

    Columns whose matching row of ``H`` has squared norm below ``eps`` are
    left untouched; their indices are returned when ``return_skipped``.
    """
    A, G = _products(X, H)
    W, skipped = _hals_step(A, G, W, eps)
    return (W, skipped) if return_skipped else W


def accelerated_sweep(X, H, W, inner: int, rule: str = "mu", eps: float = 1e-16,
                      fix: bool = True, counter: dict | None = None) -> np.ndarray:
    """Apply the MU or HALS update ``inner`` times reusing ``X H'`` and ``H H'``.

    ``counter``, if given, is incremented under the key ``"products"`` each
    time the two products are formed.
    """
    if inner < 1:
        raise ValueError("inner must be >= 1")
    A, G = _products(X, H, counter)
    W = np.asarray(W, dtype=np.float64)
    for _ in range(inner):
        if rule == "mu":
            W = _mu_step(A, G, W, eps, fix)
        elif rule == "hals":
            W, _ = _hals_step(A, G, W, eps)
        else:
            raise ValueError(f"accelerated sweeps support 'mu' and 'hals', not {rule!r}")
    return W


# -- framework --------------------------------------------------------------


class _Stepper:
    def __init__(self, config: SolverConfig):
        self.cfg = config
        self.skipped = 0

    def __call__(self, A, G, W):
        cfg = self.cfg
        for _ in range(cfg.inner if cfg.rule in ("mu", "hals") else 1):
            if cfg.rule == "mu":
                W = _mu_step(A, G, W, cfg.eps, cfg.mu_fix)
            elif cfg.rule == "hals":
                W, sk = _hals_step(A, G, W, cfg.eps)
                self.skipped += len(sk)
            elif cfg.rule == "als":
                W = _als_step(A, G)
            else:
                W = _anls_step(A, G, W, cfg.nnls_tol)
        return W


def _diagnostics(X, W, H, A, G, At, track_kkt):
    """Relative error and balanced KKT total from products already at hand.

    ``A = X H'``, ``G = H H'`` and ``At = X' W`` must match the current pair.
    """
    if sp.issparse(X):
        WtW = W.T @ W
        sq = squared_frobenius(X) - 2.0 * float(np.vdot(A, W)) + float(np.vdot(WtW, G))
        err = math.sqrt(max(sq, 0.0) / squared_frobenius(X))
    else:
        err = relative_error(X, W, H)
    if not track_kkt:
        return err, math.nan
    gw = W @ G - A
    gh = (W.T @ W) @ H - At.T
    return err, balanced_kkt(W, H, gw, gh).total


def run_cd(X, r: int, config: SolverConfig, init: Factorization):
    """Alternate W and H updates of the configured rule until a stop trigger.

    Returns the final :class:`Factorization` and a :class:`Trace` whose first
    entry (iteration 0) is the initial point. Elapsed time counts update work
    only; error and KKT bookkeeping run with the clock stopped. ALS entries
    record the error after rescaling ``WH`` by the optimal constant; the
    unscaled error is kept in ``rel_error_unscaled``.
    """
    if sp.issparse(X):
        X = sp.csc_matrix(X, dtype=np.float64)
        values = X.data
    else:
        X = np.asarray(X, dtype=np.float64)
        values = X
    p, n = X.shape
    if values.size and values.min() < 0:
        raise ValueError("X must be nonnegative")
    if squared_frobenius(X) == 0.0:
        raise ValueError("X is identically zero")
    if not 1 <= r <= min(p, n):
        raise ValueError(f"rank {r} must lie in [1, min(p, n) = {min(p, n)}]")
    W = np.array(init.W, dtype=np.float64)
    H = np.array(init.H, dtype=np.float64)
    if W.shape != (p, r) or H.shape != (r, n):
        raise ValueError(f"init shapes {W.shape}, {H.shape} do not match X {X.shape} and r={r}")
    if W.min() < 0 or H.min() < 0:
        raise ValueError("initial factors must be nonnegative")

    cfg = config
    step = _Stepper(cfg)
    Xt = X.T.tocsc() if sp.issparse(X) else X.T
    trace = Trace()

    A, G = _products(X, H)
    At = np.asarray(Xt @ W)
    err0, kkt0 = _diagnostics(X, W, H, A, G, At, cfg.track_kkt)
    trace.entries.append(TraceEntry(0, 0.0, err0, kkt0, err0))

    t0 = time.perf_counter()
    if cfg.rule == "hals":
        denom = float(np.vdot(W.T @ W, G))
        if denom > 0:
            alpha = max(float(np.vdot(A, W)) / denom, 0.0)
            if alpha > 0:
                W, H = scale_pair(W, H, alpha)
                A, G = _products(X, H)
    elapsed = time.perf_counter() - t0

    errors = [err0]
    for t in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        W = step(A, G, W)
        At, Gt = _products(Xt, W.T)
        H = np.ascontiguousarray(step(At, Gt, H.T).T)
        unscaled_pair = None
        if cfg.rule == "als":
            denom = float(np.vdot(Gt, H @ H.T))
            if denom > 0:
                alpha = max(float(np.vdot(At, H.T)) / denom, 0.0)
                unscaled_pair = (W, H)
                W, H = scale_pair(W, H, alpha)
                At = At * math.sqrt(alpha)
        # the next W-update needs these anyway; diagnostics reuse them
        A, G = _products(X, H)
        elapsed += time.perf_counter() - t0

        err, kkt = _diagnostics(X, W, H, A, G, At, cfg.track_kkt)
        unscaled = err if unscaled_pair is None else relative_error(X, *unscaled_pair)
        trace.entries.append(TraceEntry(t, elapsed, err, kkt, unscaled))
        errors.append(err)

        if kkt < cfg.kkt_tol:
            trace.stop_reason = "kkt"
            break
        if elapsed >= cfg.max_time:
            trace.stop_reason = "time"
            break
        if t >= 10 and abs(errors[-11] - err) < cfg.err_tol * errors[-11]:
            trace.stop_reason = "stagnation"
            break
    else:
        trace.stop_reason = "max_iter"
    trace.skipped_columns = step.skipped
    return Factorization(W, H), trace
