"""Matrix storage, Matrix Market I/O and the few kernels the solvers share.

Matrices are plain ``numpy.ndarray`` (dense) or ``scipy.sparse.csc_matrix``
(sparse, column-compressed) objects; nothing here wraps them.
"""

from __future__ import annotations

from dataclasses import dataclass
from os import PathLike

import numpy as np
import scipy.io
import scipy.sparse as sp


class MatrixMarketError(ValueError):
    """Raised when a Matrix Market file cannot be parsed or validated."""


@dataclass(frozen=True)
class ColumnSelection:
    """Columns kept by :func:`normalize_columns_l1`.

    ``kept`` indexes into the original columns (strictly increasing) and
    ``scale[i]`` is the factor that was applied to original column
    ``kept[i]``, i.e. ``1 / ||X[:, kept[i]]||_1``.
    """

    kept: np.ndarray
    scale: np.ndarray
    n_original: int

    @property
    def dropped(self) -> np.ndarray:
        mask = np.ones(self.n_original, dtype=bool)
        mask[self.kept] = False
        return np.flatnonzero(mask)

    def to_original(self, indices) -> np.ndarray:
        """Map column indices of the normalized matrix back to the input."""
        return self.kept[np.asarray(indices, dtype=int)]


def is_sparse(X) -> bool:
    return sp.issparse(X)


def as_matrix(X, nonnegative: bool = False):
    """Coerce ``X`` to float64 dense ndarray or CSC, checking finiteness."""
    if sp.issparse(X):
        X = sp.csc_matrix(X, dtype=np.float64)
        X.sum_duplicates()
        X.eliminate_zeros()
        values = X.data
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-d matrix, got shape {X.shape}")
        values = X
    if not np.all(np.isfinite(values)):
        raise ValueError("matrix contains non-finite values")
    if nonnegative and values.size and values.min() < 0:
        raise ValueError("matrix contains negative entries")
    return X


def load_matrix_market(path: str | PathLike, nonnegative: bool = False):
    """Read a ``real general`` Matrix Market file.

    ``coordinate`` files come back as CSC with explicit zeros removed,
    ``array`` files as dense ndarrays. With ``nonnegative=True`` any negative
    entry raises :class:`MatrixMarketError`.
    """
    try:
        with open(path, "rb") as fh:
            head = fh.read(64)
        if not head.strip():
            raise MatrixMarketError(f"{path}: empty file")
        data = scipy.io.mmread(path)
    except MatrixMarketError:
        raise
    except (ValueError, IndexError, TypeError) as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    if sp.issparse(data):
        data = sp.csc_matrix(data)
    try:
        return as_matrix(data, nonnegative=nonnegative)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc


def save_matrix_market(path: str | PathLike, X, comment: str = "") -> None:
    """Write ``X`` as ``array`` (dense) or ``coordinate`` (sparse) format."""
    if sp.issparse(X):
        X = sp.coo_matrix(X)
    else:
        X = np.asarray(X, dtype=np.float64)
    scipy.io.mmwrite(path, X, comment=comment, field="real", symmetry="general")


def column_norms(X, ord: int = 2) -> np.ndarray:
    """Vector of column norms (``ord`` 1 or 2) for dense or sparse ``X``."""
    if sp.issparse(X):
        if ord == 1:
            return np.asarray(abs(X).sum(axis=0)).ravel()
        return np.sqrt(np.asarray(X.multiply(X).sum(axis=0)).ravel())
    return np.linalg.norm(X, ord=ord, axis=0)


def squared_frobenius(X) -> float:
    if sp.issparse(X):
        return float(X.data @ X.data)
    return float(np.vdot(X, X))


def normalize_columns_l1(X):
    """Scale every column to unit l1 norm, dropping zero columns.

    Returns the normalized matrix and a :class:`ColumnSelection` that maps
    the remaining columns back to the input. Columns with a tiny but nonzero
    norm are normalized as-is, which amplifies whatever noise they carry.
    """
    X = as_matrix(X)
    if (X.data if sp.issparse(X) else X).min(initial=0.0) < 0:
        raise ValueError("l1 normalization requires a nonnegative matrix")
    norms = column_norms(X, ord=1)
    kept = np.flatnonzero(norms > 0)
    if kept.size == 0:
        raise ValueError("all columns are zero; nothing left after normalization")
    scale = 1.0 / norms[kept]
    if sp.issparse(X):
        Xn = sp.csc_matrix(X[:, kept] @ sp.diags(scale))
    else:
        Xn = X[:, kept] * scale
    return Xn, ColumnSelection(kept=kept, scale=scale, n_original=X.shape[1])


def _check_dims(X, W, H) -> None:
    p, n = X.shape
    if W.ndim != 2 or H.ndim != 2:
        raise ValueError("W and H must be 2-d")
    if W.shape[0] != p or H.shape[1] != n or W.shape[1] != H.shape[0]:
        raise ValueError(
            f"dimension mismatch: X {X.shape}, W {W.shape}, H {H.shape}"
        )


def inner_with_product(X, W, H) -> float:
    """<X, WH> without forming WH."""
    return float(np.vdot(X.T @ W, H.T)) if sp.issparse(X) else float(np.vdot(W.T @ X, H))


def frobenius_error(X, W, H) -> float:
    """``||X - WH||_F``.

    For sparse ``X`` the expansion ``||X||^2 - 2<X, WH> + <W'W, HH'>`` is
    used so the dense residual is never formed; the result is clamped at 0
    before the square root.
    """
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    _check_dims(X, W, H)
    if sp.issparse(X):
        sq = (
            squared_frobenius(X)
            - 2.0 * inner_with_product(X, W, H)
            + float(np.vdot(W.T @ W, H @ H.T))
        )
        return float(np.sqrt(max(sq, 0.0)))
    return float(np.linalg.norm(X - W @ H))


def relative_error(X, W, H) -> float:
    return frobenius_error(X, W, H) / np.sqrt(squared_frobenius(X))
