"""Accuracy of an estimated mixing matrix."""

import numpy as np

from .exceptions import RankError

__all__ = ["amari_error", "amari_from_product", "normalize_rows"]

_RANK_TOL = 1e-12


def normalize_rows(M):
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise RankError("matrix has an all-zero row")
    return M / norms


def _checked_inverse(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise RankError(f"{name} must be square")
    s = np.linalg.svd(M, compute_uv=False)
    if not np.all(np.isfinite(s)) or s[-1] <= _RANK_TOL * s[0]:
        raise RankError(f"{name} is rank deficient")
    return np.linalg.inv(M)


def amari_from_product(W):
    """Amari index of a square matrix ``W``.

    Zero exactly when ``W`` is a scaled permutation matrix.
    """
    A = np.abs(np.asarray(W, dtype=float))
    k = A.shape[0]
    row_max = A.max(axis=1)
    col_max = A.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise RankError("W has an all-zero row or column")
    rows = (A.sum(axis=1) / row_max).sum()
    cols = (A.sum(axis=0) / col_max).sum()
    return float((rows + cols) / k - 2.0)


def amari_error(B_hat, B):
    """Amari error between an estimated and a true mixing matrix.

    Rows of both demixing matrices ``B_hat^{-1}`` and ``B^{-1}`` are scaled
    to unit Euclidean norm, then ``W = B_hat^{-1} B`` is scored.  The value
    is invariant to permutation, sign and scale of the estimated sources.
    """
    A_hat = normalize_rows(_checked_inverse(B_hat, "B_hat"))
    A = normalize_rows(_checked_inverse(B, "B"))
    W = A_hat @ np.linalg.inv(A)
    return amari_from_product(W)
