"""Small dense linear-algebra helpers used throughout the package."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientDataError, InvalidInputError, InvalidParameterError
from .synth import Dataset, as_dataset

__all__ = ["PseudoInverse", "sample_covariance", "pseudo_inverse", "symmetrize_dataset"]

DEFAULT_REL_CUTOFF = 1e-10


def sample_covariance(X):
    """Plug-in covariance ``(1/n) sum (x_i - mean)(x_i - mean)^T``.

    Note the divisor is ``n``, not ``n - 1``.
    """
    data = as_dataset(X)
    if data.n < 2:
        raise InsufficientDataError("covariance needs at least two observations")
    return np.array(data.cov)


@dataclass(frozen=True)
class PseudoInverse:
    """Moore-Penrose inverse together with the numerical rank used."""

    matrix: np.ndarray
    rank: int
    cutoff: float


def pseudo_inverse(M, rel_cutoff=DEFAULT_REL_CUTOFF):
    """SVD pseudo-inverse zeroing singular values below ``rel_cutoff * s_max``."""
    if not 0.0 < rel_cutoff < 1.0:
        raise InvalidParameterError("rel_cutoff must lie in (0, 1)")
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError("pseudo_inverse expects a 2-D matrix")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0.0:
        return PseudoInverse(np.zeros(M.T.shape), 0, rel_cutoff)
    keep = s > rel_cutoff * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    out = (Vt.T * inv_s) @ U.T
    if M.shape[0] == M.shape[1] and np.array_equal(M, M.T):
        out = 0.5 * (out + out.T)
    return PseudoInverse(out, int(keep.sum()), rel_cutoff)


def symmetrize_dataset(X):
    """Pairwise differences ``y_i = x_i - x_{floor(n/2) + i}``.

    The result has a symmetric distribution with the same mixing matrix
    (sources become symmetrized, noise covariance doubles).
    """
    data = as_dataset(X)
    if data.n < 2:
        raise InsufficientDataError("symmetrization needs at least two observations")
    half = data.n // 2
    return Dataset(data.X[:half] - data.X[half : 2 * half])
