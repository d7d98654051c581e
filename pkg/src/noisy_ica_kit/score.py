"""Characteristic-function independence scores for a demixing matrix ``F``.

For a probe ``t`` the corrected score is::

    | E exp(i t^T F x) exp(-t^T diag(F S F^T) t / 2)
      - prod_j E exp(i t_j (F x)_j) exp(-t^T F S F^T t / 2) |

The Gaussian factors cancel the contribution of additive Gaussian noise,
so the score vanishes at any ``F = D P B^{-1}`` even for noisy data.
Dropping those factors gives the uncorrected score.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import EstimationError, InvalidInputError, InvalidParameterError
from .synth import as_dataset

__all__ = [
    "ScoreReport",
    "corrected_score",
    "uncorrected_score",
    "score_probes",
    "draw_probes",
    "mc_score",
    "mc_score_pair",
    "sequential_score",
    "standardize_demixer",
]

DEFAULT_PROBES = 100
# cap on probes x samples x k elements materialized at once
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class ScoreReport:
    """Monte-Carlo summary of an independence score."""

    mean: float
    stddev: float
    num_probes: int
    corrected: bool
    probe_seed: int
    failed: int = 0

    def to_json(self):
        d = asdict(self)
        d.pop("failed")
        return json.dumps(d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _projected(F, X):
    data = as_dataset(X)
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[1] != data.k:
        raise InvalidInputError(f"F must have {data.k} columns")
    if not np.all(np.isfinite(F)):
        raise InvalidInputError("F has non-finite entries")
    Y = data.centered @ F.T
    SF = F @ data.cov @ F.T
    return Y, 0.5 * (SF + SF.T)


def score_probes(T, F, X, corrected=True):
    """Score for every probe row of ``T`` (shape ``m x k``)."""
    Y, SF = _projected(F, X)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    return _score_block(T, Y, SF)[0 if corrected else 1]


def _score_block(T, Y, SF):
    """Corrected and uncorrected scores per probe, sharing one pass."""
    n, k = Y.shape
    if T.shape[1] != k:
        raise InvalidInputError(f"probes must have length {k}")
    out = np.empty(T.shape[0])
    raw = np.empty(T.shape[0])
    step = max(1, _BLOCK_ELEMENTS // max(1, n * k))
    diag = np.diag(SF)
    off = SF - np.diag(diag)
    for lo in range(0, T.shape[0], step):
        Tb = T[lo : lo + step]
        # joint characteristic function of the projection
        A = Y @ Tb.T
        joint = np.cos(A).mean(axis=0) + 1j * np.sin(A).mean(axis=0)
        # product of marginal characteristic functions
        P = Y[None, :, :] * Tb[:, None, :]
        marg = np.cos(P).mean(axis=1) + 1j * np.sin(P).mean(axis=1)
        product = np.prod(marg, axis=1)
        raw[lo : lo + step] = np.abs(joint - product)
        q_diag = (Tb * Tb) @ diag
        q_full = q_diag + np.einsum("mi,ij,mj->m", Tb, off, Tb)
        out[lo : lo + step] = np.abs(joint * np.exp(-0.5 * q_diag) - product * np.exp(-0.5 * q_full))
    return out, raw


def standardize_demixer(F, X):
    """Rescale the rows of ``F`` so every recovered component has unit variance.

    The score is not scale invariant away from the true demixer: rows with
    a large norm push every characteristic function towards zero and make
    a poor ``F`` look independent.  Comparing candidates on a common scale
    removes that artefact.  Rows with zero projected variance are left as
    they are.
    """
    data = as_dataset(X)
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[1] != data.k:
        raise InvalidInputError(f"F must have {data.k} columns")
    sd = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", F, data.cov, F), 0.0))
    sd[sd == 0] = 1.0
    return F / sd[:, None]


def corrected_score(t, F, X):
    """Noise-corrected independence score at a single probe ``t``."""
    return float(score_probes(np.reshape(t, (1, -1)), F, X, corrected=True)[0])


def uncorrected_score(t, F, X):
    """Independence score without the Gaussian correction factors."""
    return float(score_probes(np.reshape(t, (1, -1)), F, X, corrected=False)[0])


def draw_probes(M, k, probe_seed):
    """``M`` Gaussian probes ``t ~ N(0, I_k)`` determined by ``probe_seed``."""
    return np.random.default_rng(probe_seed).standard_normal((M, k))


def _resolve_probe_seed(rng, probe_seed):
    if probe_seed is not None:
        return int(probe_seed)
    if rng is None:
        rng = np.random.default_rng()
    return int(rng.integers(0, 2**63 - 1))


def _report(values, corrected, probe_seed):
    M = values.size
    ok = np.isfinite(values)
    failed = int(M - ok.sum())
    if failed * 2 > M:
        raise EstimationError(f"{failed} of {M} probes produced non-finite scores")
    values = values[ok]
    return ScoreReport(
        mean=float(values.mean()),
        stddev=float(values.std()),
        num_probes=int(values.size),
        corrected=bool(corrected),
        probe_seed=int(probe_seed),
        failed=failed,
    )


def mc_score_pair(F, X, M=DEFAULT_PROBES, rng=None, probe_seed=None, standardize=False):
    """Corrected and uncorrected :func:`mc_score` reports from one pass.

    Both reports use the same probes, so they agree exactly with two
    separate :func:`mc_score` calls at the same ``probe_seed``.
    """
    if M < 1:
        raise InvalidParameterError("M must be >= 1")
    data = as_dataset(X)
    probe_seed = _resolve_probe_seed(rng, probe_seed)
    if standardize:
        F = standardize_demixer(F, data)
    Y, SF = _projected(F, data)
    corr, raw = _score_block(draw_probes(M, data.k, probe_seed), Y, SF)
    return _report(corr, True, probe_seed), _report(raw, False, probe_seed)


def mc_score(F, X, M=DEFAULT_PROBES, rng=None, corrected=True, probe_seed=None, standardize=False):
    """Average the score over ``M`` probes ``t ~ N(0, I_k)``.

    With ``standardize=True`` the rows of ``F`` are first passed through
    :func:`standardize_demixer`, which is how candidates are compared.

    The probe set is a pure function of ``probe_seed``; when it is not given
    it is drawn from ``rng``.  Non-finite probe values are dropped and
    counted; more than half failing raises :class:`EstimationError`.
    """
    if M < 1:
        raise InvalidParameterError("M must be >= 1")
    data = as_dataset(X)
    probe_seed = _resolve_probe_seed(rng, probe_seed)
    if standardize:
        F = standardize_demixer(F, data)
    values = score_probes(draw_probes(M, data.k, probe_seed), F, data, corrected=corrected)
    return _report(values, corrected, probe_seed)


def sequential_score(X, U, V, M=DEFAULT_PROBES, rng=None):
    """Independence score after extracting ``l`` columns.

    ``U`` (``k x l``) and ``V`` (``l x k``) are running estimates of the
    leading columns of ``B`` and rows of ``B^{-1}``.  The data are split into
    the ``l`` rank-one projections ``U[:, a] V[a, :] x`` plus, when ``l < k``,
    the residual ``(I - U V) x``.  Each piece is reduced to a scalar with a
    shared random unit vector and the pieces are tested for mutual
    independence with the corrected score.

    Returns
    -------
    (mean, stddev) over the ``M`` random directions.
    """
    data = as_dataset(X)
    k = data.k
    U = np.asarray(U, dtype=float).reshape(k, -1)
    ell = U.shape[1]
    V = np.asarray(V, dtype=float).reshape(ell, k)
    if not 1 <= ell <= k:
        raise InvalidInputError(f"number of extracted columns must lie in [1, {k}]")
    if rng is None:
        rng = np.random.default_rng()
    Xc = data.centered
    pieces = [np.outer(U[:, a], V[a]) for a in range(ell)]
    if ell < k:
        pieces.append(np.eye(k) - U @ V)
    values = np.empty(M)
    for m in range(M):
        t = rng.standard_normal(k)
        t /= np.linalg.norm(t)
        # W[:, a] = Y_a t with Y_a = X P_a^T
        W = np.column_stack([Xc @ (P.T @ t) for P in pieces])
        St = W.T @ W / W.shape[0]
        beta = np.trace(St)
        gamma = St.sum()
        joint = np.mean(np.exp(1j * W.sum(axis=1))) * np.exp(-0.5 * beta)
        product = np.prod(np.mean(np.exp(1j * W), axis=0)) * np.exp(-0.5 * gamma)
        values[m] = abs(joint - product)
    return float(values.mean()), float(values.std())
