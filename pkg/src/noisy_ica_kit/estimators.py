"""scikit-learn style estimators wrapping extraction and Meta selection.

>>> from noisy_ica_kit import NoisyICA
>>> est = NoisyICA(contrast="cgf", random_state=0).fit(X)    # doctest: +SKIP
>>> S = est.transform(X)                                       # doctest: +SKIP
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .contrast import ContrastKind, QuasiOrthMatrix
from .exceptions import InvalidParameterError
from .extract import (
    DEFAULT_MAX_ITER,
    DEFAULT_RESTARTS,
    DEFAULT_TOL,
    best_of_restarts,
    default_quasi_orth,
    extract_all,
)
from .meta import BUILTIN_NAMES, matrix_candidate, resolve_registry, run_meta, uncorrected_meta
from .score import DEFAULT_PROBES, mc_score
from .synth import Dataset

__all__ = ["NoisyICA", "MetaICA"]


def _as_generator(random_state):
    if random_state is None or isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    if isinstance(random_state, np.random.Generator):
        return random_state
    raise InvalidParameterError(
        f"random_state must be None, an int or a numpy Generator, got {type(random_state).__name__}"
    )


class _DemixingTransformer(TransformerMixin, BaseEstimator):
    """Shared ``transform``/``inverse_transform`` for fitted demixers."""

    def _validate(self, X, reset):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input"
            )
        return X

    def _store(self, demix, X):
        self.demix_result_ = demix
        self.mixing_ = demix.B_hat
        self.components_ = demix.B_hat_inv
        self.mean_ = X.mean(axis=0)

    def transform(self, X):
        """Recovered sources ``B_hat^{-1} (x - mean)``, one row per sample."""
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, S):
        check_is_fitted(self, "mixing_")
        S = check_array(S, dtype=np.float64)
        return S @ self.mixing_.T + self.mean_

    def score_independence(self, X, n_probes=DEFAULT_PROBES, corrected=True, probe_seed=0):
        """Mean Monte-Carlo independence score of the fitted demixer on ``X``.

        Lower is better; zero for a perfect demixer on population data.
        """
        check_is_fitted(self, "components_")
        X = self._validate(X, reset=False)
        report = mc_score(self.components_, Dataset(X), n_probes, corrected=corrected, probe_seed=probe_seed)
        return report.mean


class NoisyICA(_DemixingTransformer):
    """Noise-robust ICA by pseudo-Euclidean power iteration.

    Parameters
    ----------
    contrast : {'chf', 'cgf', 'kurtosis'} or ContrastKind
        Contrast maximized along each direction.
    n_restarts : int
        Random initializations per column; the largest ``|contrast|`` wins.
    n_init : int
        Full extractions to run; the one with the smallest corrected
        independence score is kept.
    tol, max_iter : float, int
        Power iteration stopping rule.
    scale : float, None or 'auto'
        Standard deviation the power-update argument is rescaled to.
    n_c_probes : int
        Random probes averaged into the quasi-orthogonalization matrix.
    quasi_orth : array_like, optional
        Externally supplied ``C = B D B^T`` (for instance ``B0 B0^T`` from a
        pilot estimate ``B0``); overrides ``n_c_probes``.
    n_score_probes : int
        Probes for the independence score used by ``n_init > 1``.
    random_state : None, int or numpy.random.Generator

    Attributes
    ----------
    mixing_ : ndarray of shape (k, k)
        Estimated mixing matrix with unit-norm columns.
    components_ : ndarray of shape (k, k)
        Demixing matrix, the inverse of ``mixing_``.
    mean_ : ndarray of shape (k,)
    n_iter_ : list of int
        Power iterations used for each column.
    converged_ : bool
    demix_result_ : DemixResult
    """

    def __init__(
        self,
        contrast="chf",
        n_restarts=DEFAULT_RESTARTS,
        n_init=1,
        tol=DEFAULT_TOL,
        max_iter=DEFAULT_MAX_ITER,
        scale="auto",
        n_c_probes=10,
        quasi_orth=None,
        n_score_probes=DEFAULT_PROBES,
        random_state=None,
    ):
        self.contrast = contrast
        self.n_restarts = n_restarts
        self.n_init = n_init
        self.tol = tol
        self.max_iter = max_iter
        self.scale = scale
        self.n_c_probes = n_c_probes
        self.quasi_orth = quasi_orth
        self.n_score_probes = n_score_probes
        self.random_state = random_state

    def _check_params(self):
        for name in ("n_restarts", "n_init", "n_c_probes", "n_score_probes"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Integral) or value < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.max_iter, numbers.Integral) or self.max_iter < 0:
            raise InvalidParameterError("max_iter must be a nonnegative integer")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")
        kind = self.contrast if isinstance(self.contrast, ContrastKind) else ContrastKind(self.contrast)
        return kind

    def fit(self, X, y=None):
        """Estimate the mixing matrix from observations ``X`` (n x k)."""
        kind = self._check_params()
        X = self._validate(X, reset=True)
        data = Dataset(X)
        rng = _as_generator(self.random_state)
        if self.quasi_orth is not None:
            C = np.asarray(self.quasi_orth, dtype=float)
            if C.shape != (data.k, data.k):
                raise ValueError(f"quasi_orth must be {data.k}x{data.k}")
            C = QuasiOrthMatrix.from_matrix(C, kind)
        else:
            C = default_quasi_orth(kind, data, rng, self.n_c_probes)
        opts = dict(restarts=self.n_restarts, tol=self.tol, max_iter=self.max_iter, scale=self.scale)
        if self.n_init == 1:
            demix = extract_all(kind, data, C, rng, **opts)
        else:
            probe_seed = int(rng.integers(0, 2**63 - 1))

            def scorer(F, d):
                return mc_score(F, d, self.n_score_probes, probe_seed=probe_seed, standardize=True)

            demix = best_of_restarts(kind, data, C, self.n_init, rng, scorer, **opts)
        self._store(demix, X)
        self.n_iter_ = [c.iterations for c in demix.per_column]
        self.converged_ = demix.converged
        return self


class MetaICA(_DemixingTransformer):
    """Pick the best of several ICA algorithms with the independence score.

    Parameters
    ----------
    candidates : sequence of str
        Built-in candidate names (``PEGI-k4``, ``CHF``, ``CGF``).
    external : dict, optional
        Extra candidates as ``{name: demixing matrix}``; each matrix is an
        estimate of ``B^{-1}`` produced elsewhere.
    n_probes : int
        Gaussian probes in the shared Monte-Carlo score.
    corrected : bool
        Use the noise-corrected score (``False`` gives the uncorrected one).
    n_restarts : int
        Per-column restarts for the built-in candidates.
    random_state : None, int or numpy.random.Generator

    Attributes
    ----------
    winner_ : str
    meta_result_ : MetaResult
    scores_ : dict
        Mean score per candidate (``inf`` if it failed).
    mixing_, components_, mean_ : ndarray
        Taken from the winning candidate.
    """

    def __init__(
        self,
        candidates=BUILTIN_NAMES,
        external=None,
        n_probes=DEFAULT_PROBES,
        corrected=True,
        n_restarts=DEFAULT_RESTARTS,
        random_state=None,
    ):
        self.candidates = candidates
        self.external = external
        self.n_probes = n_probes
        self.corrected = corrected
        self.n_restarts = n_restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        if not isinstance(self.n_probes, numbers.Integral) or self.n_probes < 1:
            raise InvalidParameterError("n_probes must be a positive integer")
        X = self._validate(X, reset=True)
        data = Dataset(X)
        registry = resolve_registry(tuple(self.candidates), restarts=self.n_restarts)
        for name, F in (self.external or {}).items():
            registry.append(matrix_candidate(name, F))
        runner = run_meta if self.corrected else uncorrected_meta
        result = runner(registry, data, self.n_probes, _as_generator(self.random_state))
        self.meta_result_ = result
        self.winner_ = result.winner
        self.scores_ = {c.name: c.score_mean for c in result.per_candidate}
        self._store(result.best.demix, X)
        return self
