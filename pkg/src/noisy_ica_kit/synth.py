"""Ground-truth mixing models and synthetic noisy-ICA datasets.

Observations follow ``x = B z + g`` with independent, standardized sources
``z`` and Gaussian noise ``g ~ N(0, Sigma)``.  All randomness flows through
explicit :class:`numpy.random.Generator` handles (PCG64 by default).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, InvalidInputError, InvalidParameterError

__all__ = [
    "SourceSpec",
    "MixingModel",
    "Dataset",
    "ZERO_KURTOSIS_P",
    "make_mixing_matrix",
    "make_noise_cov",
    "make_model",
    "generate_dataset",
    "scaled_kurtosis_bernoulli",
    "bernoulli_p_for_kurtosis",
    "nine_source_plan",
]

#: Bernoulli parameter with vanishing excess kurtosis.
ZERO_KURTOSIS_P = 0.5 - 1.0 / math.sqrt(12.0)

_KINDS = ("bernoulli", "uniform", "exponential", "laplace", "student_t", "gaussian")


def scaled_kurtosis_bernoulli(p):
    """Excess kurtosis of a Bernoulli(p) variable, ``(1 - 6p(1-p)) / (p(1-p))``."""
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p!r}")
    q = p * (1.0 - p)
    return (1.0 - 6.0 * q) / q


def bernoulli_p_for_kurtosis(kappa4):
    """The ``p <= 1/2`` whose Bernoulli(p) excess kurtosis equals ``kappa4``.

    Inverts :func:`scaled_kurtosis_bernoulli`; admissible values are
    ``kappa4 >= -2`` (``p = 1/2``).
    """
    if not kappa4 >= -2.0:
        raise InvalidParameterError(f"Bernoulli excess kurtosis is at least -2, got {kappa4!r}")
    q = 1.0 / (kappa4 + 6.0)
    return 0.5 * (1.0 - math.sqrt(max(0.0, 1.0 - 4.0 * q)))


@dataclass(frozen=True)
class SourceSpec:
    """Distribution of one independent source.

    Draws are affinely standardized with the *population* mean and standard
    deviation, so every source has mean 0 and variance 1.

    Parameters
    ----------
    kind : str
        One of ``bernoulli``, ``uniform``, ``exponential``, ``laplace``,
        ``student_t`` or ``gaussian``.
    params : dict
        ``p`` for bernoulli, ``rate`` for exponential, ``scale`` for laplace,
        ``dof`` for student_t.  Missing entries take their defaults.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown source kind {self.kind!r}")
        params = dict(self.params)
        if self.kind == "bernoulli":
            p = float(params.get("p", 0.5))
            if not 0.0 < p < 1.0:
                raise InvalidParameterError(f"bernoulli p must lie in (0, 1), got {p}")
            params["p"] = p
        elif self.kind == "exponential":
            rate = float(params.get("rate", 1.0))
            if rate <= 0:
                raise InvalidParameterError("exponential rate must be positive")
            params["rate"] = rate
        elif self.kind == "laplace":
            scale = float(params.get("scale", 1.0))
            if scale <= 0:
                raise InvalidParameterError("laplace scale must be positive")
            params["scale"] = scale
        elif self.kind == "student_t":
            dof = float(params.get("dof", 5.0))
            if dof <= 2:
                raise InvalidParameterError("student_t needs dof > 2 for unit variance")
            params["dof"] = dof
        object.__setattr__(self, "params", params)

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", {"p": p})

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def exponential(cls, rate=5.0):
        return cls("exponential", {"rate": rate})

    @classmethod
    def laplace(cls, scale=1.0):
        return cls("laplace", {"scale": scale})

    @classmethod
    def student_t(cls, dof):
        return cls("student_t", {"dof": dof})

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    def sample(self, n, rng):
        """Draw ``n`` standardized samples."""
        kind, prm = self.kind, self.params
        if kind == "bernoulli":
            p = prm["p"]
            raw = (rng.random(n) < p).astype(float)
            return (raw - p) / math.sqrt(p * (1.0 - p))
        if kind == "uniform":
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), n)
        if kind == "exponential":
            # mean and sd are both 1/rate, so the rate drops out after standardizing
            rate = prm["rate"]
            return rng.exponential(1.0 / rate, n) * rate - 1.0
        if kind == "laplace":
            scale = prm["scale"]
            return rng.laplace(0.0, scale, n) / (math.sqrt(2.0) * scale)
        if kind == "student_t":
            dof = prm["dof"]
            return rng.standard_t(dof, n) / math.sqrt(dof / (dof - 2.0))
        return rng.standard_normal(n)

    def excess_kurtosis(self):
        """Analytic excess kurtosis (``inf`` when the fourth moment diverges)."""
        kind = self.kind
        if kind == "bernoulli":
            return scaled_kurtosis_bernoulli(self.params["p"])
        if kind == "uniform":
            return -1.2
        if kind == "exponential":
            return 6.0
        if kind == "laplace":
            return 3.0
        if kind == "student_t":
            dof = self.params["dof"]
            return 6.0 / (dof - 4.0) if dof > 4 else math.inf
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["kind"], dict(d.get("params", {})))
        except KeyError as exc:
            raise ConfigError(f"source entry missing key {exc}") from None


def _haar_orthogonal(k, rng):
    # QR of a Gaussian matrix with the signs of diag(R) folded into Q.
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def make_mixing_matrix(k, rng, singular_values=None):
    """Random mixing matrix ``U diag(lam) V^T`` with ``lam ~ Uniform[1, 3]``.

    ``singular_values`` overrides the random spectrum (used by tests).
    """
    if k < 2:
        raise InvalidParameterError(f"mixing dimension must be >= 2, got {k}")
    u = _haar_orthogonal(k, rng)
    v = _haar_orthogonal(k, rng)
    if singular_values is None:
        lam = rng.uniform(1.0, 3.0, k)
    else:
        lam = np.asarray(singular_values, dtype=float)
        if lam.shape != (k,):
            raise InvalidParameterError("singular_values must have length k")
    return (u * lam) @ v.T


def make_noise_cov(k, rho, rng):
    """Wishart-type noise covariance ``(rho / k) R R^T`` with Gaussian ``R``."""
    if rho < 0:
        raise InvalidParameterError(f"noise power must be nonnegative, got {rho}")
    r = rng.standard_normal((k, k))
    cov = (rho / k) * (r @ r.T)
    return 0.5 * (cov + cov.T)


@dataclass
class MixingModel:
    """Ground truth of a noisy ICA experiment."""

    B: np.ndarray
    Sigma: np.ndarray
    rho: float
    sources: list
    seed: int | None = None

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        self.Sigma = np.asarray(self.Sigma, dtype=float)
        k = self.B.shape[0]
        if self.B.shape != (k, k) or self.Sigma.shape != (k, k):
            raise InvalidParameterError("B and Sigma must be square and of equal size")
        if len(self.sources) != k:
            raise InvalidParameterError(f"need {k} sources, got {len(self.sources)}")
        if self.rho < 0:
            raise InvalidParameterError("noise power must be nonnegative")

    @property
    def k(self):
        return self.B.shape[0]

    @property
    def population_cov(self):
        """``B B^T + Sigma`` (sources have unit variance)."""
        return self.B @ self.B.T + self.Sigma

    def to_config(self):
        return {
            "k": self.k,
            "rho": self.rho,
            "seed": self.seed,
            "sources": [s.to_dict() for s in self.sources],
        }

    @classmethod
    def from_config(cls, cfg):
        """Rebuild a model from ``{k, rho, seed, sources}``.

        ``B`` and ``Sigma`` are regenerated from ``seed``; a config may also pin
        them explicitly with ``B`` / ``Sigma`` entries.
        """
        try:
            k = int(cfg["k"])
            rho = float(cfg.get("rho", 0.0))
            seed = cfg.get("seed", 0)
            sources = [SourceSpec.from_dict(s) for s in cfg["sources"]]
        except KeyError as exc:
            raise ConfigError(f"model config missing key {exc}") from None
        if len(sources) == 1 and k > 1:
            sources = sources * k
        model = make_model(k, rho, sources, seed)
        if "B" in cfg:
            model.B = np.asarray(cfg["B"], dtype=float)
        if "Sigma" in cfg:
            model.Sigma = np.asarray(cfg["Sigma"], dtype=float)
        return model

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_config(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_config(json.load(fh))


def make_model(k, rho, sources, seed):
    """Draw ``B`` then ``Sigma`` from ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    B = make_mixing_matrix(k, rng)
    Sigma = make_noise_cov(k, rho, rng)
    return MixingModel(B=B, Sigma=Sigma, rho=rho, sources=list(sources), seed=seed)


def nine_source_plan():
    """3 uniform, 3 exponential(5) and 3 zero-kurtosis Bernoulli sources."""
    return (
        [SourceSpec.uniform()] * 3
        + [SourceSpec.exponential(5.0)] * 3
        + [SourceSpec.bernoulli(ZERO_KURTOSIS_P)] * 3
    )


def _mean_cov(X):
    n = X.shape[0]
    mean = X.mean(axis=0)
    if n < 2:
        return mean, np.zeros((X.shape[1], X.shape[1]))
    Xc = X - mean
    cov = Xc.T @ Xc / n
    return mean, 0.5 * (cov + cov.T)


class Dataset:
    """Immutable ``n x k`` sample matrix with cached mean and covariance.

    The covariance uses divisor ``n``.  A single-row dataset has a zero
    covariance.
    """

    def __init__(self, X):
        X = np.array(X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidInputError("data must be a non-empty 2-D array")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("data contains non-finite values")
        X.setflags(write=False)
        self._X = X
        mean, cov = _mean_cov(X)
        mean.setflags(write=False)
        cov.setflags(write=False)
        self._mean = mean
        self._cov = cov
        self._centered = None

    @property
    def X(self):
        return self._X

    @property
    def n(self):
        return self._X.shape[0]

    @property
    def k(self):
        return self._X.shape[1]

    @property
    def mean(self):
        return self._mean

    @property
    def cov(self):
        return self._cov

    @property
    def centered(self):
        if self._centered is None:
            c = self._X - self._mean
            c.setflags(write=False)
            self._centered = c
        return self._centered

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        # lets numpy and scikit-learn validation accept a Dataset directly
        return self._X if dtype is None else self._X.astype(dtype)

    def __repr__(self):
        return f"Dataset(n={self.n}, k={self.k})"

    def to_csv(self, path=None):
        """Write rows with header ``x1..xk`` using 17 significant digits."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(self.k)])
        for row in self._X:
            writer.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
        rows = list(csv.reader(lines))
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        return cls(np.array(rows, dtype=float))


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def as_dataset(X):
    """Wrap an array as a :class:`Dataset` (datasets pass through)."""
    return X if isinstance(X, Dataset) else Dataset(X)


def sample_sources(sources: Sequence[SourceSpec], n, rng):
    """``n x k`` matrix of standardized source draws, one column per spec."""
    return np.column_stack([s.sample(n, rng) for s in sources])


def generate_dataset(model, n, rng):
    """Draw ``n`` observations ``x = B z + g`` from ``model``."""
    if n < 1:
        raise InvalidParameterError(f"sample count must be >= 1, got {n}")
    k = model.k
    Z = sample_sources(model.sources, n, rng)
    X = Z @ model.B.T
    if model.rho > 0:
        w, Q = np.linalg.eigh(model.Sigma)
        root = Q * np.sqrt(np.clip(w, 0.0, None))
        X = X + rng.standard_normal((n, k)) @ root.T
    return Dataset(X)
