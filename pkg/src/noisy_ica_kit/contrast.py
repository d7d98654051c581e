"""Contrast functions of a projection ``u^T x`` with analytic derivatives.

Three contrasts are provided, all evaluated on centered data with the
plug-in covariance ``S`` of the dataset:

``kurtosis``
    fourth cumulant ``E(u^T x)^4 - 3 (u^T S u)^2``
``chf``
    ``log |E exp(i u^T x)|^2 + u^T S u``
``cgf``
    ``log E exp(u^T x) - u^T S u / 2``

Each vanishes for Gaussian data and is additive over independent
components, so its Hessian at any point has the form ``B D B^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ContrastOverflowError,
    DegenerateDirectionError,
    EstimationError,
    InvalidInputError,
    InvalidParameterError,
    NoisyICAError,
)
from .linalg import DEFAULT_REL_CUTOFF, PseudoInverse, pseudo_inverse
from .synth import as_dataset

__all__ = [
    "ContrastKind",
    "QuasiOrthMatrix",
    "as_kind",
    "eval_contrast",
    "grad_contrast",
    "hessian_contrast",
    "contrast_derivatives",
    "quasi_orth_matrix",
    "random_unit_vectors",
]

VARIANTS = ("kurtosis", "chf", "cgf")


@dataclass(frozen=True)
class ContrastKind:
    """Contrast variant plus its numerical guards.

    Parameters
    ----------
    variant : {'kurtosis', 'chf', 'cgf'}
    chf_modulus_floor : float
        Smallest admissible ``|E exp(i u^T x)|^2`` before the logarithm is
        considered singular.
    cgf_clip : float
        Shifted exponents ``u^T x_i - max_j u^T x_j`` are floored at
        ``-cgf_clip`` in the log-sum-exp.
    """

    variant: str = "chf"
    chf_modulus_floor: float = 1e-12
    cgf_clip: float = 50.0

    def __post_init__(self):
        v = str(self.variant).lower()
        if v in ("kurt", "kappa4", "pegi", "pegi-k4", "pegi-κ4"):
            v = "kurtosis"
        if v not in VARIANTS:
            raise InvalidParameterError(f"unknown contrast {self.variant!r}")
        object.__setattr__(self, "variant", v)
        if not self.chf_modulus_floor > 0:
            raise InvalidParameterError("chf_modulus_floor must be positive")
        if not self.cgf_clip > 0:
            raise InvalidParameterError("cgf_clip must be positive")

    def __str__(self):
        return self.variant


def as_kind(kind):
    if isinstance(kind, ContrastKind):
        return kind
    return ContrastKind(kind)


def _prepare(u, X):
    data = as_dataset(X)
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != data.k:
        raise InvalidInputError(f"direction has length {u.shape[0]}, data has k={data.k}")
    if not np.all(np.isfinite(u)):
        raise InvalidInputError("direction has non-finite entries")
    return u, data.centered, data.cov


def contrast_derivatives(kind, u, X, order=2):
    """Value, gradient and (if ``order == 2``) Hessian in one pass.

    Returns a tuple ``(value, grad, hess)``; ``hess`` is ``None`` for
    ``order == 1`` and both derivatives are ``None`` for ``order == 0``.
    """
    kind = as_kind(kind)
    u, Xc, S = _prepare(u, X)
    with np.errstate(over="ignore", invalid="ignore"):
        value, grad, hess = _derivatives(kind, u, Xc, S, order)
    if not np.isfinite(value):
        raise ContrastOverflowError(f"{kind.variant} contrast is not finite along this direction")
    if hess is not None:
        hess = 0.5 * (hess + hess.T)
    return value, grad, hess


def _derivatives(kind, u, Xc, S, order):
    # overflow shows up as a non-finite value, checked by the caller
    n = Xc.shape[0]
    y = Xc @ u
    Su = S @ u
    quad = float(u @ Su)
    grad = hess = None

    if kind.variant == "kurtosis":
        y2 = y * y
        value = float(np.mean(y2 * y2) - 3.0 * quad * quad)
        if order >= 1:
            grad = 4.0 * (Xc.T @ (y2 * y)) / n - 12.0 * quad * Su
        if order >= 2:
            hess = 12.0 * (Xc.T * y2) @ Xc / n - 24.0 * np.outer(Su, Su) - 12.0 * quad * S

    elif kind.variant == "chf":
        cy, sy = np.cos(y), np.sin(y)
        c, s = cy.mean(), sy.mean()
        mod = c * c + s * s
        if mod < kind.chf_modulus_floor:
            raise DegenerateDirectionError(
                f"empirical characteristic function modulus {mod:.3g} below floor"
            )
        value = float(np.log(mod) + quad)
        if order >= 1:
            dc = -(Xc.T @ sy) / n
            ds = (Xc.T @ cy) / n
            dmod = 2.0 * (c * dc + s * ds)
            grad = dmod / mod + 2.0 * Su
        if order >= 2:
            # d2c = -E[cos(y) x x^T], d2s = -E[sin(y) x x^T]
            d2 = (Xc.T * (c * cy + s * sy)) @ Xc / n
            d2mod = 2.0 * (np.outer(dc, dc) + np.outer(ds, ds) - d2)
            hess = d2mod / mod - np.outer(dmod, dmod) / (mod * mod) + 2.0 * S

    else:  # cgf
        top = float(y.max())
        shifted = np.maximum(y - top, -kind.cgf_clip)
        w = np.exp(shifted)
        total = w.sum()
        value = top + float(np.log(total / n)) - 0.5 * quad
        if order >= 1:
            w = w / total
            mu = Xc.T @ w
            grad = mu - Su
        if order >= 2:
            tilted = (Xc.T * w) @ Xc - np.outer(mu, mu)
            hess = tilted - S

    return value, grad, hess


def eval_contrast(kind, u, X):
    """Empirical contrast value at ``u``."""
    return contrast_derivatives(kind, u, X, order=0)[0]


def grad_contrast(kind, u, X):
    """Gradient of :func:`eval_contrast` with respect to ``u``."""
    return contrast_derivatives(kind, u, X, order=1)[1]


def hessian_contrast(kind, u, X):
    """Hessian of :func:`eval_contrast` with respect to ``u``."""
    return contrast_derivatives(kind, u, X, order=2)[2]


def random_unit_vectors(m, k, rng):
    """``m x k`` array of directions uniform on the unit sphere."""
    g = rng.standard_normal((m, k))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class QuasiOrthMatrix:
    """Matrix of the form ``B D B^T`` used to quasi-orthogonalize data."""

    C: np.ndarray
    C_dag: PseudoInverse
    probes: list = field(default_factory=list)
    kind: ContrastKind | None = None

    @classmethod
    def from_matrix(cls, C, kind=None, rel_cutoff=DEFAULT_REL_CUTOFF):
        """Wrap an externally supplied ``C`` (e.g. ``B_hat B_hat^T``)."""
        C = np.asarray(C, dtype=float)
        C = 0.5 * (C + C.T)
        return cls(C=C, C_dag=pseudo_inverse(C, rel_cutoff), probes=[], kind=kind)

    def negated(self):
        return QuasiOrthMatrix(
            C=-self.C,
            C_dag=PseudoInverse(-self.C_dag.matrix, self.C_dag.rank, self.C_dag.cutoff),
            probes=self.probes,
            kind=self.kind,
        )


def quasi_orth_matrix(
    kind,
    X,
    num_probes=1,
    rng=None,
    probes=None,
    rel_cutoff=DEFAULT_REL_CUTOFF,
    probe_scale=None,
):
    """Average contrast Hessian over random unit probe directions.

    Any sum of ``B D_u B^T`` terms keeps the ``B D B^T`` structure, so the
    average is a valid quasi-orthogonalization matrix.  Probes where the
    contrast is numerically degenerate are skipped.

    Parameters
    ----------
    probes : array_like, optional
        Explicit probe directions (rows); overrides ``num_probes``/``rng``.
    probe_scale : float, optional
        Rescale every probe ``p`` so that ``p^T x`` has standard deviation
        ``probe_scale`` on the data.  By default the probes are used as
        given (unit vectors when drawn here).
    """
    kind = as_kind(kind)
    data = as_dataset(X)
    if probes is None:
        if num_probes < 1:
            raise InvalidParameterError("num_probes must be >= 1")
        if rng is None:
            rng = np.random.default_rng()
        probes = random_unit_vectors(num_probes, data.k, rng)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probe_scale is not None:
        if not probe_scale > 0:
            raise InvalidParameterError("probe_scale must be positive")
        spread = np.sqrt(np.einsum("ij,jk,ik->i", probes, data.cov, probes))
        ok = spread > 0
        probes = probes[ok] * (probe_scale / spread[ok])[:, None]
    hessians, used = [], []
    for p in probes:
        try:
            hessians.append(hessian_contrast(kind, p, data))
        except NoisyICAError:
            continue
        used.append(p)
    if not hessians:
        raise EstimationError("every probe direction was degenerate")
    C = np.mean(hessians, axis=0)
    C = 0.5 * (C + C.T)
    return QuasiOrthMatrix(C=C, C_dag=pseudo_inverse(C, rel_cutoff), probes=used, kind=kind)
