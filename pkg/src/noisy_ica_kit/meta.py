"""Meta selection: run several demixing algorithms and keep the most independent.

Every candidate returns an estimate ``B_j`` of the mixing matrix.  Each
estimate is scored by the Monte-Carlo independence score of ``B_j^{-1} x``
over one shared set of probes, and the candidate with the smallest mean
score wins.  Because the score needs no ground truth, the choice adapts to
whatever source distribution produced the data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .contrast import ContrastKind
from .exceptions import ConfigError, InvalidInputError, MetaFailure, NoisyICAError
from .extract import DemixResult, extract_all
from .metrics import amari_error
from .score import DEFAULT_PROBES, ScoreReport, mc_score, mc_score_pair
from .synth import as_dataset

__all__ = [
    "Candidate",
    "CandidateOutcome",
    "MetaResult",
    "BUILTIN_NAMES",
    "builtin_candidate",
    "builtin_registry",
    "contrast_candidate",
    "csv_candidate",
    "matrix_candidate",
    "load_demixing_csv",
    "resolve_registry",
    "run_meta",
    "uncorrected_meta",
]

BUILTIN_NAMES = ("PEGI-k4", "CHF", "CGF")
_ALIASES = {
    "pegi-k4": "PEGI-k4",
    "pegi-κ4": "PEGI-k4",
    "pegi": "PEGI-k4",
    "kurtosis": "PEGI-k4",
    "chf": "CHF",
    "cgf": "CGF",
}
_VARIANT = {"PEGI-k4": "kurtosis", "CHF": "chf", "CGF": "cgf"}


@dataclass(frozen=True)
class Candidate:
    """A named demixing algorithm.

    Parameters
    ----------
    name : str
    runner : callable
        ``runner(data, rng) -> DemixResult``.  ``rng`` is a generator owned
        by this candidate for the duration of one Meta run.
    kind_tag : ContrastKind, optional
        Contrast used by the candidate, if any.
    """

    name: str
    runner: Callable
    kind_tag: Optional[ContrastKind] = None

    def run(self, data, rng):
        return self.runner(data, rng)


def contrast_candidate(name, kind, **extract_kwargs):
    """Candidate running :func:`extract_all` with a given contrast."""
    kind = ContrastKind(kind) if not isinstance(kind, ContrastKind) else kind

    def runner(data, rng):
        return extract_all(kind, data, rng=rng, **extract_kwargs)

    return Candidate(name=name, runner=runner, kind_tag=kind)


def builtin_candidate(name, **extract_kwargs):
    """One of ``PEGI-k4``, ``CHF`` or ``CGF`` (case-insensitive)."""
    key = _ALIASES.get(str(name).lower())
    if key is None:
        raise ConfigError(f"unknown candidate {name!r}; built-ins are {', '.join(BUILTIN_NAMES)}")
    return contrast_candidate(key, _VARIANT[key], **extract_kwargs)


def builtin_registry(**extract_kwargs):
    """The default candidate list: kurtosis, CHF and CGF power iterations."""
    return [builtin_candidate(n, **extract_kwargs) for n in BUILTIN_NAMES]


def load_demixing_csv(path):
    """Read a comma-separated, row-major square matrix (``#`` lines skipped)."""
    try:
        M = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read demixing matrix from {path}: {exc}") from exc
    if M.shape[0] != M.shape[1]:
        raise ConfigError(f"demixing matrix in {path} is {M.shape[0]}x{M.shape[1]}, not square")
    if not np.all(np.isfinite(M)):
        raise ConfigError(f"demixing matrix in {path} has non-finite entries")
    return M


def matrix_candidate(name, F):
    """Candidate that always returns the fixed demixing matrix ``F``."""
    F = np.array(F, dtype=float)

    def runner(data, rng):
        if F.shape != (data.k, data.k):
            raise InvalidInputError(f"candidate {name!r} has a {F.shape} matrix for k={data.k}")
        return DemixResult.from_demixing(F)

    return Candidate(name=name, runner=runner)


def csv_candidate(name, path):
    """Adapter for an external algorithm whose demixing matrix is in a CSV."""
    return matrix_candidate(name, load_demixing_csv(path))


def resolve_registry(names=BUILTIN_NAMES, external=None, **extract_kwargs):
    """Build a registry from built-in names plus ``{name: csv_path}``."""
    registry = [builtin_candidate(n, **extract_kwargs) for n in names]
    for name, path in (external or {}).items():
        registry.append(csv_candidate(name, path))
    seen = set()
    for c in registry:
        if c.name in seen:
            raise ConfigError(f"duplicate candidate name {c.name!r}")
        seen.add(c.name)
    return registry


@dataclass
class CandidateOutcome:
    """One candidate's result.

    ``score`` is the report used for selection and ``alt_score`` the report
    under the other score variant, on the same probes.
    """

    name: str
    score: Optional[ScoreReport]
    demix: Optional[DemixResult]
    amari: Optional[float] = None
    error: Optional[str] = None
    alt_score: Optional[ScoreReport] = None

    @property
    def score_mean(self):
        return np.inf if self.score is None else self.score.mean


@dataclass
class MetaResult:
    """Outcome of a Meta run.

    Scores are computed on row-standardized demixers (every recovered
    component rescaled to unit variance) so candidates are compared on a
    common scale.

    Attributes
    ----------
    winner : str
        Name of the candidate with the smallest mean score.
    per_candidate : list of CandidateOutcome
        In registry order.
    probe_seed : int
        Seed of the probe set shared by all candidates.
    """

    winner: str
    per_candidate: list = field(default_factory=list)
    probe_seed: int = 0
    corrected: bool = True

    def outcome(self, name):
        for c in self.per_candidate:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def best(self):
        return self.outcome(self.winner)

    def with_amari(self, B):
        """Fill ``amari`` for every successful candidate against a known ``B``."""
        for c in self.per_candidate:
            if c.demix is not None:
                try:
                    c.amari = amari_error(c.demix.B_hat, B)
                except NoisyICAError:
                    c.amari = float("nan")
        return self

    def switched(self):
        """Selection under the other score variant, from the stored reports.

        No candidate is rerun and no score recomputed.
        """
        outcomes = [
            CandidateOutcome(c.name, c.alt_score, c.demix, c.amari, c.error, c.score)
            for c in self.per_candidate
        ]
        return MetaResult(_argmin(outcomes).name, outcomes, self.probe_seed, not self.corrected)

    def rescore(self, X, M=DEFAULT_PROBES, corrected=False):
        """Select again from the same estimates with the other score.

        Reuses every candidate's demixing result and the shared probe seed,
        so a corrected and an uncorrected selection can be compared without
        rerunning the candidates.
        """
        data = as_dataset(X)
        outcomes = []
        for c in self.per_candidate:
            if c.demix is None:
                outcomes.append(CandidateOutcome(c.name, None, None, c.amari, c.error))
                continue
            report = mc_score(
                c.demix.B_hat_inv, data, M, corrected=corrected, probe_seed=self.probe_seed, standardize=True
            )
            outcomes.append(CandidateOutcome(c.name, report, c.demix, c.amari))
        return MetaResult(_argmin(outcomes).name, outcomes, self.probe_seed, corrected)

    def to_dict(self, include_matrices=True):
        rows = []
        for c in self.per_candidate:
            row = {
                "name": c.name,
                "score": None if c.score is None else json.loads(c.score.to_json()),
                "amari": c.amari,
                "error": c.error,
            }
            if include_matrices and c.demix is not None:
                row["B_hat"] = c.demix.B_hat.tolist()
                row["B_hat_inv"] = c.demix.B_hat_inv.tolist()
            rows.append(row)
        return {
            "winner": self.winner,
            "probe_seed": self.probe_seed,
            "corrected": self.corrected,
            "per_candidate": rows,
        }

    def to_json(self, include_matrices=True):
        return json.dumps(self.to_dict(include_matrices), indent=2, sort_keys=True)


def _run(registry, X, M, rng, corrected, probe_seed):
    if not registry:
        raise ConfigError("the candidate registry is empty")
    data = as_dataset(X)
    if rng is None:
        rng = np.random.default_rng()
    if probe_seed is None:
        probe_seed = int(rng.integers(0, 2**63 - 1))
    children = rng.spawn(len(registry))
    outcomes = []
    for cand, child in zip(registry, children):
        try:
            demix = cand.run(data, child)
            corr, unc = mc_score_pair(demix.B_hat_inv, data, M, probe_seed=probe_seed, standardize=True)
        except NoisyICAError as exc:
            outcomes.append(CandidateOutcome(cand.name, None, None, error=str(exc)))
            continue
        report, alt = (corr, unc) if corrected else (unc, corr)
        outcomes.append(CandidateOutcome(cand.name, report, demix, alt_score=alt))
    return MetaResult(_argmin(outcomes).name, outcomes, probe_seed, corrected)


def _argmin(outcomes):
    # strict comparison keeps the earliest candidate on ties
    winner = None
    for c in outcomes:
        if c.score is not None and (winner is None or c.score_mean < winner.score_mean):
            winner = c
    if winner is None:
        detail = "; ".join(f"{c.name}: {c.error}" for c in outcomes)
        raise MetaFailure(f"every candidate failed ({detail})")
    return winner


def run_meta(registry, X, M=DEFAULT_PROBES, rng=None, probe_seed=None):
    """Run every candidate and pick the smallest corrected score.

    Parameters
    ----------
    registry : list of Candidate
    X : Dataset or array_like
    M : int
        Number of Gaussian probes shared by all candidates.
    rng : numpy.random.Generator, optional
        Draws the probe seed (unless given) and one child generator per
        candidate, so a fixed seed makes the whole run reproducible.

    Returns
    -------
    MetaResult
    """
    return _run(registry, X, M, rng, True, probe_seed)


def uncorrected_meta(registry, X, M=DEFAULT_PROBES, rng=None, probe_seed=None):
    """:func:`run_meta` with the score that ignores Gaussian noise."""
    return _run(registry, X, M, rng, False, probe_seed)
