"""Noisy independent component analysis.

Pseudo-Euclidean power iteration with kurtosis, characteristic-function
and cumulant-generating-function contrasts, a noise-corrected
characteristic-function independence score, and Meta selection among
candidate algorithms by that score.
"""

__version__ = "0.1.0"

from .contrast import (
    ContrastKind,
    QuasiOrthMatrix,
    eval_contrast,
    grad_contrast,
    hessian_contrast,
    quasi_orth_matrix,
)
from .estimators import MetaICA, NoisyICA
from .exceptions import NoisyICAError
from .extract import DemixResult, best_of_restarts, extract_all, power_iterate
from .meta import Candidate, MetaResult, builtin_registry, run_meta, uncorrected_meta
from .metrics import amari_error
from .score import ScoreReport, corrected_score, mc_score, sequential_score, uncorrected_score
from .synth import Dataset, MixingModel, SourceSpec, generate_dataset, make_model

__all__ = [
    "__version__",
    "ContrastKind",
    "QuasiOrthMatrix",
    "eval_contrast",
    "grad_contrast",
    "hessian_contrast",
    "quasi_orth_matrix",
    "NoisyICA",
    "MetaICA",
    "NoisyICAError",
    "DemixResult",
    "power_iterate",
    "extract_all",
    "best_of_restarts",
    "Candidate",
    "MetaResult",
    "builtin_registry",
    "run_meta",
    "uncorrected_meta",
    "amari_error",
    "ScoreReport",
    "corrected_score",
    "uncorrected_score",
    "mc_score",
    "sequential_score",
    "Dataset",
    "MixingModel",
    "SourceSpec",
    "generate_dataset",
    "make_model",
]
