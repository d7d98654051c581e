"""Config-driven experiments producing deterministic CSV text.

Every experiment reads an :class:`ExperimentConfig` and returns the CSV as a
string whose first line is ``# noisy-ica-kit v<version> <experiment>``.  All
randomness is derived from ``cfg.seed`` through ``default_rng([seed, cell,
run])``, so a fixed config always yields the same bytes.

Config keys (JSON object)
-------------------------
experiment
    ``table_kurtosis``, ``sweep_noise``, ``sweep_n``, ``histogram_restarts``,
    ``interpolation_score`` or ``landscape``.
k, n, rho, runs, seed, M
    Dimension, sample size, noise power, repetitions, master seed and the
    number of score probes.
sources
    List of ``{"kind": ..., "params": {...}}``; a single entry is repeated
    ``k`` times.  Defaults depend on the experiment.
candidates, external
    Built-in candidate names and ``{name: demixing_csv}`` adapters.
p, kappa4
    Bernoulli parameters for ``table_kurtosis`` (``kappa4`` values are
    converted to ``p``).
values
    Noise powers (``sweep_noise``) or sample sizes (``sweep_n``).
epsilons
    Interpolation weights for ``interpolation_score``.
num_inits, contrast
    Initializations and contrast for ``histogram_restarts``.
resolution, contrast
    Grid size and contrast for ``landscape``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import __version__
from .contrast import ContrastKind, eval_contrast
from .exceptions import ConfigError, NoisyICAError
from .extract import best_of_restarts, extract_all
from .meta import BUILTIN_NAMES, resolve_registry, run_meta
from .metrics import amari_error
from .score import DEFAULT_PROBES, mc_score
from .synth import (
    SourceSpec,
    bernoulli_p_for_kurtosis,
    generate_dataset,
    make_model,
    nine_source_plan,
    scaled_kurtosis_bernoulli,
)

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "run_table_experiment",
    "run_sweep",
    "run_histogram",
    "run_interpolation",
    "landscape_grid",
    "csv_header",
    "with_overrides",
]

EXPERIMENTS = (
    "table_kurtosis",
    "sweep_noise",
    "sweep_n",
    "histogram_restarts",
    "interpolation_score",
    "landscape",
)

#: scaled kurtosis columns of the Bernoulli table
TABLE_KAPPA4 = (994.0, 194.0, 95.0, 15.0, 5.0, 2.0, 0.8, 0.13, 0.0)

# Desk-scale defaults per experiment; ``--full`` swaps in the ``_FULL`` ones.
_DEFAULTS = {
    "table_kurtosis": dict(k=5, n=20_000, rho=0.2, runs=20),
    "sweep_noise": dict(k=9, n=20_000, runs=20, values=[0.05, 0.2, 0.5, 1.0]),
    "sweep_n": dict(k=9, rho=0.2, runs=20, values=[1_000, 5_000, 20_000]),
    "histogram_restarts": dict(k=9, n=10_000, rho=0.2, runs=20, num_inits=10),
    "interpolation_score": dict(k=9, n=10_000, rho=0.2, runs=10),
    "landscape": dict(k=2, n=10_000, rho=0.1, runs=1, resolution=41),
}
_FULL = {
    "table_kurtosis": dict(n=100_000, runs=100),
    "sweep_noise": dict(n=100_000, runs=100, values=[0.05, 0.1, 0.2, 0.5, 1.0, 1.5]),
    "sweep_n": dict(runs=100, values=[1_000, 5_000, 10_000, 50_000, 100_000]),
    "histogram_restarts": dict(runs=40, num_inits=30),
    "interpolation_score": dict(n=100_000, runs=10),
    "landscape": dict(n=100_000, resolution=101),
}


@dataclass
class ExperimentConfig:
    experiment: str
    k: int = 5
    n: int = 20_000
    rho: float = 0.2
    runs: int = 20
    seed: int = 0
    M: int = DEFAULT_PROBES
    candidates: list = field(default_factory=lambda: list(BUILTIN_NAMES))
    external: dict = field(default_factory=dict)
    sources: Optional[list] = None
    p: Optional[list] = None
    values: Optional[list] = None
    epsilons: Optional[list] = None
    num_inits: int = 10
    contrast: str = "chf"
    resolution: int = 41
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, d, full=False):
        """Validate a raw mapping, filling experiment-specific defaults."""
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        exp = d.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}, got {exp!r}")
        kappa4 = d.pop("kappa4", None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged = dict(_DEFAULTS[exp])
        if full:
            merged.update(_FULL[exp])
        merged.update(d)
        if kappa4 is not None:
            if "p" in d:
                raise ConfigError("give either p or kappa4, not both")
            merged["p"] = [bernoulli_p_for_kurtosis(float(x)) for x in kappa4]
        try:
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("k", "n", "runs", "M", "num_inits"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not self.rho >= 0:
            raise ConfigError("rho must be nonnegative")
        if self.experiment == "landscape":
            if self.k != 2:
                raise ConfigError("landscape needs k = 2")
            if self.resolution < 8:
                raise ConfigError("landscape resolution must be at least 8")
        if self.experiment == "interpolation_score" and self.epsilons is not None:
            if any(not 0 < e <= 1 for e in self.epsilons):
                raise ConfigError("interpolation weights must lie in (0, 1]")
        if self.experiment in ("sweep_noise", "sweep_n") and self.values is None:
            raise ConfigError(f"{self.experiment} needs a values list")
        if self.experiment == "sweep_n" and any(int(v) < 2 for v in self.values):
            raise ConfigError("sample sizes must be at least 2")
        if self.experiment == "sweep_noise" and any(v < 0 for v in self.values):
            raise ConfigError("noise powers must be nonnegative")
        if self.p is not None and any(not 0 < p < 1 for p in self.p):
            raise ConfigError("Bernoulli parameters must lie in (0, 1)")
        try:
            ContrastKind(self.contrast)
        except NoisyICAError as exc:
            raise ConfigError(str(exc)) from None
        # resolving the registry checks candidate names and adapter files
        self.registry()

    def registry(self):
        return resolve_registry(tuple(self.candidates), self.external)

    def source_specs(self, default):
        if self.sources is None:
            specs = default
        else:
            try:
                specs = [SourceSpec.from_dict(s) for s in self.sources]
            except (KeyError, TypeError, NoisyICAError) as exc:
                raise ConfigError(f"bad source entry: {exc}") from None
        if len(specs) == 1:
            specs = specs * self.k
        if len(specs) != self.k:
            raise ConfigError(f"{len(specs)} sources given for k={self.k}")
        return specs

    def to_dict(self):
        return asdict(self)


def load_config(path, full=False, seed=None, probes=None):
    """Read a JSON config, applying the CLI overrides."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if seed is not None:
        raw["seed"] = seed
    if probes is not None:
        raw["M"] = probes
    return ExperimentConfig.from_dict(raw, full=full)


def csv_header(experiment):
    return f"# noisy-ica-kit v{__version__} {experiment}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(experiment, columns, rows):
    buf = io.StringIO()
    buf.write(csv_header(experiment) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _run_rng(cfg, cell, run):
    return np.random.default_rng([cfg.seed, cell, run])


def _summary(values):
    a = np.sort(np.asarray(values, dtype=float))
    a = a[np.isfinite(a)]
    if a.size == 0:
        return float("nan"), float("nan"), float("nan")
    return float(np.median(a)), float(a.mean()), float(a.std())


def _meta_run(cfg, registry, model, n, rng):
    """All candidates plus Meta and uncorrected Meta on one dataset.

    Returns ``{algorithm: (amari, score_mean)}``.
    """
    X = generate_dataset(model, n, rng)
    res = run_meta(registry, X, cfg.M, rng).with_amari(model.B)
    unc = res.switched()
    out = {}
    for c in res.per_candidate:
        amari = np.nan if c.amari is None else c.amari
        out[c.name] = (amari, c.score_mean)
    out["Meta"] = out[res.winner]
    out["Unc-Meta"] = (out[unc.winner][0], unc.best.score_mean)
    return out


def _algorithms(registry):
    return [c.name for c in registry] + ["Meta", "Unc-Meta"]


def run_table_experiment(cfg):
    """Median Amari error per (algorithm, Bernoulli p), the mixing matrix fixed.

    Columns: ``p, scaled_kurtosis, algorithm, median_amari, mean_amari,
    std_amari, runs``.
    """
    registry = cfg.registry()
    ps = cfg.p if cfg.p is not None else [bernoulli_p_for_kurtosis(x) for x in TABLE_KAPPA4]
    rows = []
    for cell, p in enumerate(ps):
        # the model seed fixes B (drawn first) for every p
        model = make_model(cfg.k, cfg.rho, [SourceSpec.bernoulli(p)] * cfg.k, cfg.seed)
        per = {a: [] for a in _algorithms(registry)}
        for run in range(cfg.runs):
            for name, (amari, _) in _meta_run(cfg, registry, model, cfg.n, _run_rng(cfg, cell, run)).items():
                per[name].append(amari)
        kappa = scaled_kurtosis_bernoulli(p)
        for name, vals in per.items():
            med, mean, std = _summary(vals)
            rows.append([float(p), kappa, name, med, mean, std, cfg.runs])
    cols = ["p", "scaled_kurtosis", "algorithm", "median_amari", "mean_amari", "std_amari", "runs"]
    return _csv(cfg.experiment, cols, rows)


def run_sweep(cfg):
    """Nine-source sweep over noise power or sample size.

    Columns: ``sweep_value, algorithm, median_amari, mean_score, mean_amari,
    std_amari``.
    """
    registry = cfg.registry()
    specs = cfg.source_specs(nine_source_plan())
    rows = []
    for cell, value in enumerate(cfg.values):
        if cfg.experiment == "sweep_noise":
            model = make_model(cfg.k, float(value), specs, cfg.seed)
            n = cfg.n
        else:
            model = make_model(cfg.k, cfg.rho, specs, cfg.seed)
            n = int(value)
        amari = {a: [] for a in _algorithms(registry)}
        score = {a: [] for a in _algorithms(registry)}
        for run in range(cfg.runs):
            for name, (a, s) in _meta_run(cfg, registry, model, n, _run_rng(cfg, cell, run)).items():
                amari[name].append(a)
                score[name].append(s)
        for name in amari:
            med, mean, std = _summary(amari[name])
            _, mean_score, _ = _summary(score[name])
            rows.append([value, name, med, mean_score, mean, std])
    cols = ["sweep_value", "algorithm", "median_amari", "mean_score", "mean_amari", "std_amari"]
    return _csv(cfg.experiment, cols, rows)


def run_histogram(cfg):
    """Single initialization versus best of ``num_inits`` by score, per run.

    Columns: ``run, single_amari, best_amari, best_score``.
    """
    specs = cfg.source_specs(nine_source_plan())
    model = make_model(cfg.k, cfg.rho, specs, cfg.seed)
    kind = ContrastKind(cfg.contrast)
    rows = []
    for run in range(cfg.runs):
        rng = _run_rng(cfg, 0, run)
        X = generate_dataset(model, cfg.n, rng)
        probe_seed = int(rng.integers(0, 2**63 - 1))
        single = extract_all(kind, X, rng=np.random.default_rng([cfg.seed, 1, run]))
        best = best_of_restarts(
            kind,
            X,
            num_inits=cfg.num_inits,
            rng=np.random.default_rng([cfg.seed, 2, run]),
            scorer=lambda F, d: mc_score(F, d, cfg.M, probe_seed=probe_seed, standardize=True),
        )
        best_score = mc_score(best.B_hat_inv, X, cfg.M, probe_seed=probe_seed, standardize=True).mean
        rows.append([run, amari_error(single.B_hat, model.B), amari_error(best.B_hat, model.B), best_score])
    return _csv(cfg.experiment, ["run", "single_amari", "best_amari", "best_score"], rows)


def run_interpolation(cfg):
    """Score and Amari error along ``B' = eps B + (1 - eps) I``.

    For each weight the demixer ``B'^{-1}`` is scored on ``cfg.runs`` fresh
    datasets.  Columns: ``epsilon, amari, score_mean, score_std`` where
    ``score_mean`` and ``score_std`` average the per-run Monte-Carlo mean
    and standard deviation.
    """
    specs = cfg.source_specs(nine_source_plan())
    model = make_model(cfg.k, cfg.rho, specs, cfg.seed)
    eps = cfg.epsilons if cfg.epsilons is not None else list(np.linspace(0.5, 1.0, 10))
    datasets = [generate_dataset(model, cfg.n, _run_rng(cfg, 0, run)) for run in range(cfg.runs)]
    probe_seeds = [cfg.seed * 1_000_003 + run for run in range(cfg.runs)]
    rows = []
    for e in eps:
        B_eps = e * model.B + (1.0 - e) * np.eye(cfg.k)
        F = np.linalg.inv(B_eps)
        means, stds = [], []
        for X, ps in zip(datasets, probe_seeds):
            rep = mc_score(F, X, cfg.M, probe_seed=ps, standardize=True)
            means.append(rep.mean)
            stds.append(rep.stddev)
        rows.append([float(e), amari_error(B_eps, model.B), float(np.mean(means)), float(np.mean(stds))])
    return _csv(cfg.experiment, ["epsilon", "amari", "score_mean", "score_std"], rows)


def landscape_grid(cfg):
    """Contrast value at ``B^{-T} u`` for unit ``u`` on a square grid.

    Evaluating along ``B^{-T} u`` demixes the data, so the extrema should sit
    on the coordinate axes.  Grid points within ``1e-12`` of the origin are
    skipped.  Columns: ``x, y, value``.
    """
    specs = cfg.source_specs([SourceSpec.uniform()] * 2)
    model = make_model(cfg.k, cfg.rho, specs, cfg.seed)
    X = generate_dataset(model, cfg.n, _run_rng(cfg, 0, 0))
    kind = ContrastKind(cfg.contrast)
    Binv_T = np.linalg.inv(model.B).T
    axis = np.linspace(-1.0, 1.0, cfg.resolution)
    rows = []
    for x in axis:
        for y in axis:
            r = np.hypot(x, y)
            if r < 1e-12:
                continue
            u = np.array([x, y]) / r
            try:
                value = eval_contrast(kind, Binv_T @ u, X)
            except NoisyICAError:
                value = float("nan")
            rows.append([float(x), float(y), float(value)])
    return _csv(cfg.experiment, ["x", "y", "value"], rows)


_RUNNERS = {
    "table_kurtosis": run_table_experiment,
    "sweep_noise": run_sweep,
    "sweep_n": run_sweep,
    "histogram_restarts": run_histogram,
    "interpolation_score": run_interpolation,
    "landscape": landscape_grid,
}


def run_experiment(cfg):
    """Dispatch on ``cfg.experiment`` and return the CSV text."""
    return _RUNNERS[cfg.experiment](cfg)


def with_overrides(cfg, **changes):
    """Copy of ``cfg`` with fields replaced and revalidated."""
    new = replace(cfg, **changes)
    new.validate()
    return new
