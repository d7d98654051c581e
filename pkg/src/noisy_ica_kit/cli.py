"""Command line entry point ``noisy-ica``.

Subcommands
-----------
gen        draw a dataset from a model config and write it as CSV
demix      estimate a demixing matrix with one contrast
score      Monte-Carlo independence score of a demixing matrix on data
meta       run the candidate registry and report the Meta choice as JSON
table      Bernoulli kurtosis table (experiment ``table_kurtosis``)
sweep      noise/sample-size sweeps and the restart histogram
interp     score along the interpolation ``eps B + (1 - eps) I``
landscape  contrast values on a 2-D grid

The experiment subcommands take ``--config`` pointing at a JSON file (see
:mod:`noisy_ica_kit.experiments` for the keys).  ``gen``, ``demix``,
``score`` and ``meta`` take a model/data config with the keys ``k``,
``rho``, ``seed``, ``sources`` and ``n``, or ``data`` naming a CSV file.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import __version__
from .contrast import ContrastKind
from .exceptions import ConfigError, NoisyICAError
from .experiments import ExperimentConfig, csv_header, run_experiment
from .extract import extract_all
from .meta import BUILTIN_NAMES, load_demixing_csv, resolve_registry, run_meta, uncorrected_meta
from .metrics import amari_error
from .score import DEFAULT_PROBES, mc_score
from .synth import Dataset, MixingModel, generate_dataset

_EXPERIMENT_FOR = {
    "table": ("table_kurtosis",),
    "sweep": ("sweep_noise", "sweep_n", "histogram_restarts"),
    "interp": ("interpolation_score",),
    "landscape": ("landscape",),
}


def _candidate_file(text):
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError("expected name=path.csv")
    return name, path


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=_u64, help="override the config seed")
    common.add_argument("--probes", type=_positive, help="number of score probes M")
    common.add_argument("--full", action="store_true", help="full-scale sample sizes and runs")
    common.add_argument(
        "--candidate-file",
        action="append",
        default=[],
        type=_candidate_file,
        metavar="NAME=PATH",
        help="register a k x k demixing matrix CSV as an extra candidate",
    )

    parser = argparse.ArgumentParser(prog="noisy-ica", description="Noisy ICA toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="generate a dataset CSV")
    p = sub.add_parser("demix", parents=[common], help="estimate a demixing matrix")
    p.add_argument("--contrast", default=None, help="chf, cgf or kurtosis (default: config or chf)")
    p = sub.add_parser("score", parents=[common], help="score a demixing matrix")
    p.add_argument("--demixing", required=True, help="k x k demixing matrix CSV")
    p.add_argument("--uncorrected", action="store_true", help="use the uncorrected score")
    p = sub.add_parser("meta", parents=[common], help="run the Meta selection")
    p.add_argument("--uncorrected", action="store_true", help="select with the uncorrected score")
    for name in _EXPERIMENT_FOR:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _read_json(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _data_from_config(raw, seed, full):
    """Return ``(dataset, model or None, rng)`` for the data subcommands."""
    if seed is not None:
        raw["seed"] = seed
    base_seed = int(raw.get("seed", 0))
    rng = np.random.default_rng([base_seed, 1])
    if "data" in raw:
        return Dataset.from_csv(raw["data"]), None, rng
    model = MixingModel.from_config(raw)
    n = 100_000 if full else int(raw.get("n", 20_000))
    X = generate_dataset(model, n, np.random.default_rng([base_seed, 0]))
    return X, model, rng


def _matrix_csv(label, M):
    buf = io.StringIO()
    buf.write(csv_header(label) + "\n")
    for row in np.atleast_2d(M):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def _cmd_gen(args):
    raw = _read_json(args.config)
    X, _, _ = _data_from_config(raw, args.seed, args.full)
    _emit(csv_header("gen") + "\n" + X.to_csv(), args.out)


def _cmd_demix(args):
    raw = _read_json(args.config)
    kind = ContrastKind(args.contrast or raw.get("contrast", "chf"))
    X, _, rng = _data_from_config(raw, args.seed, args.full)
    res = extract_all(kind, X, rng=rng, restarts=int(raw.get("restarts", 5)))
    _emit(_matrix_csv("demix", res.B_hat_inv), args.out)


def _cmd_score(args):
    raw = _read_json(args.config)
    X, _, rng = _data_from_config(raw, args.seed, args.full)
    F = load_demixing_csv(args.demixing)
    M = args.probes or int(raw.get("M", DEFAULT_PROBES))
    report = mc_score(F, X, M, corrected=not args.uncorrected, probe_seed=int(rng.integers(0, 2**63 - 1)))
    _emit(report.to_json() + "\n", args.out)


def _cmd_meta(args):
    raw = _read_json(args.config)
    X, model, rng = _data_from_config(raw, args.seed, args.full)
    external = dict(raw.get("external", {}))
    external.update(dict(args.candidate_file))
    registry = resolve_registry(tuple(raw.get("candidates", BUILTIN_NAMES)), external)
    M = args.probes or int(raw.get("M", DEFAULT_PROBES))
    runner = uncorrected_meta if args.uncorrected else run_meta
    result = runner(registry, X, M, rng)
    if model is not None:
        result.with_amari(model.B)
    payload = result.to_dict()
    if model is not None:
        payload["meta_amari"] = amari_error(result.best.demix.B_hat, model.B)
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)


def _cmd_experiment(args):
    raw = _read_json(args.config)
    allowed = _EXPERIMENT_FOR[args.command]
    raw.setdefault("experiment", allowed[0])
    if raw["experiment"] not in allowed:
        raise ConfigError(
            f"'{args.command}' runs {', '.join(allowed)}, config asks for {raw['experiment']!r}"
        )
    if args.candidate_file:
        external = dict(raw.get("external", {}))
        external.update(dict(args.candidate_file))
        raw["external"] = external
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.probes is not None:
        raw["M"] = args.probes
    cfg = ExperimentConfig.from_dict(raw, full=args.full)
    _emit(run_experiment(cfg), args.out or cfg.output)


_COMMANDS = {"gen": _cmd_gen, "demix": _cmd_demix, "score": _cmd_score, "meta": _cmd_meta}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS.get(args.command, _cmd_experiment)
    try:
        handler(args)
    except NoisyICAError as exc:
        print(f"noisy-ica: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
