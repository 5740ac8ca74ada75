"""Command-line entry point: ``gcims <subcommand> ...``.

Exit codes: 0 success, 2 validation/data failure, 3 invalid configuration,
4 missing input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .container import load_model, save_model
from .core import SampleLabel
from .errors import ConfigInvalid, GcimsError
from .evaluation import evaluate_all, resolve_algorithms, train_final
from .imsx import read_imsx
from .metadata import METADATA_FILENAME
from .models import canonical_kind
from .pipeline import FeatureConfig
from .plotting import plot_accuracy, plot_spectra, write_pgm
from .preprocess import DEFAULT_CONFIG, PreprocessConfig, parse_step, split_key_value
from .synthgen import SynthConfig, generate, write_dataset
from .validation import load_dataset, validate_directory

log = logging.getLogger("gcims")

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_MISSING = 0, 2, 3, 4

PREPROCESS_KEYS = ("despike", "smooth", "baseline", "normalize", "bin")

# option keys a --config file may set, with their parsers
OPTION_KEYS = {
    "seed": int,
    "n": int,
    "rows": int,
    "cols": int,
    "separation": float,
    "algorithms": str,
    "algorithm": str,
    "cv": int,
    "test_fraction": float,
    "k_features": int,
    "n_components": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are configuration errors, not data errors
    def error(self, message):
        raise UsageError(message)


# --- config resolution --------------------------------------------------------------

def read_config_file(path) -> tuple[Optional[PreprocessConfig], dict]:
    """Parse a ``key = value`` file into (preprocessing steps or None, options).

    Preprocessing keys build the step list in file order and replace the
    default pipeline; every other key must be a known option.
    """
    text = Path(path).read_text(encoding="utf-8")
    steps, options = [], {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = split_key_value(line, lineno)
        key = key.replace("-", "_")
        if key in PREPROCESS_KEYS:
            steps.append(parse_step(key, value, lineno))
        elif key in OPTION_KEYS:
            try:
                options[key] = OPTION_KEYS[key](value)
            except ValueError:
                raise ConfigInvalid(f"{path}: line {lineno}: bad value {value!r} for {key}") from None
        else:
            raise ConfigInvalid(f"{path}: line {lineno}: unknown key {key!r}")
    return (PreprocessConfig(tuple(steps)) if steps else None), options


def resolve(args, name: str, default):
    """Command-line flag, else config file, else built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return args.config_options.get(name, default)


def _preprocess(args) -> PreprocessConfig:
    return args.config_preprocess if args.config_preprocess is not None else DEFAULT_CONFIG


def _feature_config(args) -> FeatureConfig:
    k = resolve(args, "k_features", None)
    if k is not None and k < 1:
        raise ConfigInvalid(f"--k-features must be >= 1, got {k}")
    n_components = resolve(args, "n_components", FeatureConfig.n_components)
    if n_components < 1:
        raise ConfigInvalid(f"--n-components must be >= 1, got {n_components}")
    return FeatureConfig(n_components=n_components, k_features=k)


def _meta_path(args) -> Path:
    return Path(args.meta) if args.meta else Path(args.data) / METADATA_FILENAME


def _load(args):
    dataset, reports = load_dataset(args.data, _meta_path(args))
    excluded = [r.sample_id for r in reports if not r.overall]
    if excluded:
        print(f"excluded {len(excluded)} sample(s) failing validation: {', '.join(excluded)}",
              file=sys.stderr)
    return dataset


# --- subcommands --------------------------------------------------------------------

def cmd_generate(args) -> int:
    config = SynthConfig(
        n_samples=resolve(args, "n", SynthConfig.n_samples),
        rows=resolve(args, "rows", SynthConfig.rows),
        cols=resolve(args, "cols", SynthConfig.cols),
        separation=resolve(args, "separation", SynthConfig.separation),
        seed=args.seed_resolved,
    )
    dataset = generate(config)
    paths = write_dataset(dataset, args.out)
    labels = dataset.labels()
    print(f"wrote {len(paths) - 1} spectra ({int(labels.sum())} Infected / "
          f"{int(len(labels) - labels.sum())} NotInfected) and {METADATA_FILENAME} "
          f"to {args.out} [seed {config.seed}, separation {config.separation}]")
    return EXIT_OK


def cmd_validate(args) -> int:
    _, _, reports = validate_directory(args.data, _meta_path(args))
    for report in reports:
        print(report.summary_line())
    n_fail = sum(not r.overall for r in reports)
    print(f"{len(reports) - n_fail}/{len(reports)} samples passed", file=sys.stderr)
    return EXIT_OK if n_fail == 0 else EXIT_DATA


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def cmd_evaluate(args) -> int:
    algorithms = resolve(args, "algorithms", "all")
    resolve_algorithms(algorithms)  # fail fast on unknown names
    features = _feature_config(args)
    preprocess = _preprocess(args)
    dataset = _load(args)
    report = evaluate_all(dataset, preprocess, features, algorithms=algorithms,
                          seed=args.seed_resolved, cv=resolve(args, "cv", 5),
                          test_fraction=resolve(args, "test_fraction", 0.2))
    table = report.to_table()
    sys.stdout.write(table)
    if args.report:
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.to_json(), encoding="utf-8")
        _sidecar(path, ".tsv").write_text(table, encoding="utf-8")
        if not args.no_figures:
            plot_accuracy(report, _sidecar(path, "_accuracy.png"))
            _class_pair_figure(dataset, _sidecar(path, "_spectra.png"))
        print(f"report written to {path}", file=sys.stderr)
    return EXIT_OK


def _class_pair_figure(dataset, path: Path) -> None:
    # first sample of each class, side by side
    picks = []
    for label in (SampleLabel.INFECTED, SampleLabel.NOT_INFECTED):
        rec = next((r for r in dataset.records if r.label is label), None)
        if rec is not None:
            picks.append((dataset.spectra[rec.sample_id], f"{rec.sample_id} ({label.value})"))
    if picks:
        plot_spectra([p[0] for p in picks], path, titles=[p[1] for p in picks])


def cmd_train(args) -> int:
    kind = canonical_kind(resolve(args, "algorithm", "random_forest"))
    features = _feature_config(args)
    preprocess = _preprocess(args)
    dataset = _load(args)
    trained = train_final(dataset, kind, preprocess, features, seed=args.seed_resolved,
                          cv=resolve(args, "cv", 5))
    out = Path(args.model)
    out.parent.mkdir(parents=True, exist_ok=True)
    n_bytes = save_model(trained, out)
    print(f"{kind}: cv accuracy {trained.run_config['cv_mean_accuracy']:.4f} "
          f"{json.dumps(trained.spec.params(), sort_keys=True)} -> {out} ({n_bytes} bytes)")
    return EXIT_OK


def cmd_predict(args) -> int:
    trained = load_model(args.model)
    spectrum = read_imsx(args.sample)
    score = float(trained.decision_score([spectrum])[0])
    label = SampleLabel.from_code(int(trained.predict([spectrum])[0]))
    print(f"{spectrum.sample_id or Path(args.sample).stem} {label.value} {score!r}")
    return EXIT_OK


def cmd_render(args) -> int:
    spectrum = read_imsx(args.sample)
    n_bytes = write_pgm(spectrum, args.out, log=args.log)
    if args.png:
        plot_spectra([spectrum], args.png, log=args.log)
    rows, cols = spectrum.shape
    print(f"{args.out}: {cols}x{rows} PGM ({n_bytes} bytes)")
    return EXIT_OK


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    # SUPPRESS: a global flag given before the subcommand must survive the subparser
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 42)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value file; flags override it")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")

    parser = _Parser(prog="gcims", description="GC-IMS infection screening toolkit",
                     parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=None, help="number of samples (76)")
    p.add_argument("--rows", type=int, default=None, help="retention-time points (315)")
    p.add_argument("--cols", type=int, default=None, help="drift-time points (408)")
    p.add_argument("--separation", type=float, default=None, help="biomarker amplitude multiplier (1.0)")
    p.set_defaults(func=cmd_generate)

    def data_args(p):
        p.add_argument("--data", required=True, help="directory of .imsx files")
        p.add_argument("--meta", default=None, help=f"metadata table (default DATA/{METADATA_FILENAME})")

    p = sub.add_parser("validate", parents=[common], help="quality-check a dataset")
    data_args(p)
    p.set_defaults(func=cmd_validate)

    def model_args(p):
        p.add_argument("--cv", type=int, default=None, help="cross-validation folds (5)")
        p.add_argument("--k-features", dest="k_features", type=int, default=None,
                       help="top-k component count for every algorithm")
        p.add_argument("--n-components", dest="n_components", type=int, default=None,
                       help="PCA components before clamping to rank (304)")

    p = sub.add_parser("evaluate", parents=[common], help="split, tune and score every algorithm")
    data_args(p)
    model_args(p)
    p.add_argument("--algorithms", default=None, help="'all' or a comma list, e.g. rf,svm")
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=None,
                   help="held-out fraction (0.2)")
    p.add_argument("--report", default=None, help="JSON report path; .tsv and .png written beside it")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", parents=[common], help="tune and fit one model on all samples")
    data_args(p)
    model_args(p)
    p.add_argument("--algorithm", default=None, help="dt, lr, rf, svm or plsda (rf)")
    p.add_argument("--model", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="classify one spectrum")
    p.add_argument("--model", required=True)
    p.add_argument("--sample", required=True, help=".imsx file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("render", parents=[common], help="draw a spectrum as a PGM image")
    p.add_argument("--sample", required=True, help=".imsx file")
    p.add_argument("--out", required=True, help="output .pgm")
    p.add_argument("--log", action="store_true", help="log10(1 + x) intensity scale")
    p.add_argument("--png", default=None, help="also save a matplotlib heat map here")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"gcims: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if getattr(args, "config", None):
            args.config_preprocess, args.config_options = read_config_file(args.config)
        else:
            args.config_preprocess, args.config_options = None, {}
        args.seed_resolved = resolve(args, "seed", 42)
        return args.func(args)
    except GcimsError as exc:
        print(f"gcims: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"gcims: missing input: {exc.filename or exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
