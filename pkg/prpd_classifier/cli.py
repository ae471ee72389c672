"""Command-line interface: generate, extract, train, evaluate, classify, render."""

from __future__ import annotations

import argparse
from collections.abc import Sequence
import csv
import logging
from pathlib import Path
import sys

from .config import (
    load_json_document,
    parse_classifier_config,
    parse_profile_file,
    parse_stacking_config,
)
from .const import (
    CONF_HYPERPARAMETERS,
    CONF_STACKING,
    CSV_FLOAT_FORMAT,
    CSV_ID_COLUMN,
    CSV_LABEL_COLUMN,
    DEFAULT_CLASS_COUNTS,
    DEFAULT_CYCLES,
    DEFAULT_PHASES,
    DEFAULT_THRESHOLD_RATIO,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_TRIALS,
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    KIND_STACK,
    MODEL_KINDS,
    VERSION,
)
from .ensemble import ClassifierSpec, StackingClassifier, StackingConfig
from .evaluation import (
    ModelSpec,
    SplitSpec,
    evaluate_grid,
    render_accuracy_table,
    save_reports,
)
from .exceptions import ConfigError, DataValidationError, NumericalError
from .features import FeatureKind, extract_features, save_feature_matrix
from .learners import Classifier
from .persistence import SavedModel, load_model, save_model
from .render import render_heatmap
from .signal_model import Dataset, PdLabel, load_dataset, save_dataset
from .synthetic import (
    DEFAULT_PROFILES,
    SyntheticSpec,
    generate_corpus,
    profile_from_mapping,
    without_offsets,
)

_LOGGER = logging.getLogger(__name__)

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


# ── Argument helpers ──────────────────────────────────────────


def _threshold(value: str) -> float:
    ratio = float(value)
    if not 0.0 < ratio < 1.0:
        raise argparse.ArgumentTypeError(f"threshold must lie in (0, 1), got {value}")
    return ratio


def _fraction(value: str) -> float:
    fraction = float(value)
    if not 0.0 < fraction < 1.0:
        raise argparse.ArgumentTypeError(f"train fraction must lie in (0, 1), got {value}")
    return fraction


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _counts(value: str) -> dict[PdLabel, int]:
    parts = [part.strip() for part in value.split(",")]
    if len(parts) != len(PdLabel):
        raise argparse.ArgumentTypeError(
            f"expected {len(PdLabel)} comma-separated counts (corona,floating,particle,void)"
        )
    try:
        counts = [int(part) for part in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"counts must be integers, got {value!r}") from None
    if any(count < 0 for count in counts):
        raise argparse.ArgumentTypeError("counts must be non-negative")
    return dict(zip(PdLabel, counts))


def _choices(allowed: Sequence[str]):
    def _parse(value: str) -> list[str]:
        items = [item.strip().lower() for item in value.split(",") if item.strip()]
        unknown = [item for item in items if item not in allowed]
        if not items or unknown:
            raise argparse.ArgumentTypeError(
                f"invalid choice {value!r} (choose from {', '.join(allowed)})"
            )
        return list(dict.fromkeys(items))

    return _parse


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _load_input(args: argparse.Namespace) -> Dataset:
    return load_dataset(_require_file(args.input), phases=args.phases, cycles=args.cycles)


def _model_specs(kinds: Sequence[str], config_path: Path | None) -> list[ModelSpec]:
    """Model specs for the requested kinds, with an optional config document applied.

    A stacking document applies to ``stack``; a classifier document applies
    when exactly one single-classifier kind is requested.
    """
    document = load_json_document(config_path) if config_path else None
    singles = [kind for kind in kinds if kind != KIND_STACK]
    if document is not None:
        if CONF_STACKING in document and KIND_STACK not in kinds:
            raise ConfigError("a stacking config needs --model stack")
        if CONF_HYPERPARAMETERS in document and len(singles) != 1:
            raise ConfigError("a classifier config needs exactly one non-stacking --model")

    specs: list[ModelSpec] = []
    for kind in kinds:
        if kind == KIND_STACK:
            if document is not None and CONF_STACKING in document:
                specs.append(StackingConfig.from_dict(parse_stacking_config(document)))
            else:
                specs.append(StackingConfig())
        elif document is not None and CONF_HYPERPARAMETERS in document:
            specs.append(
                ClassifierSpec(kind=kind, hyperparameters=parse_classifier_config(document, kind))
            )
        else:
            specs.append(ClassifierSpec(kind=kind))
    return specs


def _instantiate(spec: ModelSpec, seed: int) -> Classifier:
    if isinstance(spec, StackingConfig):
        return StackingClassifier(spec, seed)
    if isinstance(spec, ClassifierSpec):
        return spec.build(seed)
    return spec(seed)


# ── Commands ──────────────────────────────────────────────────


def cmd_generate(args: argparse.Namespace) -> int:
    """Write a synthetic corpus."""
    profiles = dict(DEFAULT_PROFILES)
    if args.profile_file:
        overrides = parse_profile_file(load_json_document(args.profile_file))
        for token, values in overrides.items():
            label = PdLabel.parse(token)
            profiles[label] = profile_from_mapping(profiles[label], values)
    if args.no_offset:
        profiles = without_offsets(profiles)

    spec = SyntheticSpec(
        counts=args.counts,
        profiles=profiles,
        phases=args.phases,
        cycles=args.cycles,
        master_seed=args.seed,
    )
    dataset = generate_corpus(spec)
    save_dataset(dataset, args.out)
    _LOGGER.info("Wrote %d samples to %s", len(dataset), args.out)
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    """Write a feature CSV."""
    dataset = _load_input(args)
    matrix = extract_features(dataset, args.features, args.threshold)
    save_feature_matrix(matrix, args.out)
    _LOGGER.info(
        "Wrote %d x %d %s features to %s", len(matrix), matrix.width, matrix.feature_kind, args.out
    )
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    """Fit a model on a labeled dataset and save it."""
    dataset = _load_input(args)
    matrix = extract_features(dataset, args.features, args.threshold)
    codes = matrix.label_codes()
    (spec,) = _model_specs([args.model], args.config)
    classifier = _instantiate(spec, args.seed).fit(matrix.rows, codes)
    save_model(
        SavedModel(
            classifier=classifier,
            feature_kind=matrix.feature_kind,
            threshold_ratio=args.threshold,
        ),
        args.out,
    )
    _LOGGER.info(
        "Trained %s on %d samples; model written to %s", args.model, len(matrix), args.out
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Run the repeated-split protocol and print the report tables."""
    dataset = _load_input(args)
    split_spec = SplitSpec(
        train_fraction=args.train_frac,
        stratified=not args.no_stratify,
        trials=args.trials,
        master_seed=args.seed,
    )
    reports = evaluate_grid(
        _model_specs(args.model, args.config),
        args.features,
        dataset,
        split_spec,
        threshold_ratio=args.threshold,
        max_workers=args.workers,
    )
    for report in reports:
        sys.stdout.write(report.render_table() + "\n")
    if len(reports) > 1:
        sys.stdout.write(render_accuracy_table(reports))
    if args.report:
        save_reports(reports, args.report)
        _LOGGER.info("Report written to %s", args.report)
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    """Predict label and class probabilities for every sample."""
    saved = load_model(_require_file(args.model))
    dataset = _load_input(args)
    matrix = extract_features(dataset, saved.feature_kind, saved.threshold_ratio)
    proba = saved.classifier.predict_proba(matrix.rows)
    predicted = proba.argmax(axis=1)
    try:
        with Path(args.out).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(
                [CSV_ID_COLUMN, CSV_LABEL_COLUMN, *(f"p_{label.token}" for label in PdLabel)]
            )
            for sample_id, code, row in zip(matrix.sample_ids, predicted, proba):
                writer.writerow(
                    [
                        sample_id,
                        PdLabel(int(code)).token,
                        *(CSV_FLOAT_FORMAT.format(p) for p in row),
                    ]
                )
    except OSError as err:
        raise DataValidationError(f"cannot write {args.out}: {err}") from err
    _LOGGER.info("Classified %d samples into %s", len(matrix), args.out)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    """Write one sample as a PGM heatmap."""
    dataset = _load_input(args)
    render_heatmap(dataset.find(args.id), args.out)
    return EXIT_OK


# ── Parser ────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per workflow."""
    parser = argparse.ArgumentParser(
        prog="prpd-classifier",
        description="Classify phase-resolved partial-discharge patterns",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr (-v info, -vv debug)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    dataset_options = argparse.ArgumentParser(add_help=False)
    dataset_options.add_argument(
        "--in", dest="input", type=Path, required=True, help="Dataset CSV"
    )
    dataset_options.add_argument(
        "--phases",
        type=_positive_int,
        default=DEFAULT_PHASES,
        help=f"Phases per sample (default: {DEFAULT_PHASES})",
    )
    dataset_options.add_argument(
        "--cycles",
        type=_positive_int,
        default=DEFAULT_CYCLES,
        help=f"Cycles per sample (default: {DEFAULT_CYCLES})",
    )

    threshold_option = argparse.ArgumentParser(add_help=False)
    threshold_option.add_argument(
        "--threshold",
        type=_threshold,
        default=DEFAULT_THRESHOLD_RATIO,
        help=f"Significance ratio for the empty-band feature (default: {DEFAULT_THRESHOLD_RATIO})",
    )

    generate = commands.add_parser("generate", help="Generate a synthetic corpus")
    generate.add_argument("--out", type=Path, required=True, help="Output dataset CSV")
    generate.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    generate.add_argument(
        "--counts",
        type=_counts,
        default=dict(zip(PdLabel, DEFAULT_CLASS_COUNTS)),
        help="corona,floating,particle,void sample counts (default: 85,99,80,64)",
    )
    generate.add_argument("--profile-file", type=Path, help="JSON class profile overrides")
    generate.add_argument("--phases", type=_positive_int, default=DEFAULT_PHASES)
    generate.add_argument("--cycles", type=_positive_int, default=DEFAULT_CYCLES)
    generate.add_argument(
        "--no-offset", action="store_true", help="Disable random per-sample phase offsets"
    )
    generate.set_defaults(handler=cmd_generate)

    extract = commands.add_parser(
        "extract", parents=[dataset_options, threshold_option], help="Extract features"
    )
    extract.add_argument(
        "--features", type=FeatureKind, choices=list(FeatureKind), default=FeatureKind.META
    )
    extract.add_argument("--out", type=Path, required=True, help="Output feature CSV")
    extract.set_defaults(handler=cmd_extract)

    train = commands.add_parser(
        "train", parents=[dataset_options, threshold_option], help="Train and save a model"
    )
    train.add_argument("--model", choices=MODEL_KINDS, required=True)
    train.add_argument(
        "--features", type=FeatureKind, choices=list(FeatureKind), default=FeatureKind.META
    )
    train.add_argument("--config", type=Path, help="JSON hyperparameter or stacking config")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", type=Path, required=True, help="Output model file")
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser(
        "evaluate",
        parents=[dataset_options, threshold_option],
        help="Repeated train/validation evaluation",
    )
    evaluate.add_argument(
        "--model",
        type=_choices(MODEL_KINDS),
        required=True,
        help=f"Comma-separated kinds from {', '.join(MODEL_KINDS)}",
    )
    evaluate.add_argument(
        "--features",
        type=_choices([str(kind) for kind in FeatureKind]),
        default=[str(FeatureKind.META)],
        help="Comma-separated feature sets from phase, aligned, meta (default: meta)",
    )
    evaluate.add_argument("--config", type=Path, help="JSON hyperparameter or stacking config")
    evaluate.add_argument("--trials", type=_positive_int, default=DEFAULT_TRIALS)
    evaluate.add_argument("--train-frac", type=_fraction, default=DEFAULT_TRAIN_FRACTION)
    evaluate.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    evaluate.add_argument(
        "--no-stratify", action="store_true", help="Split without per-class stratification"
    )
    evaluate.add_argument(
        "--workers", type=_positive_int, default=1, help="Trials run concurrently (default: 1)"
    )
    evaluate.add_argument("--report", type=Path, help="Write the JSON report here")
    evaluate.set_defaults(handler=cmd_evaluate)

    classify = commands.add_parser(
        "classify", parents=[dataset_options], help="Classify samples with a saved model"
    )
    classify.add_argument("--model", type=Path, required=True, help="Model file from train")
    classify.add_argument("--out", type=Path, required=True, help="Output predictions CSV")
    classify.set_defaults(handler=cmd_classify)

    render = commands.add_parser(
        "render", parents=[dataset_options], help="Render one sample as a PGM heatmap"
    )
    render.add_argument("--id", required=True, help="Sample id")
    render.add_argument("--out", type=Path, required=True, help="Output .pgm file")
    render.set_defaults(handler=cmd_render)

    return parser


def _configure_logging(verbosity: int) -> None:
    logging.basicConfig(
        level=_LOG_LEVELS[min(verbosity, len(_LOG_LEVELS) - 1)],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
