"""Command line for the feature extractor.

    featext extract --images DIR --strategies total,half,last \
        --out FILE --seed N [--finetune-epochs E] [--project W] \
        [--weights pretrained|random|PATH]

    featext validate --file FILE
"""

from __future__ import annotations

import argparse
import sys

from .extractor import ExtractionConfig, extract
from .formats import validate_against_format


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="featext")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="extract features from a class-per-directory image tree")
    ex.add_argument("--images", required=True, help="root directory, one subdirectory per class")
    ex.add_argument(
        "--strategies",
        default="total,half,last",
        help="comma-separated freezing strategies (total, half, last)",
    )
    ex.add_argument("--out", required=True, help="output feature file (.lymf)")
    ex.add_argument("--seed", type=int, required=True)
    ex.add_argument("--finetune-epochs", type=int, default=0)
    ex.add_argument("--project", type=int, default=None, help="random-projection width")
    ex.add_argument(
        "--weights",
        default="pretrained",
        help="'pretrained' (ImageNet), 'random' (seeded), or a state-dict path",
    )
    ex.add_argument("--batch-size", type=int, default=8)
    ex.set_defaults(func=cmd_extract)

    val = sub.add_parser("validate", help="check a feature file against the binary format")
    val.add_argument("--file", required=True)
    val.set_defaults(func=cmd_validate)
    return parser


def cmd_extract(args: argparse.Namespace) -> int:
    config = ExtractionConfig(
        image_root=args.images,
        output_path=args.out,
        strategies=args.strategies.split(","),
        seed=args.seed,
        weights=args.weights,
        fine_tune_epochs=args.finetune_epochs,
        projection_width=args.project,
        batch_size=args.batch_size,
    )
    result = extract(config)
    print(
        f"wrote {result.n_records} records (dim {result.dim}, classes {result.class_names}) "
        f"to {result.output_path}; {result.n_skipped} skipped; manifest {result.manifest_path}"
    )
    report = validate_against_format(result.output_path)
    if not report.ok:
        for problem in report.problems:
            print(f"format check: {problem}", file=sys.stderr)
        return 1
    print("format check: pass")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_against_format(args.file)
    if report.ok:
        print(
            f"pass: {report.n_records} records, dim {report.dim}, "
            f"classes {report.class_names}"
        )
        return 0
    for problem in report.problems:
        print(f"fail: {problem}", file=sys.stderr)
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return 2 if exit_.code not in (0, None) else 0
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
