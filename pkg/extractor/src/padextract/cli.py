"""The ``padextract`` command."""

import argparse
import json
import sys

from . import ExtractError
from .extract import ExtractJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padextract",
        description="Inception-v3 pool3 embeddings -> PADEMB1 files",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("extract", help="embed every image in a directory")
    p.add_argument("--images", required=True, help="directory of PNG/JPEG images")
    p.add_argument("--out", required=True, help="output .pademb path")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument(
        "--weights",
        default="pretrained",
        help="'pretrained' (IMAGENET1K_V1), 'random' (seeded init, for "
        "format validation), or a checkpoint path (default: pretrained)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractJob(
        image_dir=args.images,
        out_path=args.out,
        batch_size=args.batch,
        weights=args.weights,
    )
    try:
        sidecar = extract(job)
    except ExtractError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return exc.exit_code
    print(
        "wrote %d embeddings (dim %d) to %s [%s]"
        % (sidecar["count"], sidecar["dim"], args.out, sidecar["weights"])
    )
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
