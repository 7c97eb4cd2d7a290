"""Command-line entry point.

    vtad-extract extract --manifest utts.tsv --encoder ecapa --out emb.tsv

Exit code 0 when at least one record was written (per-file decode failures
are reported on stderr but do not fail the run), 2 on any ExtractError.
"""

import argparse
import sys

from .errors import ExtractError
from .extract import extract_embeddings
from .manifest import parse_manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtad-extract", description="Turn audio manifests into embedding files"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("extract", help="encode every manifest row into one embedding file")
    ex.add_argument("--manifest", required=True, help="TSV of speaker, utterance, gender, wav path")
    ex.add_argument("--encoder", required=True, choices=("ecapa", "facodec"))
    ex.add_argument("--out", required=True, help="embedding file to write")
    ex.add_argument("--checkpoint", help="TorchScript checkpoint path (else the encoder's env var)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        rows = parse_manifest(args.manifest)
        summary = extract_embeddings(rows, args.encoder, args.out, checkpoint=args.checkpoint)
    except ExtractError as exc:
        print(f"vtad-extract-error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for row, reason in summary.failures:
        print(f"skipped {row.speaker_id}/{row.utterance_id}: {reason}", file=sys.stderr)
    print(
        f"wrote {summary.written} of {len(rows)} records to {summary.out_path} "
        f"(encoder={summary.encoder_tag} dim={summary.dim}, {len(summary.failures)} skipped)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
