"""Command line: extract score bundles from videos.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 backend unavailable.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from typing import Sequence

from .backends import BACKEND_NAMES, BackendUnavailableError
from .extract import ExtractorJob, extract, load_vocabulary
from .media import MediaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avextract",
        description="Produce score-bundle files from videos for the avparse engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="extract one video into a bundle file")
    p.add_argument("--video", required=True, help="video file (frames via OpenCV)")
    p.add_argument("--vocab", required=True,
                   help="JSON array of {id, audio_prompt, visual_prompt}")
    p.add_argument("--backend", default="spectral", choices=BACKEND_NAMES)
    p.add_argument("--segment-seconds", type=float, default=1.0)
    p.add_argument("--audio", default=None,
                   help="WAV audio track; defaults to a sidecar <video>.wav")
    p.add_argument("--out", required=True, help="bundle file to write")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractorJob(
            video_path=args.video,
            vocabulary=load_vocabulary(args.vocab),
            output_path=args.out,
            backend=args.backend,
            segment_seconds=args.segment_seconds,
            audio_path=args.audio,
        )
        path = extract(job)
    except BackendUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (MediaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # pragma: no cover - internal failure path
        traceback.print_exc()
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
