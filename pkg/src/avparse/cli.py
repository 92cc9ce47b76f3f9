"""Command-line surface: parse, eval, sweep, synth, ablate, verify.

Exit codes: 0 success, 1 internal error, 2 invalid input.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .bundles import (
    FORMAT_VERSION,
    BundleError,
    GroundTruth,
    ScoreBundle,
    load_bundle,
    load_ground_truth,
)
from .config import PRESETS, ConfigError, EngineConfig
from .metrics import (
    OBJECTIVE_KEYS,
    MetricsReport,
    evaluate_corpus,
    format_report,
    report_to_dict,
    write_report,
    write_report_csv,
)
from .parsing import ParsedVideo, load_predictions, parse_video, predictions_to_dict
from .synth import SynthSpec, write_corpus
from .verify import verify_corpus

ABLATION_ROWS = (
    ("full", ()),
    ("no_cosine", ("use_cosine_scale",)),
    ("no_dynamic", ("use_dynamic_thresholds",)),
    ("no_refine", ("use_refinement",)),
    ("no_select", ("use_class_selection",)),
)


@dataclass(frozen=True)
class SweepGrid:
    """Per-parameter candidate lists and the metric to rank by."""

    alpha: tuple[float, ...]
    tau0: tuple[float, ...]
    tau_f: tuple[float, ...]
    tau_r: tuple[float, ...]
    lambda_: tuple[float, ...]
    objective: str

    def __post_init__(self) -> None:
        for name in ("alpha", "tau0", "tau_f", "tau_r", "lambda_"):
            if not getattr(self, name):
                raise ConfigError(f"sweep grid for {name.rstrip('_')} must not be empty")
        if self.objective not in OBJECTIVE_KEYS:
            raise ConfigError(
                f"unknown objective {self.objective!r}; expected one of {OBJECTIVE_KEYS}"
            )

    def combinations(self) -> list[tuple[float, float, float, float, float]]:
        return list(itertools.product(
            self.alpha, self.tau0, self.tau_f, self.tau_r, self.lambda_
        ))


# --- shared plumbing ----------------------------------------------------------


def collect_files(paths: Iterable[str], suffix: str) -> list[Path]:
    """Expand files and directories; directories contribute their *.{suffix}
    files in sorted order."""
    out: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted(p.glob(f"*{suffix}")))
        else:
            out.append(p)
    return out


def load_bundles(paths: Iterable[str]) -> list[ScoreBundle]:
    return [load_bundle(p) for p in collect_files(paths, ".bundle.json")]


def load_ground_truths(paths: Iterable[str]) -> list[GroundTruth]:
    return [load_ground_truth(p) for p in collect_files(paths, ".gt.json")]


def config_from_args(args: argparse.Namespace, include_scalars: bool = True) -> EngineConfig:
    if args.config and args.preset != "default":
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        config = EngineConfig.from_file(args.config)
    else:
        config = PRESETS[args.preset]
    overrides: dict[str, Any] = {}
    if include_scalars:
        for attr in ("alpha", "tau0", "tau_f", "tau_r", "lambda_"):
            value = getattr(args, attr)
            if value is not None:
                overrides[attr] = value
    if args.no_cosine:
        overrides["use_cosine_scale"] = False
    if args.no_dynamic:
        overrides["use_dynamic_thresholds"] = False
    if args.no_refine:
        overrides["use_refinement"] = False
    if args.no_select:
        overrides["use_class_selection"] = False
    return replace(config, **overrides) if overrides else config


def trace_to_dict(parsed: ParsedVideo) -> dict[str, Any]:
    pipelines = {}
    for modality, steps in parsed.traces.items():
        pipelines[modality] = {
            "selected": list(parsed.selected[modality].indices),
            "steps": [
                {
                    "confusion": tr.confusion.tolist(),
                    "w_hat": tr.w_hat.tolist(),
                    "cosine": tr.cosine,
                    "tau": tr.tau_after.tolist(),
                    "decisions": tr.decisions.tolist(),
                    "used_pinv": tr.used_pinv,
                    "updated": tr.updated,
                }
                for tr in steps
            ],
        }
    return {
        "format_version": FORMAT_VERSION,
        "video_id": parsed.video_id,
        "pipelines": pipelines,
    }


def _parse_one(path_and_config: tuple[str, dict[str, Any]]) -> dict[str, Any]:
    """Worker for parallel parsing; returns a result record or an error record."""
    path, config_doc = path_and_config
    try:
        config = EngineConfig.from_dict(config_doc)
        parsed = parse_video(load_bundle(path), config)
        return {
            "path": path,
            "video_id": parsed.video_id,
            "predictions": predictions_to_dict(parsed),
            "trace": trace_to_dict(parsed),
        }
    except (BundleError, ValueError) as exc:
        return {"path": path, "error": str(exc)}


# --- subcommands ---------------------------------------------------------------


def cmd_parse(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    files = collect_files(args.bundles, ".bundle.json")
    if not files:
        print("error: no bundle files found", file=sys.stderr)
        return 2
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(str(p), config.to_dict()) for p in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_parse_one, jobs))
    else:
        results = [_parse_one(job) for job in jobs]

    had_error = False
    for record in results:
        if "error" in record:
            had_error = True
            print(f"error: {record['path']}: {record['error']}", file=sys.stderr)
            continue
        pred_path = out_dir / f"{record['video_id']}.pred.json"
        pred_path.write_text(json.dumps(record["predictions"], indent=1) + "\n")
        if args.trace:
            trace_path = out_dir / f"{record['video_id']}.trace.json"
            trace_path.write_text(json.dumps(record["trace"], indent=1) + "\n")
        print(f"wrote {pred_path}")
    return 2 if had_error else 0


def _evaluate_files(pred_paths: Sequence[str], gt_paths: Sequence[str]) -> MetricsReport:
    predictions: dict[str, Any] = {}
    for path in collect_files(pred_paths, ".pred.json"):
        for vid, events in load_predictions(path).items():
            if vid in predictions:
                raise BundleError(f"duplicate predictions for video {vid!r}")
            predictions[vid] = events
    gts = {gt.video_id: gt for gt in load_ground_truths(gt_paths)}
    if not predictions or not gts:
        raise BundleError("need at least one prediction file and one ground-truth file")
    return evaluate_corpus(predictions, gts)


def cmd_eval(args: argparse.Namespace) -> int:
    report = _evaluate_files(args.pred, args.gt)
    print(format_report(report))
    if args.out:
        write_report(report, args.out)
        print(f"wrote {args.out}")
    if args.csv:
        write_report_csv(report, args.csv)
        print(f"wrote {args.csv}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = SweepGrid(
        alpha=tuple(args.alpha or [PRESETS["default"].alpha]),
        tau0=tuple(args.tau0 or [PRESETS["default"].tau0]),
        tau_f=tuple(args.tau_f or [PRESETS["default"].tau_f]),
        tau_r=tuple(args.tau_r or [PRESETS["default"].tau_r]),
        lambda_=tuple(args.lambda_ or [PRESETS["default"].lambda_]),
        objective=args.objective,
    )
    base = config_from_args(args, include_scalars=False)
    bundles = load_bundles(args.bundles)
    gts = {gt.video_id: gt for gt in load_ground_truths(args.gt)}
    if not bundles or not gts:
        raise BundleError("sweep needs bundles and ground truth")

    rows = []
    for alpha, tau0, tau_f, tau_r, lambda_ in grid.combinations():
        config = replace(base, alpha=alpha, tau0=tau0, tau_f=tau_f,
                         tau_r=tau_r, lambda_=lambda_)
        predictions = {b.video_id: parse_video(b, config).events for b in bundles}
        report = evaluate_corpus(predictions, gts)
        rows.append({
            "alpha": alpha, "tau0": tau0, "tau_f": tau_f, "tau_r": tau_r,
            "lambda": lambda_, "objective": report.value(grid.objective),
        })
    # Best objective first; ties broken by ascending parameter tuple.
    rows.sort(key=lambda r: (-r["objective"], r["alpha"], r["tau0"], r["tau_f"],
                             r["tau_r"], r["lambda"]))

    header = f"{'alpha':>7}{'tau0':>7}{'tau_f':>7}{'tau_r':>7}{'lambda':>8}  {grid.objective}"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r['alpha']:>7.3g}{r['tau0']:>7.3g}{r['tau_f']:>7.3g}"
              f"{r['tau_r']:>7.3g}{r['lambda']:>8.3g}  {r['objective']:.4f}")
    if args.out:
        doc = {"format_version": FORMAT_VERSION, "objective": grid.objective, "rows": rows}
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        num_videos=args.videos,
        num_segments=args.segments,
        num_categories=args.categories,
        events_min=args.events_min,
        events_max=args.events_max,
        drift=args.drift,
        noise_std=args.noise,
        feature_dim=args.feature_dim,
        feature_continuity=args.continuity,
        seed=args.seed,
    )
    out_dir = args.out or "."
    ids = write_corpus(spec, out_dir)
    print(f"wrote {len(ids)} bundle/ground-truth pairs to {out_dir}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    base = config_from_args(args)
    bundles = load_bundles(args.bundles)
    gts = {gt.video_id: gt for gt in load_ground_truths(args.gt)}
    if not bundles or not gts:
        raise BundleError("ablate needs bundles and ground truth")

    results = []
    for label, disabled in ABLATION_ROWS:
        config = base.with_toggles_off(*disabled) if disabled else base
        predictions = {b.video_id: parse_video(b, config).events for b in bundles}
        report = evaluate_corpus(predictions, gts)
        results.append((label, report))

    keys = list(OBJECTIVE_KEYS)
    header = f"{'row':<12}" + "".join(f"{k:>22}" for k in keys)
    print(header)
    print("-" * len(header))
    for label, report in results:
        print(f"{label:<12}" + "".join(f"{report.value(k):>22.4f}" for k in keys))
    if args.out:
        doc = {
            "format_version": FORMAT_VERSION,
            "rows": [
                {"label": label, "metrics": report_to_dict(report)}
                for label, report in results
            ],
        }
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    bundles = load_bundles(args.bundles)
    gts = load_ground_truths(args.gt) if args.gt else None
    result = verify_corpus(bundles, config, gts)
    for failure in result.failures:
        print(f"mismatch: {failure}", file=sys.stderr)
    print(result.summary())
    return 0 if result.ok else 1


# --- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    base_io = argparse.ArgumentParser(add_help=False)
    base_io.add_argument("--out", help="output file or directory")
    base_io.add_argument("--seed", type=int, default=0)
    base_io.add_argument("--jobs", type=int, default=1,
                         help="parallel workers for per-video work")

    toggles = argparse.ArgumentParser(add_help=False)
    group = toggles.add_argument_group("engine configuration")
    group.add_argument("--config", help="JSON config file")
    group.add_argument("--preset", choices=sorted(PRESETS), default="default",
                       help="named configuration preset")
    group.add_argument("--no-cosine", dest="no_cosine", action="store_true",
                       help="disable the feature-similarity scale")
    group.add_argument("--no-dynamic", dest="no_dynamic", action="store_true",
                       help="keep thresholds fixed at tau0")
    group.add_argument("--no-refine", dest="no_refine", action="store_true",
                       help="skip span-confidence filtering of candidates")
    group.add_argument("--no-select", dest="no_select", action="store_true",
                       help="skip video-level category selection")

    scalars = argparse.ArgumentParser(add_help=False)
    sgroup = scalars.add_argument_group("parameter overrides")
    sgroup.add_argument("--alpha", type=float, default=None)
    sgroup.add_argument("--tau0", type=float, default=None)
    sgroup.add_argument("--tau-f", dest="tau_f", type=float, default=None)
    sgroup.add_argument("--tau-r", dest="tau_r", type=float, default=None)
    sgroup.add_argument("--lambda", dest="lambda_", type=float, default=None)

    common = [base_io, toggles, scalars]

    parser = argparse.ArgumentParser(
        prog="avparse",
        description="Training-free audio-visual event localization over score bundles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=common,
                       help="turn score bundles into prediction files")
    p.add_argument("bundles", nargs="+", help="bundle files or directories")
    p.add_argument("--trace", action="store_true", help="also write per-segment traces")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", parents=common,
                       help="score prediction files against ground truth")
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--csv", help="also write a per-video delimited-text breakdown")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[base_io, toggles],
                       help="exhaustive hyperparameter grid")
    p.add_argument("--bundles", nargs="+", required=True)
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--objective", default="audio_visual_segment",
                   help=f"one of {', '.join(OBJECTIVE_KEYS)}")
    p.add_argument("--alpha", type=float, nargs="+", default=None,
                   help="candidate fusion weights")
    p.add_argument("--tau0", type=float, nargs="+", default=None,
                   help="candidate initial thresholds")
    p.add_argument("--tau-f", dest="tau_f", type=float, nargs="+", default=None,
                   help="candidate selection thresholds")
    p.add_argument("--tau-r", dest="tau_r", type=float, nargs="+", default=None,
                   help="candidate refinement thresholds")
    p.add_argument("--lambda", dest="lambda_", type=float, nargs="+", default=None,
                   help="candidate decay constants")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[base_io], help="generate a synthetic corpus")
    p.add_argument("--videos", type=int, default=10)
    p.add_argument("--segments", type=int, default=10)
    p.add_argument("--categories", type=int, default=10)
    p.add_argument("--events-min", type=int, default=1)
    p.add_argument("--events-max", type=int, default=3)
    p.add_argument("--drift", default="none", help="none | linear:<rate> | step")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--feature-dim", type=int, default=8)
    p.add_argument("--continuity", type=float, default=0.9)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ablate", parents=common,
                       help="full method plus each single toggle disabled")
    p.add_argument("--bundles", nargs="+", required=True)
    p.add_argument("--gt", nargs="+", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("verify", parents=common,
                       help="cross-check the engine against the naive oracle")
    p.add_argument("--bundles", nargs="+", required=True)
    p.add_argument("--gt", nargs="*", default=None,
                   help="optional ground truth; extends the check to metrics")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BundleError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # pragma: no cover - internal failure path
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
