"""Cross-checking the engine against the naive oracle.

Decisions, selections, and event spans must match exactly; every numeric
intermediate (confusion matrix, ratio estimate, thresholds, span scores,
metrics) must agree within tolerance.  Closeness is judged the numpy way:
|a - b| <= atol + rtol * |b|.

The ratio estimate gets one extra allowance.  It is the solution of a linear
system whose condition number reaches ~1/epsilon_reg whenever a selected
category has never been decided positive, and two independent correct solvers
can only be expected to agree to roughly cond * machine-eps in relative terms.
The allowance kicks in only on such ill-conditioned steps; thresholds and
decisions are still held to the strict tolerance (enormous updates clamp to
the same boundary on both sides).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from . import oracle
from .bundles import GroundTruth, ScoreBundle, bundle_to_dict, ground_truth_to_dict
from .config import MODALITIES, EngineConfig
from .metrics import OBJECTIVE_KEYS, evaluate_corpus
from .parsing import ParsedVideo, parse_video

ATOL = 1e-9
RTOL = 1e-9


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    videos: int
    failures: tuple[str, ...]

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status}: {self.videos} video(s) checked, {len(self.failures)} mismatch(es)"


def _close(a: Any, b: Any, atol: float, rtol: float) -> bool:
    return bool(np.allclose(np.asarray(a, dtype=np.float64),
                            np.asarray(b, dtype=np.float64),
                            atol=atol, rtol=rtol))


def _ratio_slack(confusion: Any, ratio: Any, epsilon_reg: float) -> float:
    """Absolute agreement floor for the ratio estimate on one step."""
    m = np.asarray(confusion, dtype=np.float64)
    if m.size == 0 or not m.any():
        return 0.0
    a = m + epsilon_reg * np.eye(m.shape[0])
    cond = float(np.linalg.norm(a, 1) * np.linalg.norm(np.linalg.pinv(a), 1))
    scale = max(1.0, float(np.max(np.abs(ratio))))
    return 64.0 * np.finfo(np.float64).eps * cond * scale


def compare_video(
    parsed: ParsedVideo,
    reference: Mapping[str, Any],
    atol: float = ATOL,
    rtol: float = RTOL,
    epsilon_reg: float = 1e-6,
    conditioning_slack: bool = True,
) -> list[str]:
    """All discrepancies between an engine parse and an oracle parse of one video."""
    problems: list[str] = []
    vid = parsed.video_id

    for modality in MODALITIES:
        ref_selected = tuple(reference["selected"][modality])
        if tuple(parsed.selected[modality].indices) != ref_selected:
            problems.append(
                f"{vid}/{modality}: selected categories differ: "
                f"engine {parsed.selected[modality].indices} vs oracle {ref_selected}"
            )
            continue

        ref_traces = reference["traces"][modality]
        traces = parsed.traces[modality]
        if len(traces) != len(ref_traces):
            problems.append(f"{vid}/{modality}: trace length differs")
            continue
        for t, (eng, ref) in enumerate(zip(traces, ref_traces), start=1):
            if eng.decisions.tolist() != ref["decisions"]:
                problems.append(
                    f"{vid}/{modality} t={t}: decisions differ: "
                    f"{eng.decisions.tolist()} vs {ref['decisions']}"
                )
            if not _close(eng.confusion, ref["confusion"], atol, rtol):
                problems.append(f"{vid}/{modality} t={t}: confusion matrix differs")
            slack = (_ratio_slack(ref["confusion"], ref["w_hat"], epsilon_reg)
                     if conditioning_slack else 0.0)
            if not _close(eng.w_hat, ref["w_hat"], atol + slack, rtol):
                problems.append(f"{vid}/{modality} t={t}: ratio estimate differs")
            if not _close(eng.tau_after, ref["tau_after"], atol, rtol):
                problems.append(f"{vid}/{modality} t={t}: thresholds differ")
            if not _close([eng.cosine], [ref["cosine"]], atol, rtol):
                problems.append(f"{vid}/{modality} t={t}: cosine scale differs")
            if eng.used_pinv != ref["used_pinv"] or eng.updated != ref["updated"]:
                problems.append(f"{vid}/{modality} t={t}: update path differs")

        if parsed.decisions[modality].tolist() != reference["decisions"][modality]:
            problems.append(f"{vid}/{modality}: decision matrix differs")

    eng_events = [(e.modality, e.category_id, e.start, e.end) for e in parsed.events]
    ref_events = [(e["modality"], e["category_id"], e["start"], e["end"])
                  for e in reference["events"]]
    if eng_events != ref_events:
        problems.append(f"{vid}: event lists differ: {eng_events} vs {ref_events}")
    else:
        for eng, ref in zip(parsed.events, reference["events"]):
            if not _close([eng.span_score], [ref["span_score"]], atol, rtol):
                problems.append(
                    f"{vid}: span score differs for {eng.category_id}"
                    f" [{eng.start}, {eng.end}] ({eng.modality})"
                )
    return problems


def verify_corpus(
    bundles: Sequence[ScoreBundle],
    config: EngineConfig,
    ground_truths: Sequence[GroundTruth] | None = None,
    atol: float = ATOL,
    rtol: float = RTOL,
    conditioning_slack: bool = True,
) -> VerifyResult:
    """Parse every bundle with both implementations and compare; when ground
    truth is supplied, also compare the aggregated metric reports."""
    failures: list[str] = []
    config_doc = config.to_dict()
    parsed_by_id: dict[str, ParsedVideo] = {}
    oracle_events: dict[str, list[dict[str, Any]]] = {}

    for bundle in bundles:
        parsed = parse_video(bundle, config)
        reference = oracle.parse_video(bundle_to_dict(bundle), config_doc)
        parsed_by_id[bundle.video_id] = parsed
        oracle_events[bundle.video_id] = reference["events"]
        failures.extend(compare_video(
            parsed, reference, atol, rtol, config.epsilon_reg, conditioning_slack
        ))

    if ground_truths is not None and bundles:
        gt_by_id = {gt.video_id: gt for gt in ground_truths}
        engine_report = evaluate_corpus(
            {vid: parsed_by_id[vid].events for vid in parsed_by_id}, gt_by_id
        )
        reference_report = oracle.naive_report(
            oracle_events, {gt.video_id: ground_truth_to_dict(gt) for gt in ground_truths}
        )
        for key in OBJECTIVE_KEYS:
            eng_value = engine_report.value(key)
            ref_value = reference_report[key]
            if not _close([eng_value], [ref_value], atol, rtol):
                failures.append(
                    f"metrics: {key} differs: engine {eng_value} vs oracle {ref_value}"
                )

    return VerifyResult(ok=not failures, videos=len(bundles), failures=tuple(failures))
