"""Dynamic per-category thresholds driven by a within-video label-shift estimate.

One state machine per (video, pipeline).  Segment t is decided against
thresholds that were just updated from the history of segments 1..t-1: a soft
confusion matrix built from past scores and decisions is inverted, applied to
the current score vector, scaled by the cosine similarity of adjacent visual
features, and folded into the thresholds through an exponential decay in each
category's occurrence count.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .config import EngineConfig
from .fusion import SelectedCategories

# A regularized system whose elimination pivots fall below this is treated as
# singular and routed to the pseudo-inverse fallback.
SINGULAR_PIVOT = 1e-12


@dataclass(frozen=True)
class StepTrace:
    """Diagnostics for one segment: everything needed to replay the decision."""

    w_hat: np.ndarray  # (K,) estimated ratio, unclamped
    cosine: float  # feature-similarity scale actually applied
    confusion: np.ndarray  # (K, K) soft confusion matrix (zeros when no update ran)
    decisions: np.ndarray  # (K,) in {0, 1}
    tau_after: np.ndarray  # (K,) thresholds used for this segment's decisions
    used_pinv: bool = False
    updated: bool = False


@dataclass(frozen=True)
class ThresholdState:
    """Evolving per-pipeline state; segment t depends on everything before it."""

    selected: SelectedCategories
    tau: np.ndarray  # (K,) current thresholds
    tau1: np.ndarray  # (K,) initial thresholds
    z: np.ndarray  # (K,) occurrence counts through segment t-1
    history_scores: np.ndarray  # (t-1, K)
    history_decisions: np.ndarray  # (t-1, K) in {0, 1}
    prev_feature: np.ndarray | None
    t: int


def init_state(selected: SelectedCategories, config: EngineConfig) -> ThresholdState:
    """Fresh state at segment 1: all thresholds at tau0, empty history."""
    k = len(selected)
    tau = np.full(k, config.tau0, dtype=np.float64)
    return ThresholdState(
        selected=selected,
        tau=tau,
        tau1=tau.copy(),
        z=np.zeros(k, dtype=np.int64),
        history_scores=np.empty((0, k), dtype=np.float64),
        history_decisions=np.empty((0, k), dtype=np.uint8),
        prev_feature=None,
        t=1,
    )


def build_confusion(history_scores: np.ndarray, history_decisions: np.ndarray) -> np.ndarray:
    """Soft confusion matrix: entry (c_pred, c) averages score[c_pred] over
    segments where c was decided positive."""
    scores = np.asarray(history_scores, dtype=np.float64)
    decisions = np.asarray(history_decisions, dtype=np.float64)
    if scores.shape != decisions.shape:
        raise ValueError(f"shape mismatch: scores {scores.shape} vs decisions {decisions.shape}")
    n = scores.shape[0]
    if n < 1:
        raise ValueError("confusion matrix needs at least one history row")
    return (scores.T @ decisions) / n


def _regularized_inverse(matrix: np.ndarray, epsilon_reg: float) -> tuple[np.ndarray, bool]:
    """(M + eps*I)^-1 by dense LU solve; Moore-Penrose pseudo-inverse of M when
    the regularized system is still numerically singular."""
    m = np.asarray(matrix, dtype=np.float64)
    k = m.shape[0]
    a = m + epsilon_reg * np.eye(k)
    try:
        with warnings.catch_warnings():
            # Exactly-zero pivots warn before we can inspect them; the pivot
            # check below is the real gate.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    except (ValueError, scipy.linalg.LinAlgError):
        return np.linalg.pinv(m), True
    if np.abs(np.diag(lu)).min(initial=np.inf) < SINGULAR_PIVOT:
        return np.linalg.pinv(m), True
    inverse = scipy.linalg.lu_solve((lu, piv), np.eye(k), check_finite=False)
    return inverse, False


def invert_confusion(matrix: np.ndarray, epsilon_reg: float) -> np.ndarray:
    return _regularized_inverse(matrix, epsilon_reg)[0]


def cosine_scale(x_t: np.ndarray, x_prev: np.ndarray) -> float:
    """Cosine similarity of adjacent feature vectors; 0.0 if either has zero norm."""
    a = np.asarray(x_t, dtype=np.float64)
    b = np.asarray(x_prev, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"feature dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def estimate_ratio(m_inv: np.ndarray, segment_scores: np.ndarray, scale: float) -> np.ndarray:
    """Label-shift ratio estimate: (M^-1 @ scores) * scale.  Not clamped; may be
    negative, which raises thresholds."""
    scores = np.asarray(segment_scores, dtype=np.float64)
    if m_inv.shape[1] != scores.shape[0]:
        raise ValueError(f"shape mismatch: {m_inv.shape} @ {scores.shape}")
    return (m_inv @ scores) * scale


def update_thresholds(
    state: ThresholdState,
    w_hat: np.ndarray,
    lambda_: float,
    clamp: tuple[float, float],
) -> np.ndarray:
    """Exponential-decay threshold update, clamped into [lo, hi].

    tau_t = clamp(tau_{t-1} - tau_1 * exp(-lambda * z) * w_hat), with z the
    occurrence counts before this segment.
    """
    decay = np.exp(-lambda_ * state.z.astype(np.float64))
    raw = state.tau - state.tau1 * decay * np.asarray(w_hat, dtype=np.float64)
    return np.clip(raw, clamp[0], clamp[1])


def predict_segment(segment_scores: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """1 where the score strictly exceeds its category threshold, else 0."""
    scores = np.asarray(segment_scores, dtype=np.float64)
    if scores.shape != np.shape(tau):
        raise ValueError(f"shape mismatch: scores {scores.shape} vs tau {np.shape(tau)}")
    return (scores > tau).astype(np.uint8)


def step(
    state: ThresholdState,
    segment_scores: np.ndarray,
    feature: np.ndarray | None,
    config: EngineConfig,
) -> tuple[ThresholdState, StepTrace]:
    """Advance one segment: maybe update thresholds, then decide, then record.

    No update happens at t = 1, when dynamic thresholds are disabled, or while
    the history holds no positive decision (the confusion matrix would be all
    zero and its inversion meaningless).
    """
    k = len(state.selected)
    scores = np.asarray(segment_scores, dtype=np.float64)
    if scores.shape != (k,):
        raise ValueError(f"segment_scores must have length {k}, got shape {scores.shape}")

    can_update = (
        config.use_dynamic_thresholds
        and state.t >= 2
        and k > 0
        and int(state.z.sum()) > 0
    )
    if can_update:
        confusion = build_confusion(state.history_scores, state.history_decisions)
        m_inv, used_pinv = _regularized_inverse(confusion, config.epsilon_reg)
        if config.use_cosine_scale and feature is not None and state.prev_feature is not None:
            scale = cosine_scale(feature, state.prev_feature)
        else:
            scale = 1.0
        w_hat = estimate_ratio(m_inv, scores, scale)
        tau = update_thresholds(state, w_hat, config.lambda_, config.threshold_clamp)
    else:
        confusion = np.zeros((k, k), dtype=np.float64)
        w_hat = np.zeros(k, dtype=np.float64)
        scale = 1.0
        used_pinv = False
        tau = state.tau

    decisions = predict_segment(scores, tau)
    trace = StepTrace(
        w_hat=w_hat,
        cosine=scale,
        confusion=confusion,
        decisions=decisions,
        tau_after=tau,
        used_pinv=used_pinv,
        updated=can_update,
    )
    new_state = ThresholdState(
        selected=state.selected,
        tau=tau,
        tau1=state.tau1,
        z=state.z + decisions,
        history_scores=np.vstack([state.history_scores, scores[np.newaxis, :]]),
        history_decisions=np.vstack([state.history_decisions, decisions[np.newaxis, :]]),
        prev_feature=feature,
        t=state.t + 1,
    )
    return new_state, trace
