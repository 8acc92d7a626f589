"""Boundary scoring: collar matching, precision/recall/F1, threshold tuning.

Matching is greedy closest-first inside a forgiveness collar. Corpus metrics
always pool matched/unmatched counts across files; they are never averages
of per-file scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .types import ChangePointTimes, FrameScoreSequence

ScoredFile = tuple[FrameScoreSequence, ChangePointTimes]


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching hypothesis boundaries against references."""

    pairs: tuple[tuple[float, float], ...]
    unmatched_refs: tuple[float, ...]
    unmatched_hyps: tuple[float, ...]


@dataclass(frozen=True)
class PRPoint:
    """Precision/recall/F1 at one decision threshold."""

    threshold: float
    precision: float
    recall: float
    f1: float


def match_changepoints(
    refs: ChangePointTimes, hyps: ChangePointTimes, forgiveness: float
) -> MatchResult:
    """Greedy closest-first matching within the forgiveness collar.

    Repeatedly pairs the globally closest unmatched (reference, hypothesis)
    whose distance is at most ``forgiveness``. Ties break to the earlier
    reference, then the earlier hypothesis.
    """
    if forgiveness < 0:
        raise ValidationError(f"forgiveness must be non-negative, got {forgiveness}")
    ref_times = refs.times
    hyp_times = hyps.times
    candidates = sorted(
        (abs(r - h), r, h, i, j)
        for i, r in enumerate(ref_times)
        for j, h in enumerate(hyp_times)
        if abs(r - h) <= forgiveness
    )
    taken_refs: set[int] = set()
    taken_hyps: set[int] = set()
    pairs: list[tuple[float, float]] = []
    for _, r, h, i, j in candidates:
        if i in taken_refs or j in taken_hyps:
            continue
        taken_refs.add(i)
        taken_hyps.add(j)
        pairs.append((float(r), float(h)))
    unmatched_refs = tuple(float(r) for i, r in enumerate(ref_times) if i not in taken_refs)
    unmatched_hyps = tuple(float(h) for j, h in enumerate(hyp_times) if j not in taken_hyps)
    return MatchResult(tuple(pairs), unmatched_refs, unmatched_hyps)


def prf_from_counts(tp: int, fp: int, fn: int, threshold: float = math.nan) -> PRPoint:
    """Precision/recall/F1 from pooled counts.

    When there are no hypotheses at all, precision is 1 (no false alarms);
    when there are no references at all, recall is 1 (nothing missed).
    """
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return PRPoint(threshold=threshold, precision=precision, recall=recall, f1=f1)


def precision_recall_f1(match: MatchResult, threshold: float = math.nan) -> PRPoint:
    return prf_from_counts(
        len(match.pairs), len(match.unmatched_hyps), len(match.unmatched_refs), threshold
    )


def pooled_prf(matches: Sequence[MatchResult], threshold: float = math.nan) -> PRPoint:
    """Corpus-level metrics from pooled counts across files."""
    tp = sum(len(m.pairs) for m in matches)
    fp = sum(len(m.unmatched_hyps) for m in matches)
    fn = sum(len(m.unmatched_refs) for m in matches)
    return prf_from_counts(tp, fp, fn, threshold)


def threshold_candidates(
    files: Sequence[ScoredFile], max_candidates: int | None = None
) -> np.ndarray:
    """Midpoints between consecutive distinct boundary probabilities.

    0 and 1 are appended as virtual extremes so the candidate set always
    contains a threshold below every score and one above every score
    (detection is strict, so a threshold of 1 predicts nothing).
    ``max_candidates`` evenly subsamples the list, keeping both ends.
    """
    probs = np.unique(np.concatenate([seq.boundary_probs() for seq, _ in files]))
    extended = np.unique(np.concatenate([[0.0], probs, [1.0]]))
    candidates = np.unique((extended[:-1] + extended[1:]) / 2.0)
    if max_candidates is not None and candidates.size > max_candidates:
        keep = np.unique(
            np.round(np.linspace(0, candidates.size - 1, max_candidates)).astype(int)
        )
        candidates = candidates[keep]
    return candidates


def _pooled_f1_at(files, detector_cfg, forgiveness: float, threshold: float) -> PRPoint:
    from .detection import detect_batch

    cfg = detector_cfg.with_threshold(threshold)
    matches = [
        match_changepoints(refs, detect_batch(seq, cfg), forgiveness) for seq, refs in files
    ]
    return pooled_prf(matches, threshold)


def tune_threshold(
    dev_files: Sequence[ScoredFile],
    detector_cfg,
    forgiveness: float,
    *,
    max_candidates: int | None = None,
) -> float:
    """Decision threshold maximizing pooled dev-set F1.

    Sweeps the finite candidate set from ``threshold_candidates``; ties break
    toward the higher threshold.
    """
    if not dev_files:
        raise ValidationError("threshold tuning needs a non-empty development set")
    best_threshold = None
    best_f1 = -1.0
    for threshold in threshold_candidates(dev_files, max_candidates):
        point = _pooled_f1_at(dev_files, detector_cfg, forgiveness, float(threshold))
        if point.f1 >= best_f1:
            best_f1 = point.f1
            best_threshold = float(threshold)
    return best_threshold


def pr_curve(
    test_files: Sequence[ScoredFile],
    detector_cfg,
    forgiveness: float,
    *,
    max_points: int | None = None,
) -> list[PRPoint]:
    """One pooled PRPoint per candidate threshold, thresholds descending."""
    if not test_files:
        raise ValidationError("PR curve needs a non-empty test set")
    candidates = threshold_candidates(test_files, max_points)[::-1]
    return [
        _pooled_f1_at(test_files, detector_cfg, forgiveness, float(t)) for t in candidates
    ]


def collar_sweep(collars, experiment_cfg):
    """Train one model per collar configuration and report test F1 per collar.

    Thin wrapper over the experiment harness so scoring code stays importable
    without the training stack.
    """
    from .experiments import run_collar_sweep

    return run_collar_sweep(experiment_cfg, collars)
