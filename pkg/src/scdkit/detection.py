"""Turning frame scores into change-point times, batch and streaming.

``threshold_only`` mode marks every above-threshold frame and merges each
contiguous run to its highest-scoring frame; ``local_maxima`` mode keeps
strict local maxima above the threshold and suppresses maxima closer than
``min_separation`` to a higher one. The streaming detector finalizes the
decision for frame t exactly when frame t + lookahead has been consumed and
never revises it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Literal

import numpy as np

from .errors import StreamOrderError, ValidationError
from .types import ChangePointSet, ChangePointTimes, FrameScoreSequence

DetectorMode = Literal["threshold_only", "local_maxima"]


@dataclass(frozen=True)
class DetectorConfig:
    """Decision rule for converting boundary probabilities to change points."""

    threshold: float = 0.5
    mode: DetectorMode = "threshold_only"
    min_separation: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ValidationError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.mode not in ("threshold_only", "local_maxima"):
            raise ValidationError(f"unknown detector mode {self.mode!r}")
        if self.min_separation < 0:
            raise ValidationError("min_separation must be non-negative")

    def with_threshold(self, threshold: float) -> "DetectorConfig":
        return replace(self, threshold=threshold)


@dataclass(frozen=True)
class PeakinessReport:
    """How concentrated above-threshold activity is around true boundaries.

    ``run_length_histogram`` maps the longest contiguous above-threshold run
    length near a boundary to the number of boundaries showing it; counts sum
    to ``boundaries_with_activity``. The mean is over those boundaries and is
    NaN when no boundary has any active frame.
    """

    mean_active_frames_per_detection: float
    run_length_histogram: dict[int, int]
    boundaries_analyzed: int
    boundaries_with_activity: int


def _runs(active: np.ndarray) -> list[tuple[int, int]]:
    """Half-open (start, stop) spans of consecutive True entries."""
    padded = np.concatenate([[False], active, [False]])
    edges = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def _run_peaks(p1: np.ndarray, threshold: float) -> list[int]:
    """Highest-scoring frame of each above-threshold run, earliest on ties."""
    active = p1 > threshold
    return [start + int(np.argmax(p1[start:stop])) for start, stop in _runs(active)]


def _local_max_flags(p1: np.ndarray, last_is_endpoint: bool = True) -> np.ndarray:
    """Strict local maxima; sequence edges compare against one neighbor only.

    With ``last_is_endpoint=False`` the final frame is never a maximum, used
    on stream prefixes where its right neighbor is still unknown.
    """
    n = p1.shape[0]
    left_ok = np.ones(n, dtype=bool)
    right_ok = np.ones(n, dtype=bool)
    if n > 1:
        left_ok[1:] = p1[1:] > p1[:-1]
        right_ok[:-1] = p1[:-1] > p1[1:]
    if not last_is_endpoint:
        right_ok[-1] = False
    return left_ok & right_ok


def _nms_peaks(
    p1: np.ndarray,
    threshold: float,
    min_separation_frames: float,
    last_is_endpoint: bool = True,
) -> list[int]:
    """Local maxima above threshold after closest-merged-to-higher suppression.

    Maxima are visited in descending score (earliest first on ties); one is
    kept unless a kept maximum lies strictly closer than the separation.
    """
    flags = _local_max_flags(p1, last_is_endpoint) & (p1 > threshold)
    maxima = np.flatnonzero(flags)
    order = sorted(maxima.tolist(), key=lambda i: (-p1[i], i))
    kept: list[int] = []
    for i in order:
        if all(abs(i - k) >= min_separation_frames for k in kept):
            kept.append(i)
    return sorted(kept)


def _detect_indices(
    p1: np.ndarray, cfg: DetectorConfig, frame_shift: float, last_is_endpoint: bool = True
) -> list[int]:
    if cfg.mode == "threshold_only":
        return _run_peaks(p1, cfg.threshold)
    sep_frames = cfg.min_separation / frame_shift
    return _nms_peaks(p1, cfg.threshold, sep_frames, last_is_endpoint)


def detect_batch(scores: FrameScoreSequence, cfg: DetectorConfig) -> ChangePointTimes:
    """Change-point timestamps for a fully available score sequence."""
    indices = _detect_indices(scores.boundary_probs(), cfg, scores.frame_shift)
    return ChangePointTimes(np.asarray(indices, dtype=np.float64) * scores.frame_shift)


def detect_batch_frames(scores: FrameScoreSequence, cfg: DetectorConfig) -> ChangePointSet:
    """Same as ``detect_batch`` but in frame indices."""
    indices = _detect_indices(scores.boundary_probs(), cfg, scores.frame_shift)
    return ChangePointSet(np.asarray(indices, dtype=np.int64))


class StreamingDetector:
    """Single-consumer incremental detector with a fixed decision delay.

    The decision for frame t is made when frame t + lookahead has been fed
    (or at end of stream) from the data consumed so far, and is never
    revised. When every above-threshold run and its merge context fit inside
    the lookahead, the concatenated output equals ``detect_batch``.

    Not safe for concurrent feeding; may move between threads between calls.
    """

    def __init__(self, cfg: DetectorConfig, lookahead_frames: int, frame_shift: float):
        if lookahead_frames < 0:
            raise ValidationError("lookahead must be non-negative")
        if not (frame_shift > 0):
            raise ValidationError("frame_shift must be positive")
        self.cfg = cfg
        self.lookahead = lookahead_frames
        self.frame_shift = frame_shift
        self._p1: list[float] = []
        self._decided = 0
        self._emitted: list[int] = []
        self._finished = False

    @property
    def frames_consumed(self) -> int:
        return len(self._p1)

    def feed(self, log_p0: float, log_p1: float, index: int | None = None) -> list[float]:
        """Consume one frame; return timestamps finalized by this frame."""
        if self._finished:
            raise StreamOrderError("stream already finished")
        if index is not None and index != len(self._p1):
            raise StreamOrderError(
                f"expected frame {len(self._p1)}, got frame {index}"
            )
        if not (np.isfinite(log_p0) and np.isfinite(log_p1)) or log_p1 > 0 or log_p0 > 0:
            raise ValidationError("frame log scores must be finite and <= 0")
        self._p1.append(float(np.exp(log_p1)))
        emitted: list[float] = []
        while self._decided + self.lookahead < len(self._p1):
            emitted.extend(self._decide(self._decided, last_is_endpoint=False))
            self._decided += 1
        return emitted

    def finish(self) -> list[float]:
        """Flush decisions for the frames still inside the lookahead."""
        self._finished = True
        emitted: list[float] = []
        while self._decided < len(self._p1):
            emitted.extend(self._decide(self._decided, last_is_endpoint=True))
            self._decided += 1
        return emitted

    def _decide(self, t: int, last_is_endpoint: bool) -> list[float]:
        prefix = np.asarray(self._p1)
        if self.cfg.mode == "threshold_only":
            keep = self._decide_run_peak(prefix, t)
        else:
            sep = self.cfg.min_separation / self.frame_shift
            peaks = _nms_peaks(prefix, self.cfg.threshold, sep, last_is_endpoint)
            keep = t in peaks and not any(
                abs(t - e) < sep for e in self._emitted
            )
        if not keep:
            return []
        self._emitted.append(t)
        return [t * self.frame_shift]

    def _decide_run_peak(self, prefix: np.ndarray, t: int) -> bool:
        threshold = self.cfg.threshold
        if prefix[t] <= threshold:
            return False
        start = t
        while start > 0 and prefix[start - 1] > threshold:
            start -= 1
        stop = t + 1
        while stop < prefix.shape[0] and prefix[stop] > threshold:
            stop += 1
        if self._emitted and start <= self._emitted[-1] < t:
            return False  # this run already produced a detection
        return t == start + int(np.argmax(prefix[start:stop]))


def detect_streaming(
    frames: Iterable[tuple[float, float]],
    cfg: DetectorConfig,
    lookahead_frames: int,
    frame_shift: float,
) -> Iterator[float]:
    """Generator form of ``StreamingDetector`` over (log_p0, log_p1) pairs."""
    detector = StreamingDetector(cfg, lookahead_frames, frame_shift)
    for log_p0, log_p1 in frames:
        yield from detector.feed(log_p0, log_p1)
    yield from detector.finish()


def aggregate_peakiness(reports: Iterable[PeakinessReport]) -> PeakinessReport:
    """Merge per-file peakiness reports into one corpus-level report."""
    histogram: Counter[int] = Counter()
    analyzed = 0
    for report in reports:
        histogram.update(report.run_length_histogram)
        analyzed += report.boundaries_analyzed
    with_activity = sum(histogram.values())
    if with_activity:
        mean = sum(length * count for length, count in histogram.items()) / with_activity
    else:
        mean = float("nan")
    return PeakinessReport(
        mean_active_frames_per_detection=mean,
        run_length_histogram=dict(sorted(histogram.items())),
        boundaries_analyzed=analyzed,
        boundaries_with_activity=with_activity,
    )


def peakiness(
    scores: FrameScoreSequence,
    refs: ChangePointSet,
    cfg: DetectorConfig,
    window: int,
) -> PeakinessReport:
    """Longest above-threshold run within +/- window frames of each boundary."""
    if window < 1:
        raise ValidationError("peakiness window must be at least 1 frame")
    refs.validate_for(len(scores))
    p1 = scores.boundary_probs()
    active = p1 > cfg.threshold
    histogram: Counter[int] = Counter()
    for z in refs.positions:
        lo = max(int(z) - window, 0)
        hi = min(int(z) + window, len(scores) - 1)
        spans = _runs(active[lo : hi + 1])
        if spans:
            histogram[max(stop - start for start, stop in spans)] += 1
    with_activity = sum(histogram.values())
    if with_activity:
        mean = sum(length * count for length, count in histogram.items()) / with_activity
    else:
        mean = float("nan")
    return PeakinessReport(
        mean_active_frames_per_detection=mean,
        run_length_histogram=dict(sorted(histogram.items())),
        boundaries_analyzed=len(refs),
        boundaries_with_activity=with_activity,
    )
