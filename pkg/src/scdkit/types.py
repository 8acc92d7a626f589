"""Shared domain types for frame-level speaker change detection.

Scores live in the natural-log domain everywhere; probabilities appear only
at I/O boundaries. All types are immutable after construction and safe to
share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ValidationError

CollarSemantics = Literal["inclusive", "strict"]
EdgePolicy = Literal["clamp", "reject"]

# Allowed per-frame deviation of exp(log_p0) + exp(log_p1) from 1.
NORMALIZATION_TOL = 1e-6


def _as_readonly(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FrameScoreSequence:
    """Per-frame log-likelihoods of the no-boundary and boundary events.

    Args:
        log_p0: Natural-log likelihood of "no boundary at this frame".
        log_p1: Natural-log likelihood of "boundary at this frame".
        frame_shift: Seconds between consecutive frames.
        normalized: When True (the default), each frame must satisfy
            exp(log_p0) + exp(log_p1) == 1 within ``NORMALIZATION_TOL``.
            Violations raise instead of being silently renormalized.
    """

    log_p0: np.ndarray
    log_p1: np.ndarray
    frame_shift: float
    normalized: bool = True

    def __post_init__(self):
        lp0 = _as_readonly(np.atleast_1d(self.log_p0), np.float64)
        lp1 = _as_readonly(np.atleast_1d(self.log_p1), np.float64)
        if lp0.ndim != 1 or lp1.ndim != 1:
            raise ValidationError("log scores must be one-dimensional")
        if lp0.shape != lp1.shape:
            raise ValidationError(
                f"log_p0 and log_p1 lengths differ: {lp0.shape[0]} vs {lp1.shape[0]}"
            )
        if lp0.shape[0] < 1:
            raise ValidationError("a score sequence needs at least one frame")
        if not (self.frame_shift > 0):
            raise ValidationError(f"frame_shift must be positive, got {self.frame_shift}")
        for name, arr in (("log_p0", lp0), ("log_p1", lp1)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
            if np.any(arr > 0):
                raise ValidationError(f"{name} contains log-likelihoods above 0")
        if self.normalized:
            total = np.exp(lp0) + np.exp(lp1)
            worst = float(np.max(np.abs(total - 1.0)))
            if worst > NORMALIZATION_TOL:
                raise ValidationError(
                    f"scores not normalized: per-frame mass off by up to {worst:.3g}"
                )
        object.__setattr__(self, "log_p0", lp0)
        object.__setattr__(self, "log_p1", lp1)

    def __len__(self) -> int:
        return self.log_p0.shape[0]

    @property
    def n_frames(self) -> int:
        return self.log_p0.shape[0]

    def boundary_probs(self) -> np.ndarray:
        """Per-frame boundary probabilities exp(log_p1)."""
        return np.exp(self.log_p1)

    @classmethod
    def from_probs(
        cls, probs: np.ndarray, frame_shift: float, clamp: float = 1e-12
    ) -> "FrameScoreSequence":
        """Build a sequence from boundary probabilities in [0, 1].

        Exact 0 and 1 are clamped to ``clamp`` and ``1 - clamp`` so the log
        domain stays finite.
        """
        p = np.asarray(probs, dtype=np.float64)
        if p.size and (np.min(p) < 0 or np.max(p) > 1):
            raise ValidationError("boundary probabilities must lie in [0, 1]")
        p = np.clip(p, clamp, 1.0 - clamp)
        return cls(log_p0=np.log1p(-p), log_p1=np.log(p), frame_shift=frame_shift)


@dataclass(frozen=True)
class LabelSequence:
    """Binary per-frame boundary labels (1 marks an annotated boundary)."""

    labels: np.ndarray

    def __post_init__(self):
        lab = _as_readonly(np.atleast_1d(self.labels), np.int64)
        if lab.ndim != 1:
            raise ValidationError("labels must be one-dimensional")
        if lab.size and not np.all((lab == 0) | (lab == 1)):
            raise ValidationError("labels must be 0 or 1")
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class ChangePointSet:
    """Sparse annotated boundary frame indices, strictly increasing."""

    positions: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        pos = _as_readonly(np.atleast_1d(self.positions), np.int64)
        if pos.ndim != 1:
            raise ValidationError("positions must be one-dimensional")
        if pos.size:
            if np.any(pos < 0):
                raise ValidationError("change-point frame indices must be non-negative")
            if np.any(np.diff(pos) <= 0):
                raise ValidationError("change-point frame indices must be strictly increasing")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def validate_for(self, n_frames: int) -> None:
        """Raise unless every position lies in [0, n_frames)."""
        if len(self) and int(self.positions[-1]) >= n_frames:
            raise ValidationError(
                f"change point {int(self.positions[-1])} outside sequence of {n_frames} frames"
            )


@dataclass(frozen=True)
class ChangePointTimes:
    """Boundary timestamps in seconds, strictly increasing and non-negative."""

    times: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float64))

    def __post_init__(self):
        t = _as_readonly(np.atleast_1d(self.times), np.float64)
        if t.ndim != 1:
            raise ValidationError("times must be one-dimensional")
        if t.size:
            if not np.all(np.isfinite(t)):
                raise ValidationError("boundary times must be finite")
            if t[0] < 0:
                raise ValidationError("boundary times must be non-negative")
            if np.any(np.diff(t) <= 0):
                raise ValidationError("boundary times must be strictly increasing")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return self.times.shape[0]


@dataclass(frozen=True)
class CollarConfig:
    """Half-width and semantics of the training collar around a boundary.

    ``inclusive`` windows span [z-c, z+c] (width 2c+1); ``strict`` windows
    span [z-c+1, z+c-1] (width 2c-1) and require c >= 1. ``edge_policy``
    decides whether windows near the sequence edge are clamped or rejected.
    """

    collar_frames: int
    semantics: CollarSemantics = "inclusive"
    edge_policy: EdgePolicy = "clamp"

    def __post_init__(self):
        if self.collar_frames < 0:
            raise ValidationError(f"collar_frames must be >= 0, got {self.collar_frames}")
        if self.semantics not in ("inclusive", "strict"):
            raise ValidationError(f"unknown collar semantics {self.semantics!r}")
        if self.semantics == "strict" and self.collar_frames < 1:
            raise ValidationError("strict collar semantics requires collar_frames >= 1")
        if self.edge_policy not in ("clamp", "reject"):
            raise ValidationError(f"unknown edge policy {self.edge_policy!r}")


def collar_window(z: int, cfg: CollarConfig, n_frames: int) -> range:
    """Frame-index window the collar permits for a boundary annotated at z.

    Returns an inclusive-of-endpoints ``range``. With ``edge_policy="clamp"``
    the window is intersected with [0, n_frames); with ``"reject"`` a window
    that would leave the sequence raises.
    """
    if not (0 <= z < n_frames):
        raise ValidationError(f"change point {z} outside sequence of {n_frames} frames")
    c = cfg.collar_frames
    if cfg.semantics == "inclusive":
        lo, hi = z - c, z + c
    else:
        lo, hi = z - c + 1, z + c - 1
    if lo < 0 or hi > n_frames - 1:
        if cfg.edge_policy == "reject":
            raise ValidationError(
                f"collar window [{lo}, {hi}] for change point {z} leaves [0, {n_frames - 1}]"
            )
        lo, hi = max(lo, 0), min(hi, n_frames - 1)
    return range(lo, hi + 1)


def labels_to_changepoints(labels: LabelSequence) -> ChangePointSet:
    """Indices of the positively labelled frames, ascending."""
    return ChangePointSet(np.flatnonzero(labels.labels).astype(np.int64))


def changepoints_to_labels(points: ChangePointSet, n_frames: int) -> LabelSequence:
    """Dense 0/1 label vector with 1 at each change-point frame."""
    points.validate_for(n_frames)
    labels = np.zeros(n_frames, dtype=np.int64)
    labels[points.positions] = 1
    return LabelSequence(labels)


def frame_to_time(index: int, frame_shift: float) -> float:
    """Timestamp of a frame index: index * frame_shift."""
    return index * frame_shift


def time_to_frame(time: float, frame_shift: float) -> int:
    """Frame index nearest a timestamp, ties rounding half up."""
    if time < 0:
        raise ValidationError(f"timestamps must be non-negative, got {time}")
    return int(math.floor(time / frame_shift + 0.5))


def changepoints_to_times(points: ChangePointSet, frame_shift: float) -> ChangePointTimes:
    """Convert frame indices to timestamps."""
    return ChangePointTimes(points.positions.astype(np.float64) * frame_shift)


def times_to_changepoints(
    times: ChangePointTimes, frame_shift: float, n_frames: int
) -> ChangePointSet:
    """Convert timestamps to frame indices, rejecting out-of-range results.

    Two distinct timestamps that round to the same frame are an error, since
    change-point sets are strictly increasing.
    """
    idx = np.floor(times.times / frame_shift + 0.5).astype(np.int64)
    if idx.size:
        if idx[-1] >= n_frames or idx[0] < 0:
            raise ValidationError(
                f"timestamp maps to frame outside [0, {n_frames}) at shift {frame_shift}"
            )
        if np.any(np.diff(idx) <= 0):
            raise ValidationError("distinct timestamps map to the same frame index")
    return ChangePointSet(idx)
