"""File ingestion and emission.

Three newline-delimited UTF-8 formats plus the diarization conversion rule:

* RTTM ``SPEAKER`` records (diarization interchange),
* change-point lists: one timestamp in seconds per line, 3 decimals,
* frame-score files: a ``frame_shift=<seconds>`` header, then one boundary
  probability in [0, 1] per line.

Readers reject malformed input instead of repairing it; every parse error
carries the 1-based line number.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import ParseError, ValidationError
from .types import ChangePointTimes, FrameScoreSequence


@dataclass(frozen=True)
class SpeakerSegment:
    """A diarization segment: [start, end) seconds attributed to one speaker."""

    start: float
    end: float
    speaker_id: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(
                f"segment needs 0 <= start < end, got [{self.start}, {self.end})"
            )


def read_rttm(path: str | Path) -> dict[str, list[SpeakerSegment]]:
    """Parse SPEAKER records of an RTTM file, keyed by recording id.

    Non-SPEAKER lines are ignored. A SPEAKER line carries
    ``SPEAKER <file> <chan> <onset> <duration> <ortho> <stype> <name> <conf> [<slat>]``;
    onset and duration must be numeric with duration > 0.
    """
    recordings: dict[str, list[SpeakerSegment]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            fields = raw.split()
            if not fields or fields[0] != "SPEAKER":
                continue
            if len(fields) < 9:
                raise ParseError(
                    f"SPEAKER record has {len(fields)} fields, expected at least 9", lineno
                )
            try:
                onset = float(fields[3])
                duration = float(fields[4])
            except ValueError:
                raise ParseError(
                    f"non-numeric onset/duration {fields[3]!r} {fields[4]!r}", lineno
                ) from None
            if onset < 0:
                raise ParseError(f"negative onset {onset}", lineno)
            if duration <= 0:
                raise ParseError(f"non-positive duration {duration}", lineno)
            segment = SpeakerSegment(onset, onset + duration, fields[7])
            recordings.setdefault(fields[1], []).append(segment)
    return recordings


def diarization_to_changepoints(
    segments: list[SpeakerSegment], max_gap: float = 2.0
) -> ChangePointTimes:
    """Speaker change points implied by a linear diarization.

    For each consecutive pair with differing speakers separated by less than
    ``max_gap`` seconds, the change point is placed at the start of the
    second segment. Segments must be sorted and non-overlapping.
    """
    times: list[float] = []
    for prev, cur in zip(segments, segments[1:]):
        if cur.start < prev.start:
            raise ValidationError("segments must be sorted by start time")
        if cur.start < prev.end:
            raise ValidationError(
                f"segments overlap: [{prev.start}, {prev.end}) and "
                f"[{cur.start}, {cur.end})"
            )
        if cur.speaker_id == prev.speaker_id:
            continue
        if cur.start - prev.end < max_gap:
            times.append(cur.start)
    return ChangePointTimes(np.asarray(times, dtype=np.float64))


def read_changepoints(source: str | Path | TextIO) -> ChangePointTimes:
    """One timestamp per line, strictly increasing."""
    close = False
    if isinstance(source, (str, Path)):
        handle = open(source, encoding="utf-8")
        close = True
    else:
        handle = source
    try:
        times: list[float] = []
        for lineno, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                raise ParseError(f"non-numeric timestamp {text!r}", lineno) from None
            if times and value <= times[-1]:
                raise ParseError(
                    f"timestamp {value} not greater than previous {times[-1]}", lineno
                )
            if value < 0:
                raise ParseError(f"negative timestamp {value}", lineno)
            times.append(value)
        return ChangePointTimes(np.asarray(times, dtype=np.float64))
    finally:
        if close:
            handle.close()


def write_changepoints(times: ChangePointTimes, destination: str | Path | TextIO) -> None:
    """Write timestamps at 3 decimal places, one per line."""
    body = "".join(f"{t:.3f}\n" for t in times.times)
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(body, encoding="utf-8")
    else:
        destination.write(body)


def read_frame_scores(source: str | Path | TextIO) -> FrameScoreSequence:
    """Frame-score file: header ``frame_shift=<seconds>``, then one boundary
    probability per line. Exact 0/1 are clamped to 1e-12 mass in log space.
    """
    close = False
    if isinstance(source, (str, Path)):
        handle = open(source, encoding="utf-8")
        close = True
    else:
        handle = source
    try:
        header = None
        probs: list[float] = []
        for lineno, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            if header is None:
                if not text.startswith("frame_shift="):
                    raise ParseError("missing 'frame_shift=<seconds>' header", lineno)
                try:
                    header = float(text.removeprefix("frame_shift="))
                except ValueError:
                    raise ParseError(f"bad frame_shift value in {text!r}", lineno) from None
                if header <= 0:
                    raise ParseError(f"frame_shift must be positive, got {header}", lineno)
                continue
            try:
                p = float(text)
            except ValueError:
                raise ParseError(f"non-numeric probability {text!r}", lineno) from None
            if not (0.0 <= p <= 1.0):
                raise ParseError(f"probability {p} outside [0, 1]", lineno)
            probs.append(p)
        if header is None:
            raise ParseError("empty file: expected 'frame_shift=<seconds>' header", 1)
        if not probs:
            raise ParseError("no frames: at least one probability line required", 2)
        return FrameScoreSequence.from_probs(np.asarray(probs), header)
    finally:
        if close:
            handle.close()


def write_frame_scores(scores: FrameScoreSequence, destination: str | Path | TextIO) -> None:
    """Inverse of ``read_frame_scores``; probabilities keep full precision."""
    lines = [f"frame_shift={scores.frame_shift!r}"]
    lines.extend(repr(float(p)) for p in scores.boundary_probs())
    body = "\n".join(lines) + "\n"
    if isinstance(destination, (str, Path)):
        Path(destination).write_text(body, encoding="utf-8")
    else:
        destination.write(body)
