"""Synthetic corpus generator for boundary-detection experiments.

Each sequence is a piecewise-constant speaker signature in feature space
plus Gaussian noise. True change points sit where the signature switches;
annotated change points are the true ones shifted by bounded uniform jitter,
mimicking inconsistent human boundary placement. Everything is a pure
function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .types import ChangePointSet, _as_readonly


@dataclass(frozen=True)
class SynthConfig:
    """Corpus shape and difficulty knobs.

    ``boundary_rate`` is the expected fraction of frames that carry an
    annotated boundary (kept within (0, 0.01]: boundaries are rare by
    nature). ``min_boundary_spacing_frames`` bounds how close two annotated
    boundaries may get, so collar windows up to
    (min_boundary_spacing_frames - 1) // 2 frames are guaranteed disjoint.
    ``frames_per_sequence`` defaults to 10 to 30 seconds at ``frame_shift``.
    """

    num_sequences: int = 100
    frame_shift: float = 0.01
    frames_per_sequence: tuple[int, int] | None = None
    boundary_rate: float = 0.0004
    annotation_jitter_frames: int = 0
    min_boundary_spacing_frames: int = 30
    feature_dim: int = 8
    speaker_signature_strength: float = 1.0
    noise_level: float = 1.0
    dev_fraction: float = 0.15
    test_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.num_sequences < 1:
            raise ValidationError("num_sequences must be at least 1")
        if not (0.0 < self.boundary_rate <= 0.01):
            raise ValidationError(
                f"boundary_rate must lie in (0, 0.01], got {self.boundary_rate}"
            )
        if self.annotation_jitter_frames < 0:
            raise ValidationError("annotation_jitter_frames must be non-negative")
        if self.min_boundary_spacing_frames < 1:
            raise ValidationError("min_boundary_spacing_frames must be at least 1")
        if self.feature_dim < 1:
            raise ValidationError("feature_dim must be at least 1")
        if not (self.frame_shift > 0):
            raise ValidationError("frame_shift must be positive")
        if not (0 <= self.dev_fraction < 1 and 0 <= self.test_fraction < 1):
            raise ValidationError("split fractions must lie in [0, 1)")
        if self.dev_fraction + self.test_fraction >= 1:
            raise ValidationError("dev and test fractions leave no training data")
        lo, hi = self.frame_range()
        if lo < 2 or hi < lo:
            raise ValidationError(f"bad frames_per_sequence range ({lo}, {hi})")

    def frame_range(self) -> tuple[int, int]:
        if self.frames_per_sequence is not None:
            return self.frames_per_sequence
        return (round(10.0 / self.frame_shift), round(30.0 / self.frame_shift))


@dataclass(frozen=True)
class SynthSequence:
    """One generated recording: features plus true and annotated boundaries."""

    features: np.ndarray
    annotated: ChangePointSet
    true_changes: ChangePointSet
    frame_shift: float

    def __post_init__(self):
        object.__setattr__(self, "features", _as_readonly(self.features, np.float64))

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SynthCorpus:
    train: tuple[SynthSequence, ...]
    dev: tuple[SynthSequence, ...]
    test: tuple[SynthSequence, ...]
    config: SynthConfig

    @property
    def sequences(self) -> tuple[SynthSequence, ...]:
        return self.train + self.dev + self.test


def _sample_positions(
    rng: np.random.Generator, count: int, lo: int, hi: int, spacing: int
) -> np.ndarray:
    """``count`` sorted integers in [lo, hi] with pairwise gaps >= spacing."""
    if count == 0:
        return np.empty(0, dtype=np.int64)
    slack = (hi - lo) - (count - 1) * spacing
    offsets = np.sort(rng.integers(0, slack + 1, size=count))
    return lo + offsets + np.arange(count, dtype=np.int64) * spacing


def _distinct_signatures(rng: np.random.Generator, count: int, cfg: SynthConfig) -> np.ndarray:
    """Per-segment speaker signatures; consecutive ones are kept apart.

    Adjacent segments must come from audibly different speakers, so a new
    signature is resampled until its rms distance from the previous one
    reaches half the signature strength.
    """
    min_rms = 0.5 * cfg.speaker_signature_strength
    signatures = np.empty((count, cfg.feature_dim))
    for i in range(count):
        while True:
            candidate = rng.normal(size=cfg.feature_dim) * cfg.speaker_signature_strength
            if i == 0:
                break
            gap = candidate - signatures[i - 1]
            if np.sqrt(np.mean(gap**2)) >= min_rms:
                break
        signatures[i] = candidate
    return signatures


def _generate_sequence(rng: np.random.Generator, cfg: SynthConfig) -> SynthSequence:
    lo, hi = cfg.frame_range()
    n = int(rng.integers(lo, hi + 1))
    jitter = cfg.annotation_jitter_frames
    spacing = cfg.min_boundary_spacing_frames + 2 * jitter
    margin = jitter + max(1, cfg.min_boundary_spacing_frames // 2)

    first, last = margin, n - 1 - margin
    count = int(rng.poisson(cfg.boundary_rate * n))
    if last < first:
        count = 0
    else:
        count = min(count, (last - first) // spacing + 1)
    true_positions = _sample_positions(rng, count, first, last, spacing)

    if jitter > 0 and count > 0:
        shifts = rng.integers(-jitter, jitter + 1, size=count)
    else:
        shifts = np.zeros(count, dtype=np.int64)
    annotated_positions = true_positions + shifts

    signatures = _distinct_signatures(rng, count + 1, cfg)
    segment_of_frame = np.searchsorted(true_positions, np.arange(n), side="right")
    features = signatures[segment_of_frame] + rng.normal(size=(n, cfg.feature_dim)) * (
        cfg.noise_level
    )
    return SynthSequence(
        features=features,
        annotated=ChangePointSet(annotated_positions),
        true_changes=ChangePointSet(true_positions),
        frame_shift=cfg.frame_shift,
    )


def generate_corpus(cfg: SynthConfig) -> SynthCorpus:
    """Generate the full train/dev/test corpus deterministically from the seed."""
    rng = np.random.default_rng(cfg.seed)
    sequences = [_generate_sequence(rng, cfg) for _ in range(cfg.num_sequences)]
    n_dev = round(cfg.num_sequences * cfg.dev_fraction)
    n_test = round(cfg.num_sequences * cfg.test_fraction)
    n_train = cfg.num_sequences - n_dev - n_test
    if n_train < 1:
        raise ValidationError("split leaves no training sequences")
    return SynthCorpus(
        train=tuple(sequences[:n_train]),
        dev=tuple(sequences[n_train : n_train + n_dev]),
        test=tuple(sequences[n_train + n_dev :]),
        config=cfg,
    )
