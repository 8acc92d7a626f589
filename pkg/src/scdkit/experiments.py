"""End-to-end experiment harness on the synthetic corpus.

Trains the neighborhood-supervised baseline and the collar-aware model on
the same corpus with identical seeds, tunes each model's decision threshold
on the development split, scores the test split at every forgiveness value,
and emits plain-text and CSV reports. ``run_collar_sweep`` repeats the
collar-aware training across a list of collar widths.

Experiment configuration is a flat ``key=value`` text file; see
``CONFIG_KEYS`` for the accepted keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from .detection import (
    DetectorConfig,
    PeakinessReport,
    aggregate_peakiness,
    detect_batch,
    peakiness,
)
from .errors import ParseError, ValidationError
from .evaluation import (
    PRPoint,
    match_changepoints,
    pooled_prf,
    pr_curve,
    tune_threshold,
)
from .losses import logits_to_scores
from .model import TinyModel
from .synth import SynthConfig, SynthCorpus, SynthSequence, generate_corpus
from .training import TrainConfig, TrainResult, train
from .types import (
    ChangePointTimes,
    CollarConfig,
    FrameScoreSequence,
    changepoints_to_times,
)

NEIGHBORHOOD = "neighborhood"
COLLAR = "collar"
STANDARD = "standard"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a full experiment run depends on."""

    synth: SynthConfig = field(default_factory=SynthConfig)
    past_frames: int = 4
    future_frames: int = 4
    hidden_units: int = 24
    model_seed: int = 1
    train_seed: int = 2
    epochs: int = 12
    learning_rate: float = 0.3
    batch_size: int = 8
    collar_frames: int = 3
    collar_semantics: str = "inclusive"
    neighborhood_radius_seconds: float = 0.05
    forgiveness: tuple[float, ...] = (0.25, 0.5)
    detector_mode: str = "threshold_only"
    min_separation: float = 0.0
    peakiness_window: int = 10
    tune_max_candidates: int | None = 512
    pr_curve_points: int | None = 200

    def detector(self, threshold: float = 0.5) -> DetectorConfig:
        return DetectorConfig(threshold, self.detector_mode, self.min_separation)

    def collar(self, collar_frames: int | None = None) -> CollarConfig:
        return CollarConfig(
            self.collar_frames if collar_frames is None else collar_frames,
            semantics=self.collar_semantics,
        )


@dataclass
class ObjectiveReport:
    """Scores of one trained objective on the test split."""

    name: str
    threshold: float
    metrics: dict[float, PRPoint]
    peaks: PeakinessReport
    loss_trace: list[float]
    curve: list[PRPoint]


@dataclass
class ExperimentReport:
    objectives: dict[str, ObjectiveReport]
    config: ExperimentConfig


@dataclass(frozen=True)
class SweepRow:
    label: str
    collar_frames: int | None
    collar_seconds: float | None
    precision: float
    recall: float
    f1: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    forgiveness: float
    config: ExperimentConfig


def score_sequence(model: TinyModel, seq: SynthSequence) -> FrameScoreSequence:
    return logits_to_scores(model.forward(seq.features), seq.frame_shift)


def _scored_files(
    model: TinyModel, sequences: Sequence[SynthSequence]
) -> list[tuple[FrameScoreSequence, ChangePointTimes]]:
    return [
        (score_sequence(model, seq), changepoints_to_times(seq.annotated, seq.frame_shift))
        for seq in sequences
    ]


def _train_config(cfg: ExperimentConfig, objective_name: str, collar_frames: int | None = None) -> TrainConfig:
    if objective_name == COLLAR:
        return TrainConfig(
            objective="collar_aware",
            collar=cfg.collar(collar_frames),
            learning_rate=cfg.learning_rate,
            batch_size=cfg.batch_size,
            epochs=cfg.epochs,
            seed=cfg.train_seed,
        )
    radius = cfg.neighborhood_radius_seconds if objective_name == NEIGHBORHOOD else 0.0
    return TrainConfig(
        objective="standard_neighborhood",
        neighborhood_radius_seconds=radius,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        seed=cfg.train_seed,
    )


def _fresh_model(cfg: ExperimentConfig) -> TinyModel:
    return TinyModel(
        feature_dim=cfg.synth.feature_dim,
        past_frames=cfg.past_frames,
        future_frames=cfg.future_frames,
        hidden_units=cfg.hidden_units,
        seed=cfg.model_seed,
    )


def train_objective(
    cfg: ExperimentConfig, corpus: SynthCorpus, objective_name: str, collar_frames: int | None = None
) -> TrainResult:
    return train(_fresh_model(cfg), corpus.train, _train_config(cfg, objective_name, collar_frames))


def evaluate_trained(
    cfg: ExperimentConfig,
    corpus: SynthCorpus,
    result: TrainResult,
    name: str,
    *,
    with_curve: bool = True,
) -> ObjectiveReport:
    """Tune the threshold on dev, then score the test split."""
    dev_files = _scored_files(result.model, corpus.dev)
    threshold = tune_threshold(
        dev_files,
        cfg.detector(),
        cfg.forgiveness[0],
        max_candidates=cfg.tune_max_candidates,
    )
    detector = cfg.detector(threshold)
    test_files = _scored_files(result.model, corpus.test)
    metrics: dict[float, PRPoint] = {}
    for forgiveness in cfg.forgiveness:
        matches = [
            match_changepoints(refs, detect_batch(seq, detector), forgiveness)
            for seq, refs in test_files
        ]
        metrics[forgiveness] = pooled_prf(matches, threshold)
    peaks = aggregate_peakiness(
        peakiness(score_sequence(result.model, seq), seq.annotated, detector, cfg.peakiness_window)
        for seq in corpus.test
        if len(seq.annotated)
    )
    curve = (
        pr_curve(test_files, cfg.detector(), cfg.forgiveness[0], max_points=cfg.pr_curve_points)
        if with_curve
        else []
    )
    return ObjectiveReport(
        name=name,
        threshold=threshold,
        metrics=metrics,
        peaks=peaks,
        loss_trace=result.loss_trace,
        curve=curve,
    )


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentReport:
    """Train both supervision styles on one corpus and score them."""
    corpus = generate_corpus(cfg.synth)
    objectives: dict[str, ObjectiveReport] = {}
    for name in (NEIGHBORHOOD, COLLAR):
        trained = train_objective(cfg, corpus, name)
        objectives[name] = evaluate_trained(cfg, corpus, trained, name)
    report = ExperimentReport(objectives=objectives, config=cfg)
    if out_dir is not None:
        write_experiment_outputs(report, Path(out_dir))
    return report


def run_collar_sweep(
    cfg: ExperimentConfig, collars: Sequence[CollarConfig | int], out_dir: str | Path | None = None
) -> SweepResult:
    """Test F1 per training collar width, next to both fixed-label baselines."""
    corpus = generate_corpus(cfg.synth)
    forgiveness = cfg.forgiveness[0]
    rows: list[SweepRow] = []

    def evaluate(name: str, collar_frames: int | None = None) -> ObjectiveReport:
        trained = train_objective(cfg, corpus, name, collar_frames)
        return evaluate_trained(cfg, corpus, trained, name, with_curve=False)

    for baseline in (NEIGHBORHOOD, STANDARD):
        report = evaluate(baseline)
        point = report.metrics[forgiveness]
        rows.append(SweepRow(baseline, None, None, point.precision, point.recall, point.f1))
    for collar in collars:
        frames = collar.collar_frames if isinstance(collar, CollarConfig) else int(collar)
        report = evaluate(COLLAR, frames)
        point = report.metrics[forgiveness]
        rows.append(
            SweepRow(
                f"collar_{frames}",
                frames,
                frames * cfg.synth.frame_shift,
                point.precision,
                point.recall,
                point.f1,
            )
        )
    result = SweepResult(rows=rows, forgiveness=forgiveness, config=cfg)
    if out_dir is not None:
        write_sweep_outputs(result, Path(out_dir))
    return result


# ---------------------------------------------------------------------------
# Report writers
# ---------------------------------------------------------------------------


def format_experiment_report(report: ExperimentReport) -> str:
    lines = ["objective  forgiveness  precision  recall  f1      threshold  peak_mean"]
    for name, obj in report.objectives.items():
        for forgiveness, point in obj.metrics.items():
            lines.append(
                f"{name:<10} {forgiveness:<12.2f} {point.precision:<10.4f} "
                f"{point.recall:<7.4f} {point.f1:<7.4f} {obj.threshold:<10.6f} "
                f"{obj.peaks.mean_active_frames_per_detection:.3f}"
            )
    return "\n".join(lines) + "\n"


def write_experiment_outputs(report: ExperimentReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(format_experiment_report(report), encoding="utf-8")
    with open(out_dir / "metrics.csv", "w", encoding="utf-8") as handle:
        handle.write("objective,forgiveness,precision,recall,f1,threshold,peakiness_mean\n")
        for name, obj in report.objectives.items():
            for forgiveness, point in obj.metrics.items():
                handle.write(
                    f"{name},{forgiveness!r},{point.precision!r},{point.recall!r},"
                    f"{point.f1!r},{obj.threshold!r},"
                    f"{obj.peaks.mean_active_frames_per_detection!r}\n"
                )
    for name, obj in report.objectives.items():
        with open(out_dir / f"pr_{name}.csv", "w", encoding="utf-8") as handle:
            handle.write("threshold,precision,recall,f1\n")
            for point in obj.curve:
                handle.write(
                    f"{point.threshold!r},{point.precision!r},{point.recall!r},{point.f1!r}\n"
                )


def format_sweep_table(result: SweepResult) -> str:
    lines = [f"label        collar_s  precision  recall  f1      (forgiveness {result.forgiveness})"]
    for row in result.rows:
        collar_s = "-" if row.collar_seconds is None else f"{row.collar_seconds:.3f}"
        lines.append(
            f"{row.label:<12} {collar_s:<9} {row.precision:<10.4f} {row.recall:<7.4f} {row.f1:.4f}"
        )
    return "\n".join(lines) + "\n"


def write_sweep_outputs(result: SweepResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.txt").write_text(format_sweep_table(result), encoding="utf-8")
    with open(out_dir / "sweep.csv", "w", encoding="utf-8") as handle:
        handle.write("label,collar_frames,collar_seconds,precision,recall,f1\n")
        for row in result.rows:
            frames = "" if row.collar_frames is None else row.collar_frames
            seconds = "" if row.collar_seconds is None else repr(row.collar_seconds)
            handle.write(
                f"{row.label},{frames},{seconds},{row.precision!r},{row.recall!r},{row.f1!r}\n"
            )


# ---------------------------------------------------------------------------
# key=value configuration files
# ---------------------------------------------------------------------------

_SYNTH_KEYS = {
    "num_sequences": int,
    "frame_shift": float,
    "boundary_rate": float,
    "annotation_jitter_frames": int,
    "min_boundary_spacing_frames": int,
    "feature_dim": int,
    "speaker_signature_strength": float,
    "noise_level": float,
    "dev_fraction": float,
    "test_fraction": float,
    "seed": int,
}

_EXPERIMENT_KEYS = {
    "past_frames": int,
    "future_frames": int,
    "hidden_units": int,
    "model_seed": int,
    "train_seed": int,
    "epochs": int,
    "learning_rate": float,
    "batch_size": int,
    "collar_frames": int,
    "collar_semantics": str,
    "neighborhood_radius_seconds": float,
    "detector_mode": str,
    "min_separation": float,
    "peakiness_window": int,
    "tune_max_candidates": int,
    "pr_curve_points": int,
}

CONFIG_KEYS = (
    sorted(_SYNTH_KEYS)
    + ["frames_min", "frames_max", "forgiveness"]
    + sorted(_EXPERIMENT_KEYS)
)


def parse_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read a flat key=value file; '#' starts a comment, blank lines ignored."""
    synth_kwargs: dict = {}
    exp_kwargs: dict = {}
    frames_min = frames_max = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(f"expected key=value, got {text!r}", lineno)
            key, _, value = text.partition("=")
            key, value = key.strip(), value.strip()
            try:
                if key in _SYNTH_KEYS:
                    synth_kwargs[key] = _SYNTH_KEYS[key](value)
                elif key in _EXPERIMENT_KEYS:
                    exp_kwargs[key] = _EXPERIMENT_KEYS[key](value)
                elif key == "frames_min":
                    frames_min = int(value)
                elif key == "frames_max":
                    frames_max = int(value)
                elif key == "forgiveness":
                    exp_kwargs["forgiveness"] = tuple(
                        float(v) for v in value.split(",") if v.strip()
                    )
                else:
                    raise ParseError(f"unknown configuration key {key!r}", lineno)
            except ValueError:
                raise ParseError(f"bad value {value!r} for key {key!r}", lineno) from None
    if (frames_min is None) != (frames_max is None):
        raise ParseError("frames_min and frames_max must be given together", 1)
    if frames_min is not None:
        synth_kwargs["frames_per_sequence"] = (frames_min, frames_max)
    return ExperimentConfig(synth=SynthConfig(**synth_kwargs), **exp_kwargs)


def default_experiment_config() -> ExperimentConfig:
    """The stock desk-scale experiment: seconds to train, minutes end to end."""
    return ExperimentConfig(
        synth=SynthConfig(
            num_sequences=60,
            frame_shift=0.02,
            boundary_rate=0.004,
            annotation_jitter_frames=2,
            min_boundary_spacing_frames=30,
            feature_dim=8,
            speaker_signature_strength=1.0,
            noise_level=1.5,
            dev_fraction=0.15,
            test_fraction=0.2,
            seed=7,
        )
    )
