"""Minibatch training of the frame scorer under either supervision style.

``standard_neighborhood`` expands each annotated boundary into positive
labels within a time radius and minimizes plain cross-entropy;
``collar_aware`` minimizes the marginalized collar loss on the raw sparse
annotations. Optimization is deterministic fixed-step SGD; gradients flow
through ``chain_grad_to_logits`` into the model's backward pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DivergenceError, ValidationError
from .losses import (
    bce_dense,
    chain_grad_to_logits,
    collar_loss_efficient,
    expand_neighborhood,
    logits_to_scores,
)
from .model import ModelGrads, TinyModel
from .synth import SynthSequence
from .types import CollarConfig

Objective = Literal["standard_neighborhood", "collar_aware"]


@dataclass(frozen=True)
class TrainConfig:
    objective: Objective
    collar: CollarConfig | None = None
    neighborhood_radius_seconds: float = 0.05
    learning_rate: float = 0.3
    batch_size: int = 8
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.objective not in ("standard_neighborhood", "collar_aware"):
            raise ValidationError(f"unknown objective {self.objective!r}")
        if self.objective == "collar_aware" and self.collar is None:
            raise ValidationError("collar_aware training needs a CollarConfig")
        if not (self.learning_rate > 0):
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be at least 1")
        if self.neighborhood_radius_seconds < 0:
            raise ValidationError("neighborhood radius must be non-negative")


@dataclass
class TrainResult:
    """Trained model plus the post-epoch mean loss per segment."""

    model: TinyModel
    loss_trace: list[float]


def sequence_objective(
    model: TinyModel, seq: SynthSequence, cfg: TrainConfig, *, with_grad: bool = True
) -> tuple[float, ModelGrads | None]:
    """Loss (and parameter gradients) of one segment under the objective."""
    logits, cache = model.forward_with_cache(seq.features)
    scores = logits_to_scores(logits, seq.frame_shift)
    if cfg.objective == "standard_neighborhood":
        labels = expand_neighborhood(
            seq.annotated, cfg.neighborhood_radius_seconds, seq.frame_shift, seq.n_frames
        )
        result = bce_dense(scores, labels, with_grad=with_grad)
    else:
        result = collar_loss_efficient(scores, seq.annotated, cfg.collar, with_grad=with_grad)
    if not with_grad:
        return result.value, None
    grad_logits = chain_grad_to_logits(result, logits)
    return result.value, model.backward(cache, grad_logits)


def corpus_loss(model: TinyModel, sequences: Sequence[SynthSequence], cfg: TrainConfig) -> float:
    """Mean per-segment loss over a corpus at the current parameters."""
    values = [
        sequence_objective(model, seq, cfg, with_grad=False)[0] for seq in sequences
    ]
    return float(np.mean(values))


def train(
    model: TinyModel, sequences: Sequence[SynthSequence], cfg: TrainConfig
) -> TrainResult:
    """Deterministic minibatch SGD; the input model is not modified.

    Batch gradients are the mean of per-segment gradients (normalization by
    segment count, not frame count). The returned trace holds the corpus
    loss recomputed after each epoch's updates.
    """
    if not sequences:
        raise ValidationError("training needs at least one sequence")
    model = model.clone()
    rng = np.random.default_rng(cfg.seed)
    trace: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(sequences))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grads = model.zero_grads()
            for idx in batch:
                value, seq_grads = sequence_objective(model, sequences[idx], cfg)
                if not math.isfinite(value):
                    raise DivergenceError(f"non-finite loss {value} during training")
                grads += seq_grads
            model.sgd_step(grads.scaled(1.0 / len(batch)), cfg.learning_rate)
        epoch_loss = corpus_loss(model, sequences, cfg)
        if not math.isfinite(epoch_loss):
            raise DivergenceError(f"non-finite epoch loss {epoch_loss}")
        trace.append(epoch_loss)
    return TrainResult(model=model, loss_trace=trace)
