"""A tiny differentiable frame scorer for desk-scale experiments.

Per frame: a window of feature vectors (``past_frames`` back,
``future_frames`` ahead, zero-padded at the edges) -> affine -> tanh ->
affine -> one boundary logit. Small enough that a full training run takes
seconds, expressive enough to localize signature switches.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MAX_PARAMETERS = 100_000


@dataclass
class ModelGrads:
    """Parameter gradients matching ``TinyModel`` fields."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __iadd__(self, other: "ModelGrads") -> "ModelGrads":
        self.w1 += other.w1
        self.b1 += other.b1
        self.w2 += other.w2
        self.b2 += other.b2
        return self

    def scaled(self, factor: float) -> "ModelGrads":
        return ModelGrads(self.w1 * factor, self.b1 * factor, self.w2 * factor, self.b2 * factor)


class TinyModel:
    """Windowed feed-forward scorer emitting one pre-sigmoid logit per frame."""

    def __init__(
        self,
        feature_dim: int,
        past_frames: int = 4,
        future_frames: int = 4,
        hidden_units: int = 24,
        seed: int = 0,
        bias_init: float = -4.0,
    ):
        if feature_dim < 1 or hidden_units < 1:
            raise ValidationError("feature_dim and hidden_units must be at least 1")
        if past_frames < 0 or future_frames < 0:
            raise ValidationError("window radii must be non-negative")
        self.feature_dim = feature_dim
        self.past_frames = past_frames
        self.future_frames = future_frames
        self.hidden_units = hidden_units
        in_dim = (past_frames + future_frames + 1) * feature_dim
        if in_dim * hidden_units + 2 * hidden_units + 1 > MAX_PARAMETERS:
            raise ValidationError("model exceeds the parameter budget")
        rng = np.random.default_rng(seed)
        self.w1 = rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(in_dim, hidden_units))
        self.b1 = np.zeros(hidden_units)
        self.w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden_units), size=hidden_units)
        # start pessimistic about boundaries; positives are rare
        self.b2 = float(bias_init)

    @property
    def n_parameters(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + 1

    def clone(self) -> "TinyModel":
        return copy.deepcopy(self)

    def _design_matrix(self, features: np.ndarray) -> np.ndarray:
        """Stack each frame's window into one row, zero-padded at the edges."""
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[1] != self.feature_dim:
            raise ValidationError(
                f"expected features of shape (n, {self.feature_dim}), got {feats.shape}"
            )
        n = feats.shape[0]
        width = self.past_frames + self.future_frames + 1
        padded = np.zeros((n + width - 1, self.feature_dim))
        padded[self.past_frames : self.past_frames + n] = feats
        windows = np.lib.stride_tricks.sliding_window_view(padded, width, axis=0)
        # (n, dim, width) -> (n, width * dim) in time-major order
        return np.ascontiguousarray(windows.transpose(0, 2, 1)).reshape(n, -1)

    def forward(self, features: np.ndarray) -> np.ndarray:
        logits, _ = self.forward_with_cache(features)
        return logits

    def forward_with_cache(self, features: np.ndarray):
        design = self._design_matrix(features)
        hidden = np.tanh(design @ self.w1 + self.b1)
        logits = hidden @ self.w2 + self.b2
        return logits, (design, hidden)

    def backward(self, cache, grad_logits: np.ndarray) -> ModelGrads:
        design, hidden = cache
        g = np.asarray(grad_logits, dtype=np.float64)
        grad_w2 = hidden.T @ g
        grad_b2 = float(np.sum(g))
        grad_hidden = np.outer(g, self.w2) * (1.0 - hidden**2)
        grad_w1 = design.T @ grad_hidden
        grad_b1 = grad_hidden.sum(axis=0)
        return ModelGrads(grad_w1, grad_b1, grad_w2, grad_b2)

    def zero_grads(self) -> ModelGrads:
        return ModelGrads(
            np.zeros_like(self.w1), np.zeros_like(self.b1), np.zeros_like(self.w2), 0.0
        )

    def sgd_step(self, grads: ModelGrads, learning_rate: float) -> None:
        self.w1 -= learning_rate * grads.w1
        self.b1 -= learning_rate * grads.b1
        self.w2 -= learning_rate * grads.w2
        self.b2 -= learning_rate * grads.b2

    def get_params(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def set_params(self, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.n_parameters,):
            raise ValidationError(
                f"expected {self.n_parameters} parameters, got {vector.shape}"
            )
        split1 = self.w1.size
        split2 = split1 + self.b1.size
        split3 = split2 + self.w2.size
        self.w1 = vector[:split1].reshape(self.w1.shape).copy()
        self.b1 = vector[split1:split2].copy()
        self.w2 = vector[split2:split3].copy()
        self.b2 = float(vector[split3])
