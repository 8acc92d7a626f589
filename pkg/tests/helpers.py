"""Shared generators and oracles for the test suite."""

from __future__ import annotations

import numpy as np

from scdkit.types import ChangePointSet, CollarConfig, FrameScoreSequence


def random_scores(rng: np.random.Generator, n: int, frame_shift: float = 0.01):
    """Unnormalized log score pairs, every entry finite and <= 0."""
    log_p0 = rng.uniform(-6.0, -1e-3, size=n)
    log_p1 = rng.uniform(-6.0, -1e-3, size=n)
    return FrameScoreSequence(log_p0, log_p1, frame_shift, normalized=False)


def random_positions(
    rng: np.random.Generator, n: int, max_count: int, min_spacing: int
) -> ChangePointSet:
    """Up to max_count strictly increasing indices with pairwise spacing."""
    count = int(rng.integers(0, max_count + 1))
    while count > 0 and (count - 1) * min_spacing > n - 1:
        count -= 1
    if count == 0:
        return ChangePointSet()
    slack = (n - 1) - (count - 1) * min_spacing
    offsets = np.sort(rng.integers(0, slack + 1, size=count))
    return ChangePointSet(offsets + np.arange(count) * min_spacing)


def random_collar_instance(rng: np.random.Generator, n_max: int = 20, z_max: int = 3, c_max: int = 3):
    """A (scores, change_points, collar) triple with disjoint collar windows."""
    n = int(rng.integers(1, n_max + 1))
    c = int(rng.integers(0, c_max + 1))
    semantics = "inclusive" if c == 0 or rng.random() < 0.5 else "strict"
    cfg = CollarConfig(c, semantics=semantics)
    points = random_positions(rng, n, z_max, min_spacing=2 * c + 1)
    return random_scores(rng, n), points, cfg


def finite_difference_grads(loss_fn, scores: FrameScoreSequence, h: float = 1e-6):
    """Central-difference gradients of loss_fn w.r.t. each log entry."""
    n = len(scores)
    grad_p0 = np.empty(n)
    grad_p1 = np.empty(n)

    def evaluate(lp0, lp1):
        seq = FrameScoreSequence(lp0, lp1, scores.frame_shift, normalized=False)
        return loss_fn(seq)

    for channel, grad in ((0, grad_p0), (1, grad_p1)):
        base = [np.array(scores.log_p0), np.array(scores.log_p1)]
        for i in range(n):
            orig = base[channel][i]
            base[channel][i] = orig + h
            up = evaluate(base[0], base[1])
            base[channel][i] = orig - h
            down = evaluate(base[0], base[1])
            base[channel][i] = orig
            grad[i] = (up - down) / (2 * h)
    return grad_p0, grad_p1


def max_relative_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """max |a - r| / max(1, |r|), elementwise."""
    denom = np.maximum(1.0, np.abs(reference))
    return float(np.max(np.abs(analytic - reference) / denom))
