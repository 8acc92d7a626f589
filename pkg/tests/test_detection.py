"""Batch and streaming detection, plus the peakiness report."""

import numpy as np
import pytest

from scdkit.detection import (
    DetectorConfig,
    StreamingDetector,
    detect_batch,
    detect_streaming,
    peakiness,
)
from scdkit.errors import StreamOrderError, ValidationError
from scdkit.types import ChangePointSet, FrameScoreSequence


def scores_from_p1(p1, frame_shift=0.08) -> FrameScoreSequence:
    return FrameScoreSequence.from_probs(np.asarray(p1, dtype=float), frame_shift)


def stream_all(p1, cfg, lookahead, frame_shift=0.08):
    seq = scores_from_p1(p1, frame_shift)
    frames = zip(seq.log_p0.tolist(), seq.log_p1.tolist())
    return list(detect_streaming(frames, cfg, lookahead, frame_shift))


def make_peaky_sequence(rng, mode, lookahead, min_sep_frames, n=90):
    """Random probability track whose runs and merge context fit the lookahead."""
    p1 = rng.uniform(0.02, 0.35, size=n)
    pos = min_sep_frames + 2
    while pos < n - min_sep_frames - 2:
        kind = rng.random()
        if kind < 0.35:
            pos += int(rng.integers(1, min_sep_frames))
            continue
        if mode == "threshold_only":
            run = int(rng.integers(1, min(lookahead, 4) + 1))
            if pos + run >= n - 1:
                break
            p1[pos : pos + run] = rng.uniform(0.55, 0.99, size=run)
            pos += run + int(rng.integers(2, min_sep_frames + 2))
        else:
            p1[pos] = rng.uniform(0.55, 0.99)
            if kind > 0.7 and pos + 2 < n - min_sep_frames - 2:
                # competing pair inside the separation window
                p1[pos + 2] = rng.uniform(0.55, 0.99)
                while p1[pos + 2] == p1[pos]:
                    p1[pos + 2] = rng.uniform(0.55, 0.99)
                pos += 2
            pos += 2 * min_sep_frames + 2
    return p1


class TestDetectBatch:
    def test_single_peak(self):
        times = detect_batch(scores_from_p1([0.1, 0.1, 0.9, 0.1]), DetectorConfig(0.5))
        np.testing.assert_allclose(times.times, [0.16])

    def test_all_below_threshold(self):
        times = detect_batch(scores_from_p1([0.1, 0.2, 0.3]), DetectorConfig(0.5))
        assert len(times) == 0

    def test_run_merges_to_argmax(self):
        times = detect_batch(
            scores_from_p1([0.1, 0.6, 0.7, 0.6, 0.1]), DetectorConfig(0.5)
        )
        np.testing.assert_allclose(times.times, [2 * 0.08])

    def test_run_tie_goes_to_earliest(self):
        times = detect_batch(scores_from_p1([0.1, 0.7, 0.7, 0.1]), DetectorConfig(0.5))
        np.testing.assert_allclose(times.times, [0.08])

    def test_local_maxima_mode_keeps_strict_maxima(self):
        cfg = DetectorConfig(0.5, mode="local_maxima", min_separation=0.0)
        times = detect_batch(scores_from_p1([0.1, 0.6, 0.7, 0.6, 0.8, 0.1]), cfg)
        np.testing.assert_allclose(times.times, [2 * 0.08, 4 * 0.08])

    def test_local_maxima_merge_to_higher(self):
        cfg = DetectorConfig(0.5, mode="local_maxima", min_separation=0.3)
        times = detect_batch(scores_from_p1([0.1, 0.6, 0.1, 0.8, 0.1]), cfg)
        np.testing.assert_allclose(times.times, [3 * 0.08])

    def test_plateau_is_not_a_strict_maximum(self):
        cfg = DetectorConfig(0.5, mode="local_maxima")
        times = detect_batch(scores_from_p1([0.1, 0.7, 0.7, 0.1]), cfg)
        assert len(times) == 0

    def test_outputs_strictly_increasing_and_above_threshold(self):
        rng = np.random.default_rng(71)
        for mode in ("threshold_only", "local_maxima"):
            cfg = DetectorConfig(0.5, mode=mode, min_separation=0.16)
            for _ in range(50):
                seq = scores_from_p1(rng.uniform(0, 1, size=40))
                times = detect_batch(seq, cfg)
                assert np.all(np.diff(times.times) > 0)
                frames = np.round(times.times / 0.08).astype(int)
                assert np.all(seq.boundary_probs()[frames] > 0.5)


class TestStreamingDetector:
    def test_full_lookahead_equals_batch_any_sequence(self):
        rng = np.random.default_rng(73)
        for mode in ("threshold_only", "local_maxima"):
            cfg = DetectorConfig(0.5, mode=mode, min_separation=0.16)
            for _ in range(50):
                p1 = rng.uniform(0, 1, size=int(rng.integers(1, 60)))
                batch = detect_batch(scores_from_p1(p1), cfg).times.tolist()
                assert stream_all(p1, cfg, lookahead=len(p1)) == batch

    def test_decision_delay_is_exact(self):
        """An isolated peak at frame 3 is finalized by consuming frame 5."""
        p1 = [0.1, 0.1, 0.1, 0.9, 0.1, 0.1, 0.1]
        seq = scores_from_p1(p1)
        det = StreamingDetector(DetectorConfig(0.5), lookahead_frames=2, frame_shift=0.08)
        emissions = [
            det.feed(seq.log_p0[i], seq.log_p1[i]) for i in range(len(p1))
        ]
        assert emissions[5] == [pytest.approx(0.24)]
        assert all(e == [] for i, e in enumerate(emissions) if i != 5)

    def test_empty_stream(self):
        det = StreamingDetector(DetectorConfig(0.5), 4, 0.08)
        assert det.finish() == []

    def test_out_of_order_frame_rejected(self):
        det = StreamingDetector(DetectorConfig(0.5), 2, 0.08)
        det.feed(-0.1, -2.0, index=0)
        with pytest.raises(StreamOrderError):
            det.feed(-0.1, -2.0, index=2)

    def test_feed_after_finish_rejected(self):
        det = StreamingDetector(DetectorConfig(0.5), 2, 0.08)
        det.finish()
        with pytest.raises(StreamOrderError):
            det.feed(-0.1, -2.0)

    @pytest.mark.parametrize("mode", ["threshold_only", "local_maxima"])
    def test_matches_batch_under_lookahead_condition(self, mode):
        rng = np.random.default_rng(79)
        lookahead = 8
        cfg = DetectorConfig(0.5, mode=mode, min_separation=0.24)
        sep_frames = 3
        for _ in range(60):
            p1 = make_peaky_sequence(rng, mode, lookahead, sep_frames)
            batch = detect_batch(scores_from_p1(p1), cfg).times.tolist()
            assert stream_all(p1, cfg, lookahead) == batch


class TestPeakiness:
    def test_one_hot_peaks_mean_one(self):
        p1 = np.full(30, 0.1)
        refs = ChangePointSet([5, 15, 25])
        p1[refs.positions] = 0.9
        report = peakiness(scores_from_p1(p1), refs, DetectorConfig(0.5), window=3)
        assert report.mean_active_frames_per_detection == 1.0
        assert report.run_length_histogram == {1: 3}
        assert report.boundaries_with_activity == 3

    def test_plateau_run_length(self):
        p1 = np.full(20, 0.1)
        p1[8:13] = 0.8
        report = peakiness(scores_from_p1(p1), ChangePointSet([10]), DetectorConfig(0.5), 5)
        assert report.run_length_histogram == {5: 1}

    def test_inactive_boundary_excluded_from_histogram(self):
        p1 = np.full(20, 0.1)
        p1[4] = 0.9
        refs = ChangePointSet([4, 15])
        report = peakiness(scores_from_p1(p1), refs, DetectorConfig(0.5), 2)
        assert report.boundaries_analyzed == 2
        assert report.boundaries_with_activity == 1
        assert sum(report.run_length_histogram.values()) == 1

    def test_window_validation(self):
        with pytest.raises(ValidationError):
            peakiness(scores_from_p1([0.5]), ChangePointSet([0]), DetectorConfig(), 0)
