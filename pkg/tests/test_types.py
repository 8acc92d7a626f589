"""Domain type validation and collar-window geometry."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scdkit.errors import ValidationError
from scdkit.types import (
    ChangePointSet,
    ChangePointTimes,
    CollarConfig,
    FrameScoreSequence,
    LabelSequence,
    changepoints_to_labels,
    changepoints_to_times,
    collar_window,
    frame_to_time,
    labels_to_changepoints,
    time_to_frame,
    times_to_changepoints,
)


class TestFrameScoreSequence:
    def test_accepts_normalized_pairs(self):
        p1 = np.array([0.1, 0.9, 0.5])
        seq = FrameScoreSequence(np.log1p(-p1), np.log(p1), frame_shift=0.08)
        assert len(seq) == 3
        np.testing.assert_allclose(seq.boundary_probs(), p1, rtol=1e-12)

    def test_rejects_unnormalized_when_claimed_normalized(self):
        with pytest.raises(ValidationError, match="not normalized"):
            FrameScoreSequence(np.log([0.5]), np.log([0.2]), frame_shift=0.01)

    def test_unnormalized_mode_skips_mass_check(self):
        seq = FrameScoreSequence(
            np.log([0.5]), np.log([0.2]), frame_shift=0.01, normalized=False
        )
        assert seq.n_frames == 1

    def test_rejects_positive_log_values(self):
        with pytest.raises(ValidationError, match="above 0"):
            FrameScoreSequence(np.array([0.1]), np.array([-1.0]), 0.01, normalized=False)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError, match="non-finite"):
            FrameScoreSequence(
                np.array([-np.inf]), np.array([-1.0]), 0.01, normalized=False
            )

    def test_rejects_empty_and_bad_shift(self):
        with pytest.raises(ValidationError):
            FrameScoreSequence(np.empty(0), np.empty(0), 0.01, normalized=False)
        with pytest.raises(ValidationError, match="frame_shift"):
            FrameScoreSequence(np.array([-1.0]), np.array([-1.0]), 0.0, normalized=False)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="differ"):
            FrameScoreSequence(
                np.array([-1.0, -1.0]), np.array([-1.0]), 0.01, normalized=False
            )

    def test_from_probs_clamps_extremes(self):
        seq = FrameScoreSequence.from_probs(np.array([0.0, 1.0]), frame_shift=0.01)
        assert np.all(np.isfinite(seq.log_p0))
        assert np.all(np.isfinite(seq.log_p1))

    def test_arrays_are_read_only(self):
        seq = FrameScoreSequence.from_probs(np.array([0.5]), frame_shift=0.01)
        with pytest.raises(ValueError):
            seq.log_p1[0] = 0.0


class TestChangePointContainers:
    def test_labels_to_changepoints_examples(self):
        assert labels_to_changepoints(LabelSequence([0, 0, 1, 0, 0])).positions.tolist() == [2]
        assert labels_to_changepoints(LabelSequence([0, 0, 0])).positions.tolist() == []
        assert labels_to_changepoints(LabelSequence([1, 0, 1])).positions.tolist() == [0, 2]

    def test_labels_reject_other_values(self):
        with pytest.raises(ValidationError):
            LabelSequence([0, 2, 0])

    def test_positions_strictly_increasing(self):
        with pytest.raises(ValidationError):
            ChangePointSet([3, 3])
        with pytest.raises(ValidationError):
            ChangePointSet([4, 1])
        with pytest.raises(ValidationError):
            ChangePointSet([-1, 2])

    def test_roundtrip_labels_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            labels = LabelSequence(rng.integers(0, 2, size=n))
            points = labels_to_changepoints(labels)
            back = changepoints_to_labels(points, n)
            np.testing.assert_array_equal(back.labels, labels.labels)

    def test_times_validation(self):
        with pytest.raises(ValidationError):
            ChangePointTimes([1.0, 0.5])
        with pytest.raises(ValidationError):
            ChangePointTimes([-0.1])
        assert len(ChangePointTimes([])) == 0


class TestCollarWindow:
    def test_strict_prose_example(self):
        cfg = CollarConfig(2, semantics="strict")
        assert list(collar_window(2, cfg, 5)) == [1, 2, 3]

    def test_degenerate_inclusive(self):
        assert list(collar_window(2, CollarConfig(0), 5)) == [2]

    def test_clamped_inclusive(self):
        cfg = CollarConfig(2, semantics="inclusive", edge_policy="clamp")
        assert list(collar_window(1, cfg, 5)) == [0, 1, 2, 3]

    def test_reject_policy_raises_out_of_bounds(self):
        cfg = CollarConfig(2, edge_policy="reject")
        with pytest.raises(ValidationError, match="leaves"):
            collar_window(1, cfg, 5)
        assert list(collar_window(2, cfg, 5)) == [0, 1, 2, 3, 4]

    def test_strict_requires_positive_collar(self):
        with pytest.raises(ValidationError):
            CollarConfig(0, semantics="strict")

    @given(
        z=st.integers(min_value=0, max_value=99),
        c=st.integers(min_value=0, max_value=10),
        inclusive=st.booleans(),
    )
    def test_window_size_and_symmetry(self, z, c, inclusive):
        """Absent clamping: symmetric around z, width 2c+1 or 2c-1."""
        if not inclusive and c == 0:
            return
        cfg = CollarConfig(c, semantics="inclusive" if inclusive else "strict")
        n = 200
        w = collar_window(z, cfg, n)
        expected = 2 * c + 1 if inclusive else 2 * c - 1
        if w.start > 0 and w.stop - 1 < n - 1:
            assert len(w) == expected
            assert (w.start + w.stop - 1) == 2 * z


class TestTimeConversion:
    def test_round_half_up(self):
        assert time_to_frame(0.045, 0.01) == 5  # 4.4999... in floats would floor
        assert time_to_frame(0.05, 0.01) == 5
        assert time_to_frame(0.0549, 0.01) == 5
        assert time_to_frame(0.055, 0.01) == 6

    def test_frame_to_time(self):
        assert frame_to_time(2, 0.08) == pytest.approx(0.16)

    def test_changepoint_conversions(self):
        points = ChangePointSet([3, 10])
        times = changepoints_to_times(points, 0.08)
        np.testing.assert_allclose(times.times, [0.24, 0.8])
        back = times_to_changepoints(times, 0.08, 20)
        np.testing.assert_array_equal(back.positions, points.positions)

    def test_times_to_changepoints_rejects_collisions(self):
        times = ChangePointTimes([0.100, 0.101])
        with pytest.raises(ValidationError, match="same frame"):
            times_to_changepoints(times, 0.08, 100)

    def test_times_to_changepoints_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            times_to_changepoints(ChangePointTimes([5.0]), 0.01, 100)
