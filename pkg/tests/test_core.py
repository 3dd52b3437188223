import numpy as np
import pytest
from hypothesis import given, strategies as st

from wssed.core import (
    ClassMap,
    Event,
    EventList,
    InvalidInputError,
    PosteriorClip,
    TimeGrid,
    frame_to_seconds,
    validate_clip,
)


@pytest.mark.parametrize(
    "index, hop, factor, expected",
    [(0, 0.020, 1, 0.0), (1, 0.020, 16, 0.320), (7, 0.020, 4, 0.560)],
)
def test_frame_to_seconds(index, hop, factor, expected):
    assert frame_to_seconds(index, TimeGrid(hop, factor)) == pytest.approx(expected, abs=1e-12)


def test_frame_to_seconds_exact_at_factor_16():
    assert frame_to_seconds(1, TimeGrid(0.020, 16)) == 0.320


def test_frame_to_seconds_rejects_negative():
    with pytest.raises(InvalidInputError):
        frame_to_seconds(-1, TimeGrid())


@given(st.integers(0, 100_000), st.sampled_from([1, 2, 4, 8, 16]))
def test_frame_to_seconds_monotone_and_linear(i, k):
    g1, gk = TimeGrid(0.02, 1), TimeGrid(0.02, k)
    assert frame_to_seconds(i + 1, gk) > frame_to_seconds(i, gk)
    assert frame_to_seconds(i, gk) == pytest.approx(k * frame_to_seconds(i, g1), abs=1e-8)


@pytest.mark.parametrize("hop, factor", [(0.0, 1), (-0.02, 1), (0.02, 0), (0.02, 1.5)])
def test_time_grid_invariants(hop, factor):
    with pytest.raises(InvalidInputError):
        TimeGrid(hop, factor)


def test_time_grid_hop():
    assert TimeGrid(0.02, 8).hop == pytest.approx(0.16)


class TestClassMap:
    def test_index_roundtrip(self):
        cm = ClassMap.dcase2018()
        assert len(cm) == 10
        for i, label in enumerate(cm.labels):
            assert cm.index(label) == i
        assert "Dishes" in cm

    @pytest.mark.parametrize("labels", [(), ("a", "a"), ("a", "")])
    def test_rejects_bad_labels(self, labels):
        with pytest.raises(InvalidInputError):
            ClassMap(labels)

    def test_unknown_label(self):
        with pytest.raises(InvalidInputError, match="unknown class"):
            ClassMap(("a",)).index("b")


class TestValidateClip:
    def test_valid(self):
        clip = PosteriorClip("c", np.full((10, 10), 0.5), classes=ClassMap.dcase2018())
        assert validate_clip(clip) is None

    def test_out_of_range(self):
        probs = np.full((10, 10), 0.5)
        probs[3, 4] = 1.2
        clip = PosteriorClip("c", probs, classes=ClassMap.dcase2018())
        assert "probability out of range" in validate_clip(clip)

    def test_class_mismatch(self):
        clip = PosteriorClip("c", np.full((10, 3), 0.5), classes=ClassMap.dcase2018())
        assert "class dimension mismatch" in validate_clip(clip)

    def test_empty(self):
        clip = PosteriorClip("c", np.zeros((0, 2)), classes=ClassMap(("a", "b")))
        assert "empty" in validate_clip(clip)

    def test_nan(self):
        clip = PosteriorClip("c", np.array([[np.nan]]), classes=ClassMap(("a",)))
        assert "out of range" in validate_clip(clip)

    def test_check_raises(self):
        with pytest.raises(InvalidInputError, match="c: probability out of range"):
            PosteriorClip("c", [[-0.1]]).check()

    def test_probs_are_read_only(self):
        clip = PosteriorClip("c", np.zeros((2, 1)))
        with pytest.raises(ValueError):
            clip.probs[0, 0] = 1.0


class TestEvents:
    @pytest.mark.parametrize("onset, offset", [(-0.1, 1.0), (1.0, 1.0), (2.0, 1.0)])
    def test_event_invariant(self, onset, offset):
        with pytest.raises(InvalidInputError):
            Event("Dog", onset, offset)

    def test_sorted_by_onset_then_label(self):
        el = EventList("c", (Event("b", 1.0, 2.0), Event("a", 1.0, 1.5), Event("c", 0.5, 0.6)))
        assert [(e.label, e.onset) for e in el] == [("c", 0.5), ("a", 1.0), ("b", 1.0)]

    def test_touching_same_class_merged(self):
        el = EventList("c", (Event("Dog", 0.0, 1.0), Event("Dog", 1.0, 2.0), Event("Dog", 1.5, 2.5)))
        assert el.events == (Event("Dog", 0.0, 2.5),)

    def test_other_classes_not_merged(self):
        el = EventList("c", (Event("Dog", 0.0, 1.0), Event("Cat", 0.5, 2.0)))
        assert len(el) == 2

    @given(st.lists(st.tuples(st.sampled_from("ab"), st.floats(0, 10), st.floats(0.01, 3)), max_size=12))
    def test_same_class_events_disjoint(self, raw):
        el = EventList("c", tuple(Event(l, on, on + d) for l, on, d in raw))
        for label in "ab":
            evs = el.for_label(label)
            for a, b in zip(evs, evs[1:]):
                assert a.offset < b.onset
        keys = [(e.onset, e.label) for e in el]
        assert keys == sorted(keys)
