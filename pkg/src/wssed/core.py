"""Domain types shared by every stage of the pipeline.

Posteriors are ``T x C`` float64 matrices on a :class:`TimeGrid`; events are
``(label, onset, offset)`` triples in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

#: Seconds per frame before any temporal subsampling.
DEFAULT_HOP = 0.020

#: Decimal places kept when converting frame indices to seconds. Removes
#: float noise such as ``3 * 0.02 == 0.06000000000000001``.
TIME_DECIMALS = 9

DCASE2018_CLASSES = (
    "Alarm_bell_ringing",
    "Blender",
    "Cat",
    "Dishes",
    "Dog",
    "Electric_shaver_toothbrush",
    "Frying",
    "Running_water",
    "Speech",
    "Vacuum_cleaner",
)


class InvalidInputError(ValueError):
    """Raised when input data violates a domain invariant."""


@dataclass(frozen=True)
class ClassMap:
    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise InvalidInputError("class map is empty")
        for lab in labels:
            if not isinstance(lab, str) or not lab:
                raise InvalidInputError(f"invalid class label {lab!r}")
        if len(set(labels)) != len(labels):
            raise InvalidInputError("class labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def dcase2018(cls) -> "ClassMap":
        return cls(DCASE2018_CLASSES)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidInputError(f"unknown class label {label!r}") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)


@dataclass(frozen=True)
class TimeGrid:
    base_hop: float = DEFAULT_HOP
    factor: int = 1

    def __post_init__(self):
        if not self.base_hop > 0:
            raise InvalidInputError(f"base_hop must be positive, got {self.base_hop}")
        if int(self.factor) != self.factor or self.factor < 1:
            raise InvalidInputError(f"factor must be a positive integer, got {self.factor}")
        object.__setattr__(self, "base_hop", float(self.base_hop))
        object.__setattr__(self, "factor", int(self.factor))

    @property
    def hop(self) -> float:
        """Effective seconds per frame."""
        return self.base_hop * self.factor

    def with_factor(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.base_hop, factor)


def frame_to_seconds(index: int, grid: TimeGrid) -> float:
    """Start time of frame ``index`` on ``grid``."""
    if index < 0:
        raise InvalidInputError(f"frame index must be non-negative, got {index}")
    return round(index * grid.base_hop * grid.factor, TIME_DECIMALS)


def seconds_to_frame(seconds: float, grid: TimeGrid) -> float:
    """Fractional frame position of ``seconds`` (inverse of :func:`frame_to_seconds`)."""
    return seconds / grid.hop


@dataclass(frozen=True)
class PosteriorClip:
    """Per-frame class probabilities of one clip.

    The constructor only normalises storage (read-only float64 copy); use
    :func:`validate_clip` or :meth:`check` to enforce the value invariants.
    """

    clip_id: str
    probs: np.ndarray
    grid: TimeGrid = field(default_factory=TimeGrid)
    classes: Optional[ClassMap] = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim == 1:
            probs = probs[:, None]
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.classes is None and probs.ndim == 2:
            labels = tuple(f"class_{i}" for i in range(probs.shape[1]))
            if labels:
                object.__setattr__(self, "classes", ClassMap(labels))

    @property
    def n_frames(self) -> int:
        return self.probs.shape[0]

    @property
    def duration(self) -> float:
        return frame_to_seconds(self.n_frames, self.grid)

    def check(self) -> "PosteriorClip":
        problem = validate_clip(self)
        if problem is not None:
            raise InvalidInputError(f"{self.clip_id}: {problem}")
        return self

    def column(self, label: str) -> np.ndarray:
        return self.probs[:, self.classes.index(label)]


def validate_clip(clip: PosteriorClip) -> Optional[str]:
    """Return a description of the first invariant violation, or None."""
    probs = clip.probs
    if probs.ndim != 2:
        return f"expected a 2-D matrix, got {probs.ndim} dimensions"
    if probs.shape[0] < 1 or probs.shape[1] < 1:
        return "empty probability matrix"
    if clip.classes is None or probs.shape[1] != len(clip.classes):
        n = 0 if clip.classes is None else len(clip.classes)
        return f"class dimension mismatch: {probs.shape[1]} columns, {n} classes"
    if not np.all(np.isfinite(probs)):
        return "probability out of range: non-finite value"
    if probs.min() < 0.0 or probs.max() > 1.0:
        return f"probability out of range: [{probs.min():g}, {probs.max():g}]"
    return None


@dataclass(frozen=True, order=True)
class Event:
    label: str
    onset: float
    offset: float

    def __post_init__(self):
        onset, offset = float(self.onset), float(self.offset)
        if not (0.0 <= onset < offset):
            raise InvalidInputError(
                f"invalid event {self.label!r}: onset={onset} offset={offset}"
            )
        object.__setattr__(self, "onset", onset)
        object.__setattr__(self, "offset", offset)

    @property
    def duration(self) -> float:
        return self.offset - self.onset

    def shifted(self, dt: float) -> "Event":
        return Event(self.label, self.onset + dt, self.offset + dt)


def _merge_same_class(events: Iterable[Event]) -> list:
    by_label = {}
    for ev in events:
        by_label.setdefault(ev.label, []).append(ev)
    merged = []
    for label, evs in by_label.items():
        evs.sort(key=lambda e: (e.onset, e.offset))
        cur_on, cur_off = evs[0].onset, evs[0].offset
        for ev in evs[1:]:
            if ev.onset <= cur_off:
                cur_off = max(cur_off, ev.offset)
            else:
                merged.append(Event(label, cur_on, cur_off))
                cur_on, cur_off = ev.onset, ev.offset
        merged.append(Event(label, cur_on, cur_off))
    return merged


@dataclass(frozen=True)
class EventList:
    """Events of one clip, sorted by ``(onset, label)``.

    Same-class events that touch or overlap are merged on construction.
    """

    clip_id: str
    events: tuple = ()

    def __post_init__(self):
        merged = _merge_same_class(self.events)
        merged.sort(key=lambda e: (e.onset, e.label, e.offset))
        object.__setattr__(self, "events", tuple(merged))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def labels(self) -> set:
        return {e.label for e in self.events}

    def for_label(self, label: str) -> list:
        return [e for e in self.events if e.label == label]

    def shifted(self, dt: float) -> "EventList":
        return EventList(self.clip_id, tuple(e.shifted(dt) for e in self.events))


def as_class_map(classes) -> ClassMap:
    if isinstance(classes, ClassMap):
        return classes
    if classes is None:
        return ClassMap.dcase2018()
    return ClassMap(tuple(classes))

