"""Seeded synthetic ground truth and posteriors.

Randomness comes from numpy's PCG64 bit generator. Clip ``i`` of a corpus
draws from ``SeedSequence(seed, spawn_key=(i,))``, so every clip can be
regenerated on its own and results do not depend on platform or on how
clips are scheduled.

Posteriors are flat: ``event_level`` inside events, ``floor_level``
outside, plus Gaussian noise truncated at ``noise_clip`` standard deviations,
clipped to [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .core import (
    ClassMap,
    Event,
    EventList,
    InvalidInputError,
    PosteriorClip,
    TimeGrid,
    frame_to_seconds,
)
from .evaluation import DEFAULT_BUCKETS, LONG
from .postprocess import BinaryMask

SHORT_RANGE = (0.2, 1.0)
LONG_RANGE = (3.0, 8.0)

# tolerance, in frames, when snapping event boundaries to the grid
_SNAP = 1e-6


def default_durations(classes: ClassMap) -> Dict[str, Tuple[float, float]]:
    return {
        label: LONG_RANGE if DEFAULT_BUCKETS.get(label) == LONG else SHORT_RANGE
        for label in classes.labels
    }


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    clip_length: float = 10.0
    base_hop: float = 0.020
    classes: ClassMap = field(default_factory=ClassMap.dcase2018)
    durations: Optional[Mapping[str, Tuple[float, float]]] = None
    events_per_clip: Tuple[int, int] = (1, 4)
    noise_sigma: float = 0.15
    event_level: float = 0.85
    floor_level: float = 0.1
    noise_clip: float = 2.0
    min_gap_frames: int = 2
    max_retries: int = 100

    def __post_init__(self):
        if not isinstance(self.classes, ClassMap):
            object.__setattr__(self, "classes", ClassMap(tuple(self.classes)))
        durations = dict(self.durations or default_durations(self.classes))
        missing = [c for c in self.classes.labels if c not in durations]
        if missing:
            raise InvalidInputError(f"no duration range for classes: {', '.join(missing)}")
        for label, (lo, hi) in durations.items():
            if not 0 < lo <= hi:
                raise InvalidInputError(f"invalid duration range for {label}: [{lo}, {hi}]")
        object.__setattr__(self, "durations", {k: tuple(map(float, v)) for k, v in durations.items()})
        lo, hi = self.events_per_clip
        if not 0 <= lo <= hi:
            raise InvalidInputError(f"invalid events_per_clip range {self.events_per_clip}")
        object.__setattr__(self, "events_per_clip", (int(lo), int(hi)))
        if not 0.0 <= self.floor_level < self.event_level <= 1.0:
            raise InvalidInputError("need 0 <= floor_level < event_level <= 1")
        if self.noise_sigma < 0 or self.noise_clip <= 0:
            raise InvalidInputError("noise_sigma must be >= 0 and noise_clip > 0")
        if self.clip_length <= 0:
            raise InvalidInputError("clip_length must be positive")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.base_hop, 1)

    @property
    def n_frames(self) -> int:
        return int(round(self.clip_length / self.base_hop))

    def to_json(self) -> dict:
        d = asdict(self)
        d["classes"] = list(self.classes.labels)
        d["durations"] = {k: list(v) for k, v in self.durations.items()}
        d["events_per_clip"] = list(self.events_per_clip)
        return d

    @classmethod
    def from_json(cls, data: Mapping) -> "SynthSpec":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown synth spec fields: {', '.join(sorted(unknown))}")
        if "classes" in data:
            data["classes"] = ClassMap(tuple(data["classes"]))
        if "events_per_clip" in data:
            data["events_per_clip"] = tuple(data["events_per_clip"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SynthSpec":
        return cls.from_json(json.loads(Path(path).read_text()))


def events_to_mask(events: EventList, grid: TimeGrid, classes: ClassMap, n_frames: int) -> BinaryMask:
    """Frame ``t`` is active for a class iff ``[t*hop, (t+1)*hop)`` overlaps one of its events."""
    mask = np.zeros((n_frames, len(classes)), dtype=bool)
    for ev in events:
        j = classes.index(ev.label)
        start = math.floor(ev.onset / grid.hop + _SNAP)
        end = math.ceil(ev.offset / grid.hop - _SNAP)
        if end > n_frames:
            raise InvalidInputError(
                f"event {ev.label} [{ev.onset}, {ev.offset}] lies outside the {n_frames}-frame grid"
            )
        mask[start:end, j] = True
    return BinaryMask(events.clip_id, mask, grid, classes)


def clip_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _place_events(spec: SynthSpec, rng: np.random.Generator, clip_id: str) -> EventList:
    T = spec.n_frames
    hop = spec.base_hop
    lo, hi = spec.events_per_clip
    n_events = int(rng.integers(lo, hi + 1))
    placed: Dict[str, list] = {}
    events = []
    grid = spec.grid
    for _ in range(n_events):
        # class, duration and position are redrawn together until the event fits
        for _attempt in range(spec.max_retries):
            label = spec.classes.labels[int(rng.integers(len(spec.classes)))]
            dmin, dmax = spec.durations[label]
            length = max(1, int(round(rng.uniform(dmin, dmax) / hop)))
            if length > T:
                continue
            start = int(rng.integers(0, T - length + 1))
            end = start + length
            taken = placed.setdefault(label, [])
            if all(end + spec.min_gap_frames <= s or start >= e + spec.min_gap_frames for s, e in taken):
                break
        else:
            raise InvalidInputError(
                f"{clip_id}: could not place event {len(events) + 1} after {spec.max_retries} attempts"
            )
        taken.append((start, end))
        events.append(Event(label, frame_to_seconds(start, grid), frame_to_seconds(end, grid)))
    return EventList(clip_id, tuple(events))


def _truncated_normal(rng: np.random.Generator, shape, bound: float) -> np.ndarray:
    z = rng.standard_normal(shape)
    bad = np.abs(z) > bound
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > bound
    return z


def generate_clip(spec: SynthSpec, index: int) -> Tuple[EventList, PosteriorClip]:
    clip_id = f"synth_{index:05d}"
    rng = clip_rng(spec.seed, index)
    events = _place_events(spec, rng, clip_id)
    mask = events_to_mask(events, spec.grid, spec.classes, spec.n_frames).mask
    probs = np.where(mask, spec.event_level, spec.floor_level)
    noise = _truncated_normal(rng, probs.shape, spec.noise_clip)
    if spec.noise_sigma > 0:
        probs = np.clip(probs + spec.noise_sigma * noise, 0.0, 1.0)
    return events, PosteriorClip(clip_id, probs, spec.grid, spec.classes)


def generate(spec: SynthSpec, n_clips: int):
    """Return ``(ground_truth, posteriors)``, both keyed by clip id."""
    if n_clips < 1:
        raise InvalidInputError("n_clips must be >= 1")
    truth, posteriors = {}, {}
    for i in range(n_clips):
        events, clip = generate_clip(spec, i)
        truth[events.clip_id] = events
        posteriors[clip.clip_id] = clip
    return truth, posteriors
