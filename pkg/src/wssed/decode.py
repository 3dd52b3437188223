"""Binary masks to timed events, and posterior fusion across models."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .core import Event, EventList, InvalidInputError, PosteriorClip, frame_to_seconds
from .postprocess import BinaryMask


def mask_to_events(mask: BinaryMask) -> EventList:
    """One event per maximal active run; the offset is the end of the last frame."""
    events = []
    for j, label in enumerate(mask.classes.labels):
        for start, end in kernels.runs(mask.mask[:, j]):
            events.append(
                Event(label, frame_to_seconds(start, mask.grid), frame_to_seconds(end, mask.grid))
            )
    return EventList(mask.clip_id, tuple(events))


def fuse(clips: Sequence[PosteriorClip]) -> PosteriorClip:
    """Average posteriors of several models for the same clip.

    Coarser clips are brought to the finest grid by repeating each frame
    ``factor / min_factor`` times; lengths are then cut to the shortest.
    """
    clips = list(clips)
    if len(clips) < 2:
        raise InvalidInputError("fusion needs at least two clips")
    first = clips[0]
    for c in clips[1:]:
        if c.clip_id != first.clip_id:
            raise InvalidInputError(f"cannot fuse different clips {first.clip_id!r} and {c.clip_id!r}")
        if c.classes != first.classes:
            raise InvalidInputError(f"{c.clip_id}: class maps differ between fused clips")
        if c.grid.base_hop != first.grid.base_hop:
            raise InvalidInputError(f"{c.clip_id}: base hops differ between fused clips")
    fine = min(c.grid.factor for c in clips)
    upsampled = []
    for c in clips:
        c.check()
        ratio, rem = divmod(c.grid.factor, fine)
        if rem:
            raise InvalidInputError(
                f"{c.clip_id}: factor {c.grid.factor} is not a multiple of {fine}"
            )
        upsampled.append(np.repeat(c.probs, ratio, axis=0))
    T = min(u.shape[0] for u in upsampled)
    probs = np.mean([u[:T] for u in upsampled], axis=0)
    return PosteriorClip(first.clip_id, probs, first.grid.with_factor(fine), first.classes)
