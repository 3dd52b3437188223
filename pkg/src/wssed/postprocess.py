"""Binarisation of posteriors: threshold + median filter, or double threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ClassMap, InvalidInputError, PosteriorClip, TimeGrid


@dataclass(frozen=True)
class MedianFilterParams:
    phi: float = 0.5
    omega: int = 51

    def __post_init__(self):
        if not 0.0 < self.phi < 1.0:
            raise InvalidInputError(f"phi must lie in (0, 1), got {self.phi}")
        if int(self.omega) != self.omega or self.omega < 1:
            raise InvalidInputError(f"omega must be a positive integer, got {self.omega}")
        if self.omega % 2 == 0:
            raise InvalidInputError(f"window must be odd, got omega={self.omega}")


@dataclass(frozen=True)
class DoubleThresholdParams:
    phi_low: float = 0.2
    phi_hi: float = 0.75
    omega: int = 1

    def __post_init__(self):
        if not 0.0 < self.phi_low <= self.phi_hi < 1.0:
            raise InvalidInputError(
                f"need 0 < phi_low <= phi_hi < 1, got phi_low={self.phi_low} phi_hi={self.phi_hi}"
            )
        if int(self.omega) != self.omega or self.omega < 1:
            raise InvalidInputError(f"omega must be a positive integer, got {self.omega}")


@dataclass(frozen=True)
class BinaryMask:
    clip_id: str
    mask: np.ndarray
    grid: TimeGrid
    classes: ClassMap

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.ndim != 2 or m.shape[1] != len(self.classes):
            raise InvalidInputError(
                f"mask shape {m.shape} does not match {len(self.classes)} classes"
            )
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)


def _as_clip(clip) -> PosteriorClip:
    if isinstance(clip, PosteriorClip):
        return clip.check()
    # bare sequences are convenient in tests and notebooks
    return PosteriorClip("", np.asarray(clip, dtype=np.float64)).check()


def threshold(clip, phi: float) -> BinaryMask:
    clip = _as_clip(clip)
    return BinaryMask(clip.clip_id, clip.probs > phi, clip.grid, clip.classes)


def median_filter(clip, params: MedianFilterParams = MedianFilterParams()) -> BinaryMask:
    """Binarise with ``y > phi``, then majority-vote over ``omega`` centered frames.

    Windows shrink at the clip edges; a tie in a shrunken window keeps the
    frame's own value. ``omega == 1`` is plain thresholding.
    """
    clip = _as_clip(clip)
    active = clip.probs > params.phi
    if params.omega > 1:
        active = kernels.binary_median(active, params.omega)
    return BinaryMask(clip.clip_id, active, clip.grid, clip.classes)


def double_threshold(clip, params: DoubleThresholdParams = DoubleThresholdParams()) -> BinaryMask:
    """Hysteresis binarisation.

    Frames above ``phi_hi`` seed events; each seed grows over the contiguous
    frames above ``phi_low``. Afterwards, inactive gaps shorter than ``omega``
    frames between two segments are closed, so ``omega == 1`` closes nothing.
    """
    clip = _as_clip(clip)
    active = kernels.hysteresis(clip.probs, params.phi_low, params.phi_hi)
    if params.omega > 1:
        active = kernels.bridge_gaps(active, params.omega)
    return BinaryMask(clip.clip_id, active, clip.grid, clip.classes)


def postprocess(clip, params) -> BinaryMask:
    """Dispatch on the parameter type."""
    if isinstance(params, MedianFilterParams):
        return median_filter(clip, params)
    if isinstance(params, DoubleThresholdParams):
        return double_threshold(clip, params)
    raise TypeError(f"unsupported post-processing parameters {type(params).__name__}")
