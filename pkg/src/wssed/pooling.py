"""Temporal pooling of frame probabilities into one clip-level probability."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .core import InvalidInputError, PosteriorClip


class PoolingKind(str, Enum):
    LINEAR_SOFTMAX = "linear_softmax"
    MEAN = "mean"
    MAX = "max"

    @classmethod
    def parse(cls, name) -> "PoolingKind":
        if isinstance(name, cls):
            return name
        aliases = {"ls": cls.LINEAR_SOFTMAX, "linear-softmax": cls.LINEAR_SOFTMAX}
        key = str(name).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidInputError(f"unknown pooling kind {name!r}") from None


def _as_sequence(sequence) -> np.ndarray:
    y = np.asarray(sequence, dtype=np.float64).ravel()
    if y.size == 0:
        raise InvalidInputError("cannot pool an empty sequence")
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise InvalidInputError("probability out of range")
    return y


def pool_clip(sequence, kind=PoolingKind.LINEAR_SOFTMAX) -> float:
    """Pool one class's frame probabilities.

    Linear softmax is ``sum(y**2) / sum(y)``: every frame is weighted by its
    own probability, so appending silent (zero) frames changes nothing. An
    all-zero sequence pools to 0.
    """
    y = _as_sequence(sequence)
    kind = PoolingKind.parse(kind)
    if kind is PoolingKind.MEAN:
        return float(np.mean(y))
    if kind is PoolingKind.MAX:
        return float(np.max(y))
    # correctly rounded sums, so zero frames leave the result bit-identical
    total = math.fsum(y)
    if total == 0.0:
        return 0.0
    return math.fsum(y * y) / total


def pool_gradient(sequence, kind=PoolingKind.LINEAR_SOFTMAX) -> np.ndarray:
    """Analytic partial derivatives of :func:`pool_clip` w.r.t. each frame."""
    y = _as_sequence(sequence)
    kind = PoolingKind.parse(kind)
    if kind is PoolingKind.MEAN:
        return np.full(y.shape, 1.0 / y.size)
    if kind is PoolingKind.MAX:
        g = np.zeros_like(y)
        g[np.argmax(y)] = 1.0
        return g
    s1 = math.fsum(y)
    if s1 <= 0.0:
        raise InvalidInputError("gradient undefined for an all-zero sequence")
    s2 = math.fsum(y * y)
    return (2.0 * y * s1 - s2) / (s1 * s1)


def pool_posteriors(clip: PosteriorClip, kind=PoolingKind.LINEAR_SOFTMAX) -> dict:
    """Pool every class column of a clip; returns ``{label: probability}``."""
    return {
        label: pool_clip(clip.probs[:, j], kind) for j, label in enumerate(clip.classes.labels)
    }
