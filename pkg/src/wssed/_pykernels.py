"""Pure numpy implementations of the frame-level kernels.

Every function takes/returns ``(T, C)`` arrays and works column-wise. The
compiled twin in ``_ckernels.pyx`` must produce identical output.
"""

import numpy as np


def binary_median(active, omega):
    """Majority vote of a binary mask over a centered window of ``omega`` frames.

    Windows are truncated at the clip edges; an even-sized truncated window
    that ties keeps the frame's own value.
    """
    active = np.ascontiguousarray(active, dtype=np.uint8)
    T = active.shape[0]
    half = omega // 2
    csum = np.zeros((T + 1,) + active.shape[1:], dtype=np.int64)
    np.cumsum(active, axis=0, out=csum[1:])
    t = np.arange(T)
    lo = np.maximum(t - half, 0)
    hi = np.minimum(t + half + 1, T)
    count = csum[hi] - csum[lo]
    n = (hi - lo).reshape((-1,) + (1,) * (active.ndim - 1))
    return ((2 * count > n) | ((2 * count == n) & (active != 0))).astype(np.uint8)


def _run_bounds(col):
    """Start and exclusive end of each run of ones in a 1-D 0/1 array."""
    d = np.diff(np.concatenate(([0], col.astype(np.int8), [0])))
    return np.flatnonzero(d == 1), np.flatnonzero(d == -1)


def hysteresis(probs, low, high):
    """Keep runs of ``probs > low`` that contain at least one ``probs > high`` frame."""
    probs = np.asarray(probs, dtype=np.float64)
    out = np.zeros(probs.shape, dtype=np.uint8)
    above_low = probs > low
    above_high = probs > high
    for c in range(probs.shape[1]):
        starts, ends = _run_bounds(above_low[:, c])
        if starts.size == 0:
            continue
        hits = np.cumsum(np.concatenate(([0], above_high[:, c].astype(np.int64))))
        seeds = hits[ends] - hits[starts]
        for s, e, k in zip(starts, ends, seeds):
            if k > 0:
                out[s:e, c] = 1
    return out


def bridge_gaps(mask, omega):
    """Fill interior inactive gaps shorter than ``omega`` frames."""
    out = np.array(mask, dtype=np.uint8, copy=True)
    if omega <= 1:
        return out
    for c in range(out.shape[1]):
        starts, ends = _run_bounds(out[:, c])
        for e, s in zip(ends[:-1], starts[1:]):
            if s - e < omega:
                out[e:s, c] = 1
    return out


def runs(col):
    """List of ``(start, end_exclusive)`` runs of active frames in a 1-D mask."""
    starts, ends = _run_bounds(np.asarray(col) != 0)
    return list(zip(starts.tolist(), ends.tolist()))
