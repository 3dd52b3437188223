"""Temporal subsampling operators, the factor <-> layer-stride map, and a
finite-difference gradient harness.

Each operator reduces one flattened window ``x`` to a scalar:

* ``MeanMax``      mean(x) + max(x)
* ``AlphaMeanMax`` alpha * max(x) + (1 - alpha) * mean(x)
* ``LpPool``       (mean(x ** p)) ** (1 / p), the power mean
* ``ConvPool``     dot(W, x) for a K x K kernel W

and exposes analytic gradients with respect to the window and to its own
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple, Union

import numpy as np

from .core import InvalidInputError

#: Subsampling factors with a four-layer stride sequence over {1, 2}.
VALID_FACTORS = (1, 2, 4, 8, 16)
N_LAYERS = 4

FD_STEP = 1e-5
GRAD_TOLERANCE = 1e-4


def _window(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidInputError("subsampling window is empty")
    return x


@dataclass(frozen=True)
class MeanMax:
    name = "mm"

    def __call__(self, x) -> float:
        x = _window(x)
        return float(np.mean(x) + np.max(x))

    def evaluate(self, x) -> float:
        return self(x)

    def grad_input(self, x) -> np.ndarray:
        x = _window(x)
        g = np.full(x.shape, 1.0 / x.size)
        g[np.argmax(x)] += 1.0
        return g

    def grad_params(self, x) -> Dict[str, np.ndarray]:
        return {}


@dataclass(frozen=True)
class AlphaMeanMax:
    alpha: float = 0.5
    name = "amm"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")

    def __call__(self, x) -> float:
        return self.evaluate(_window(x))

    def evaluate(self, x, alpha=None) -> float:
        a = self.alpha if alpha is None else alpha
        return float(a * np.max(x) + (1.0 - a) * np.mean(x))

    def grad_input(self, x) -> np.ndarray:
        x = _window(x)
        g = np.full(x.shape, (1.0 - self.alpha) / x.size)
        g[np.argmax(x)] += self.alpha
        return g

    def grad_params(self, x) -> Dict[str, np.ndarray]:
        x = _window(x)
        return {"alpha": np.array([np.max(x) - np.mean(x)])}


@dataclass(frozen=True)
class LpPool:
    p: float = 4.0
    name = "lp"

    def __post_init__(self):
        if not self.p >= 1.0:
            raise InvalidInputError(f"p must be >= 1, got {self.p}")

    def _check(self, x) -> np.ndarray:
        x = _window(x)
        if np.any(x < 0) and float(self.p) != int(self.p):
            raise InvalidInputError("lp requires non-negative input for fractional p")
        return x

    def __call__(self, x) -> float:
        return self.evaluate(self._check(x))

    def evaluate(self, x, p=None) -> float:
        p = self.p if p is None else p
        return float(np.mean(x ** p) ** (1.0 / p))

    def grad_input(self, x) -> np.ndarray:
        x = self._check(x)
        out = self(x)
        if out == 0.0:
            raise InvalidInputError("lp gradient undefined at an all-zero window")
        return x ** (self.p - 1.0) * out ** (1.0 - self.p) / x.size

    def grad_params(self, x) -> Dict[str, np.ndarray]:
        x = self._check(x)
        if np.any(x <= 0):
            raise InvalidInputError("d/dp needs a strictly positive window")
        p = self.p
        xp = x ** p
        s = np.mean(xp)
        out = s ** (1.0 / p)
        dp = out * (np.mean(xp * np.log(x)) / (p * s) - math.log(s) / (p * p))
        return {"p": np.array([dp])}


@dataclass(frozen=True)
class ConvPool:
    """Strided convolution with a square ``K x K`` kernel."""

    weight: np.ndarray = field(default_factory=lambda: np.full((2, 2), 0.25))
    name = "conv"

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise InvalidInputError(f"conv kernel must be square K x K, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weight", w)

    @property
    def size(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def uniform(cls, k: int) -> "ConvPool":
        return cls(np.full((k, k), 1.0 / (k * k)))

    @classmethod
    def random(cls, k: int, seed: int) -> "ConvPool":
        return cls(np.random.default_rng(seed).uniform(-1.0, 1.0, size=(k, k)))

    def _check(self, x) -> np.ndarray:
        x = _window(x)
        if x.size != self.weight.size:
            raise InvalidInputError(f"conv window needs {self.weight.size} values, got {x.size}")
        return x

    def __call__(self, x) -> float:
        return self.evaluate(self._check(x))

    def evaluate(self, x, weight=None) -> float:
        w = self.weight if weight is None else weight
        return float(np.dot(np.ravel(w), x))

    def grad_input(self, x) -> np.ndarray:
        self._check(x)
        return self.weight.ravel().copy()

    def grad_params(self, x) -> Dict[str, np.ndarray]:
        return {"weight": self._check(x).copy()}

    def __eq__(self, other):
        return isinstance(other, ConvPool) and np.array_equal(self.weight, other.weight)

    def __hash__(self):
        return hash(self.weight.tobytes())


SubsampleKind = Union[MeanMax, AlphaMeanMax, LpPool, ConvPool]


def make_kind(name: str, *, alpha: float = 0.5, p: float = 4.0, kernel=None, seed: int = 0) -> SubsampleKind:
    """Build an operator from its short name (``mm``, ``amm``, ``lp``, ``conv``)."""
    name = name.lower().replace("-", "_")
    if name == "mm":
        return MeanMax()
    if name in ("amm", "alpha_mm"):
        return AlphaMeanMax(alpha)
    if name == "lp":
        return LpPool(p)
    if name == "conv":
        if kernel is None:
            return ConvPool.random(2, seed)
        return ConvPool(kernel)
    raise InvalidInputError(f"unknown subsampling kind {name!r}")


def subsample_window(x, kind: SubsampleKind) -> float:
    return kind(x)


def factor_to_layers(k: int) -> Tuple[int, int, int, int]:
    """Layer strides (s1..s4) for subsampling factor ``k``; halving happens early."""
    if k not in VALID_FACTORS:
        raise InvalidInputError(f"subsampling factor must be one of {VALID_FACTORS}, got {k}")
    n_halvings = int(k).bit_length() - 1
    return (2,) * n_halvings + (1,) * (N_LAYERS - n_halvings)


def layers_to_factor(layers) -> int:
    return int(np.prod(layers))


@dataclass(frozen=True)
class SubsampleConfig:
    factor: int
    layers: Tuple[int, int, int, int]

    def __post_init__(self):
        layers = tuple(int(s) for s in self.layers)
        if len(layers) != N_LAYERS or any(s not in (1, 2) for s in layers):
            raise InvalidInputError(f"layers must be {N_LAYERS} strides from {{1, 2}}, got {layers}")
        if any(a < b for a, b in zip(layers, layers[1:])):
            raise InvalidInputError(f"layer strides must be non-increasing, got {layers}")
        if layers_to_factor(layers) != self.factor:
            raise InvalidInputError(f"strides {layers} do not multiply to {self.factor}")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_factor(cls, k: int) -> "SubsampleConfig":
        return cls(k, factor_to_layers(k))


def subsample_map(feature, time_stride: int, feat_stride: int = 2, kind: SubsampleKind = MeanMax()) -> np.ndarray:
    """Tile a ``T x D`` map into ``time_stride x feat_stride`` windows and reduce each.

    Output shape is ``ceil(T / time_stride) x ceil(D / feat_stride)``. Partial
    windows at the far edges are reduced over the elements they contain; for
    ``ConvPool`` that means the matching top-left block of the kernel.
    """
    f = np.asarray(feature, dtype=np.float64)
    if f.ndim != 2 or f.size == 0:
        raise InvalidInputError(f"feature map must be a non-empty 2-D array, got shape {f.shape}")
    if time_stride < 1 or feat_stride < 1:
        raise InvalidInputError("strides must be positive")
    if isinstance(kind, ConvPool) and kind.weight.shape != (time_stride, feat_stride):
        raise InvalidInputError(
            f"conv kernel {kind.weight.shape} does not match window {(time_stride, feat_stride)}"
        )
    T, D = f.shape
    nt, nd = -(-T // time_stride), -(-D // feat_stride)
    out = np.empty((nt, nd))
    for i in range(nt):
        for j in range(nd):
            block = f[i * time_stride:(i + 1) * time_stride, j * feat_stride:(j + 1) * feat_stride]
            if isinstance(kind, ConvPool) and block.shape != kind.weight.shape:
                a, b = block.shape
                out[i, j] = float(np.sum(kind.weight[:a, :b] * block))
            else:
                out[i, j] = kind(block)
    return out


def subsample_stack(feature, config: SubsampleConfig, kind: SubsampleKind = MeanMax()) -> np.ndarray:
    """Apply every layer of ``config``, halving the feature axis at each one."""
    out = np.asarray(feature, dtype=np.float64)
    for s in config.layers:
        out = subsample_map(out, s, 2, kind)
    return out


# -- gradient verification -------------------------------------------------


def central_difference(func: Callable[[np.ndarray], float], x, step: float = FD_STEP) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.array(x, dtype=np.float64)
    g = np.empty(x.size)
    flat = x.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = func(x)
        flat[i] = orig - step
        fm = func(x)
        flat[i] = orig
        g[i] = (fp - fm) / (2.0 * step)
    return g


def relative_error(analytic, numeric) -> float:
    """Norm-wise relative error ``|a - n| / max(|a|, |n|)``; 0 when both vanish."""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def numeric_param_grads(kind: SubsampleKind, x, step: float = FD_STEP) -> Dict[str, np.ndarray]:
    """Central differences with respect to each parameter of ``kind``.

    Goes through ``evaluate`` so a step may leave the validated domain
    (e.g. ``p = 1 - h``).
    """
    x = _window(x)
    out = {}
    for name in kind.grad_params(x):
        current = getattr(kind, name)
        shape = np.shape(current)

        def f(v, name=name, shape=shape):
            return kind.evaluate(x, **{name: v.reshape(shape) if shape else float(v[0])})

        out[name] = central_difference(f, np.atleast_1d(np.array(current, dtype=np.float64)), step)
    return out


@dataclass
class GradcheckReport:
    kind: str
    trials: int
    seed: int
    max_rel_error: float
    tolerance: float = GRAD_TOLERANCE
    passed: bool = False

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "trials": self.trials,
            "seed": self.seed,
            "max_rel_error": self.max_rel_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _random_window(rng: np.random.Generator, kind) -> np.ndarray:
    n = kind.weight.size if isinstance(kind, ConvPool) else int(rng.integers(1, 10))
    while True:
        x = rng.uniform(0.05, 1.0, size=n)
        if n < 2:
            return x
        top = np.sort(x)[-2:]
        # keep the argmax away from a kink the finite difference would straddle
        if top[1] - top[0] > 1e-3:
            return x


def gradcheck(kind, trials: int = 100, seed: int = 0, step: float = FD_STEP,
              tolerance: float = GRAD_TOLERANCE) -> GradcheckReport:
    """Compare analytic and central-difference gradients on seeded random windows.

    ``kind`` is a subsampling operator or a pooling kind from
    :mod:`wssed.pooling`. Parameter gradients (alpha, p, kernel) are part of
    the compared vector. Windows are drawn from [0.05, 1] with a unique
    maximum.
    """
    from .pooling import PoolingKind, pool_clip, pool_gradient

    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    if isinstance(kind, (PoolingKind, str)):
        pkind = PoolingKind.parse(kind)
        label = pkind.value
        for _ in range(trials):
            y = rng.uniform(0.05, 1.0, size=int(rng.integers(1, 17)))
            numeric = central_difference(lambda v: pool_clip(v, pkind), y, step)
            worst = max(worst, relative_error(pool_gradient(y, pkind), numeric))
    else:
        label = kind.name
        for _ in range(trials):
            x = _random_window(rng, kind)
            analytic = [kind.grad_input(x)]
            numeric = [central_difference(kind, x, step)]
            num_params = numeric_param_grads(kind, x, step)
            for name, g in kind.grad_params(x).items():
                analytic.append(np.ravel(g))
                numeric.append(num_params[name])
            worst = max(worst, relative_error(np.concatenate(analytic), np.concatenate(numeric)))
    return GradcheckReport(label, trials, seed, worst, tolerance, worst < tolerance)
