import numpy as np
import pytest
from hypothesis import given, strategies as st

from wssed.core import ClassMap, InvalidInputError, PosteriorClip
from wssed.pooling import PoolingKind, pool_clip, pool_gradient, pool_posteriors


def fd_gradient(f, x, h=1e-5):
    """Independent central-difference oracle."""
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(out)


def ls_formula(y):
    y = np.asarray(y, dtype=float)
    return (y ** 2).sum() / y.sum()


@pytest.mark.parametrize(
    "seq, kind, expected",
    [
        ([0.7, 0.7, 0.7], "linear_softmax", 0.7),
        ([1.0, 0.0, 0.0], "linear_softmax", 1.0),
        ([0.5, 1.0], "linear_softmax", 1.25 / 1.5),
        ([0.2, 0.8], "max", 0.8),
        ([0.2, 0.8], "mean", 0.5),
    ],
)
def test_pool_clip_examples(seq, kind, expected):
    assert pool_clip(seq, kind) == pytest.approx(expected, rel=1e-12)


def test_all_zero_linear_softmax_is_zero():
    assert pool_clip([0.0, 0.0], "ls") == 0.0


@pytest.mark.parametrize("seq", [[], [0.5, 1.1], [-0.1]])
def test_pool_clip_rejects(seq):
    with pytest.raises(InvalidInputError):
        pool_clip(seq, "ls")


def test_kind_parse():
    assert PoolingKind.parse("ls") is PoolingKind.LINEAR_SOFTMAX
    with pytest.raises(InvalidInputError):
        PoolingKind.parse("attention")


def test_gradient_examples():
    np.testing.assert_allclose(pool_gradient([0.5, 0.5], "mean"), [0.5, 0.5])
    np.testing.assert_allclose(pool_gradient([0.5, 1.0], "ls"), [1 / 9, 7 / 9], rtol=1e-12)
    np.testing.assert_allclose(pool_gradient([0.3], "ls"), [1.0], rtol=1e-12)
    np.testing.assert_array_equal(pool_gradient([0.2, 0.9, 0.4], "max"), [0, 1, 0])


@pytest.mark.parametrize("seq", [[0.5, 1.0], [0.3]])
def test_gradient_examples_match_fd(seq):
    np.testing.assert_allclose(pool_gradient(seq, "ls"), fd_gradient(ls_formula, seq), rtol=1e-6)


def test_gradient_undefined_at_zero():
    with pytest.raises(InvalidInputError, match="gradient undefined"):
        pool_gradient([0.0, 0.0], "ls")


def test_gradient_matches_fd_on_1000_random_sequences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        y = rng.uniform(0.01, 1.0, size=rng.integers(1, 30))
        a = pool_gradient(y, "ls")
        n = fd_gradient(ls_formula, y)
        worst = max(worst, np.linalg.norm(a - n) / np.linalg.norm(n))
    assert worst < 1e-4


probs = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=50)


@given(probs)
def test_linear_softmax_between_min_and_max(y):
    if sum(y) == 0:
        return
    v = pool_clip(y, "ls")
    assert min(y) - 1e-12 <= v <= max(y) + 1e-12


@given(probs, st.integers(1, 100))
def test_linear_softmax_ignores_silent_frames(y, n_zeros):
    assert pool_clip(y + [0.0] * n_zeros, "ls") == pool_clip(y, "ls")


def test_mean_pooling_depends_on_silent_frames():
    assert pool_clip([0.8, 0.0, 0.0], "mean") != pool_clip([0.8], "mean")


def test_pool_posteriors_per_column():
    clip = PosteriorClip("c", [[0.5, 0.0], [1.0, 0.0]], classes=ClassMap(("a", "b")))
    assert pool_posteriors(clip, "ls") == pytest.approx({"a": 1.25 / 1.5, "b": 0.0})
