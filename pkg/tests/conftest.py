import numpy as np
import pytest

from wssed import _pykernels, kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _backends():
    out = [pytest.param(_pykernels, id="python")]
    try:
        from wssed import _ckernels
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))
    else:
        out.append(pytest.param(_ckernels, id="cython"))
    return out


@pytest.fixture(params=_backends())
def backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    impl = request.param
    for name in ("binary_median", "hysteresis", "bridge_gaps", "runs"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return impl
