"""The compiled kernels and the pure-Python fallback must agree step by step."""
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import TABLE_SPECS, get_table
from rdslab import _pykernels, kernels
from rdslab.noise import NoiseSampler, RngStream, UniformBall

ck = pytest.importorskip("rdslab._ckernels")


def pair(kernel):
    """(compiled, python) twins of a compiled kernel."""
    cls, args = kernel.__reduce__()
    return kernel, getattr(_pykernels, cls.__name__)(*args)


def billiard_pair(name):
    k = get_table(name).kernel
    if not isinstance(k, ck.StepKernel):
        pytest.skip("compiled backend not selected")
    return pair(k)


def kick_pair(K, iterations=1):
    return pair(ck.KickKernel(0.0, [0.0], [K], iterations))


@pytest.mark.skipif(os.environ.get("RDSLAB_PURE_PYTHON") == "1", reason="fallback forced")
def test_compiled_backend_is_selected_by_default():
    assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    code = "import rdslab; print(rdslab.BACKEND)"
    env = {**os.environ, "RDSLAB_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("name", sorted(TABLE_SPECS))
def test_billiard_steps_agree(name):
    c, p = billiard_pair(name)
    rng = np.random.default_rng(1)
    for y0, y1 in zip(rng.uniform(0, 1, 200), rng.uniform(-1, 1, 200)):
        a, b = np.array(c.step(y0, y1)), np.array(p.step(y0, y1))
        d = a - b
        d[0] -= round(d[0])
        assert np.abs(d).max() <= 1e-12 * max(1.0, np.abs(a).max())


@pytest.mark.parametrize("name", ["ellipse", "pdisk_s2"])
def test_charts_agree(name):
    c, p = billiard_pair(name)
    for s in np.linspace(0, 1, 50, endpoint=False):
        for u, v in zip(c.chart(s), p.chart(s)):
            assert np.allclose(u, v, rtol=1e-13, atol=1e-14)


@pytest.mark.parametrize("K, it", [(1.0, 1), (0.3, 2), (0.0, 1)])
def test_kick_steps_agree(K, it):
    c, p = kick_pair(K, it)
    for y in np.random.default_rng(2).random((100, 2)):
        assert np.allclose(c.step(*y), p.step(*y), rtol=1e-13, atol=1e-13)


def _drive(mod, kernel, fn, n=2000, seed=3):
    noise = NoiseSampler(UniformBall(0.05), RngStream(seed)).draw(n)
    y = np.array([0.3, 0.1])
    if fn == "orbit":
        out = np.empty((n, 2))
        mod.orbit(kernel, y, noise, out)
        return out
    if fn == "chain":
        out = np.empty(n)
        mod.projective_chain(kernel, y, 0.4, noise, out)
        return out
    Q = np.array([1.0, 0.0, 0.0, 1.0])
    return np.array(mod.accumulate(kernel, y, Q, noise, 8) + tuple(Q) + tuple(y))


@pytest.mark.parametrize("fn", ["orbit", "chain", "accumulate"])
@pytest.mark.parametrize("which", ["kick", "pdisk_h2"])
def test_drivers_agree_on_short_runs(fn, which):
    # chaotic orbits amplify last-bit differences at rate lambda, so runs are kept short
    c, p = kick_pair(1.0) if which == "kick" else billiard_pair(which)
    n = 100
    a = _drive(ck, c, fn, n)
    b = _drive(_pykernels, p, fn, n)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_drivers_agree_exactly_for_integrable_map():
    c, p = kick_pair(0.0)
    for fn in ("orbit", "chain", "accumulate"):
        assert np.allclose(_drive(ck, c, fn), _drive(_pykernels, p, fn), rtol=1e-12, atol=1e-12)


def test_compiled_kernels_pickle():
    import pickle
    c, _ = billiard_pair("ellipse")
    clone = pickle.loads(pickle.dumps(c))
    assert clone.step(0.2, 0.3) == c.step(0.2, 0.3)


def test_pure_python_exponent_agrees_statistically():
    from rdslab.rds import RandomSystem, lyapunov
    c, p = billiard_pair("pdisk_h2")
    noise = UniformBall(0.05)
    est = [lyapunov(RandomSystem(k, noise, "pdisk", (1.0, 2.0), (0.0, -1.0)), (0.3, 0.1), 10_000,
                    rng=RngStream(seed)) for k, seed in ((c, 1), (p, 2))]
    se = np.hypot(est[0].std_error, est[1].std_error)
    assert abs(est[0].lambda_plus - est[1].lambda_plus) < 3 * se
