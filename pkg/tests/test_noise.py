import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rdslab.noise import (Degenerate, NoiseSampler, RngStream, SingularVertical, UniformBall,
                          WrappedGaussian, describe, sample)


@pytest.mark.parametrize("bad", [lambda: UniformBall(0.0), lambda: WrappedGaussian(-1.0),
                                 lambda: SingularVertical(0.0),
                                 lambda: SingularVertical(0.1, "cauchy")])
def test_invalid_models(bad):
    with pytest.raises(ValueError):
        bad()


def test_same_seed_same_stream():
    a = NoiseSampler(UniformBall(0.05), RngStream(7)).draw(1000)
    b = NoiseSampler(UniformBall(0.05), RngStream(7)).draw(1000)
    assert np.array_equal(a, b)


def test_workers_are_distinct():
    a = NoiseSampler(UniformBall(0.05), RngStream(7, 0)).draw(1000)
    b = NoiseSampler(UniformBall(0.05), RngStream(7).split(1)).draw(1000)
    assert not np.array_equal(a, b)
    # cross-correlation between worker streams is at the 1/sqrt(n) level
    n = 200_000
    u = NoiseSampler(WrappedGaussian(1.0), RngStream(3, 0)).draw(n)[:, 0]
    v = NoiseSampler(WrappedGaussian(1.0), RngStream(3, 1)).draw(n)[:, 0]
    assert abs(np.corrcoef(u, v)[0, 1]) < 5 / np.sqrt(n)


@settings(max_examples=20, deadline=None)
@given(chunks=st.lists(st.integers(1, 5000), min_size=1, max_size=8))
def test_draws_do_not_depend_on_chunking(chunks):
    total = sum(chunks)
    whole = NoiseSampler(UniformBall(0.1), RngStream(1)).draw(total)
    s = NoiseSampler(UniformBall(0.1), RngStream(1))
    parts = np.concatenate([s.draw(k) for k in chunks])
    assert np.array_equal(whole, parts)


def test_uniform_ball_support_and_law():
    eps = 0.05
    x = NoiseSampler(UniformBall(eps), RngStream(2)).draw(100_000)
    r = np.hypot(x[:, 0], x[:, 1])
    assert r.max() <= eps
    # uniform on the disk: (r / eps)^2 is U(0, 1); the angle is uniform
    assert stats.kstest((r / eps) ** 2, "uniform").pvalue > 1e-3
    ang = (np.arctan2(x[:, 1], x[:, 0]) + np.pi) / (2 * np.pi)
    assert stats.kstest(ang, "uniform").pvalue > 1e-3


def test_wrapped_gaussian_is_truncated():
    x = NoiseSampler(WrappedGaussian(0.02), RngStream(4)).draw(50_000)
    assert np.abs(x).max() <= 6 * 0.02
    assert x.std() == pytest.approx(0.02, rel=0.02)


@pytest.mark.parametrize("density, cdf", [
    ("uniform", stats.uniform(-0.1, 0.2).cdf),
    ("triangular", stats.triang(0.5, -0.1, 0.2).cdf),
])
def test_singular_vertical(density, cdf):
    x = NoiseSampler(SingularVertical(0.1, density), RngStream(5)).draw(50_000)
    assert np.all(x[:, 0] == 0.0)
    assert stats.kstest(x[:, 1], cdf).pvalue > 1e-3


def test_singular_vertical_chi_square():
    x = NoiseSampler(SingularVertical(0.1), RngStream(6)).draw(100_000)[:, 1]
    counts, _ = np.histogram(x, bins=20, range=(-0.1, 0.1))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_degenerate_and_sample():
    assert sample(Degenerate(), RngStream(0)) == (0.0, 0.0)
    s = NoiseSampler(UniformBall(0.05), RngStream(9))
    first = NoiseSampler(UniformBall(0.05), RngStream(9)).draw(2)
    assert sample(UniformBall(0.05), s) == tuple(first[0])
    assert sample(UniformBall(0.05), s) == tuple(first[1])


def test_describe():
    assert describe(UniformBall(0.05)) == "uniform_ball(eps=0.05)"
    assert describe(SingularVertical(0.1, "triangular")) == "singular_vertical(eps=0.1,triangular)"
    assert describe(Degenerate()) == "degenerate"
    assert repr(RngStream(3, 2)) == "RngStream(seed=3, worker=2)"
