import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdslab.toralmaps import (KickFunction, gv_derivative, gv_map, pair_translation,
                              standard_derivative, standard_map, swap, torus_close, torus_delta,
                              trace_g2, translate, two_step_reduction, wrap)

unit = st.floats(0.0, 0.999999)


def test_wrap_examples():
    assert wrap((1.25, -0.25)) == pytest.approx((0.25, 0.75))
    assert wrap((0.5, 1.5), (1.0, 2.0), (0.0, -1.0)) == pytest.approx((0.5, -0.5))
    # the upper edge of the domain folds to the lower edge
    assert wrap((1.0, 1.0), (1.0, 2.0), (0.0, -1.0)) == (0.0, -1.0)


def test_torus_delta_and_close():
    assert torus_delta(0.95, 0.05) == pytest.approx(-0.1)
    assert torus_close((0.0, 1e-13), (1.0 - 1e-13, 0.0))
    assert not torus_close((0.0, 0.0), (0.5, 0.0))


def test_standard_map_examples():
    assert standard_map(0.0, (0.3, 0.4)) == pytest.approx((0.7, 0.4))
    y = standard_map(1.0, (0.25, 0.0))
    assert y == pytest.approx((0.25, 0.0), abs=1e-15)  # 0.25 + 1 and 1 wrap to (0.25, 0)
    m = standard_derivative(1.0, (0.0, 0.0))
    assert np.allclose(m.matrix, [[1 + 2 * math.pi, 1], [2 * math.pi, 1]])


@settings(max_examples=100, deadline=None)
@given(K=st.floats(-3, 3), y0=unit, y1=unit)
def test_standard_derivative_has_unit_determinant(K, y0, y1):
    assert standard_derivative(K, (y0, y1)).det == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(K=st.floats(-2, 2), y0=st.floats(0.01, 0.99), y1=st.floats(0.01, 0.99))
def test_standard_derivative_matches_fd(K, y0, y1):
    h = 1e-7

    def F(a, b):
        return np.array(standard_map(K, (a, b)))

    def d(u, v):
        w = u - v
        return w - np.round(w)
    J = np.column_stack([d(F(y0 + h, y1), F(y0 - h, y1)), d(F(y0, y1 + h), F(y0, y1 - h))]) / (2 * h)
    assert np.allclose(J, standard_derivative(K, (y0, y1)).matrix, atol=1e-5 * (1 + abs(K)))


def test_gv_with_standard_kick_is_standard_map():
    V = KickFunction.standard(0.7)
    for y in [(0.1, 0.2), (0.9, 0.35), (0.5, 0.5)]:
        assert gv_map(V, y) == pytest.approx(standard_map(0.7, y), abs=1e-14)
        assert np.allclose(gv_derivative(V, y).matrix, standard_derivative(0.7, y).matrix)


def test_trigonometric_kick_derivative():
    V = KickFunction.trigonometric(0.1, (0.2, -0.3), (0.4,))
    for y in np.linspace(0, 1, 7):
        fd = (V.V(y + 1e-7) - V.V(y - 1e-7)) / 2e-7
        assert V.dV(y) == pytest.approx(fd, abs=1e-6)
    assert KickFunction.constant(0.3).V(0.77) == pytest.approx(0.3)


def test_kernel_iterations_compose():
    V = KickFunction.standard(0.9)
    k1, k2 = V.kernel(1), V.kernel(2)
    y = (0.23, 0.61)
    a = k1.step(*y)
    b = k1.step(a[0], a[1])
    c = k2.step(*y)
    assert torus_close(b[:2], c[:2])
    m1 = np.array(a[2:]).reshape(2, 2)
    m2 = np.array(b[2:]).reshape(2, 2)
    assert np.allclose(m2 @ m1, np.array(c[2:]).reshape(2, 2), atol=1e-12)


def test_swap_and_translations():
    assert swap((0.1, 0.2)) == (0.2, 0.1)
    assert translate((0.9, 0.5), (0.2, -0.6)) == pytest.approx((0.1, 0.9))
    # two vertical kicks collapse to (a, a + b)
    assert pair_translation((0.0, 0.1), (0.0, 0.2)) == pytest.approx((0.1, 0.3))


@settings(max_examples=300, deadline=None)
@given(K=st.floats(-2, 2), a=st.floats(-0.1, 0.1), b=st.floats(-0.1, 0.1), y0=unit, y1=unit)
def test_two_step_identity(K, a, b, y0, y1):
    lhs, rhs = two_step_reduction(K, a, b, (y0, y1))
    assert torus_close(lhs, rhs, tol=1e-12)


@settings(max_examples=300, deadline=None)
@given(K=st.floats(-2, 2), y0=unit, y1=unit)
def test_trace_formula(K, y0, y1):
    y = (y0, y1)
    m = standard_derivative(K, standard_map(K, y)) @ standard_derivative(K, y)
    assert trace_g2(K, y) == pytest.approx(m.trace, abs=1e-10)


def test_trace_formula_at_quarter():
    # cos 2 pi y1 vanishes at y1 = 1/4 and at its image 1/4 + K, so tr = 2
    assert trace_g2(1.0, (0.25, 0.0)) == pytest.approx(2.0, abs=1e-12)
