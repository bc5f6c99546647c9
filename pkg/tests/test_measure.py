from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from systolic.geometry import CurvePolyline, DeckWord, Profile, SurfaceSpec
from systolic.measure import (QuadratureConfig, QuadratureError, Singularity, adaptive_simpson,
                              area, curve_length, integrate, l2_inner, profile_integral)


def test_simpson_polynomial_exact():
    val = adaptive_simpson(lambda x: x ** 3 - 2 * x, [0.0, 2.0])
    assert val == pytest.approx(0.0, abs=1e-14)


def test_simpson_smooth_oracle():
    val = adaptive_simpson(np.exp, [0.0, 1.0], 1e-12)
    assert val == pytest.approx(math.e - 1, abs=1e-11)


def test_simpson_kink_with_breakpoint():
    val = adaptive_simpson(lambda x: np.abs(x - 0.3), [0.0, 0.3, 1.0], 1e-12)
    assert val == pytest.approx(0.5 * 0.09 + 0.5 * 0.49, abs=1e-13)


def test_simpson_nonconvergence_raises():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), [0.0, 1.0], 1e-14,
                         max_subdivisions=5)


def test_inverse_sqrt_endpoint():
    # int_0^1 dx / sqrt(1 - x^2) = pi / 2
    cfg = QuadratureConfig(1e-12, endpoint_singularity=Singularity.INVERSE_SQRT)
    val = integrate(lambda x: 1.0 / np.sqrt(1.0 - x * x), 0.0, 1.0, cfg)
    assert val == pytest.approx(math.pi / 2, abs=1e-11)


def test_inverse_sqrt_both_ends():
    cfg = QuadratureConfig(1e-12, endpoint_singularity="inverse_sqrt")
    val = integrate(lambda x: 1.0 / np.sqrt(x * (1.0 - x)), 0.0, 1.0, cfg)
    assert val == pytest.approx(math.pi, abs=1e-10)


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivisions=0)


def test_area_flat_and_phi0():
    assert area(SurfaceSpec.mobius(0.7), Profile.flat(0.7)) == pytest.approx(2 * math.pi * 0.7)
    assert area(SurfaceSpec.klein(0.7), Profile.flat(0.7, 2.0)) == pytest.approx(16 * math.pi * 0.7)
    sech = Profile.expression(1.2, lambda y: 1 / np.cosh(y), "sech")
    assert area(SurfaceSpec.mobius(1.2), sech) == pytest.approx(2 * math.pi * math.tanh(1.2),
                                                                 abs=1e-10)


def test_l2_inner_beta_mismatch():
    with pytest.raises(ValueError):
        l2_inner(SurfaceSpec.mobius(1.0), Profile.flat(1.0), Profile.flat(0.5))


def test_profile_integral_upper_limit():
    p = Profile.expression(2.0, lambda y: y, "id")
    assert profile_integral(p, upper=1.0) == pytest.approx(0.5)


def test_sampled_profile_integral_is_trapezoid():
    ys = np.linspace(0.0, 1.0, 11)
    vals = 1.0 + ys ** 2
    p = Profile.sampled(ys, vals)
    assert profile_integral(p) == pytest.approx(np.trapezoid(vals, ys) if hasattr(np, "trapezoid")
                                                else np.trapz(vals, ys), abs=1e-12)


@pytest.mark.parametrize("beta", [0.4, 1.0])
def test_flat_straight_lengths(beta):
    # flat metric: the straight segment from (0, y0) to w(0, y0) has Euclidean length
    s = SurfaceSpec.klein(beta)
    for word, y0 in [(DeckWord(1, 0), 0.0), (DeckWord(0, 1), 0.2), (DeckWord(1, 1), 0.1)]:
        end = np.array([word.k * math.pi, (-1) ** word.k * y0 + 4 * beta * word.m])
        c = CurvePolyline(np.array([[0.0, y0], end]), word, s)
        expected = math.hypot(end[0], end[1] - y0)
        assert curve_length(s, Profile.flat(beta, 1.5), c) == pytest.approx(1.5 * expected)


def test_vertical_curve_crossing_folds():
    # a vertical loop sees each level of [0, beta] four times
    beta = 0.8
    s = SurfaceSpec.klein(beta)
    prof = Profile.expression(beta, lambda y: 1.0 + y ** 2, "q")
    c = CurvePolyline(np.array([[0.0, -0.1], [0.0, 4 * beta - 0.1]]), DeckWord(0, 1), s)
    expected = 4 * (beta + beta ** 3 / 3)
    assert curve_length(s, prof, c) == pytest.approx(expected, abs=1e-10)


@given(st.floats(0.2, 2.0), st.floats(0.1, 3.0), st.integers(2, 30))
def test_length_is_reparametrization_invariant(beta, c, n):
    s = SurfaceSpec.mobius(beta)
    prof = Profile.expression(beta, lambda y: 1.0 + 0.5 * np.cos(y), "cos")
    y0 = 0.3 * beta
    xs = np.linspace(0.0, math.pi, n)
    ys = np.linspace(y0, -y0, n)
    fine = CurvePolyline(np.column_stack((xs, ys)), DeckWord(1, 0), s)
    coarse = CurvePolyline(np.array([[0.0, y0], [math.pi, -y0]]), DeckWord(1, 0), s)
    assert curve_length(s, prof, fine) == pytest.approx(curve_length(s, prof, coarse), rel=1e-9)
    assert curve_length(s, prof.scaled(c), fine) == pytest.approx(c * curve_length(s, prof, fine),
                                                                  rel=1e-9)
