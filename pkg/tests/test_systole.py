from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolic.geometry import CurvePolyline, DeckWord, Profile, SurfaceSpec, classify_curve
from systolic.measure import curve_length
from systolic.optimal import BETA1, klein_optimal, phi0
from systolic.systole import (GridConfig, candidate_words, fold_to_mobius, shortest_in_class,
                              stencil_offsets, systole_estimate, witness_is_consistent)

COARSE = GridConfig(64, 64)


def flat_class_oracle(beta, word, c=1.0):
    """Shortest straight segment from (0, y0) to w(0, y0) over seam offsets."""
    y0 = np.linspace(-beta, beta, 20001)
    dy = ((-1) ** word.k - 1) * y0 + 4 * beta * word.m
    return c * float(np.min(np.hypot(word.k * math.pi, dy)))


def smooth_profile(beta, a, b):
    return Profile.expression(beta, lambda y: 1.0 + a * np.cos(math.pi * y / beta)
                              + b * np.cos(2 * math.pi * y / beta), "smooth")


def test_grid_config_validation():
    with pytest.raises(ValueError):
        GridConfig(4, 64)
    with pytest.raises(ValueError):
        GridConfig(64, 64, 12)
    with pytest.raises(ValueError):
        GridConfig(64, 64, word_bounds=(1, 1))
    with pytest.raises(ValueError):
        GridConfig(64, 64, word_bounds=(2, 0))


@pytest.mark.parametrize("n, count", [(8, 8), (16, 16), (32, 32)])
def test_stencil_sizes(n, count):
    moves = stencil_offsets(n)
    assert len(moves) == count
    assert len({tuple(m) for m in moves}) == count


def test_candidate_words():
    g = GridConfig(64, 64, word_bounds=(2, 1))
    assert [str(w) for w in candidate_words(SurfaceSpec.mobius(1.0), g)] == ["(1,0)", "(2,0)"]
    kw = candidate_words(SurfaceSpec.klein(1.0), g)
    assert DeckWord(0, 1) in kw and DeckWord(2, -1) in kw and len(kw) == 7


def test_mobius_flat_core_geodesic():
    s = SurfaceSpec.mobius(1.0)
    length, witness = shortest_in_class(s, Profile.flat(1.0), DeckWord(1, 0))
    assert length == pytest.approx(math.pi, rel=0.01)
    assert witness.word == DeckWord(1, 0)


@pytest.mark.parametrize("word", [DeckWord(0, 1), DeckWord(1, 1), DeckWord(2, 1)])
def test_klein_flat_classes(word):
    beta = 0.6
    s = SurfaceSpec.klein(beta)
    length, witness = shortest_in_class(s, Profile.flat(beta), word, COARSE)
    assert length == pytest.approx(flat_class_oracle(beta, word), rel=0.01)
    assert length >= flat_class_oracle(beta, word) - 1e-9
    assert curve_length(s, Profile.flat(beta), witness) == pytest.approx(length, rel=1e-9)


def test_invalid_words():
    with pytest.raises(ValueError):
        shortest_in_class(SurfaceSpec.klein(1.0), Profile.flat(1.0), DeckWord(0, 0))
    with pytest.raises(ValueError):
        shortest_in_class(SurfaceSpec.mobius(1.0), Profile.flat(1.0), DeckWord(1, 1))


def test_mobius_phi0_thick_picks_boundary_class():
    beta = 2.0
    s = SurfaceSpec.mobius(beta)
    est = systole_estimate(s, Profile.expression(beta, phi0, "phi0", decreasing=True))
    assert est.value == pytest.approx(2 * math.pi * phi0(beta), rel=0.02)
    assert est.word == DeckWord(2, 0)


@pytest.mark.parametrize("beta", [0.5, 0.85, 1.0, 1.5])
def test_klein_optimal_normalized(beta):
    est = systole_estimate(SurfaceSpec.klein(beta), klein_optimal(beta), GridConfig(128, 128))
    assert est.value == pytest.approx(math.pi, rel=0.02)


def test_klein_flat_half():
    est = systole_estimate(SurfaceSpec.klein(0.5), Profile.flat(0.5), COARSE)
    assert est.value == pytest.approx(2.0, rel=0.02)
    assert est.word == DeckWord(0, 1)
    assert witness_is_consistent(SurfaceSpec.klein(0.5), est)


@settings(max_examples=15)
@given(st.floats(0.3, 1.8), st.floats(-0.3, 0.3), st.floats(-0.2, 0.2),
       st.sampled_from(["mobius", "klein"]))
def test_estimate_is_witness_length(beta, a, b, kind):
    s = SurfaceSpec(kind, beta)
    prof = smooth_profile(beta, a, b)
    est = systole_estimate(s, prof, COARSE)
    assert est.value == pytest.approx(curve_length(s, prof, est.witness), rel=1e-9)
    assert not est.word.is_trivial
    assert witness_is_consistent(s, est)


@settings(max_examples=10)
@given(st.floats(0.3, 1.8), st.floats(-0.3, 0.3), st.sampled_from([0.5, 2.0]),
       st.sampled_from(["mobius", "klein"]))
def test_scaling(beta, a, c, kind):
    s = SurfaceSpec(kind, beta)
    prof = smooth_profile(beta, a, 0.1)
    v1 = systole_estimate(s, prof, COARSE).value
    v2 = systole_estimate(s, prof.scaled(c), COARSE).value
    assert v2 == pytest.approx(c * v1, rel=1e-9)


@settings(max_examples=10)
@given(st.floats(0.3, 1.8), st.floats(-0.3, 0.3), st.floats(0.0, 0.5),
       st.sampled_from(["mobius", "klein"]))
def test_monotone_in_profile(beta, a, bump, kind):
    s = SurfaceSpec(kind, beta)
    lo = smooth_profile(beta, a, 0.0)
    hi = Profile.expression(beta, lambda y: lo(y) * (1 + bump * np.exp(-(y / beta) ** 2)), "hi")
    assert systole_estimate(s, lo, COARSE).value <= systole_estimate(s, hi, COARSE).value * 1.02


@settings(max_examples=6)
@given(st.floats(0.3, 1.8), st.floats(-0.3, 0.3), st.sampled_from(["mobius", "klein"]))
def test_refinement_does_not_increase_beyond_tolerance(beta, a, kind):
    s = SurfaceSpec(kind, beta)
    prof = smooth_profile(beta, a, 0.1)
    coarse = systole_estimate(s, prof, GridConfig(32, 32)).value
    fine = systole_estimate(s, prof, COARSE).value
    assert fine <= coarse * 1.02


def test_fold_identity_inside_strip():
    beta = 1.0
    s = SurfaceSpec.klein(beta)
    v = np.array([[0.0, 0.5], [1.0, 0.2], [math.pi, -0.5]])
    c = fold_to_mobius(s, CurvePolyline(v, DeckWord(1, 0), s))
    assert np.allclose(c.vertices, v)


def test_fold_reflects_upper_region():
    beta = 1.0
    s = SurfaceSpec.klein(beta)
    # vertical-then-horizontal curve that visits y = 1.5 beta
    v = np.array([[0.0, 1.5], [math.pi, -1.5 + 4.0]])
    c = fold_to_mobius(s, CurvePolyline(v, DeckWord(1, 1), s))
    assert c.vertices[0, 1] == pytest.approx(0.5)
    assert np.all(np.abs(c.vertices[:, 1]) <= beta + 1e-12)


def test_fold_requires_klein():
    m = SurfaceSpec.mobius(1.0)
    with pytest.raises(ValueError):
        fold_to_mobius(m, CurvePolyline(np.array([[0.0, 0.0], [math.pi, 0.0]]), DeckWord(1, 0), m))


@given(st.floats(0.3, 1.5), st.lists(st.floats(-3, 3), min_size=1, max_size=6),
       st.floats(-1, 1))
def test_fold_preserves_length(beta, ys, y0):
    s = SurfaceSpec.klein(beta)
    prof = smooth_profile(beta, 0.2, -0.1)
    xs = np.linspace(0.0, math.pi, len(ys) + 2)
    yv = np.concatenate(([y0 * beta], ys, [-y0 * beta]))
    curve = CurvePolyline(np.column_stack((xs, yv)), DeckWord(1, 0), s)
    folded = fold_to_mobius(s, curve)
    assert np.all(np.abs(folded.vertices[:, 1]) <= beta + 1e-12)
    m = SurfaceSpec.mobius(beta)
    assert curve_length(m, prof, folded) == pytest.approx(curve_length(s, prof, curve), rel=1e-8)
