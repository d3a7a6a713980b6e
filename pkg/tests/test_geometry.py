import numpy as np
import pytest
from hypothesis import given, strategies as st

from dumbbell_spectra.errors import InvalidSpec
from dumbbell_spectra.geometry import (BulkDomain, DumbbellSpec, NeckProfile, boundary_polyline,
                                       from_mesh_frame, is_simple_polygon, mirror_map,
                                       polygon_area, to_mesh_frame, validate)

from conftest import M_WIDTH, dumbbell


def test_reference_dumbbell_is_valid():
    spec = DumbbellSpec(BulkDomain.rectangle(3.0366, 1.0), NeckProfile.constant(1.0, 2.0), 0.1)
    assert validate(spec) == []


def test_wide_opening_reported():
    spec = DumbbellSpec(BulkDomain.rectangle(3.0366, 1.0), NeckProfile.constant(1.0, 2.0), 0.3)
    assert validate(spec) == ["neck opening 0.3 exceeds flat segment half-length 0.25"]


def test_nonpositive_profile_reported():
    spec = dumbbell(0.1, samples=[1.0, 0.0, 1.0])
    assert "g must be strictly positive" in validate(spec)


def test_asymmetric_and_tall_profiles_reported():
    assert any("symmetric" in v for v in validate(dumbbell(0.1, samples=[1.0, 0.5])))
    assert any("exceed 1" in v for v in validate(dumbbell(0.1, samples=[1.2, 1.2])))


def test_epsilon_range():
    assert any("epsilon" in v for v in validate(dumbbell(0.0)))
    assert any("epsilon" in v for v in validate(dumbbell(1.5)))


def test_polyline_contains_neck_corners():
    spec = DumbbellSpec(BulkDomain.rectangle(M_WIDTH), NeckProfile.constant(1.0, 2.0), 0.1)
    (poly,) = boundary_polyline(spec)
    pts = {tuple(p) for p in poly}
    for corner in ((0.0, 0.0), (2.0, 0.0), (2.0, 0.1), (0.0, 0.1)):
        assert corner in pts
    assert polygon_area(poly) > 0
    assert is_simple_polygon(poly)
    assert polygon_area(poly) == pytest.approx(spec.area(), rel=1e-12)


def test_polyline_at_zero_epsilon_is_two_bulks():
    parts = boundary_polyline(dumbbell(0.1), 0.0)
    assert len(parts) == 2
    assert all(polygon_area(p) == pytest.approx(M_WIDTH) for p in parts)


def test_invalid_spec_raises():
    with pytest.raises(InvalidSpec):
        boundary_polyline(dumbbell(0.3))


@given(st.floats(0.01, 0.24), st.floats(0.5, 3.0),
       st.lists(st.floats(0.2, 1.0), min_size=1, max_size=4))
def test_polyline_mirror_symmetric(eps, length, half):
    samples = half + half[-2::-1]
    spec = dumbbell(eps, length, samples if len(samples) > 1 else half * 2)
    (poly,) = boundary_polyline(spec)
    img = mirror_map(spec)(poly)
    a = np.round(poly, 12).tolist()
    b = np.round(img, 12).tolist()
    assert sorted(map(tuple, a)) == sorted(map(tuple, b))
    assert is_simple_polygon(poly)
    assert polygon_area(poly) == pytest.approx(spec.area(), rel=1e-10)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_frame_round_trip(x, y):
    spec = dumbbell(0.05)
    p = np.array([x, y])
    assert np.allclose(from_mesh_frame(to_mesh_frame(p, spec), spec), p)


def test_profile_integral_and_evaluation():
    g = NeckProfile.piecewise_linear([1.0, 0.5, 1.0], 2.0)
    assert g.integral() == pytest.approx(1.5)
    assert g(0.5) == pytest.approx(0.75)
    assert np.all(g(np.linspace(0, 2, 50)) >= 0.5)
