import numpy as np
import pytest
from hypothesis import given, strategies as st

from dumbbell_spectra.errors import NonFinite
from dumbbell_spectra.fem import (BULK, NECK, assemble_mass, assemble_stiffness, interpolate,
                                  lumped_vertex_area, norms)
from dumbbell_spectra.mesh import rectangle_mesh


@pytest.fixture(scope="module")
def rect():
    return rectangle_mesh(2.0, 1.0, 0.15)


def test_constants_in_kernel(small_mesh):
    K = assemble_stiffness(small_mesh)
    assert np.max(np.abs(K @ np.ones(small_mesh.n_vertices))) < 1e-10


def test_mass_integrates_area(small_mesh):
    M = assemble_mass(small_mesh)
    one = np.ones(small_mesh.n_vertices)
    assert one @ (M @ one) == pytest.approx(small_mesh.area(), rel=1e-12)
    assert lumped_vertex_area(small_mesh).sum() == pytest.approx(small_mesh.area(), rel=1e-12)


def test_symmetric_and_semidefinite(small_mesh):
    K = assemble_stiffness(small_mesh)
    M = assemble_mass(small_mesh)
    assert abs(K - K.T).max() < 1e-12
    assert abs(M - M.T).max() < 1e-15
    rng = np.random.default_rng(0)
    v = rng.standard_normal(small_mesh.n_vertices)
    assert v @ (K @ v) >= 0 and v @ (M @ v) > 0


def test_region_split_adds_up(small_mesh):
    K = assemble_stiffness(small_mesh)
    parts = assemble_stiffness(small_mesh, BULK) + assemble_stiffness(small_mesh, NECK)
    assert abs(K - parts).max() < 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_affine_fields_exact(a, b, c):
    m = rectangle_mesh(2.0, 1.0, 0.25)
    u = interpolate(m, lambda x, y: a * x + b * y + c, frame="mesh")
    n = norms(u)
    assert n["h1_semi_sq"] == pytest.approx((a * a + b * b) * 2.0, rel=1e-10, abs=1e-10)
    exact_l2 = (a * a * 8 / 3 + b * b * 2 / 3 + c * c * 2 + a * b * 2 + 2 * a * c * 2 + 2 * b * c * 1)
    assert n["l2_sq"] == pytest.approx(exact_l2, rel=1e-10, abs=1e-10)


def test_energy_matches_matrix(rect):
    u = interpolate(rect, lambda x, y: np.sin(x) * np.cos(2 * y), frame="mesh")
    K = assemble_stiffness(rect)
    assert norms(u)["h1_semi_sq"] == pytest.approx(u.values @ (K @ u.values), rel=1e-12)


def test_nonfinite_interpolation():
    m = rectangle_mesh(1.0, 1.0, 0.5)
    with pytest.raises(NonFinite), np.errstate(divide="ignore", invalid="ignore"):
        interpolate(m, lambda x, y: 1.0 / (x - x), frame="mesh")
