import numpy as np
import pytest
from hypothesis import given, strategies as st

from dumbbell_spectra.analytic import RectMode
from dumbbell_spectra.errors import AllBelowThreshold
from dumbbell_spectra.fem import FeField, interpolate
from dumbbell_spectra.mesh import rectangle_mesh, refine_uniform, structured_rectangle_mesh
from dumbbell_spectra.nodal import (count_nodal_domains, deficiency, eigen_index, prolong,
                                    stability_check)

from conftest import M_WIDTH


@pytest.fixture(scope="module")
def grid_mesh():
    # grid lines through x = M/2, M/4, 3M/4 and y = 1/4, 1/2, 3/4
    return structured_rectangle_mesh(M_WIDTH, 1.0, 152, 52)


@pytest.mark.parametrize("j,n,count", [(0, 0, 1), (2, 0, 3), (1, 2, 6), (1, 1, 4), (4, 0, 5)])
def test_rectangle_mode_counts(grid_mesh, j, n, count):
    u = interpolate(grid_mesh, RectMode(j, n, M_WIDTH), frame="mesh")
    part = count_nodal_domains(u)
    assert part.count == count == RectMode(j, n, M_WIDTH).nodal_count
    assert stability_check(u)["stable"]
    assert part.areas.sum() <= grid_mesh.area() + 1e-12


def test_crossing_free_mode_on_unstructured_mesh():
    m = rectangle_mesh(M_WIDTH, 1.0, 0.05)
    u = interpolate(m, RectMode(2, 0, M_WIDTH), frame="mesh")
    assert count_nodal_domains(u).count == 3


def test_component_signs_alternate(grid_mesh):
    u = interpolate(grid_mesh, RectMode(3, 0, M_WIDTH), frame="mesh")
    part = count_nodal_domains(u)
    order = np.argsort([grid_mesh.vertices[part.labels == c, 0].mean() for c in range(part.count)])
    assert list(part.signs[order]) == [1, -1, 1, -1]


def test_all_below_threshold():
    m = rectangle_mesh(1.0, 1.0, 0.5)
    with pytest.raises(AllBelowThreshold):
        count_nodal_domains(FeField(m, np.zeros(m.n_vertices)))


@given(st.floats(1e-9, 1e-5))
def test_threshold_does_not_bridge(thr):
    m = structured_rectangle_mesh(2.0, 1.0, 20, 10)
    u = interpolate(m, lambda x, y: np.cos(np.pi * x / 2.0) + 0 * y, frame="mesh")
    assert count_nodal_domains(u, thr).count == 2


def test_prolong_preserves_values():
    m = rectangle_mesh(1.0, 1.0, 0.3)
    u = interpolate(m, lambda x, y: 2 * x - y, frame="mesh")
    f = prolong(u)
    exact = interpolate(refine_uniform(m), lambda x, y: 2 * x - y, frame="mesh")
    assert np.allclose(f.values, exact.values)


def test_eigen_index_clusters():
    lams = [0.0, 1.0, 1.0 + 1e-12, 2.0]
    assert eigen_index(lams, 3) == 2
    assert eigen_index(lams, 4) == 4
    assert eigen_index(lams, 1) == 1


def test_deficiency_records():
    recs = deficiency([3, 5, 2], [3, 2, 3])
    assert [r.deficiency for r in recs] == [0, 3, -1]
    assert recs[0].courant_sharp and not recs[1].courant_sharp
    assert recs[2].negative
    with pytest.raises(ValueError):
        deficiency([1], [])
