import math
import numpy as np
import pytest

from dumbbell_spectra.eigen import (Parity, classify_symmetry, m_orthogonality,
                                    smallest_eigenpairs, start_vector)
from dumbbell_spectra.errors import AmbiguousCluster, NoConvergence
from dumbbell_spectra.fem import assemble_mass, assemble_stiffness
from dumbbell_spectra.mesh import rectangle_mesh, refine_uniform


@pytest.fixture(scope="module")
def square():
    m = rectangle_mesh(1.0, 1.0, 0.05)
    return m, assemble_stiffness(m), assemble_mass(m)


def test_unit_square_spectrum(square):
    _, K, M = square
    lam = np.array([p.lam for p in smallest_eigenpairs(K, M, 6)])
    exact = np.pi ** 2 * np.array([0, 1, 1, 2, 4, 4])
    assert abs(lam[0]) < 1e-10
    assert np.allclose(lam[1:], exact[1:], rtol=1e-2)
    assert np.all(lam[1:] >= exact[1:])  # conforming elements bound from above


def test_residuals_and_orthogonality(square):
    _, K, M = square
    pairs = smallest_eigenpairs(K, M, 8, tol=1e-8)
    assert max(p.residual for p in pairs) <= 1e-8
    assert m_orthogonality(pairs, M) <= 1e-8
    assert [p.index_1based for p in pairs] == list(range(1, 9))


def test_seed_changes_nothing_but_signs(square):
    _, K, M = square
    a = [p.lam for p in smallest_eigenpairs(K, M, 5, seed=0)]
    b = [p.lam for p in smallest_eigenpairs(K, M, 5, seed=11)]
    assert np.allclose(a, b, rtol=1e-9, atol=1e-11)


def test_start_vector_is_seeded():
    assert np.array_equal(start_vector(10, 4), start_vector(10, 4))
    assert start_vector(1000, 0).mean() == pytest.approx(1.0, abs=0.15)


def test_krylov_cap_raises(square):
    _, K, M = square
    with pytest.raises(NoConvergence) as info:
        smallest_eigenpairs(K, M, 10, max_krylov=10)
    assert info.value.wanted == 10


def test_symmetry_labels_on_dumbbell(small_mesh):
    K = assemble_stiffness(small_mesh)
    M = assemble_mass(small_mesh)
    pairs = classify_symmetry(smallest_eigenpairs(K, M, 8), small_mesh.mirror, M, K=K)
    assert pairs[0].symmetry is Parity.EVEN
    assert pairs[1].symmetry is Parity.ODD
    assert max(p.sym_defect for p in pairs) < 1e-8
    for p in pairs:
        u = p.vector
        s = 1.0 if p.symmetry is Parity.EVEN else -1.0
        assert np.allclose(u[small_mesh.mirror], s * u, atol=1e-7 * np.abs(u).max())


def test_large_cluster_warns():
    m = rectangle_mesh(1.0, 1.0, 0.2)
    K, M = assemble_stiffness(m), assemble_mass(m)
    pairs = smallest_eigenpairs(K, M, 3)
    for p in pairs:
        p.lam = 1.0
    with pytest.warns(AmbiguousCluster):
        classify_symmetry(pairs, np.arange(m.n_vertices), M)


def test_rectangle_refinement_order():
    W = 28 ** (1 / 3)
    m = rectangle_mesh(W, 1.0, 0.08)
    exact = math.pi ** 2 * (1 / W ** 2)
    errs = []
    for mesh in (m, refine_uniform(m)):
        K, M = assemble_stiffness(mesh), assemble_mass(mesh)
        errs.append(smallest_eigenpairs(K, M, 2)[1].lam - exact)
    assert errs[0] > 0 and errs[1] > 0
    assert 3.2 <= errs[0] / errs[1] <= 4.8
