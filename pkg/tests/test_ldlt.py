import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from dumbbell_spectra.errors import SingularPivot
from dumbbell_spectra.fem import assemble_mass, assemble_stiffness
from dumbbell_spectra.ldlt import amd, factorize


def _random_spd(n, density, seed):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng)
    A = A + A.T
    return (A + sp.diags(np.abs(A).sum(axis=1).A1 + 1.0)).tocsr()


@given(st.integers(1, 60), st.floats(0.01, 0.3), st.integers(0, 10_000))
def test_solve_matches_dense(n, density, seed):
    A = _random_spd(n, density, seed)
    b = np.random.default_rng(seed + 1).standard_normal(n)
    f = factorize(A)
    x = f.solve(b)
    assert np.allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-9, atol=1e-11)
    assert f.inertia() == (0, n)


@given(st.integers(1, 80), st.integers(0, 10_000))
def test_amd_is_permutation(n, seed):
    A = _random_spd(n, 0.1, seed)
    p = amd(A)
    assert np.array_equal(np.sort(p), np.arange(n))


def test_reconstruction(small_mesh):
    A = (assemble_stiffness(small_mesh) + assemble_mass(small_mesh)).tocsr()
    f = factorize(A)
    L = f.lower()
    LDLt = L @ sp.diags(f.d) @ L.T
    Ap = A[f.perm][:, f.perm]
    assert abs(LDLt - Ap).max() < 1e-10 * abs(A).max()


def test_amd_reduces_fill(small_mesh):
    A = (assemble_stiffness(small_mesh) + assemble_mass(small_mesh)).tocsr()
    assert factorize(A).nnz_l < factorize(A, ordering="natural").nnz_l


def test_residual_on_mesh(small_mesh):
    A = (assemble_stiffness(small_mesh) + assemble_mass(small_mesh)).tocsr()
    b = np.random.default_rng(3).standard_normal(A.shape[0])
    x = factorize(A).solve(b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_indefinite_inertia():
    A = sp.csr_matrix(np.diag([3.0, -1.0, 2.0, -5.0]))
    assert factorize(A).inertia() == (2, 2)


def test_singular_stiffness_raises(small_mesh):
    with pytest.raises(SingularPivot):
        factorize(assemble_stiffness(small_mesh))


def test_two_dimensional_rhs():
    A = _random_spd(20, 0.2, 1)
    B = np.random.default_rng(0).standard_normal((20, 3))
    assert np.allclose(A @ factorize(A).solve(B), B)
