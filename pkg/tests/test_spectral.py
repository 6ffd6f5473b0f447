import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from luequiv.classify import pt_spectrum
from luequiv.linalg import (
    BipartiteOperator,
    DimensionMismatchError,
    haar_unitary,
    random_density_matrix,
    random_local_unitary,
    random_unit_vector,
)
from luequiv.spectral import (
    pure_pt_spectrum,
    pure_states_lu_equivalent,
    schmidt_coefficients_of_projector,
    schmidt_decompose,
    schmidt_rank,
    spectra_match,
    spectral_decompose,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)])


def _with_spectrum(values, rng, m=2, n=2):
    u = haar_unitary(m * n, rng)
    return BipartiteOperator(m, n, (u * np.asarray(values, float)) @ u.conj().T)


def test_grouping_and_reconstruction():
    rng = np.random.default_rng(1)
    h = _with_spectrum([0.5, 0.2, 0.2, 0.1], rng)
    s = spectral_decompose(h)
    assert np.allclose(s.eigenvalues, [0.5, 0.2, 0.1])
    assert s.multiplicities == (1, 2, 1)
    assert np.allclose(s.reconstruct(), h.mat)
    assert np.allclose(sum(p.mat for p in s.projectors), np.eye(4))
    for p in s.projectors:
        assert np.allclose(p.mat @ p.mat, p.mat, atol=1e-10)
    assert s.index_of(0.2) == 1
    with pytest.raises(KeyError):
        s.index_of(0.3)


def test_kernel_is_kept():
    s = spectral_decompose(BipartiteOperator.from_vector([1, 0, 0, 0], 2, 2))
    assert s.eigenvalues == (1.0, 0.0) and s.multiplicities == (1, 3)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_spectra_match_is_lu_invariant(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(2, 3, rng)
    assert spectra_match(rho, rho.conjugated(random_local_unitary(2, 3, rng)))


def test_spectra_mismatch_reports_first_index():
    rng = np.random.default_rng(0)
    a = _with_spectrum([0.4, 0.3, 0.2, 0.1], rng)
    b = _with_spectrum([0.4, 0.3, 0.25, 0.05], rng)
    r = spectra_match(a, b)
    assert not r and r.index == 2
    c = _with_spectrum([0.4, 0.2, 0.2, 0.2], rng)
    d = _with_spectrum([0.4, 0.4, 0.1, 0.1], rng)
    assert spectra_match(c, d).index == 0
    with pytest.raises(DimensionMismatchError):
        spectra_match(a, random_density_matrix(2, 3, rng))


@given(seeds, dims)
@settings(max_examples=40, deadline=None)
def test_schmidt_reconstructs(seed, d):
    rng = np.random.default_rng(seed)
    psi = random_unit_vector(d[0] * d[1], rng)
    s = schmidt_decompose(psi, *d)
    assert np.allclose(s.vector(), psi)
    assert abs(sum(c * c for c in s.coefficients) - 1) < 1e-12
    assert list(s.coefficients) == sorted(s.coefficients, reverse=True)


@given(seeds, dims)
@settings(max_examples=40, deadline=None)
def test_pure_pt_closed_form(seed, d):
    rng = np.random.default_rng(seed)
    psi = random_unit_vector(d[0] * d[1], rng)
    closed = pure_pt_spectrum(schmidt_decompose(psi, *d))
    assert np.allclose(closed, pt_spectrum(BipartiteOperator.from_vector(psi, *d)), atol=1e-10)


def test_schmidt_rank_and_pure_equivalence():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert schmidt_rank(phi, 2, 2) == 2
    assert schmidt_rank([1, 0, 0, 0], 2, 2) == 1
    rng = np.random.default_rng(4)
    lu = random_local_unitary(2, 2, rng)
    assert pure_states_lu_equivalent(phi, lu.matrix() @ phi, 2, 2)
    assert not pure_states_lu_equivalent(phi, [1, 0, 0, 0], 2, 2)
    assert np.allclose(schmidt_coefficients_of_projector(BipartiteOperator.from_vector(phi, 2, 2)), [2**-0.5] * 2)
    with pytest.raises(ValueError):
        schmidt_decompose(np.zeros(4), 2, 2)
    with pytest.raises(DimensionMismatchError):
        schmidt_decompose(np.ones(5), 2, 2)
