import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qksat.linalg import (
    Subspace,
    ghz_state,
    haar_state,
    haar_unitary,
    is_projector,
    ket,
    kernel,
    kernel_intersection,
    partial_trace,
    product_state,
    random_subspace,
    reduced_density,
    state_support,
    support,
    tensor,
)

seeds = st.integers(0, 2**32 - 1)


def test_ket_and_tensor_ordering():
    assert np.allclose(tensor(ket("1"), ket("0")), ket("10"))
    assert np.argmax(np.abs(ket("011"))) == 3


@given(seeds, st.integers(2, 5))
@settings(max_examples=30, deadline=None)
def test_partial_trace_is_a_density_matrix(seed, n):
    rng = np.random.default_rng(seed)
    psi = haar_state(n, rng)
    keep = sorted(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
    rho = reduced_density(psi, n, keep)
    assert rho.shape == (2 ** len(keep),) * 2
    assert np.isclose(np.trace(rho).real, 1.0)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_partial_trace_of_product_is_factor(rng):
    a, b, c = (haar_state(1, rng) for _ in range(3))
    psi = tensor(a, b, c)
    rho = np.outer(psi, psi.conj())
    got = partial_trace(rho, 3, [0, 2])
    want = np.outer(tensor(a, c), tensor(a, c).conj())
    assert np.allclose(got, want)


def test_partial_trace_is_transitive(rng):
    psi = haar_state(4, rng)
    rho = np.outer(psi, psi.conj())
    two_step = partial_trace(partial_trace(rho, 4, [0, 1, 3]), 3, [0, 2])
    assert np.allclose(two_step, partial_trace(rho, 4, [0, 3]))


@given(seeds, st.integers(1, 6), st.integers(0, 6))
@settings(max_examples=40, deadline=None)
def test_support_and_kernel_are_complementary(seed, qubits_half, dim):
    rng = np.random.default_rng(seed)
    D = 2 ** min(qubits_half, 4)
    dim = min(dim, D)
    L = random_subspace(D, dim, rng)
    rho = L.projector() * 0.7
    S, K = support(rho), kernel(rho)
    assert S.dim + K.dim == D
    assert S.equals(L)
    assert np.allclose(S.basis.conj().T @ K.basis, 0, atol=1e-10)


def test_subspace_algebra(rng):
    L = random_subspace(8, 3, rng)
    M = random_subspace(8, 6, rng)
    inter = L.intersect(M)
    assert inter.dim == 1
    assert L.contains_subspace(inter) and M.contains_subspace(inter)
    assert L.complement().complement().equals(L)
    assert Subspace.full(4).complement().dim == 0
    assert Subspace.zero(4).complement().equals(Subspace.full(4))
    v = L.basis @ np.array([1, 2j, -1])
    assert L.contains(v) and L.distance(v) < 1e-12
    assert is_projector(L.projector())


def test_kernel_intersection(rng):
    A = rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6))
    B = rng.standard_normal((1, 6))
    K = kernel_intersection([A, B], 6)
    assert K.dim == 3
    assert np.allclose(A @ K.basis, 0, atol=1e-10)
    assert np.allclose(B @ K.basis, 0, atol=1e-10)


def test_ghz_supports():
    psi = ghz_state(5)
    S = state_support(psi, 5, [1, 3])
    assert S.equals(Subspace.span(np.stack([ket("00"), ket("11")], axis=1)))


def test_product_state_support_is_one_dimensional(rng):
    f = [haar_state(1, rng) for _ in range(4)]
    psi = product_state(f)
    S = state_support(psi, 4, [0, 2])
    assert S.dim == 1
    assert S.contains(tensor(f[0], f[2]))


def test_haar_unitary_is_unitary(rng):
    U = haar_unitary(8, rng)
    assert np.allclose(U.conj().T @ U, np.eye(8))


def test_reduced_density_rejects_bad_qubits(rng):
    with pytest.raises(ValueError):
        reduced_density(haar_state(3, rng), 3, [3])
