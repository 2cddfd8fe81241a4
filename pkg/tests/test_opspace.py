import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mereo import opspace
from mereo.opspace import (
    PAULI, RngStream, check_hermitian, check_unitary, eig_hermitian, fix_phases, haar_unitary,
    hs_inner, kron_all, partial_trace, pauli_string, polar_unitary, random_density,
    random_hermitian, swap_doubled, unitary_exp,
)


def _loop_inner(a, b):
    s = 0j
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += np.conj(a[i, j]) * b[i, j]
    return s


def test_hs_inner_matches_double_loop():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert abs(hs_inner(a, b) - _loop_inner(a, b)) < 1e-12
    assert abs(hs_inner(a, b) - np.trace(a.conj().T @ b)) < 1e-12


def test_pauli_algebra():
    x, y, z = PAULI["x"], PAULI["y"], PAULI["z"]
    assert np.abs(x @ y - 1j * z).max() < 1e-15
    assert abs(hs_inner(x, x) - 2) < 1e-15
    assert abs(hs_inner(x, z)) < 1e-15


def test_pauli_string_site_order():
    # site 0 is the most significant qubit
    op = pauli_string(3, [(0, "z")])
    assert np.abs(op - kron_all([PAULI["z"], PAULI["i"], PAULI["i"]])).max() == 0
    with pytest.raises(ValueError):
        pauli_string(2, [(0, "x"), (0, "z")])
    with pytest.raises(ValueError):
        pauli_string(2, [(2, "x")])


def test_partial_trace_product():
    rng = np.random.default_rng(1)
    a, b, c = random_density(2, rng), random_density(4, rng), random_density(2, rng)
    rho = kron_all([a, b, c])
    assert np.abs(partial_trace(rho, [1], dims=[2, 4, 2]) - b).max() < 1e-14
    assert np.abs(partial_trace(rho, [0, 2], dims=[2, 4, 2]) - np.kron(a, c)).max() < 1e-14


def test_partial_trace_reshape_oracle():
    rng = np.random.default_rng(2)
    rho = random_density(12, rng)
    t = rho.reshape(3, 4, 3, 4)
    assert np.abs(partial_trace(rho, [0], dims=[3, 4]) - np.einsum("ijkj->ik", t)).max() < 1e-14
    assert np.abs(partial_trace(rho, [1], dims=[3, 4]) - np.einsum("ijil->jl", t)).max() < 1e-14


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(ValueError):
        partial_trace(np.eye(6), [0])
    with pytest.raises(ValueError):
        partial_trace(np.eye(6), [0], dims=[2, 2])


def test_check_hermitian_and_unitary():
    with pytest.raises(ValueError):
        check_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        check_unitary(np.diag([1.0, 1.1]))
    check_unitary(haar_unitary(6, 0))


def test_eig_reconstruct_and_phases():
    h = random_hermitian(7, 3)
    sp = eig_hermitian(h)
    assert np.abs(sp.reconstruct() - h).max() < 1e-12
    assert np.abs(sum(sp.projectors()) - np.eye(7)).max() < 1e-12
    v = fix_phases(sp.eigenvectors * np.exp(0.7j))
    assert np.abs(v - sp.eigenvectors).max() < 1e-12


def test_unitary_exp_matches_scipy():
    from scipy.linalg import expm

    k = random_hermitian(5, 4)
    assert np.abs(unitary_exp(1j * k) - expm(1j * k)).max() < 1e-12
    assert np.abs(unitary_exp(0.3j * k) - expm(0.3j * k)).max() < 1e-12


def test_polar_unitary_projects():
    u = haar_unitary(6, 5)
    noisy = u + 1e-6 * np.random.default_rng(5).normal(size=(6, 6))
    w = polar_unitary(noisy)
    assert np.abs(w.conj().T @ w - np.eye(6)).max() < 1e-13
    assert np.abs(w - u).max() < 1e-5


def test_haar_second_moment():
    # E |U_00|^2 = 1/d and E |U_00|^4 = 2/(d(d+1))
    rng = np.random.default_rng(6)
    d, n = 3, 20000
    x = np.array([abs(haar_unitary(d, rng)[0, 0]) ** 2 for _ in range(n)])
    assert abs(x.mean() - 1 / d) < 4 * x.std() / np.sqrt(n)
    assert abs((x**2).mean() - 2 / (d * (d + 1))) < 4 * (x**2).std() / np.sqrt(n)


def test_rng_stream_labels_are_independent_and_stable():
    a = RngStream(7, "x").gen.normal(size=3)
    b = RngStream(7, "x").gen.normal(size=3)
    c = RngStream(7, "y").gen.normal(size=3)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert np.array_equal(RngStream(7, "x").child("k").gen.normal(size=2),
                          RngStream(7, "x").child("k").gen.normal(size=2))


def test_swap_purity_identity():
    # Tr[(rho (x) rho) S] = Tr rho^2
    rho = random_density(6, 8)
    s = swap_doubled([6])
    assert abs(np.trace(np.kron(rho, rho) @ s) - np.trace(rho @ rho)) < 1e-14


def test_partial_swap_gives_reduced_purity():
    rho = random_density(6, 9)
    s = swap_doubled([2, 3], [0])
    r = partial_trace(rho, [0], dims=[2, 3])
    assert abs(np.trace(np.kron(rho, rho) @ s) - np.trace(r @ r)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 6))
def test_random_hermitian_is_hermitian(seed, d):
    h = random_hermitian(d, seed)
    assert np.abs(h - h.conj().T).max() == 0
    rho = random_density(d, seed)
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_as_rng_accepts_variants():
    assert isinstance(opspace.as_rng(None), np.random.Generator)
    assert isinstance(opspace.as_rng(3), np.random.Generator)
    assert isinstance(opspace.as_rng(RngStream(1, "a")), np.random.Generator)
