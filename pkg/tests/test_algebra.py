import numpy as np
import pytest

from mereo import algebra
from mereo.algebra import (
    AlgebraSpec, algebra_basis, choi, commutant_bruteforce, conjugate, distance,
    distance_squared, factor_bipartition, kappa, maximal_abelian, metric_element, project,
    projection, same_algebra, span_projector,
)
from mereo.opspace import haar_unitary, partial_trace, random_hermitian, unitary_exp


def _superop(p):
    """Matrix of a projection on row-major vectorized operators."""
    d = p.target.dim
    units = np.eye(d * d).reshape(d * d, d, d).astype(complex)
    return project(p, units).reshape(d * d, d * d).T


def _blocky(rng):
    # two blocks (n, d) = (1, 2) and (2, 1): a non-collinear algebra on C^4
    return AlgebraSpec(4, ((1, 2), (2, 1)), haar_unitary(4, rng))


def _cases(rng):
    return [
        maximal_abelian(2, haar_unitary(4, rng)),
        factor_bipartition(3, [0], haar_unitary(8, rng)),
        factor_bipartition(3, [0, 2], haar_unitary(8, rng)),
        AlgebraSpec(8, ((1, 2), (1, 2), (2, 1), (2, 1)), haar_unitary(8, rng)),
        _blocky(rng),
    ]


def test_rejects_bad_blocks():
    with pytest.raises(ValueError):
        AlgebraSpec(5, ((1, 2), (2, 1), (1, 2)), np.eye(5))
    with pytest.raises(ValueError):
        AlgebraSpec(4, ((2, 2),), np.diag([1, 1, 1, 1.5]))
    with pytest.raises(ValueError):
        factor_bipartition(3, [0, 1, 2])


def test_dimensions():
    a = factor_bipartition(4, [0])
    assert a.blocks == ((8, 2),)
    assert a.dim_algebra == 4 and a.dim_commutant == 64
    assert a.collinear and a.is_factor
    m = maximal_abelian(3)
    assert m.dim_algebra == 8 and m.dim_commutant == 8


def test_factor_algebra_is_local_operators():
    alg = factor_bipartition(3, [1])
    x = np.random.default_rng(0).normal(size=(2, 2))
    i2 = np.eye(2)
    local = np.kron(np.kron(i2, x), i2)
    assert np.abs(project(projection(alg), local) - local).max() < 1e-14
    # P_A of an operator is its normalized partial trace onto the left site
    y = random_hermitian(8, 1)
    red = partial_trace(y, [1]) / 4
    assert np.abs(project(projection(alg), y) - np.kron(np.kron(i2, red), i2)).max() < 1e-14


@pytest.mark.parametrize("kind", ["onto_A", "onto_commutant"])
def test_kraus_matches_block_path(kind):
    rng = np.random.default_rng(2)
    for alg in _cases(rng):
        p = projection(alg, kind)
        x = rng.normal(size=(alg.dim, alg.dim)) + 1j * rng.normal(size=(alg.dim, alg.dim))
        assert np.abs(p.apply_kraus(x) - p(x)).max() < 1e-13
        k = p.kraus
        assert np.abs(np.einsum("rji,rjk->ik", k.conj(), k) - np.eye(alg.dim)).max() < 1e-13


def test_superoperators_are_orthogonal_projections():
    rng = np.random.default_rng(3)
    for alg in _cases(rng):
        for kind in algebra.KINDS:
            s = _superop(projection(alg, kind))
            assert np.abs(s @ s - s).max() < 1e-12
            assert np.abs(s - s.conj().T).max() < 1e-12
        rank = np.trace(_superop(projection(alg))).real
        assert abs(rank - alg.dim_algebra) < 1e-10


def test_commutant_double_commutant():
    rng = np.random.default_rng(4)
    for alg in _cases(rng)[:4]:
        comm = commutant_bruteforce(alg)
        assert len(comm) == alg.dim_commutant
        direct = span_projector(algebra_basis(alg, commutant=True))
        assert np.abs(span_projector(comm) - direct).max() < 1e-10
        back = commutant_bruteforce(alg, comm)
        assert np.abs(span_projector(back) - span_projector(algebra_basis(alg))).max() < 1e-10


def test_sum_projection_spans_algebra_plus_commutant():
    rng = np.random.default_rng(5)
    alg = AlgebraSpec(8, ((1, 2), (1, 2), (2, 1), (2, 1)), haar_unitary(8, rng))
    both = np.concatenate([algebra_basis(alg), algebra_basis(alg, commutant=True)])
    assert np.abs(_superop(projection(alg, "onto_sum")) - span_projector(both)).max() < 1e-10


def test_bases_are_orthonormal():
    rng = np.random.default_rng(6)
    for alg in _cases(rng):
        for comm in (False, True):
            b = algebra_basis(alg, comm).reshape(-1, alg.dim**2)
            assert np.abs(b.conj() @ b.T - np.eye(len(b))).max() < 1e-13


def test_json_roundtrip():
    alg = factor_bipartition(3, [1], haar_unitary(8, 7))
    back = AlgebraSpec.from_json(alg.to_json())
    assert back.blocks == alg.blocks
    assert np.array_equal(back.frame, alg.frame)


def test_distance_basic_properties():
    rng = np.random.default_rng(8)
    a = factor_bipartition(3, [0], haar_unitary(8, rng))
    b = conjugate(a, haar_unitary(8, rng))
    c = conjugate(a, haar_unitary(8, rng))
    assert distance(a, a) < 1e-7
    assert abs(distance(a, b) - distance(b, a)) < 1e-12
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12
    # local unitaries leave the algebra in place
    w = np.kron(np.kron(haar_unitary(2, rng), np.eye(2)), np.eye(2))
    loc = factor_bipartition(3, [0])
    assert same_algebra(loc, conjugate(loc, w))
    assert not same_algebra(loc, factor_bipartition(3, [1]))


def test_distance_routes_agree():
    rng = np.random.default_rng(9)
    for alg in _cases(rng):
        other = conjugate(alg, haar_unitary(alg.dim, rng))
        assert abs(distance(alg, other) - distance(alg, other, "choi")) < 1e-12
        sa, sb = _superop(projection(alg)), _superop(projection(other))
        hs = np.linalg.norm(sa - sb) ** 2 / alg.dim**2
        assert abs(distance_squared(alg, other) - hs) < 1e-12


def test_distance_requires_isomorphic_algebras():
    with pytest.raises(ValueError):
        distance(factor_bipartition(2, [0]), maximal_abelian(2))


def test_choi_purity():
    # Tr rho^2 = dim A / d^2 for a conditional expectation
    rng = np.random.default_rng(10)
    for alg in _cases(rng):
        rho = choi(projection(alg))
        assert abs(np.trace(rho.rho) - 1) < 1e-13
        assert abs(rho.purity() - alg.dim_algebra / alg.dim**2) < 1e-13


def test_frozen_distance_value():
    # (||P_a||^2 + ||P_b||^2 - 2 Tr P_a P_b) / d^2 = (4 + 4 - 2) / 16, as P_a P_b keeps only 1
    a, b = factor_bipartition(2, [0]), factor_bipartition(2, [1])
    assert abs(distance_squared(a, b) - 0.375) < 1e-14


def test_kappa_values():
    assert kappa(maximal_abelian(2)) == 0.5
    assert abs(kappa(factor_bipartition(2, [0])) - 0.5) < 1e-15
    # asymmetric factor: 2 / sqrt(8 * 16)
    assert abs(kappa(factor_bipartition(3, [0])) - 2 / np.sqrt(128)) < 1e-15


def _fd_metric(alg, k, eps=1e-2):
    def f(e):
        return distance_squared(alg, conjugate(alg, unitary_exp(1j * e * k))) / e**2
    return (4 * f(eps / 2) - f(eps)) / 3


def test_metric_matches_finite_difference():
    rng = np.random.default_rng(11)
    cases = [maximal_abelian(2, haar_unitary(4, rng)), factor_bipartition(3, [0]),
             factor_bipartition(3, [1, 2], haar_unitary(8, rng)),
             AlgebraSpec(8, ((1, 2),) * 4, haar_unitary(8, rng))]
    for alg in cases:
        k = random_hermitian(alg.dim, rng)
        ref = _fd_metric(alg, k)
        assert abs(metric_element(alg, k) - ref) / ref < 1e-5


def test_inverse_dim_commutant_prefactor_is_off_for_asymmetric_factors():
    # 2 / dim A' misses the metric by sqrt(d / dim A') when d != dim A'
    alg = factor_bipartition(3, [0])
    k = random_hermitian(8, 12)
    q = project(projection(alg, "complement_Q"), k)
    naive = (2 / alg.dim_commutant) ** 2 * np.vdot(q, q).real
    ratio = _fd_metric(alg, k) / naive
    assert abs(ratio - alg.dim_commutant / alg.dim) < 1e-5


def test_metric_refuses_noncollinear():
    with pytest.raises(ValueError):
        metric_element(_blocky(np.random.default_rng(13)), random_hermitian(4, 13))


def test_metric_vanishes_on_algebra_plus_commutant():
    alg = factor_bipartition(2, [0])
    k = np.kron(random_hermitian(2, 14), np.eye(2)) + np.kron(np.eye(2), random_hermitian(2, 15))
    assert metric_element(alg, k) < 1e-28
