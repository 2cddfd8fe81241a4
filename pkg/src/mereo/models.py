"""Hamiltonians and closed-form toy-model solutions.

Rotation conventions: the single-qubit family used for the maximal abelian
toy is ``R(theta) = exp(-i theta sigma^y / 2)``. With this sign the frame
``R(theta)`` diagonalizes ``eps sigma^z + J sigma^x`` exactly at
``theta = arctan(J / eps)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import algebra
from .opspace import (
    PAULI,
    check_hermitian,
    eig_hermitian,
    kron_all,
    pauli_string,
    unitary_exp,
)


@dataclass
class HamiltonianModel:
    """A Hermitian matrix with its generating parameters and cached spectrum."""

    matrix: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = check_hermitian(self.matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectral(self):
        return eig_hermitian(self.matrix)

    def rotated(self, u) -> "HamiltonianModel":
        """Ad u (H) = u H u^dagger."""
        m = u @ self.matrix @ u.conj().T
        return HamiltonianModel((m + m.conj().T) / 2, dict(self.params))


def as_model(h) -> HamiltonianModel:
    return h if isinstance(h, HamiltonianModel) else HamiltonianModel(np.asarray(h, dtype=complex))


@dataclass(frozen=True)
class ToyParams:
    eps: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        eps = np.atleast_1d(np.asarray(self.eps, dtype=float))
        j = np.atleast_1d(np.asarray(self.j, dtype=float))
        if eps.shape != j.shape or eps.ndim != 1:
            raise ValueError("eps and j must be vectors of equal length")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "j", j)

    @property
    def n(self) -> int:
        return len(self.eps)

    def check_nondegenerate(self):
        bad = np.flatnonzero((self.eps == 0) & (self.j == 0))
        if bad.size:
            raise ValueError(f"eps_i = J_i = 0 at sites {bad.tolist()}")


@dataclass(frozen=True)
class TfimParams:
    n: int
    j: float = 1.05
    h: float = 0.0
    j_site: tuple | None = None

    def couplings(self) -> np.ndarray:
        if self.j_site is None:
            return np.full(self.n, float(self.j))
        js = np.asarray(self.j_site, dtype=float)
        if js.shape != (self.n,):
            raise ValueError(f"j_site must have length {self.n}")
        return js


def build_abelian_toy(p: ToyParams) -> HamiltonianModel:
    """sum_i (eps_i sigma^z_i + J_i sigma^x_i)."""
    n = p.n
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        h += p.eps[i] * pauli_string(n, [(i, "z")]) + p.j[i] * pauli_string(n, [(i, "x")])
    return HamiltonianModel(h, {"eps": p.eps.tolist(), "j": p.j.tolist()})


def theta_min_closed(p: ToyParams) -> np.ndarray:
    """arctan(J_i / eps_i), folded into (-pi/2, pi/2].

    The rotated algebra is pi-periodic in each angle, so the fold loses
    nothing; eps_i = 0 maps to pi/2.
    """
    p.check_nondegenerate()
    th = np.arctan2(p.j, p.eps)
    th = np.where(th > np.pi / 2, th - np.pi, th)
    th = np.where(th <= -np.pi / 2, th + np.pi, th)
    return th


def unwrap_angles(thetas) -> np.ndarray:
    """Remove pi jumps along a sweep (axis 0)."""
    return np.unwrap(np.asarray(thetas, dtype=float), period=np.pi, axis=0)


def qubit_rotation(theta: float) -> np.ndarray:
    return unitary_exp(-0.5j * theta * PAULI["y"])


def product_rotation(thetas) -> np.ndarray:
    """tensor_i exp(-i theta_i sigma^y / 2)."""
    return kron_all([qubit_rotation(t) for t in np.atleast_1d(thetas)])


def abelian_toy_algebra(thetas) -> algebra.AlgebraSpec:
    thetas = np.atleast_1d(thetas)
    return algebra.maximal_abelian(len(thetas), product_rotation(thetas))


def abelian_rotation_generator(dtheta) -> np.ndarray:
    """(1/2) sum_i dtheta_i sigma^y_i."""
    dtheta = np.atleast_1d(np.asarray(dtheta, dtype=float))
    n = len(dtheta)
    return 0.5 * sum(dt * pauli_string(n, [(i, "y")]) for i, dt in enumerate(dtheta))


def abelian_metric_closed(p: ToyParams, deps, dj) -> float:
    """sum_i ((eps_i dJ_i - J_i deps_i) / (eps_i^2 + J_i^2))^2."""
    p.check_nondegenerate()
    deps = np.broadcast_to(np.asarray(deps, dtype=float), p.eps.shape)
    dj = np.broadcast_to(np.asarray(dj, dtype=float), p.j.shape)
    terms = (p.eps * dj - p.j * deps) / (p.eps**2 + p.j**2)
    return float(np.sum(terms**2))


def abelian_metric_scale(n: int) -> float:
    """Constant c in ds^2 = c * sum dtheta_i^2 for the maximal abelian toy.

    metric_element on (1/2) sum dtheta_i sigma^y_i with kappa = 2/2^n and
    ||sigma^y_i||_2^2 = 2^n gives (4/4^n) * (2^n/4) = 2^-n.
    """
    return 2.0**-n


# --- factor toy -----------------------------------------------------------
# Layout: 2n qubits, sites 0..n-1 are the L copies, n..2n-1 the R copies.

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
SIGMA_MINUS = SIGMA_PLUS.T.copy()


def _site_op(n_sites: int, ops: dict) -> np.ndarray:
    return kron_all([ops.get(s, PAULI["i"]) for s in range(n_sites)])


def hopping(n_pairs: int, i: int) -> np.ndarray:
    """sigma^+_{iL} sigma^-_{iR} + sigma^+_{iR} sigma^-_{iL}."""
    L, R, tot = i, n_pairs + i, 2 * n_pairs
    a = _site_op(tot, {L: SIGMA_PLUS, R: SIGMA_MINUS})
    return a + a.conj().T


def k_y(n_pairs: int, i: int) -> np.ndarray:
    """-i (sigma^+_{iL} sigma^-_{iR} - sigma^+_{iR} sigma^-_{iL})."""
    L, R, tot = i, n_pairs + i, 2 * n_pairs
    a = _site_op(tot, {L: SIGMA_PLUS, R: SIGMA_MINUS})
    return -1j * (a - a.conj().T)


def build_factor_toy(p: ToyParams):
    """Pair Hamiltonian with eps_L = -eps_R = eps_i, plus the L/R factor algebra.

    On span{|01>, |10>} of pair i the block is 2 eps_i sigma^z + J_i sigma^x;
    on span{|00>, |11>} it vanishes.
    """
    n = p.n
    tot = 2 * n
    h = np.zeros((4**n, 4**n), dtype=complex)
    for i in range(n):
        h += p.eps[i] * pauli_string(tot, [(i, "z")])
        h -= p.eps[i] * pauli_string(tot, [(n + i, "z")])
        h += p.j[i] * hopping(n, i)
    model = HamiltonianModel(h, {"eps": p.eps.tolist(), "j": p.j.tolist(), "kind": "factor_toy"})
    return model, algebra.factor_bipartition(tot, range(n))


def matched_abelian_params(p: ToyParams) -> ToyParams:
    """Abelian-toy parameters whose single-site problem matches the pair block."""
    return ToyParams(2 * p.eps, p.j)


def factor_theta_min(p: ToyParams) -> np.ndarray:
    return theta_min_closed(matched_abelian_params(p))


def factor_rotation_generator(dtheta) -> np.ndarray:
    """sum_i dtheta_i K^y_i on 2n qubits."""
    dtheta = np.atleast_1d(np.asarray(dtheta, dtype=float))
    n = len(dtheta)
    return sum(dt * k_y(n, i) for i, dt in enumerate(dtheta))


def factor_rotation(thetas) -> np.ndarray:
    """prod_i exp(-i theta_i K^y_i / 2), the pair analogue of product_rotation."""
    return unitary_exp(-0.5j * factor_rotation_generator(thetas))


def factor_toy_algebra(thetas) -> algebra.AlgebraSpec:
    thetas = np.atleast_1d(thetas)
    n = len(thetas)
    return algebra.factor_bipartition(2 * n, range(n), factor_rotation(thetas))


def factor_metric_scale(n_pairs: int) -> float:
    """Constant c in ds^2 = c * sum dtheta_i^2 for the factor toy.

    The family generator is (1/2) sum dtheta_i K^y_i with ||K^y_i||_2^2 =
    2 * 4^(n-1); kappa^2 = 4 / (d * dim A') = 4 / 16^n. Product: 1 / (2 * 4^n).
    """
    return 1.0 / (2.0 * 4.0**n_pairs)


# --- transverse-field Ising chain ------------------------------------------

def build_tfim(p: TfimParams) -> HamiltonianModel:
    """-sum_{i<N-1} Z_i Z_{i+1} - sum_i (h Z_i + J_i X_i), open boundary."""
    n = p.n
    if n < 2:
        raise ValueError("TFIM needs at least two sites")
    js = p.couplings()
    d = 2**n
    # diagonal part from bit patterns
    bits = (np.arange(d)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    z = 1 - 2 * bits
    diag = -np.sum(z[:, :-1] * z[:, 1:], axis=1) - p.h * np.sum(z, axis=1)
    h = np.diag(diag.astype(complex))
    for i in range(n):
        flip = np.arange(d) ^ (1 << (n - 1 - i))
        h[flip, np.arange(d)] -= js[i]
    params = {"n": n, "j": p.j, "h": p.h}
    if p.j_site is not None:
        params["j_site"] = list(map(float, p.j_site))
    return HamiltonianModel(h, params)


def parity_x(n: int) -> np.ndarray:
    return kron_all([PAULI["x"]] * n)


# --- random Hamiltonians without gap resonances ---------------------------

GOLOMB_RULERS = {
    2: (0, 1),
    3: (0, 1, 3),
    4: (0, 1, 4, 6),
    5: (0, 1, 4, 9, 11),
    6: (0, 1, 4, 10, 12, 17),
    7: (0, 1, 4, 10, 18, 23, 25),
    8: (0, 1, 4, 9, 15, 22, 32, 34),
}


def golomb_hamiltonian(dim: int, rng, scale: float = 0.1, jitter: float = 0.1) -> HamiltonianModel:
    """Haar eigenbasis with spectrum scale * (ruler + U(-jitter, jitter)).

    All pairwise differences of a Golomb ruler are distinct integers, so two
    gaps E_k - E_l and E_m - E_n differ by at least scale * (1 - 4 jitter)
    unless (k, l) = (m, n).
    """
    from .opspace import as_rng, haar_unitary

    if dim not in GOLOMB_RULERS:
        raise ValueError(f"no ruler tabulated for dimension {dim}")
    if not 0 <= jitter < 0.25:
        raise ValueError("jitter must lie in [0, 0.25)")
    g = as_rng(rng)
    e = scale * (np.array(GOLOMB_RULERS[dim], dtype=float) + g.uniform(-jitter, jitter, dim))
    u = haar_unitary(dim, g)
    h = (u * e) @ u.conj().T
    return HamiltonianModel((h + h.conj().T) / 2, {"spectrum": e.tolist()})
