"""Block-structured operator subalgebras and their geometry.

An algebra is described by a block list ``[(n_J, d_J), ...]`` and a frame
unitary ``W``. In the frame basis the Hilbert space is the direct sum of
``C^{n_J} (x) C^{d_J}``; the algebra acts as ``1_{n_J} (x) M_{d_J}`` and its
commutant as ``M_{n_J} (x) 1_{d_J}``. Canonical index inside block J is
``offset_J + i * d_J + j`` with ``i < n_J`` and ``j < d_J``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .opspace import POST_TOL, as_operator, check_hermitian, check_unitary

KINDS = ("onto_A", "onto_commutant", "onto_sum", "complement_Q")


@dataclass(frozen=True, eq=False)
class AlgebraSpec:
    dim: int
    blocks: tuple
    frame: np.ndarray

    def __post_init__(self):
        blocks = tuple((int(n), int(d)) for n, d in self.blocks)
        if not blocks or any(n < 1 or d < 1 for n, d in blocks):
            raise ValueError(f"invalid block list {self.blocks}")
        if sum(n * d for n, d in blocks) != self.dim:
            raise ValueError(f"blocks {blocks} do not add up to dimension {self.dim}")
        frame = check_unitary(self.frame)
        if frame.shape[0] != self.dim:
            raise ValueError("frame dimension mismatch")
        frame = frame.copy()
        frame.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "frame", frame)

    @property
    def dim_algebra(self) -> int:
        return sum(d * d for _, d in self.blocks)

    @property
    def dim_commutant(self) -> int:
        return sum(n * n for n, _ in self.blocks)

    @property
    def collinear(self) -> bool:
        n0, d0 = self.blocks[0]
        return all(n * d0 == n0 * d for n, d in self.blocks)

    @property
    def is_factor(self) -> bool:
        return len(self.blocks) == 1

    @cached_property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for n, d in self.blocks:
            out.append(acc)
            acc += n * d
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "blocks": [list(b) for b in self.blocks],
            "frame": np.column_stack([self.frame.real.ravel(), self.frame.imag.ravel()]).ravel().tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AlgebraSpec":
        dim = int(obj["dim"])
        flat = np.asarray(obj["frame"], dtype=float)
        if flat.size != 2 * dim * dim:
            raise ValueError("frame array has wrong length")
        frame = (flat[0::2] + 1j * flat[1::2]).reshape(dim, dim)
        return cls(dim, tuple(tuple(b) for b in obj["blocks"]), frame)


def _identity(dim):
    return np.eye(dim, dtype=complex)


def maximal_abelian(n_qubits: int, frame=None) -> AlgebraSpec:
    """Operators diagonal in the basis given by the columns of ``frame``."""
    d = 2**n_qubits
    frame = _identity(d) if frame is None else as_operator(frame)
    return AlgebraSpec(d, ((1, 1),) * d, frame)


def bipartition_permutation(n_qubits: int, left_sites) -> np.ndarray:
    """Permutation sending canonical index ``i_B * d_A + j_A`` to the qubit basis."""
    left = sorted(set(left_sites))
    right = [s for s in range(n_qubits) if s not in left]
    d = 2**n_qubits
    order = right + left  # canonical layout: multiplicity (B) factor first
    idx = np.arange(d).reshape([2] * n_qubits).transpose(order).reshape(-1)
    perm = np.zeros((d, d), dtype=complex)
    perm[idx, np.arange(d)] = 1.0
    return perm


def factor_bipartition(n_qubits: int, left_sites, frame=None) -> AlgebraSpec:
    """The factor algebra B(H_left) (x) 1_right, optionally rotated by ``frame``."""
    left = sorted(set(left_sites))
    if not left or len(left) >= n_qubits or any(not 0 <= s < n_qubits for s in left):
        raise ValueError(f"left_sites must be a nonempty proper subset, got {left_sites}")
    d = 2**n_qubits
    d_a = 2 ** len(left)
    frame = _identity(d) if frame is None else as_operator(frame)
    return AlgebraSpec(d, ((d // d_a, d_a),), frame @ bipartition_permutation(n_qubits, left))


def conjugate(alg: AlgebraSpec, u) -> AlgebraSpec:
    """Ad u applied to the algebra."""
    u = check_unitary(u)
    if u.shape[0] != alg.dim:
        raise ValueError("dimension mismatch")
    return AlgebraSpec(alg.dim, alg.blocks, u @ alg.frame)


def _block_units(alg: AlgebraSpec, commutant: bool, scale) -> np.ndarray:
    w = alg.frame
    out = []
    for (n, dj), off in zip(alg.blocks, alg.offsets):
        size = n if commutant else dj
        for l in range(size):
            for m in range(size):
                local = np.zeros((size, size))
                local[l, m] = scale(n, dj)
                blk = np.kron(local, np.eye(dj)) if commutant else np.kron(np.eye(n), local)
                x = np.zeros((alg.dim, alg.dim), dtype=complex)
                x[off:off + n * dj, off:off + n * dj] = blk
                out.append(w @ x @ w.conj().T)
    return np.array(out)


def algebra_basis(alg: AlgebraSpec, commutant: bool = False) -> np.ndarray:
    """HS-orthonormal basis of the algebra (or commutant), shape (dim, d, d)."""
    if commutant:
        return _block_units(alg, True, lambda n, dj: dj**-0.5)
    return _block_units(alg, False, lambda n, dj: n**-0.5)


def kraus_family(alg: AlgebraSpec, kind: str = "onto_A") -> np.ndarray:
    """Kraus operators of the conditional expectation.

    ``onto_A`` uses f = n_J^{-1/2} |l><m| (x) 1_{d_J}; ``onto_commutant`` uses
    e = d_J^{-1/2} 1_{n_J} (x) |l><m|, both rotated by the frame.
    """
    if kind == "onto_A":
        return _block_units(alg, True, lambda n, dj: n**-0.5)
    if kind == "onto_commutant":
        return _block_units(alg, False, lambda n, dj: dj**-0.5)
    raise ValueError(f"no Kraus family for kind {kind!r}")


class SuperProjection:
    """Conditional-expectation-type projection on B(H)."""

    def __init__(self, target: AlgebraSpec, kind: str = "onto_A"):
        if kind not in KINDS:
            raise ValueError(f"unknown projection kind {kind!r}")
        self.target = target
        self.kind = kind

    @cached_property
    def kraus(self):
        if self.kind in ("onto_A", "onto_commutant"):
            return kraus_family(self.target, self.kind)
        return None

    def __call__(self, x):
        return project(self, x)

    def apply_kraus(self, x):
        """Reference application through the Kraus sum (oracle path)."""
        k = self.kraus
        if k is None:
            raise ValueError(f"kind {self.kind!r} is not a CP map")
        return np.einsum("rij,jk,rlk->il", k, np.asarray(x), k.conj())


def _block_apply(alg: AlgebraSpec, xt: np.ndarray, keep_algebra: bool) -> np.ndarray:
    """Block-wise conditional expectation in the canonical frame.

    ``xt`` may carry leading batch axes.
    """
    out = np.zeros_like(xt)
    for (n, dj), off in zip(alg.blocks, alg.offsets):
        s = slice(off, off + n * dj)
        blk = xt[..., s, s].reshape(xt.shape[:-2] + (n, dj, n, dj))
        if keep_algebra:
            red = np.einsum("...iaib->...ab", blk) / n
            new = np.einsum("ij,...ab->...iajb", np.eye(n), red)
        else:
            red = np.einsum("...iaja->...ij", blk) / dj
            new = np.einsum("...ij,ab->...iajb", red, np.eye(dj))
        out[..., s, s] = new.reshape(xt.shape[:-2] + (n * dj, n * dj))
    return out


def _center_apply(alg: AlgebraSpec, xt: np.ndarray) -> np.ndarray:
    out = np.zeros_like(xt)
    for (n, dj), off in zip(alg.blocks, alg.offsets):
        s = slice(off, off + n * dj)
        tr = np.einsum("...ii->...", xt[..., s, s]) / (n * dj)
        out[..., s, s] = tr[..., None, None] * np.eye(n * dj)
    return out


def project(p: SuperProjection, x) -> np.ndarray:
    """Apply the projection to ``x`` (a matrix or a stack of matrices)."""
    alg = p.target
    x = np.asarray(x, dtype=complex)
    if x.shape[-2:] != (alg.dim, alg.dim):
        raise ValueError(f"dimension mismatch: {x.shape} vs algebra dim {alg.dim}")
    w = alg.frame
    xt = w.conj().T @ x @ w
    if p.kind == "onto_A":
        yt = _block_apply(alg, xt, True)
    elif p.kind == "onto_commutant":
        yt = _block_apply(alg, xt, False)
    else:
        # P_{A+A'} = P_A + P_A' - P_A P_A', and P_A P_A' is the center projection
        yt = _block_apply(alg, xt, True) + _block_apply(alg, xt, False) - _center_apply(alg, xt)
        if p.kind == "complement_Q":
            yt = xt - yt
    return w @ yt @ w.conj().T


def projection(alg: AlgebraSpec, kind: str = "onto_A") -> SuperProjection:
    return SuperProjection(alg, kind)


def commutant_bruteforce(alg: AlgebraSpec, generators=None) -> np.ndarray:
    """Orthonormal basis of {X : [X, a] = 0 for all generators a} by null space.

    Oracle-scale only (d <= 16).
    """
    d = alg.dim
    if d > 16:
        raise ValueError("brute-force commutant limited to d <= 16")
    gens = algebra_basis(alg) if generators is None else np.asarray(generators)
    eye = np.eye(d)
    # row-major vec: vec(a X) = (a (x) 1) vec X, vec(X a) = (1 (x) a^T) vec X
    rows = [np.kron(a, eye) - np.kron(eye, a.T) for a in gens]
    m = np.vstack(rows)
    _, s, vh = np.linalg.svd(m)
    tol = max(m.shape) * np.finfo(float).eps * (s[0] if s.size else 1.0) * 10
    rank = int(np.sum(s > tol))
    null = vh[rank:].conj()
    return null.reshape(-1, d, d)


def span_projector(basis) -> np.ndarray:
    """Orthogonal projector (on vectorized operators) onto the span of ``basis``."""
    b = np.asarray(basis).reshape(len(basis), -1)
    u, s, _ = np.linalg.svd(b.T, full_matrices=False)
    q = u[:, s > 1e-10 * max(s[0], 1.0)]
    return q @ q.conj().T


@dataclass(frozen=True)
class ChoiState:
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def purity(self) -> float:
        return float(np.vdot(self.rho, self.rho).real)


CHOI_MAX_DIM = 32


def choi(p: SuperProjection) -> ChoiState:
    """(P (x) 1)(|Phi+><Phi+|) with |Phi+> = d^{-1/2} sum_i |i>|i>."""
    if p.kind != "onto_A":
        raise ValueError("Choi state is defined for onto_A projections")
    d = p.target.dim
    if d > CHOI_MAX_DIM:
        raise ValueError(f"Choi state materialization limited to d <= {CHOI_MAX_DIM}")
    units = np.zeros((d * d, d, d), dtype=complex)
    units[np.arange(d * d), np.repeat(np.arange(d), d), np.tile(np.arange(d), d)] = 1.0
    images = project(p, units).reshape(d, d, d, d)  # [i, j, a, b] = P(|i><j|)_{ab}
    rho = np.einsum("ijab->aibj", images).reshape(d * d, d * d) / d
    return ChoiState(rho)


def _check_compatible(a: AlgebraSpec, b: AlgebraSpec):
    if a.dim != b.dim or sorted(a.blocks) != sorted(b.blocks):
        raise ValueError("algebras are not isomorphic (different block structure)")


def distance_squared(a: AlgebraSpec, b: AlgebraSpec) -> float:
    """D(a, b)^2 = d^{-2} ||P_a - P_b||_HS^2.

    Evaluated as 2 d^{-2} sum_alpha ||(1 - P_b)(e_alpha)||^2 over an orthonormal
    basis of ``a``, which avoids cancellation for nearby algebras.
    """
    _check_compatible(a, b)
    basis = algebra_basis(a)
    wb = b.frame
    xt = wb.conj().T @ basis @ wb
    resid = xt - _block_apply(b, xt, True)
    return 2.0 * float(np.vdot(resid, resid).real) / a.dim**2


def distance(a: AlgebraSpec, b: AlgebraSpec, method: str = "basis") -> float:
    """Algebra distance; ``method`` is ``basis`` (default) or ``choi``."""
    if method == "choi":
        _check_compatible(a, b)
        ra = choi(projection(a)).rho
        rb = choi(projection(b)).rho
        return float(np.linalg.norm(ra - rb))
    if method != "basis":
        raise ValueError(f"unknown method {method!r}")
    return float(np.sqrt(max(distance_squared(a, b), 0.0)))


def same_algebra(a: AlgebraSpec, b: AlgebraSpec, tol: float = 1e-8) -> bool:
    try:
        return distance(a, b) < tol
    except ValueError:
        return False


def kappa(alg: AlgebraSpec) -> float:
    """Prefactor of the metric element, 2 / sqrt(d * dim A').

    Reduces to 2 / dim A' whenever d == dim A' (maximal abelian algebras,
    symmetric factors). Checked against finite differences of the distance
    for asymmetric collinear block structures as well.
    """
    return 2.0 / np.sqrt(alg.dim * alg.dim_commutant)


def metric_element(alg: AlgebraSpec, k) -> float:
    """kappa^2 ||Q(k)||_2^2 for a Hermitian generator k (collinear algebras only)."""
    if not alg.collinear:
        raise ValueError("metric element formula holds for collinear algebras only")
    k = check_hermitian(k, tol=POST_TOL)
    q = project(projection(alg, "complement_Q"), k)
    return kappa(alg) ** 2 * float(np.vdot(q, q).real)
