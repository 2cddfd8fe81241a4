"""Dense operator plumbing on small Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Qubit registers use the
convention that site 0 is the leftmost tensor factor, i.e. the most
significant bit of the basis index.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
POST_TOL = 1e-10

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_operator(a)
    dev = np.abs(a - a.conj().T).max() if a.size else 0.0
    if dev > tol:
        raise ValueError(f"operator is not Hermitian (max deviation {dev:.3e})")
    return a


def check_unitary(u, tol: float = POST_TOL) -> np.ndarray:
    u = as_operator(u)
    dev = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if dev > tol:
        raise ValueError(f"operator is not unitary (max deviation {dev:.3e})")
    return u


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def kron_all(ops) -> np.ndarray:
    return reduce(np.kron, ops, np.eye(1, dtype=complex))


def pauli_string(n_qubits: int, ops) -> np.ndarray:
    """Tensor product of single-site Paulis, identity on unlisted sites.

    ``ops`` is an iterable of ``(site, axis)`` with axis in ``"xyz"``.
    """
    factors = [PAULI["i"]] * n_qubits
    seen = set()
    for site, axis in ops:
        if site in seen:
            raise ValueError(f"duplicate site {site}")
        if not 0 <= site < n_qubits:
            raise ValueError(f"site {site} out of range for {n_qubits} qubits")
        if axis not in ("x", "y", "z"):
            raise ValueError(f"unknown Pauli axis {axis!r}")
        seen.add(site)
        factors[site] = PAULI[axis]
    return kron_all(factors)


def partial_trace(op, keep, dims=None) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    ``dims`` defaults to a qubit register of the matching size. The kept
    factors stay in their original order.
    """
    op = as_operator(op)
    d = op.shape[0]
    if dims is None:
        n = int(round(np.log2(d)))
        if 2**n != d:
            raise ValueError(f"dimension {d} is not a power of two")
        dims = [2] * n
    dims = list(dims)
    if int(np.prod(dims)) != d:
        raise ValueError(f"factor dims {dims} inconsistent with dimension {d}")
    keep = sorted(set(keep))
    if len(keep) != len(list(keep)) or any(not 0 <= k < len(dims) for k in keep):
        raise ValueError(f"invalid subset {keep}")
    m = len(dims)
    t = op.reshape(dims + dims)
    row = list(range(m))
    col = [m + i if i in keep else i for i in range(m)]
    out = [i for i in keep] + [m + i for i in keep]
    res = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(dk, dk)


@dataclass(frozen=True)
class SpectralDecomp:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def projector(self, k: int) -> np.ndarray:
        v = self.eigenvectors[:, k]
        return np.outer(v, v.conj())

    def projectors(self) -> np.ndarray:
        """All eigenprojectors stacked along axis 0."""
        v = self.eigenvectors
        return np.einsum("ik,jk->kij", v, v.conj())

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def fix_phases(vecs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Make the first non-negligible component of every column real positive."""
    vecs = np.array(vecs, dtype=complex)
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.flatnonzero(np.abs(col) > tol)
        if idx.size:
            ph = col[idx[0]] / abs(col[idx[0]])
            vecs[:, k] = col / ph
    return vecs


def eig_hermitian(h) -> SpectralDecomp:
    """Ascending eigen-decomposition with a deterministic phase convention."""
    h = check_hermitian(h)
    w, v = np.linalg.eigh(h)
    return SpectralDecomp(w, fix_phases(v))


def unitary_exp(k) -> np.ndarray:
    """exp(k) for skew-Hermitian k, via the spectral decomposition of i*k."""
    k = as_operator(k)
    dev = np.abs(k + k.conj().T).max()
    if dev > POST_TOL * max(1.0, np.abs(k).max()):
        raise ValueError(f"generator is not skew-Hermitian (deviation {dev:.3e})")
    ik = 0.5j * (k - k.conj().T)  # exactly Hermitian
    w, v = np.linalg.eigh(ik)
    return (v * np.exp(-1j * w)) @ v.conj().T


def polar_unitary(v) -> np.ndarray:
    """Closest unitary to ``v`` in Frobenius norm."""
    u, _, wh = np.linalg.svd(v)
    return u @ wh


@dataclass
class RngStream:
    """Seeded random stream keyed by ``(seed, label)``.

    Do not share one instance between threads; use :meth:`child` to hand
    out independently labeled streams instead.
    """

    seed: int
    label: str = ""
    gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = [int(self.seed) & 0xFFFFFFFF, (int(self.seed) >> 32) & 0xFFFFFFFF,
               zlib.crc32(self.label.encode()), len(self.label)]
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))

    def child(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{label}" if self.label else label)


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(0 if rng is None else int(rng)).gen


def haar_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = as_rng(rng)
    z = (g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(dim: int, rng=None) -> np.ndarray:
    g = as_rng(rng)
    a = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_density(dim: int, rng=None, rank: int | None = None) -> np.ndarray:
    g = as_rng(rng)
    rank = dim if rank is None else rank
    a = g.standard_normal((dim, rank)) + 1j * g.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def swap_doubled(dims, which=None) -> np.ndarray:
    """Swap operator on H (x) H' exchanging selected factors with their copies.

    ``dims`` lists the tensor factors of H; ``which`` selects the factors to
    swap (default: all, i.e. the full swap).
    """
    dims = [int(x) for x in dims]
    if any(x < 1 for x in dims):
        raise ValueError(f"invalid factorization {dims}")
    m = len(dims)
    which = set(range(m)) if which is None else set(which)
    if any(not 0 <= w < m for w in which):
        raise ValueError(f"invalid factor selection {sorted(which)}")
    d = int(np.prod(dims))
    # output axis perm: copy-1 factor i takes copy-2 factor i if swapped
    perm = [m + i if i in which else i for i in range(m)]
    perm += [i if i in which else m + i for i in range(m)]
    idx = np.arange(d * d).reshape(dims + dims).transpose(perm).reshape(-1)
    s = np.zeros((d * d, d * d))
    s[np.arange(d * d), idx] = 1.0
    return s
