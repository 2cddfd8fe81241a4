"""Scrambling functionals of an algebra under Hamiltonian dynamics.

* ``sigma_s``: short-time rate ||Q(H)||_2.
* ``otoc_mc``: Monte-Carlo estimate of the algebra OTOC G_A(t).
* ``sigma_l_nrc``: long-time average of G_A(t) under the no-resonance
  condition, from Gram matrices of reduced eigenstates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraSpec, project, projection
from .models import as_model
from .opspace import as_rng, haar_unitary


def sigma_s(alg: AlgebraSpec, h) -> float:
    h = as_model(h).matrix
    if h.shape[0] != alg.dim:
        raise ValueError("dimension mismatch")
    q = project(projection(alg, "complement_Q"), h)
    return float(np.linalg.norm(q))


# --- Monte-Carlo A-OTOC ------------------------------------------------------

@dataclass(frozen=True)
class OtocEstimate:
    t: float
    mean: float
    std_error: float
    n_samples: int
    seed: int | None = None


def block_haar(alg: AlgebraSpec, rng, commutant: bool = False) -> np.ndarray:
    """Haar-random unitary of the algebra (or of its commutant)."""
    g = as_rng(rng)
    xt = np.zeros((alg.dim, alg.dim), dtype=complex)
    for (n, dj), off in zip(alg.blocks, alg.offsets):
        s = slice(off, off + n * dj)
        if commutant:
            xt[s, s] = np.kron(haar_unitary(n, g), np.eye(dj))
        else:
            xt[s, s] = np.kron(np.eye(n), haar_unitary(dj, g))
    w = alg.frame
    return w @ xt @ w.conj().T


def _projector_gram(alg: AlgebraSpec, phi) -> np.ndarray:
    """P_A as a d^2 x d^2 matrix on the operator basis |phi_k><phi_l|."""
    d = alg.dim
    units = np.einsum("ik,jl->klij", phi, phi.conj()).reshape(d * d, d, d)
    images = project(projection(alg, "onto_A"), units)
    return (phi.conj().T @ images @ phi).reshape(d * d, d * d).T


def otoc_unit_samples(alg: AlgebraSpec, h, times, n_units: int, rng,
                      estimator: str = "pair") -> np.ndarray:
    """Per-unit OTOC values, shape (n_units, len(times)).

    ``pair``: each unit is an antithetic pair (X, Y), (X^dagger, Y) averaged.
    ``conditional``: Y is averaged exactly, since the Haar twirl over the
    unitaries of A' is the conditional expectation P_A; then
    G = 1 - ||P_A(U_t^dag X U_t)||_2^2 / d for one Haar X per unit.
    The same draws are reused across all times.
    """
    model = as_model(h)
    sp = model.spectral
    phi, e = sp.eigenvectors, sp.eigenvalues
    d = alg.dim
    times = np.atleast_1d(np.asarray(times, dtype=float))
    # U_t = exp(itH); in the eigenbasis (U_t Y U_t^dag)_{kl} = Y_kl exp(it(E_k - E_l))
    phase = np.exp(1j * times[:, None, None] * (e[:, None] - e[None, :])[None])
    g = as_rng(rng)
    out = np.empty((n_units, len(times)))
    if estimator == "conditional":
        # ||P_A(M)||^2 = <m, K m> with m the eigenbasis entries of M
        k = _projector_gram(alg, phi)
        for u in range(n_units):
            x = phi.conj().T @ block_haar(alg, g) @ phi
            m = (x[None] * phase.conj()).reshape(len(times), d * d)
            out[u] = 1.0 - np.einsum("ti,ti->t", m.conj(), m @ k.T).real / d
        return out
    if estimator != "pair":
        raise ValueError(f"unknown estimator {estimator!r}")
    for u in range(n_units):
        x = phi.conj().T @ block_haar(alg, g) @ phi
        y = phi.conj().T @ block_haar(alg, g, commutant=True) @ phi
        yt = y[None] * phase
        yt_dag = np.conj(np.swapaxes(yt, 1, 2))
        vals = []
        for xx in (x, x.conj().T):
            a = xx.conj().T @ yt_dag
            b = xx @ yt
            tr = np.einsum("tij,tji->t", a, b).real
            vals.append(1.0 - tr / d)
        out[u] = 0.5 * (vals[0] + vals[1])
    return out


def _units(n_samples: int, estimator: str = "pair") -> int:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    return n_samples if estimator == "conditional" else max(1, (n_samples + 1) // 2)


def _summary(vals: np.ndarray):
    n = vals.shape[0]
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(np.shape(mean), np.nan)
    return mean, se


def otoc_curve(alg: AlgebraSpec, h, times, n_samples: int = 512, rng=None, seed=None,
               estimator: str = "pair"):
    """OTOC estimates on a time grid with common random numbers."""
    n_units = _units(n_samples, estimator)
    vals = otoc_unit_samples(alg, h, times, n_units, rng if rng is not None else seed, estimator)
    mean, se = _summary(vals)
    n_eval = n_units if estimator == "conditional" else 2 * n_units
    return [OtocEstimate(float(t), float(m), float(s), n_eval, seed)
            for t, m, s in zip(np.atleast_1d(times), mean, se)]


def otoc_mc(alg: AlgebraSpec, h, t: float, n_samples: int = 512, rng=None, seed=None,
            estimator: str = "pair") -> OtocEstimate:
    """Unbiased Monte-Carlo estimate of G_A(t) = (2d)^{-1} E ||[X, U_t Y U_t^dag]||_2^2."""
    return otoc_curve(alg, h, [t], n_samples, rng, seed, estimator)[0]


def short_time_times(h, n_points: int = 5, step: float = 0.01) -> np.ndarray:
    """Default small-t grid, step * (1..n) scaled by 1/||H||_2."""
    norm = np.linalg.norm(as_model(h).matrix)
    return step * np.arange(1, n_points + 1) / norm


def short_time_coefficient(alg: AlgebraSpec, h, times=None, n_samples: int = 512, rng=None,
                           estimator: str = "pair"):
    """Quadratic coefficient of G_A(t) at small t, fitted as a t^2 + b t^3.

    Returns (mean, std_error) of the per-unit fitted coefficient.
    """
    times = short_time_times(h) if times is None else np.asarray(times, dtype=float)
    vals = otoc_unit_samples(alg, h, times, _units(n_samples, estimator), rng, estimator)
    design = np.column_stack([times**2, times**3])
    coef = np.linalg.lstsq(design, vals.T, rcond=None)[0][0]
    mean, se = _summary(coef)
    return float(mean), float(se)


def trapezoid_phase_average(nu, t_max: float, n_points: int) -> np.ndarray:
    """Trapezoid-rule average of exp(i nu t) over n_points uniform nodes on [0, t_max].

    Summed in closed form as a geometric series; identical to applying the
    rule to the sampled values.
    """
    nu = np.asarray(nu, dtype=float)
    h = t_max / (n_points - 1)
    z = np.exp(1j * nu * h)
    small = np.abs(1.0 - z) < 1e-12
    safe = np.where(small, 0.5, 1.0 - z)
    total = np.where(small, n_points, (1.0 - z**n_points) / safe)
    return h * (total - 0.5 * (1.0 + np.exp(1j * nu * t_max))) / t_max


def time_average_mc(alg: AlgebraSpec, h, t_max: float, n_points: int = 4001,
                    n_samples: int = 512, rng=None, estimator: str = "conditional"):
    """(1/T) int_0^T G_A(t) dt by trapezoid rule; returns (mean, std_error).

    Test oracle for the no-resonance closed form. For the conditional
    estimator each unit is a quadratic form in the eigenbasis entries of X,
    so the trapezoid weights of every frequency pair are folded in once.
    """
    if n_points < 2:
        raise ValueError("need at least two time points")
    model = as_model(h)
    g = as_rng(rng)
    n_units = _units(n_samples, estimator)
    avgs = np.empty(n_units)
    if estimator == "conditional":
        sp = model.spectral
        phi, e = sp.eigenvectors, sp.eigenvalues
        d = alg.dim
        w = (e[:, None] - e[None, :]).ravel()  # m_a(t) = x_a exp(-i w_a t)
        kt = _projector_gram(alg, phi) * trapezoid_phase_average(w[:, None] - w[None, :],
                                                                 t_max, n_points)
        for u in range(n_units):
            x = (phi.conj().T @ block_haar(alg, g) @ phi).ravel()
            avgs[u] = 1.0 - np.vdot(x, kt @ x).real / d
    else:
        times = np.linspace(0.0, t_max, n_points)
        for u in range(n_units):
            vals = otoc_unit_samples(alg, model, times, 1, g, estimator)[0]
            avgs[u] = np.trapezoid(vals, times) / t_max
    mean, se = _summary(avgs)
    return float(mean), float(se)


# --- resonances ---------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceReport:
    tol: float
    count: int
    worst: tuple  # ((k, l), (m, n), |delta|) sorted by |delta|

    @property
    def resonant(self) -> bool:
        return self.count > 0


def resonance_check(h, tol: float = 1e-8, n_worst: int = 10) -> ResonanceReport:
    """Coincidences |(E_k - E_l) - (E_m - E_n)| < tol between distinct gaps (k != l)."""
    e = as_model(h).spectral.eigenvalues
    d = len(e)
    k, l = np.nonzero(~np.eye(d, dtype=bool))
    gaps = e[k] - e[l]
    order = np.argsort(gaps, kind="stable")
    sg = gaps[order]
    hi = np.searchsorted(sg, sg + tol, side="left")
    hi = np.maximum(hi, np.arange(len(sg)) + 1)
    count = int(np.sum(hi - np.arange(len(sg)) - 1))
    worst = []
    if count:
        diffs = np.diff(sg)
        idx = np.argsort(diffs, kind="stable")[:n_worst]
        for i in idx:
            if diffs[i] >= tol:
                break
            a, b = order[i], order[i + 1]
            worst.append(((int(k[a]), int(l[a])), (int(k[b]), int(l[b])), float(diffs[i])))
    return ResonanceReport(tol, count, tuple(worst))


# --- long-time average (no-resonance closed form) -------------------------------

@dataclass(frozen=True)
class GramPair:
    """Gram matrices <rho_k^X, rho_l^X> of reduced eigenstates, X in {A, B}.

    ``A`` is the factor the algebra acts on, ``B`` the multiplicity factor.
    """

    gram_a: np.ndarray
    gram_b: np.ndarray
    dim_a: int
    dim_b: int

    def r1(self, side: str) -> np.ndarray:
        """R^(1)_{kl} = <P_X(Pi_k), P_X(Pi_l)> for X = algebra or commutant."""
        if side == "algebra":
            return self.gram_a / self.dim_b
        if side == "commutant":
            return self.gram_b / self.dim_a
        raise ValueError(side)

    def r0(self, side: str) -> np.ndarray:
        """R^(0)_{lk} = ||P_X(|phi_k><phi_l|)||_2^2 (symmetric in k, l)."""
        if side == "algebra":
            return self.gram_b / self.dim_b
        if side == "commutant":
            return self.gram_a / self.dim_a
        raise ValueError(side)


def _require_factor(alg: AlgebraSpec):
    if not alg.is_factor:
        raise ValueError("a factor (bipartition) algebra is required")


def reduced_states(alg: AlgebraSpec, states: np.ndarray):
    """Reduced density matrices of the columns of ``states``.

    Returns (rho_a, rho_b) stacked along axis 0, with A the factor the algebra
    acts on and B the multiplicity factor.
    """
    _require_factor(alg)
    n, da = alg.blocks[0]
    m = (alg.frame.conj().T @ states).T.reshape(-1, n, da)
    rho_a = np.einsum("kia,kib->kab", m, m.conj())
    rho_b = np.einsum("kia,kja->kij", m, m.conj())
    return rho_a, rho_b


def _gram(rhos: np.ndarray) -> np.ndarray:
    flat = rhos.reshape(len(rhos), -1)
    g = (flat.conj() @ flat.T).real
    return (g + g.T) / 2


def rotated_states(h, v=None) -> np.ndarray:
    phi = as_model(h).spectral.eigenvectors
    return phi if v is None else v @ phi


def gram_matrices(alg: AlgebraSpec, h, v=None) -> GramPair:
    """Gram matrices of the reduced states of V|phi_k>."""
    _require_factor(alg)
    n, da = alg.blocks[0]
    rho_a, rho_b = reduced_states(alg, rotated_states(h, v))
    return GramPair(_gram(rho_a), _gram(rho_b), da, n)


def nrc_from_gram(gp: GramPair) -> float:
    d = gp.dim_a * gp.dim_b
    total = 0.0
    for g in (gp.gram_a, gp.gram_b):
        total += np.sum(g**2) - 0.5 * np.sum(np.diag(g) ** 2)
    return float(1.0 - total / d**2)


def sigma_l_nrc(alg: AlgebraSpec, h, v=None) -> float:
    """No-resonance closed form of the long-time average of G_A(t).

    ``v`` rotates the Hamiltonian eigenstates (|phi_k> -> v|phi_k>), which is
    the same as evaluating the algebra Ad v^dagger (A). The value is returned
    even when the spectrum is resonant; see ``sigma_l_nrc_report``.
    """
    return nrc_from_gram(gram_matrices(alg, h, v))


@dataclass(frozen=True)
class NrcResult:
    value: float
    resonances: ResonanceReport


def sigma_l_nrc_report(alg: AlgebraSpec, h, v=None, tol: float = 1e-8) -> NrcResult:
    return NrcResult(sigma_l_nrc(alg, h, v), resonance_check(h, tol))


def nrc_general(alg: AlgebraSpec, h) -> float:
    """No-resonance closed form from R matrices built with the projections.

    Works for any block structure; oracle scale (d <= 16).
    """
    model = as_model(h)
    phi = model.spectral.eigenvectors
    d = alg.dim
    units = np.einsum("ik,jl->klij", phi, phi.conj())  # [k, l] = |phi_k><phi_l|
    flat = units.reshape(d * d, d, d)
    r = {}
    for side, kind in (("algebra", "onto_A"), ("commutant", "onto_commutant")):
        p = project(projection(alg, kind), flat).reshape(d, d, d, d)
        r0 = np.einsum("klij,klij->lk", p.conj(), p).real
        diag = p[np.arange(d), np.arange(d)]
        r1 = np.einsum("kij,lij->kl", diag.conj(), diag).real
        r[side] = (r0, r1)
    total = 0.0
    for x, xp in (("algebra", "commutant"), ("commutant", "algebra")):
        r0, r1 = r[x][0], r[xp][1]
        total += np.trace(r0 @ r1) - 0.5 * np.sum(np.diag(r0) * np.diag(r1))
    return float(1.0 - total / d)
