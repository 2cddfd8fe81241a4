"""Steepest descent of the long-time scrambling over the unitary group.

The search rotates the Hamiltonian eigenstates, |phi_k> -> V|phi_k>, with the
bipartition held fixed; the minimizing algebra is Ad V^dagger (A).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .algebra import AlgebraSpec, project, projection
from .models import as_model, product_rotation
from .opspace import partial_trace, polar_unitary, swap_doubled, unitary_exp
from .scrambling import _gram, nrc_from_gram, GramPair, reduced_states, rotated_states, sigma_s


@dataclass(frozen=True)
class OptConfig:
    epsilon: float = 1e-10
    max_iters: int = 10_000
    mu0: float = 0.1
    mu_min: float = 1e-8
    mu_max: float = 1.0
    reortho_every: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.mu_min <= self.mu0 <= self.mu_max:
            raise ValueError("need 0 < mu_min <= mu0 <= mu_max")


@dataclass
class OptState:
    v: np.ndarray
    f: float
    mu: float
    iter: int = 0
    converged: bool = False
    trace: list = field(default_factory=list)  # (iter, f, grad_norm, mu)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "f", "grad_norm", "mu"])
        for it, f, gn, mu in self.trace:
            w.writerow([it, repr(float(f)), repr(float(gn)), repr(float(mu))])
        return buf.getvalue()


def _parts(alg: AlgebraSpec, h, v):
    states = rotated_states(h, v)
    rho_a, rho_b = reduced_states(alg, states)
    return states, rho_a, rho_b


def objective(alg: AlgebraSpec, h, v) -> float:
    """Long-time scrambling of Ad v^dagger (A) under H (no-resonance form)."""
    _, rho_a, rho_b = _parts(alg, h, v)
    n, da = alg.blocks[0]
    return nrc_from_gram(GramPair(_gram(rho_a), _gram(rho_b), da, n))


def _weights(d):
    return 1.0 - 0.5 * np.eye(d)


def euclid_gradient(alg: AlgebraSpec, h, v) -> np.ndarray:
    """Gamma_V with df = 2 Re Tr(Gamma_V^dag dV).

    Gamma_V = sum_k M_k V Pi_k,
    M_k = -(4/d^2) sum_l w_kl [G^A_kl rho_l^A (x) 1 + G^B_kl 1 (x) rho_l^B].
    """
    model = as_model(h)
    phi = model.spectral.eigenvectors
    states, rho_a, rho_b = _parts(alg, model, v)
    d = alg.dim
    n, da = alg.blocks[0]
    w = _weights(d)
    ca = w * _gram(rho_a)
    cb = w * _gram(rho_b)
    sa = np.einsum("kl,lab->kab", ca, rho_a)
    sb = np.einsum("kl,lij->kij", cb, rho_b)
    m = (alg.frame.conj().T @ states).T.reshape(d, n, da)
    # (1_B (x) rho^A) psi -> M rho^T ; (rho^B (x) 1_A) psi -> rho^B M, canonical layout
    out = np.einsum("kia,kba->kib", m, sa) + np.einsum("kij,kja->kia", sb, m)
    cols = (-4.0 / d**2) * (alg.frame @ out.reshape(d, d).T)
    return cols @ phi.conj().T


def euclid_gradient_swap(alg: AlgebraSpec, h, v) -> np.ndarray:
    """Gamma_V from the doubled-space swap expression (oracle, d <= 16).

    Gamma_V = -(4/d^2) sum_{k,l} w_kl sum_X G^X_kl Tr_2[S_{XX'} (V Pi_k (x) V Pi_l V^dag)],
    evaluated in the canonical frame of the bipartition.
    """
    model = as_model(h)
    d = alg.dim
    if d > 16:
        raise ValueError("doubled-space route limited to d <= 16")
    n, da = alg.blocks[0]
    wf = alg.frame
    projs = model.spectral.projectors()
    vt = wf.conj().T @ v  # work in the canonical frame: factors (B, A)
    vp = vt @ projs  # V Pi_k
    vpv = vp @ vt.conj().T  # V Pi_k V^dag
    _, rho_a, rho_b = _parts(alg, model, v)
    w = _weights(d)
    swaps = {"A": swap_doubled([n, da], [1]), "B": swap_doubled([n, da], [0])}
    grams = {"A": _gram(rho_a), "B": _gram(rho_b)}
    gamma = np.zeros((d, d), dtype=complex)
    for k in range(d):
        for x in ("A", "B"):
            z = np.einsum("l,lij->ij", w[k] * grams[x][k], vpv)
            big = swaps[x] @ np.kron(vp[k], z)
            gamma += partial_trace(big, [0], dims=[d, d])
    gamma *= -4.0 / d**2
    return wf @ gamma


DRIFT_TOL = 1e-11


def _drift(v) -> float:
    return float(np.abs(v.conj().T @ v - np.eye(v.shape[0])).max())


def riemannian_grad(gamma, v) -> np.ndarray:
    """G_V = Gamma V^dag - V Gamma^dag (skew-Hermitian)."""
    g = gamma @ v.conj().T
    return g - g.conj().T


def minimize(alg: AlgebraSpec, h, v0=None, cfg: OptConfig | None = None) -> OptState:
    """Geodesic steepest descent V <- exp(-mu G) V with accept/double, reject/halve steps.

    Stops when a trial step changes f by at most ``cfg.epsilon``, or at once if
    mu_max ||G||^2 <= epsilon at the start; running out of iterations returns a
    non-converged state.
    """
    cfg = OptConfig() if cfg is None else cfg
    model = as_model(h)
    d = alg.dim
    v = np.eye(d, dtype=complex) if v0 is None else np.array(v0, dtype=complex)
    f = objective(alg, model, v)
    st = OptState(v=v, f=f, mu=cfg.mu0)
    grad = riemannian_grad(euclid_gradient(alg, model, v), v)
    gnorm = float(np.linalg.norm(grad))
    st.trace.append((0, f, gnorm, st.mu))
    # a step exp(-mu G) changes f by -mu ||G||^2 to first order; if even mu_max
    # cannot beat epsilon the start already satisfies the convergence condition
    if cfg.mu_max * gnorm**2 <= cfg.epsilon:
        st.converged = True
        return st
    while st.iter < cfg.max_iters:
        st.iter += 1
        trial = unitary_exp(-st.mu * grad) @ st.v
        f_trial = objective(alg, model, trial)
        small = abs(f_trial - st.f) <= cfg.epsilon
        if f_trial < st.f:
            st.v, st.f = trial, f_trial
            if st.iter % cfg.reortho_every == 0 or _drift(st.v) > DRIFT_TOL:
                st.v = polar_unitary(st.v)
            st.mu = min(2.0 * st.mu, cfg.mu_max)
            grad = riemannian_grad(euclid_gradient(alg, model, st.v), st.v)
            gnorm = float(np.linalg.norm(grad))
        else:
            st.mu = max(0.5 * st.mu, cfg.mu_min)
        st.trace.append((st.iter, st.f, gnorm, st.mu))
        if small:
            st.converged = True
            break
    return st


def minimize_product_rotation(h, theta0) -> np.ndarray:
    """Minimize sigma_s over maximal abelian frames tensor_i exp(-i theta_i sigma^y / 2).

    Gauss-Newton on the entries of Q(Ad R^dag (H)); angles folded into (-pi/2, pi/2].
    """
    from .algebra import maximal_abelian

    model = as_model(h)
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    n = len(theta0)
    q = projection(maximal_abelian(n), "complement_Q")

    def resid(th):
        r = product_rotation(th)
        off = project(q, r.conj().T @ model.matrix @ r)
        return np.concatenate([off.real.ravel(), off.imag.ravel()])

    sol = least_squares(resid, theta0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    th = np.mod(sol.x + np.pi / 2, np.pi) - np.pi / 2
    th = np.where(th <= -np.pi / 2, th + np.pi, th)
    return th


__all__ = [
    "OptConfig", "OptState", "objective", "euclid_gradient", "euclid_gradient_swap",
    "riemannian_grad", "minimize", "minimize_product_rotation", "sigma_s",
]
