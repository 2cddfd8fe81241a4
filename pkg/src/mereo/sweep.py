"""Parameter sweeps of minimally scrambling bipartitions and the algebra susceptibility.

Two protocols: a warm-started sweep of the TFIM longitudinal field around
h = 0, and disorder lines through the clean coupling vector with identity
initialization at every point.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .algebra import AlgebraSpec, conjugate, distance, factor_bipartition
from .models import (
    TfimParams,
    ToyParams,
    abelian_metric_closed,
    abelian_metric_scale,
    abelian_toy_algebra,
    build_tfim,
    theta_min_closed,
)
from .optim import OptConfig, minimize
from .opspace import RngStream

SCHEMA_VERSION = 1
BUILD_ID = f"mereo-{__version__}"


@dataclass
class SweepPlan:
    kind: str  # "integrability" | "disorder"
    n_sites: int
    grid: list  # h values, or coupling vectors
    labels: list  # h, or signed disorder strength
    dh: float
    h: float = 0.0
    j: float = 1.05
    init_policy: str = "warm_start"
    n_steps: int = 10
    delta: float = 0.005
    seed: int = 0
    realization: int = 0
    opt: OptConfig = field(default_factory=OptConfig)

    def __post_init__(self):
        if self.kind not in ("integrability", "disorder"):
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if self.init_policy not in ("warm_start", "identity"):
            raise ValueError(f"unknown init policy {self.init_policy!r}")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if self.n_sites % 2 or not 2 <= self.n_sites <= 8:
            raise ValueError("n_sites must be even and at most 8")
        if len(self.grid) != len(self.labels):
            raise ValueError("grid and labels differ in length")
        if self.dh < 0:
            raise ValueError("dh must be non-negative")

    def bipartition(self) -> AlgebraSpec:
        return factor_bipartition(self.n_sites, range(self.n_sites // 2))

    def hamiltonian(self, i):
        if self.kind == "integrability":
            return build_tfim(TfimParams(self.n_sites, self.j, float(self.grid[i])))
        return build_tfim(TfimParams(self.n_sites, self.j, self.h, tuple(self.grid[i])))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["grid"] = np.asarray(self.grid, dtype=float).tolist()
        out["labels"] = [float(x) for x in self.labels]
        return out


@dataclass
class SweepRecord:
    index: int
    label: float
    params: object
    v: np.ndarray
    f_min: float
    iters: int
    converged: bool
    seed: int
    distance_to_prev: float = float("nan")
    distance_to_next: float = float("nan")
    g: float = float("nan")
    endpoint: bool = False

    def algebra(self, base: AlgebraSpec) -> AlgebraSpec:
        return conjugate(base, self.v.conj().T)


def susceptibility(d_prev, d_next, dh) -> float:
    """(D_-^2 + D_+^2) / (2 dh^2); a missing neighbour (None or nan) gives D^2 / dh^2."""
    if not dh > 0:
        raise ValueError("dh must be positive")
    have = [x for x in (d_prev, d_next) if x is not None and np.isfinite(x)]
    if not have:
        raise ValueError("need at least one neighbour distance")
    return float(sum(x * x for x in have) / (len(have) * dh * dh))


def integrability_plan(n_sites=6, j=1.05, delta=0.005, n_steps=10, opt=None, seed=0) -> SweepPlan:
    """Equidistant h in [-delta, delta], 2 n_steps + 1 points."""
    dh = delta / n_steps
    hs = [a * dh for a in range(-n_steps, n_steps + 1)]
    return SweepPlan("integrability", n_sites, hs, list(hs), dh, j=j, n_steps=n_steps,
                     delta=delta, seed=seed, opt=opt or OptConfig())


def _attach_distances(plan: SweepPlan, recs: list) -> list:
    base = plan.bipartition()
    algs = [r.algebra(base) for r in recs]
    for a, b, ra, rb in zip(algs, algs[1:], recs, recs[1:]):
        ra.distance_to_next = rb.distance_to_prev = distance(a, b)
    if plan.dh > 0:
        for r in recs:
            r.g = susceptibility(r.distance_to_prev, r.distance_to_next, plan.dh)
    else:
        for r in recs:
            r.g = 0.0
    recs[0].endpoint = recs[-1].endpoint = True
    return recs


def _solve(plan: SweepPlan, i: int, v0) -> SweepRecord:
    st = minimize(plan.bipartition(), plan.hamiltonian(i), v0, plan.opt)
    return SweepRecord(i, float(plan.labels[i]), plan.grid[i], st.v, st.f, st.iter,
                       st.converged, plan.seed)


def integrability_sweep(plan: SweepPlan) -> list:
    """Identity start at the centre, then two warm-started half sweeps outward.

    The centre is the point of ``plan.grid`` closest to zero label.
    """
    labels = np.asarray(plan.labels, dtype=float)
    c = int(np.argmin(np.abs(labels)))
    recs = {c: _solve(plan, c, None)}
    for order in (range(c + 1, len(labels)), range(c - 1, -1, -1)):
        prev = recs[c]
        for i in order:
            v0 = prev.v if plan.init_policy == "warm_start" else None
            prev = recs[i] = _solve(plan, i, v0)
    return _attach_distances(plan, [recs[i] for i in range(len(labels))])


def disorder_line_plan(n_sites=4, h=0.5, j_center=1.05, delta=0.005, n_steps=10, rng=None,
                       opt=None, seed=0, realization=0) -> SweepPlan:
    """Couplings c + (k / n_steps)(J_drawn - c) for k = -n_steps..n_steps.

    Strength label k delta / n_steps; negative k are the reflected points.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    rng = rng if rng is not None else RngStream(seed, f"disorder/{realization}")
    gen = rng.gen if isinstance(rng, RngStream) else rng
    drawn = gen.uniform(j_center - delta, j_center + delta, n_sites)
    ks = np.arange(-n_steps, n_steps + 1)
    grid = [j_center + (k / n_steps) * (drawn - j_center) for k in ks]
    dh = float(np.linalg.norm(drawn - j_center)) / n_steps
    return SweepPlan("disorder", n_sites, grid, [k * delta / n_steps for k in ks], dh, h=h,
                     j=j_center, init_policy="identity", n_steps=n_steps, delta=delta,
                     seed=seed, realization=realization, opt=opt or OptConfig())


def line_sweep(plan: SweepPlan, threads: int = 1) -> list:
    """Every point from the identity; independent points, merged in grid order."""
    idx = range(len(plan.grid))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            recs = list(ex.map(lambda i: _solve(plan, i, None), idx))
    else:
        recs = [_solve(plan, i, None) for i in idx]
    return _attach_distances(plan, recs)


@dataclass
class DisorderRow:
    label: float
    g_mean: float
    g_stderr: float
    n_real: int
    f_min_mean: float
    all_converged: bool


def disorder_average(sweeps: list) -> list:
    """Per-strength mean and standard error of g over realizations."""
    if not sweeps:
        raise ValueError("no realizations")
    n = len(sweeps)
    rows = []
    for k in range(len(sweeps[0])):
        gs = np.array([s[k].g for s in sweeps])
        se = float(np.std(gs, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        rows.append(DisorderRow(sweeps[0][k].label, float(gs.mean()), se, n,
                                float(np.mean([s[k].f_min for s in sweeps])),
                                all(s[k].converged for s in sweeps)))
    return rows


def disorder_sweep(n_sites=4, h=0.5, j_center=1.05, delta=0.005, n_steps=10, n_avg=5,
                   seed=0, opt=None, threads=1):
    """n_avg independent disorder lines (labelled streams), averaged per strength."""
    if n_avg < 1:
        raise ValueError("n_avg must be >= 1")
    plans = [disorder_line_plan(n_sites, h, j_center, delta, n_steps, opt=opt, seed=seed,
                                realization=r) for r in range(n_avg)]
    sweeps = [line_sweep(p, threads) for p in plans]
    return plans, sweeps, disorder_average(sweeps)


# --- closed-form toy sweep ---------------------------------------------------

def abelian_toy_susceptibility(p: ToyParams, deps, dj, dh: float) -> tuple:
    """(discrete g at p, closed-form g) along p + t (deps, dj), stencil at t = -dh, 0, dh."""
    deps = np.broadcast_to(np.asarray(deps, dtype=float), p.eps.shape)
    dj = np.broadcast_to(np.asarray(dj, dtype=float), p.j.shape)
    algs = [abelian_toy_algebra(theta_min_closed(ToyParams(p.eps + t * deps, p.j + t * dj)))
            for t in (-dh, 0.0, dh)]
    g = susceptibility(distance(algs[1], algs[0]), distance(algs[1], algs[2]), dh)
    return g, abelian_metric_scale(p.n) * abelian_metric_closed(p, deps, dj)


def convergence_order(dhs, errors) -> float:
    """Least-squares slope of log error against log dh."""
    return float(np.polyfit(np.log(dhs), np.log(errors), 1)[0])


# --- operator-entanglement route ---------------------------------------------

def operator_entanglement(u, dims) -> float:
    """Linear operator entanglement 1 - sum lambda_i^2 of u on C^dims[0] (x) C^dims[1]."""
    a, b = dims
    t = np.asarray(u).reshape(a, b, a, b).transpose(0, 2, 1, 3).reshape(a * a, b * b)
    s = np.linalg.svd(t, compute_uv=False) ** 2
    lam = s / s.sum()
    return float(1.0 - np.sum(lam**2))


def factor_distance_entanglement(base: AlgebraSpec, va, vb) -> float:
    """D(Ad va^dag base, Ad vb^dag base) from the operator entanglement of va vb^dag.

    D^2 = 2 d_A^2 E / d^2 with E computed in the canonical factorization of base.
    """
    if not base.is_factor:
        raise ValueError("factor algebra required")
    n, da = base.blocks[0]
    u = base.frame.conj().T @ va @ vb.conj().T @ base.frame
    e = operator_entanglement(u, (n, da))
    return float(np.sqrt(max(2.0 * da * da * e / base.dim**2, 0.0)))


# --- serialization -----------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def header_lines(config: dict, seed: int) -> list:
    return [
        f"# schema_version: {SCHEMA_VERSION}",
        f"# build: {BUILD_ID}",
        f"# seed: {seed}",
        "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":")),
    ]


def write_csv(path, header: list, columns: list, rows) -> None:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path):
    """(header dict, column names, rows as float arrays)."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition(": ")
                meta[key] = val
            else:
                lines.append(line)
    rdr = csv.reader(lines)
    cols = next(rdr)
    return meta, cols, np.array([[float(x) for x in r] for r in rdr])


def unitary_to_list(v) -> list:
    v = np.asarray(v, dtype=complex)
    return np.stack([v.real, v.imag], axis=-1).tolist()


def unitary_from_list(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def records_sidecar(plan: SweepPlan, recs: list) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "build": BUILD_ID,
        "plan": plan.to_dict(),
        "records": [
            {"index": r.index, "label": r.label, "f_min": r.f_min, "g": r.g,
             "iters": r.iters, "converged": r.converged, "v": unitary_to_list(r.v)}
            for r in recs
        ],
    }


INTEGRABILITY_COLUMNS = ["index", "h", "f_min", "g", "d_prev", "d_next", "iters", "converged",
                         "endpoint", "seed"]
DISORDER_COLUMNS = ["strength", "g_mean", "g_stderr", "n_real", "f_min_mean", "all_converged"]


def integrability_rows(recs):
    for r in recs:
        yield [r.index, r.label, r.f_min, r.g, r.distance_to_prev, r.distance_to_next,
               r.iters, r.converged, r.endpoint, r.seed]


def disorder_rows(rows):
    for r in rows:
        yield [r.label, r.g_mean, r.g_stderr, r.n_real, r.f_min_mean, r.all_converged]


__all__ = [
    "SweepPlan", "SweepRecord", "susceptibility", "integrability_plan", "integrability_sweep",
    "disorder_line_plan", "line_sweep", "disorder_average", "disorder_sweep", "DisorderRow",
    "abelian_toy_susceptibility", "convergence_order", "operator_entanglement",
    "factor_distance_entanglement", "write_csv", "read_csv", "header_lines",
    "records_sidecar", "unitary_to_list", "unitary_from_list",
]
