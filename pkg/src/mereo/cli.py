"""Batch command line: ``mereo <command> [config.json] [--seed N] [--out PATH] [--threads K]``.

Every command reads an optional JSON config (unknown keys are rejected),
writes a CSV whose header echoes the resolved config, and exits with
0 on success, 1 on a numerical or check failure, 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

from . import algebra, models, optim, scrambling, sweep
from .opspace import RngStream, haar_unitary, random_hermitian, unitary_exp

THREADS_ENV = "MEREO_THREADS"

_OPT = {"epsilon": 1e-10, "max_iters": 10_000, "mu0": 0.1}

DEFAULTS = {
    "toy-abelian": {
        "eps": [1.0, 0.6, -0.8], "j": [1.0, 0.3, 0.5],
        "deps": [0.2, -0.1, 0.3], "dj": [0.1, 0.4, -0.2],
        "fd_step": 1e-3, "tol": 1e-6, "out": "toy_abelian.csv",
    },
    "toy-factor": {
        "eps": [1.0, 0.4], "j": [0.7, -0.9], "deps": [0.2, 0.3], "dj": [-0.1, 0.2],
        "fd_step": 1e-3, "tol": 1e-6, "out": "toy_factor.csv",
    },
    "sweep-integrability": {
        "n_sites": 6, "j": 1.05, "delta": 0.005, "n_steps": 10, "optimizer": _OPT,
        "out": "sweep_integrability.csv",
    },
    "sweep-disorder": {
        "n_sites": 4, "h": 0.5, "j_center": 1.05, "delta": 0.005, "n_steps": 10, "n_avg": 5,
        "optimizer": _OPT, "out": "sweep_disorder.csv",
    },
    "otoc-probe": {
        "model": "tfim", "n_sites": 4, "j": 1.05, "h": 0.5, "dim": 8, "left_sites": None,
        "t_max": 10.0, "n_points": 51, "n_samples": 512, "estimator": "pair",
        "out": "otoc_probe.csv",
    },
    "verify": {"n_metric": 6, "nrc_units": 1024, "tol_metric": 1e-5, "tol_gradient": 1e-5,
               "tol_routes": 1e-10, "tol_covariance": 1e-10, "out": "verify_report.json"},
}


class ConfigError(Exception):
    pass


class CheckFailure(Exception):
    pass


# --- config --------------------------------------------------------------------

def _merge(defaults: dict, given: dict, where: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown field {where}{key!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"field {where}{key!r} must be an object")
            out[key] = _merge(defaults[key], val, f"{where}{key}.")
        else:
            out[key] = val
    return out


def load_config(command: str, path=None, seed=None, out=None) -> dict:
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    version = raw.pop("schema_version", sweep.SCHEMA_VERSION)
    if version != sweep.SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    cfg_seed = raw.pop("seed", 0)
    cfg = _merge(DEFAULTS[command], raw, "")
    cfg["seed"] = cfg_seed if seed is None else seed
    if out is not None:
        cfg["out"] = out
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    cfg["schema_version"] = sweep.SCHEMA_VERSION
    return cfg


def _opt_config(cfg: dict) -> optim.OptConfig:
    o = cfg["optimizer"]
    try:
        return optim.OptConfig(epsilon=float(o["epsilon"]), max_iters=int(o["max_iters"]),
                               mu0=float(o["mu0"]), seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _toy_params(cfg: dict):
    try:
        p = models.ToyParams(cfg["eps"], cfg["j"])
        p.check_nondegenerate()
        deps = np.broadcast_to(np.asarray(cfg["deps"], dtype=float), p.eps.shape)
        dj = np.broadcast_to(np.asarray(cfg["dj"], dtype=float), p.j.shape)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if not cfg["fd_step"] > 0:
        raise ConfigError("fd_step must be positive")
    return p, deps, dj


def _rel(a, b) -> float:
    scale = abs(b)
    return abs(a - b) / scale if scale > 0 else abs(a - b)


def _richardson(g_of, step):
    return (4.0 * g_of(step / 2) - g_of(step)) / 3.0


# --- commands --------------------------------------------------------------------

def cmd_toy_abelian(cfg: dict, threads: int = 1) -> int:
    p, deps, dj = _toy_params(cfg)
    th = models.theta_min_closed(p)
    h = models.build_abelian_toy(p)
    s = scrambling.sigma_s(models.abelian_toy_algebra(th), h)
    closed = models.abelian_metric_closed(p, deps, dj)

    def g_of(step):
        return sweep.abelian_toy_susceptibility(p, deps, dj, step)[0]

    fd = _richardson(g_of, cfg["fd_step"]) / models.abelian_metric_scale(p.n)
    err = _rel(fd, closed)
    cols = ["site", "eps", "j", "deps", "dj", "theta_min", "sigma_s", "metric_closed",
            "metric_fd", "rel_error"]
    rows = [[i, p.eps[i], p.j[i], deps[i], dj[i], th[i], s, closed, fd, err] for i in range(p.n)]
    sweep.write_csv(cfg["out"], sweep.header_lines(cfg, cfg["seed"]), cols, rows)
    if err > cfg["tol"]:
        raise CheckFailure(f"metric rel. error {err:.3g} exceeds {cfg['tol']}")
    return 0


def _factor_distance_g(p, deps, dj, step):
    algs = [models.factor_toy_algebra(models.factor_theta_min(
        models.ToyParams(p.eps + t * deps, p.j + t * dj))) for t in (-step, 0.0, step)]
    return sweep.susceptibility(algebra.distance(algs[1], algs[0]),
                                algebra.distance(algs[1], algs[2]), step)


def cmd_toy_factor(cfg: dict, threads: int = 1) -> int:
    p, deps, dj = _toy_params(cfg)
    if p.n > 3:
        raise ConfigError("toy-factor supports at most 3 pairs")
    th = models.factor_theta_min(p)
    h, _ = models.build_factor_toy(p)
    s = scrambling.sigma_s(models.factor_toy_algebra(th), h)
    pm = models.matched_abelian_params(p)
    closed = models.abelian_metric_closed(pm, 2 * deps, dj)
    fd = _richardson(lambda st: _factor_distance_g(p, deps, dj, st), cfg["fd_step"])
    fd /= models.factor_metric_scale(p.n)
    err = _rel(fd, closed)
    cols = ["pair", "eps", "j", "deps", "dj", "theta_min", "sigma_s", "metric_closed",
            "metric_fd", "rel_error"]
    rows = [[i, p.eps[i], p.j[i], deps[i], dj[i], th[i], s, closed, fd, err] for i in range(p.n)]
    sweep.write_csv(cfg["out"], sweep.header_lines(cfg, cfg["seed"]), cols, rows)
    if err > cfg["tol"]:
        raise CheckFailure(f"metric rel. error {err:.3g} exceeds {cfg['tol']}")
    return 0


def _sidecar_path(out: str) -> str:
    root, _ = os.path.splitext(out)
    return root + ".json"


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_sweep_integrability(cfg: dict, threads: int = 1) -> int:
    try:
        plan = sweep.integrability_plan(int(cfg["n_sites"]), float(cfg["j"]), float(cfg["delta"]),
                                        int(cfg["n_steps"]), _opt_config(cfg), cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    recs = sweep.integrability_sweep(plan)
    sweep.write_csv(cfg["out"], sweep.header_lines(cfg, cfg["seed"]),
                    sweep.INTEGRABILITY_COLUMNS, sweep.integrability_rows(recs))
    _write_json(_sidecar_path(cfg["out"]), {"config": cfg, **sweep.records_sidecar(plan, recs)})
    return 0


def cmd_sweep_disorder(cfg: dict, threads: int = 1) -> int:
    try:
        plans, sweeps, rows = sweep.disorder_sweep(
            int(cfg["n_sites"]), float(cfg["h"]), float(cfg["j_center"]), float(cfg["delta"]),
            int(cfg["n_steps"]), int(cfg["n_avg"]), cfg["seed"], _opt_config(cfg), threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sweep.write_csv(cfg["out"], sweep.header_lines(cfg, cfg["seed"]),
                    sweep.DISORDER_COLUMNS, sweep.disorder_rows(rows))
    side = {"config": cfg, "schema_version": sweep.SCHEMA_VERSION, "build": sweep.BUILD_ID,
            "realizations": [sweep.records_sidecar(p, s) for p, s in zip(plans, sweeps)]}
    _write_json(_sidecar_path(cfg["out"]), side)
    return 0


def _probe_model(cfg: dict, rng):
    kind = cfg["model"]
    if kind == "tfim":
        n = int(cfg["n_sites"])
        h = models.build_tfim(models.TfimParams(n, float(cfg["j"]), float(cfg["h"])))
    elif kind == "golomb":
        h = models.golomb_hamiltonian(int(cfg["dim"]), rng)
        n = int(round(np.log2(h.dim)))
        if 2**n != h.dim:
            raise ConfigError("golomb dim must be a power of two")
    else:
        raise ConfigError(f"unknown model {kind!r}")
    left = cfg["left_sites"] if cfg["left_sites"] is not None else list(range(n // 2 or 1))
    return h, algebra.factor_bipartition(n, left)


def cmd_otoc_probe(cfg: dict, threads: int = 1) -> int:
    rng = RngStream(cfg["seed"], "otoc-probe")
    try:
        h, alg = _probe_model(cfg, rng.child("model").gen)
        times = np.linspace(0.0, float(cfg["t_max"]), int(cfg["n_points"]))
        est = scrambling.otoc_curve(alg, h, times, int(cfg["n_samples"]), rng.child("mc").gen,
                                    seed=cfg["seed"], estimator=cfg["estimator"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ss = scrambling.sigma_s(alg, h)
    sl = scrambling.sigma_l_nrc(alg, h)
    cols = ["t", "otoc_mean", "otoc_stderr", "n_samples", "short_time", "sigma_l_nrc"]
    rows = [[e.t, e.mean, e.std_error, e.n_samples, 2.0 / alg.dim * ss**2 * e.t**2, sl]
            for e in est]
    sweep.write_csv(cfg["out"], sweep.header_lines(cfg, cfg["seed"]), cols, rows)
    return 0


# --- verify ----------------------------------------------------------------------

def _check(name, observed, tol, extra=None):
    rec = {"check": name, "observed": float(observed), "tolerance": float(tol),
           "passed": bool(observed <= tol)}
    if extra:
        rec.update(extra)
    return rec


def _random_collinear(rng, d):
    n = int(round(np.log2(d)))
    if rng.uniform() < 0.5:
        return algebra.maximal_abelian(n, haar_unitary(d, rng))
    left = sorted(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
    return algebra.factor_bipartition(n, left, haar_unitary(d, rng))


def metric_fd(alg, k, eps=1e-2) -> float:
    """Richardson-extrapolated D(A, Ad exp(i eps K) A)^2 / eps^2 at eps -> 0."""
    def f(e):
        return algebra.distance_squared(alg, algebra.conjugate(alg, unitary_exp(1j * e * k))) / e**2
    return (4.0 * f(eps / 2) - f(eps)) / 3.0


def verify_metric(rng, count, tol):
    worst = 0.0
    for i in range(count):
        d = (4, 8, 16)[i % 3]
        alg = _random_collinear(rng, d)
        k = random_hermitian(d, rng)
        worst = max(worst, _rel(metric_fd(alg, k), algebra.metric_element(alg, k)))
    return _check("metric_oracle", worst, tol, {"instances": count})


def verify_nrc(rng, n_units):
    h = models.golomb_hamiltonian(4, rng)
    alg = algebra.factor_bipartition(2, [0], haar_unitary(4, rng))
    nrc = scrambling.sigma_l_nrc(alg, h)
    mean, se = scrambling.time_average_mc(alg, h, 1e3, n_samples=n_units, rng=rng,
                                          estimator="conditional")
    return _check("nrc_time_average", abs(nrc - mean), se + 5e-3,
                  {"nrc": nrc, "mc_mean": mean, "mc_stderr": se})


def verify_gradient(rng, tol_fd, tol_routes):
    out = []
    for n in (2, 4):
        d = 2**n
        alg = algebra.factor_bipartition(n, range(n // 2), haar_unitary(d, rng))
        h = random_hermitian(d, rng)
        v = haar_unitary(d, rng)
        z = 1j * random_hermitian(d, rng)
        gamma = optim.euclid_gradient(alg, h, v)
        s = 1e-6
        fd = (optim.objective(alg, h, unitary_exp(s * z) @ v)
              - optim.objective(alg, h, unitary_exp(-s * z) @ v)) / (2 * s)
        an = 2.0 * np.real(np.trace(gamma.conj().T @ z @ v))
        out.append(_check(f"gradient_fd_d{d}", _rel(fd, an), tol_fd))
        routes = np.abs(gamma - optim.euclid_gradient_swap(alg, h, v)).max()
        out.append(_check(f"gradient_routes_d{d}", routes, tol_routes))
    return out


def verify_covariance(rng, tol):
    worst = 0.0
    for _ in range(5):
        alg = algebra.factor_bipartition(3, [0], haar_unitary(8, rng))
        h = models.HamiltonianModel(random_hermitian(8, rng))
        u = haar_unitary(8, rng)
        alg_u, h_u = algebra.conjugate(alg, u), h.rotated(u)
        worst = max(worst,
                    abs(scrambling.sigma_s(alg, h) - scrambling.sigma_s(alg_u, h_u)),
                    abs(scrambling.sigma_l_nrc(alg, h) - scrambling.sigma_l_nrc(alg_u, h_u)))
    return _check("covariance", worst, tol)


def run_checks(cfg: dict) -> list:
    rng = RngStream(cfg["seed"], "verify")
    checks = [verify_metric(rng.child("metric").gen, int(cfg["n_metric"]), cfg["tol_metric"]),
              verify_nrc(rng.child("nrc").gen, int(cfg["nrc_units"]))]
    checks += verify_gradient(rng.child("gradient").gen, cfg["tol_gradient"], cfg["tol_routes"])
    checks.append(verify_covariance(rng.child("covariance").gen, cfg["tol_covariance"]))
    return checks


def cmd_verify(cfg: dict, threads: int = 1) -> int:
    checks = run_checks(cfg)
    report = {"schema_version": sweep.SCHEMA_VERSION, "build": sweep.BUILD_ID, "config": cfg,
              "checks": checks, "passed": all(c["passed"] for c in checks)}
    _write_json(cfg["out"], report)
    for c in checks:
        tag = "PASS" if c["passed"] else "FAIL"
        print(f"{tag} {c['check']}: observed {c['observed']:.3g} (tol {c['tolerance']:.3g})")
    failed = [c["check"] for c in checks if not c["passed"]]
    if failed:
        raise CheckFailure("failing checks: " + ", ".join(failed))
    return 0


COMMANDS = {
    "toy-abelian": cmd_toy_abelian,
    "toy-factor": cmd_toy_factor,
    "sweep-integrability": cmd_sweep_integrability,
    "sweep-disorder": cmd_sweep_disorder,
    "otoc-probe": cmd_otoc_probe,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mereo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", nargs="?", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--threads", type=int,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = args.threads or int(os.environ.get(THREADS_ENV, "1"))
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        cfg = load_config(args.command, args.config, args.seed, args.out)
        t0 = time.perf_counter()
        code = COMMANDS[args.command](cfg, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CheckFailure, np.linalg.LinAlgError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: wrote {cfg['out']} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
