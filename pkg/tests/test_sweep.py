import numpy as np
import pytest

from mereo.algebra import conjugate, distance, factor_bipartition
from mereo.models import ToyParams
from mereo.opspace import haar_unitary
from mereo.sweep import (
    SweepPlan, abelian_toy_susceptibility, convergence_order, disorder_average, disorder_line_plan,
    disorder_sweep, factor_distance_entanglement, header_lines, integrability_plan,
    integrability_sweep, line_sweep, operator_entanglement, read_csv, susceptibility,
    unitary_from_list, unitary_to_list, write_csv,
)


def test_susceptibility_stencil():
    assert susceptibility(0.0, 0.0, 0.1) == 0.0
    assert abs(susceptibility(0.1, 0.3, 0.5) - (0.01 + 0.09) / 0.5) < 1e-15
    assert abs(susceptibility(float("nan"), 0.3, 0.5) - 0.09 / 0.25) < 1e-15
    assert abs(susceptibility(0.2, None, 0.5) - 0.04 / 0.25) < 1e-15
    with pytest.raises(ValueError):
        susceptibility(0.1, 0.1, 0.0)


def test_toy_sweep_converges_at_second_order():
    p = ToyParams([0.7, -0.4, 1.3], [0.5, 0.9, 0.2])
    dhs = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
    errs = []
    for dh in dhs:
        g, ref = abelian_toy_susceptibility(p, [0.3, -0.2, 0.5], [0.1, 0.4, -0.3], dh)
        errs.append(abs(g - ref) / ref)
    assert convergence_order(dhs, errs) >= 2 - 0.05
    g1, _ = abelian_toy_susceptibility(p, [0.3, -0.2, 0.5], [0.1, 0.4, -0.3], 1e-3)
    g2, _ = abelian_toy_susceptibility(p, [0.3, -0.2, 0.5], [0.1, 0.4, -0.3], 2e-3)
    assert abs(g2 - g1) / g1 < 0.01


def test_constant_grid_gives_zero_susceptibility():
    plan = SweepPlan("integrability", 4, [0.3] * 5, [-2, -1, 0, 1, 2], 1e-3, n_steps=2)
    recs = integrability_sweep(plan)
    assert max(r.g for r in recs) < 1e-12
    assert recs[0].endpoint and recs[-1].endpoint and not recs[2].endpoint


def test_integrability_sweep_small():
    plan = integrability_plan(n_sites=4, n_steps=2)
    recs = integrability_sweep(plan)
    assert len(recs) == 5
    assert [r.label for r in recs] == pytest.approx([-0.005, -0.0025, 0.0, 0.0025, 0.005])
    for a, b in zip(recs, recs[1:]):
        assert a.distance_to_next == b.distance_to_prev
    g = np.array([r.g for r in recs])
    assert np.argmax(g) == 2 and np.isfinite(g).all() and (g >= 0).all()


def test_plan_validation():
    with pytest.raises(ValueError):
        integrability_plan(n_sites=5)
    with pytest.raises(ValueError):
        integrability_plan(n_sites=10)
    with pytest.raises(ValueError):
        integrability_plan(n_steps=1)


def test_operator_entanglement_route_matches_distance():
    rng = np.random.default_rng(0)
    for n, left in ((2, [0]), (4, [0, 1]), (3, [2])):
        d = 2**n
        base = factor_bipartition(n, left)
        va, vb = haar_unitary(d, rng), haar_unitary(d, rng)
        ref = distance(conjugate(base, va.conj().T), conjugate(base, vb.conj().T))
        assert abs(factor_distance_entanglement(base, va, vb) - ref) < 1e-8


def test_operator_entanglement_extremes():
    a = haar_unitary(2, 1)
    assert operator_entanglement(np.kron(a, haar_unitary(2, 2)), (2, 2)) < 1e-14
    # the two-qubit swap is maximally entangling, E = 1 - 1/d_A^2
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert abs(operator_entanglement(swap, (2, 2)) - 0.75) < 1e-14


def test_disorder_line_geometry():
    plan = disorder_line_plan(n_sites=4, delta=0.005, n_steps=4, seed=3)
    grid = np.array(plan.grid)
    assert len(grid) == 9
    assert np.abs(grid[4] - 1.05).max() == 0
    for k in range(1, 5):
        assert np.abs(grid[4 + k] + grid[4 - k] - 2.1).max() < 1e-14
    assert plan.labels == pytest.approx([k * 0.005 / 4 for k in range(-4, 5)])
    assert np.abs(grid[-1] - 1.05).max() <= 0.005
    steps = np.linalg.norm(np.diff(grid, axis=0), axis=1)
    assert np.abs(steps - plan.dh).max() < 1e-15
    assert plan.init_policy == "identity"


def test_disorder_streams_are_labelled():
    a = disorder_line_plan(seed=3, realization=0).grid[-1]
    b = disorder_line_plan(seed=3, realization=1).grid[-1]
    c = disorder_line_plan(seed=3, realization=0).grid[-1]
    assert np.array_equal(a, c) and not np.array_equal(a, b)


def test_disorder_zero_delta_and_single_realization():
    _, sweeps, rows = disorder_sweep(n_sites=2, delta=0.0, n_steps=2, n_avg=2)
    assert all(r.g_mean == 0 for r in rows)
    assert len(rows) == 5
    _, sweeps, rows = disorder_sweep(n_sites=2, n_steps=2, n_avg=1, seed=4)
    assert [r.g_mean for r in rows] == [rec.g for rec in sweeps[0]]
    assert all(r.g_stderr == 0 for r in rows)
    with pytest.raises(ValueError):
        disorder_sweep(n_avg=0)


def test_line_sweep_threads_do_not_change_results():
    plan = disorder_line_plan(n_sites=2, n_steps=2, seed=5)
    a = line_sweep(plan, 1)
    b = line_sweep(plan, 2)
    assert [r.g for r in a] == [r.g for r in b]
    rows = disorder_average([a, b])
    assert all(r.g_stderr == 0 for r in rows)


def test_csv_roundtrip_and_header(tmp_path):
    path = tmp_path / "x.csv"
    cfg = {"a": 1, "b": [0.1, 0.2]}
    write_csv(path, header_lines(cfg, 7), ["u", "v", "w"], [[1, 0.1, True], [2, 1 / 3, False]])
    meta, cols, rows = read_csv(path)
    assert meta["schema_version"] == "1" and meta["seed"] == "7"
    assert meta["build"].startswith("mereo-")
    assert cols == ["u", "v", "w"]
    assert rows[1, 1] == 1 / 3 and rows[0, 2] == 1.0


def test_unitary_serialization_roundtrip():
    u = haar_unitary(4, 6)
    assert np.array_equal(unitary_from_list(unitary_to_list(u)), u)
