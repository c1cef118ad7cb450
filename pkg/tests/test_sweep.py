import os
from fractions import Fraction

import numpy as np
import pytest

from dynwind import dynamics, models, sweep
from dynwind.errors import InadmissibleStateError


def small_plan(invariant="dwn-1d", count=7):
    return sweep.SweepPlan(
        family="chiral1d",
        fixed={"J1": 1, "J2": 1},
        axis1=("J0", 0.0, 2.5, count),
        axis2=("delta", 0.0, 2.5, count),
        invariant=invariant,
        seed=11,
    )


def test_plan_validation():
    with pytest.raises(ValueError):
        sweep.SweepPlan("nosuch", {}, ("a", 0, 1, 5), ("b", 0, 1, 5), "dwn-1d")
    with pytest.raises(ValueError):
        sweep.SweepPlan("chiral1d", {}, ("bogus", 0, 1, 5), ("delta", 0, 1, 5),
                        "dwn-1d")
    with pytest.raises(ValueError):
        sweep.SweepPlan("chiral1d", {}, ("J0", 0, 1, 1), ("delta", 0, 1, 5),
                        "dwn-1d")
    with pytest.raises(ValueError):
        sweep.SweepPlan("chiral1d", {"nope": 1}, ("J0", 0, 1, 5),
                        ("delta", 0, 1, 5), "dwn-1d")
    with pytest.raises(ValueError):
        sweep.SweepPlan("chiral1d", {}, ("J0", 0, 1, 5), ("delta", 0, 1, 5),
                        "zak")


def test_plan_roundtrip():
    plan = small_plan()
    assert sweep.SweepPlan.from_doc(plan.to_doc()) == plan


def test_sweep_cells_and_sentinels():
    grid = sweep.run_sweep(small_plan())
    statuses = grid.status_array()
    assert statuses.shape == (7, 7)
    assert np.all(np.isin(statuses, ["ok", "unresolved", "invalid"]))
    # the (0, 0) corner sits on two boundary curves at once
    assert grid.cells[0][0].status == "invalid"
    vals = grid.value_array()
    assert np.nanmax(vals) == 2.0 and np.nanmin(vals) == 0.0


def test_sweep_determinism_across_workers():
    serial = sweep.run_sweep(small_plan(count=5), parallelism=1)
    parallel = sweep.run_sweep(small_plan(count=5), parallelism=2)
    assert serial.cells == parallel.cells


def test_sweep_resume_equals_fresh(tmp_path):
    store = str(tmp_path / "cells.jsonl")
    fresh = sweep.run_sweep(small_plan(count=5))
    partial = sweep.run_sweep(small_plan(count=5), store_path=store)
    assert partial.cells == fresh.cells
    # drop the tail of the store and resume
    with open(store) as fh:
        lines = fh.readlines()
    with open(store, "w") as fh:
        fh.writelines(lines[: len(lines) // 2])
    resumed = sweep.run_sweep(small_plan(count=5), store_path=store)
    assert resumed.cells == fresh.cells


def test_sweep_csv_rows():
    grid = sweep.run_sweep(small_plan(count=3))
    rows = grid.rows()
    assert len(rows) == 9
    assert all(len(r) == 5 for r in rows)


def test_boundary_audit_single_phase():
    plan = sweep.SweepPlan(
        family="chiral1d", fixed={"J1": 1, "J2": 0},
        axis1=("J0", 0.0, 0.4, 5), axis2=("delta", 0.0, 0.3, 5),
        invariant="dwn-1d", seed=1,
    )
    grid = sweep.run_sweep(plan)
    report = sweep.boundary_audit(grid, sweep.named_boundaries("chiral1d",
                                                               {"J2": 0}))
    assert report["changes"] == 0and report["n_violations"] == 0


def test_boundary_audit_flags_bogus_boundaries():
    grid = sweep.run_sweep(small_plan(count=9))
    off = [("nowhere", lambda x, y: x + y - 77.0)]
    report = sweep.boundary_audit(grid, off)
    assert report["changes"] > 0
    assert report["n_violations"] == report["changes"]


def test_named_boundary_sets():
    names = [n for n, _ in sweep.named_boundaries("chiral1d", {"J2": 1})]
    assert len(names) == 6  # |J2| > 0.5 adds the extra pair
    assert len(sweep.named_boundaries("chiral1d", {"J2": 0})) == 4
    assert len(sweep.named_boundaries("qah2d")) == 2
    with pytest.raises(ValueError):
        sweep.named_boundaries("bogus")


def test_convergence_study_decreasing():
    m = models.qah2d(1, 1, 0)
    offs = np.linspace(-np.pi, np.pi, 7, endpoint=False)
    ks = [np.array([kx + 0.13, ky + 0.07]) for kx in offs for ky in offs]
    rows = sweep.convergence_study(m, ks, [10, 80], dt=0.02, plane="xz", seed=5)
    assert rows[0][1] > rows[1][1]


def test_convergence_study_stationary_eigenstate():
    m = models.qah2d(1, 1, 0)
    init = dynamics.InitialState(1.0, 0.0)
    ks = [np.array([0.4, 0.9]), np.array([-1.1, 2.0])]
    rows = sweep.convergence_study(m, ks, [5, 20], plane="xz", init=init)
    for _, err in rows:
        assert err < 1e-9


def test_convergence_study_nonhermitian_rate():
    m = models.chiral1d(1, 1, 0, 0.3)
    ks = [0.6, 1.2, 2.2, -2.0]
    Bs = []
    from dynwind import spectral
    for k in ks:
        Bs.append(abs(spectral.band_energy(*m.evaluate(k)).imag))
    T = 10.0 / min(Bs) + 5
    rows = sweep.convergence_study(m, ks, [T], dt=0.02, plane="yx", seed=3)
    assert rows[0][1] < 1e-3


def test_inadmissible_initial_state_propagates():
    m = models.qah2d(1, 1, 0)
    init = dynamics.InitialState(np.sqrt(0.5), np.sqrt(0.5))
    with pytest.raises(InadmissibleStateError):
        sweep.convergence_study(m, [np.array([0.3, 0.4])], [5], init=init)
