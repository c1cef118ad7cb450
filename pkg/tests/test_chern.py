from fractions import Fraction

import numpy as np
import pytest

from dynwind import chern, models, winding
from dynwind.errors import ClassificationError, DegenerateAxisError, SeparationError


def trivial_gapped_model(mass=0.7):
    return models.Model(
        2,
        models.FourierSeries.zero(2),
        models.FourierSeries.zero(2),
        models.FourierSeries.constant(mass, 2),
        label="gapped trivial",
    )


def test_find_sps_hermitian_qah():
    sps = chern.find_sps(models.qah2d(1, 1, 0), "y")
    assert len(sps) == 2
    located = sorted((tuple(sp.k0), sp.pole) for sp in sps)
    (k_south, pole_south), (k_north, pole_north) = located
    assert np.allclose(k_south, (0, -np.pi / 2), atol=1e-6)
    assert np.allclose(k_north, (0, np.pi / 2), atol=1e-6)
    assert pole_south == -1 and pole_north == 1
    scale2 = models.qah2d(1, 1, 0).scale() ** 2
    for sp in sps:
        assert sp.residual_h < 1e-10 * scale2
        # Hermitian singularities zero both plane components individually
        m = models.qah2d(1, 1, 0)
        hx, _, hz = m.evaluate(sp.k0)
        assert abs(hx) < 1e-10 and abs(hz) < 1e-10


def test_find_sps_nonhermitian_split():
    sps = chern.find_sps(models.qah2d(1, 1, 0.5), "y")
    assert len(sps) == 4
    assert sum(sp.pole == 1 for sp in sps) == 2
    assert sum(sp.pole == -1 for sp in sps) == 2


def test_find_sps_trivial_model():
    with pytest.raises(DegenerateAxisError):
        chern.find_sps(trivial_gapped_model(), "z")
    assert chern.find_sps(trivial_gapped_model(), "y") == []


def test_classification_error_when_axis_component_vanishes():
    # hx = 0 identically but the axis-x singularity set is nonempty
    m = models.Model(
        2,
        models.FourierSeries.zero(2),
        models.FourierSeries.sine(1.0, (0, 1)),
        models.FourierSeries.constant(1.0, 2)
        + models.FourierSeries.cosine(-1.0, (1, 0))
        + models.FourierSeries.cosine(-1.0, (0, 1)),
        label="axis-degenerate",
    )
    with pytest.raises(ClassificationError):
        chern.find_sps(m, "x")


def test_loop_windings_around_poles():
    m = models.qah2d(1, 1, 0)
    north = chern.loop_dwn(m, (0, np.pi / 2), "y")
    south = chern.loop_dwn(m, (0, -np.pi / 2), "y")
    assert north.snapped == 1 and north.status == "ok"
    assert south.snapped == -1 and south.status == "ok"
    regular = chern.loop_dwn(m, (1.3, 2.1), "y", radius=0.15)
    assert regular.snapped == 0


def test_loop_windings_around_eps_are_half():
    m = models.qah2d(1, 1, 0.5)
    sps = chern.find_sps(m, "y")
    for sp in sps:
        res = chern.loop_dwn(m, sp.k0, "y", others=[o.k0 for o in sps
                                                    if o is not sp])
        assert abs(res.snapped) == Fraction(1, 2)
        assert res.snapped == sp.pole * Fraction(1, 2)


def test_loop_radius_independence():
    m = models.qah2d(1, 1, 0)
    snaps = {chern.loop_dwn(m, (0, np.pi / 2), "y", radius=r).snapped
             for r in (0.05, 0.1, 0.2)}
    assert snaps == {Fraction(1)}


def test_loop_separation_guard():
    m = models.qah2d(1, 1, 0)
    with pytest.raises(SeparationError):
        chern.loop_dwn(m, (0, np.pi / 2), "y",
                       others=[np.array([0, np.pi / 2 + 1e-4])])


def test_chern_qah_hermitian():
    res = chern.chern_dwn(models.qah2d(1, 1, 0), "y")
    assert res.value == 1 and res.status == "ok"
    oracle = chern.chern_lattice_oracle(models.qah2d(1, 1, 0))
    assert oracle.value == 1 and oracle.status == "ok"


def test_chern_qah_nonhermitian():
    res = chern.chern_dwn(models.qah2d(1, 1, 0.5), "y")
    assert res.value == 1 and len(res.sps) == 4
    oracle = chern.chern_lattice_oracle(models.qah2d(1, 1, 0.5))
    assert oracle.value == 1


def test_chern_trivial_phase():
    assert chern.chern_dwn(models.qah2d(3, 1, 0), "y").value == 0
    assert chern.chern_lattice_oracle(models.qah2d(3, 1, 0)).value == 0


def test_largechern_consistent_between_methods():
    # note: with the orientation fixed by the qah2d conventions this model's
    # Chern number is -3; both routes agree exactly
    for delta, n_sps in ((0.0, 6), (0.1, 12)):
        m = models.largechern2d(0.2, 0.2, 1, 0.5, delta)
        res = chern.chern_dwn(m, "y")
        assert res.status == "ok"
        assert abs(res.value) == 3
        assert len(res.sps) == n_sps
        oracle = chern.chern_lattice_oracle(m)
        assert oracle.value == res.value


def test_ep_splitting_bookkeeping():
    base = chern.chern_dwn(models.qah2d(1, 1, 0), "y")
    base_count = len(base.sps)
    base_magnitudes = {abs(sp.w_loop.snapped) for sp in base.sps}
    assert base_magnitudes == {Fraction(1)}
    for delta in (0.2, 0.5, 0.8):
        res = chern.chern_dwn(models.qah2d(1, 1, delta), "y")
        assert res.status == "ok" and res.value == base.value
        assert len(res.sps) == 2 * base_count
        assert {abs(sp.w_loop.snapped) for sp in res.sps} == {Fraction(1, 2)}


def test_band_touchings_reported_invalid():
    res = chern.chern_dwn(models.qah2d(2, 1, 0), "y")
    assert res.status == "invalid"
    oracle = chern.chern_lattice_oracle(models.qah2d(2, 1, 0))
    assert oracle.status == "invalid"
    res = chern.chern_dwn(models.qah2d(1, 1, 1.1), "y")
    assert res.status == "invalid"


def test_branch_wall_unresolved_but_oracle_resolves():
    # gapped, yet eps^2 crosses the negative real axis: the pole-sum assembly
    # is unsound there while the continued-band oracle still quantizes
    m = models.qah2d(1.5, 1, 1.1)
    res = chern.chern_dwn(m, "y")
    assert res.status == "unresolved"
    assert res.diagnostics.get("branch_wall")
    oracle = chern.chern_lattice_oracle(m)
    assert oracle.status == "ok" and oracle.value == 0


def test_oracle_grid_stability():
    m = models.largechern2d(0.2, 0.2, 1, 0.5, 0.1)
    a = chern.chern_lattice_oracle(m, grid=(128, 128))
    b = chern.chern_lattice_oracle(m, grid=(256, 256))
    assert a.value == b.value


def test_axis_sweep_consistency():
    for m in (models.qah2d(1, 1, 0), models.qah2d(1, 1, 0.5),
              models.largechern2d(0.2, 0.2, 1, 0.5, 0.1)):
        report = chern.axis_sweep_check(m)
        assert report["consistent"]
        assert len(report["values"]) >= 2
    report = chern.axis_sweep_check(trivial_gapped_model())
    assert report["per_axis"]["z"]["status"] == "skipped"
    assert report["consistent"] and set(report["values"]) == {0}


def test_axis_sp_sets_differ_but_value_agrees():
    report = chern.axis_sweep_check(models.qah2d(1, 1, 0))
    sps_y = {tuple(np.round(k, 6)) for k in report["per_axis"]["y"]["sps"]}
    sps_z = {tuple(np.round(k, 6)) for k in report["per_axis"]["z"]["sps"]}
    assert sps_y != sps_z


def test_dwn_loop_with_dynamic_source():
    m = models.qah2d(1, 1, 0.5)
    sps = chern.find_sps(m, "y")
    north = next(sp for sp in sps if sp.pole == 1)
    res = chern.loop_dwn(m, north.k0, "y", source="dynamic", kind="lr",
                         n_samples=96, others=[o.k0 for o in sps if o is not north])
    assert res.snapped == Fraction(1, 2)


def test_gap_closure_search():
    assert chern.band_gap_closures(models.qah2d(1, 1, 0)) == []
    closures = chern.band_gap_closures(models.qah2d(2, 1, 0))
    assert len(closures) >= 1
    assert any(np.allclose(z, (0, 0), atol=1e-2) for z in closures)
    closures_nh = chern.band_gap_closures(models.qah2d(1, 1, 1.1))
    assert closures_nh
