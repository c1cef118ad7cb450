import numpy as np
import pytest

from dynwind import dynamics, models, spectral
from dynwind.errors import InadmissibleStateError


def nh_point(rng, b_min=0.05, b_max=None, eps_min=0.3):
    """Random complex h with a usable decay rate Im eps."""
    while True:
        h = tuple(complex(c) for c in rng.normal(size=3) + 1j * rng.normal(size=3))
        eps = complex(spectral.band_energy(*h))
        if abs(eps) < eps_min or abs(eps.imag) < b_min:
            continue
        if b_max is not None and abs(eps.imag) > b_max:
            continue
        return h, eps


def test_initial_state_seeding_and_weights():
    a = dynamics.InitialState.from_seed(5)
    b = dynamics.InitialState.from_seed(5)
    c = dynamics.InitialState.from_seed(6)
    assert a == b
    assert a != c
    assert abs(a.c_plus) ** 2 == pytest.approx(0.7)
    assert abs(a.c_minus) ** 2 == pytest.approx(0.3)


def test_admissibility_rules():
    balanced = dynamics.InitialState(np.sqrt(0.5), np.sqrt(0.5))
    with pytest.raises(InadmissibleStateError):
        balanced.check_admissible(hermitian=True)
    balanced.check_admissible(hermitian=False)  # fine off the Hermitian manifold
    single = dynamics.InitialState(1.0, 0.0)
    single.check_admissible(hermitian=True)
    with pytest.raises(InadmissibleStateError):
        single.check_admissible(hermitian=False)


def test_evolution_identity_at_zero():
    eig = spectral.eigensystem((0.3, 0.8, -0.4))
    init = dynamics.InitialState.from_seed(1)
    state, assoc = dynamics.evolve(eig, init, 0.0)
    expect = init.c_plus * eig.right_plus + init.c_minus * eig.right_minus
    assert np.allclose(state, expect, atol=1e-12)
    expect_assoc = init.c_plus * np.conj(eig.left_plus) + init.c_minus * np.conj(
        eig.left_minus
    )
    assert np.allclose(assoc, expect_assoc, atol=1e-12)


def test_hermitian_period_returns_minus_state():
    h = (0.7, 0.2, 0.5)
    eig = spectral.eigensystem(h)
    init = dynamics.InitialState.from_seed(2)
    t = np.pi / eig.eps_plus.real
    state, _ = dynamics.evolve(eig, init, t)
    state0, _ = dynamics.evolve(eig, init, 0.0)
    assert np.allclose(state, -state0, atol=1e-10)
    # all three textures return to their t=0 values
    tex0 = dynamics.texture_at(eig, init, 0.0, "lr")
    tex1 = dynamics.texture_at(eig, init, t, "lr")
    assert np.allclose(tex0, tex1, atol=1e-10)


def test_hermitian_texture_periodicity_series():
    m = models.chiral1d(0.5, 1, 0, 0)
    k = 0.9
    eps = float(spectral.band_energy(*m.evaluate(k)).real)
    init = dynamics.InitialState.from_seed(3)
    period = np.pi / eps
    series = dynamics.texture_series(m, k, init, kind="lr", T=4 * period, dt=period / 64)
    vals = series.values
    assert np.max(np.abs(vals.imag)) < 1e-10  # Hermitian LR textures are real
    shifted = vals[64:]
    assert np.max(np.abs(shifted - vals[: len(shifted)])) < 1e-8


def test_stationary_eigenstate_texture():
    eig = spectral.eigensystem((1, 0, 0))
    init = dynamics.InitialState(1.0, 0.0)
    for t in (0.0, 0.7, 13.1):
        sx, sy, sz = dynamics.texture_at(eig, init, t, "lr")
        assert sx == pytest.approx(1.0, abs=1e-12)
        assert abs(sy) < 1e-12 and abs(sz) < 1e-12


def test_nonhermitian_rr_locks_to_dominant_band():
    rng = np.random.default_rng(20)
    for _ in range(20):
        h, eps = nh_point(rng, b_min=0.1)
        eig = spectral.eigensystem(h)
        init = dynamics.InitialState.from_seed(int(rng.integers(1 << 31)))
        phi = eig.right_plus if eps.imag > 0 else eig.right_minus
        target = []
        for pauli in (
            np.array([[0, 1], [1, 0]]),
            np.array([[0, -1j], [1j, 0]]),
            np.array([[1, 0], [0, -1]]),
        ):
            target.append((np.conj(phi) @ (pauli @ phi)).real / (np.conj(phi) @ phi).real)
        got = dynamics.texture_at(eig, init, 200.0, "rr")
        assert np.allclose(got, target, atol=1e-6)


def test_lr_average_matches_dominant_band_ratio():
    # Im eps > 0 makes the long-time LR texture equal h_j / eps componentwise
    rng = np.random.default_rng(21)
    for _ in range(10):
        h, eps = nh_point(rng, b_min=0.15, b_max=0.25)
        if eps.imag < 0:
            h = tuple(np.conj(c) for c in h)
            eps = np.conj(eps)
        eig = spectral.eigensystem(h)
        init = dynamics.InitialState.from_seed(int(rng.integers(1 << 31)))
        report = dynamics.time_average(eig, init, "lr", T=80.0, dt=0.02,
                                       t_start=40.0, hermitian=False)
        target = np.array(h) / eig.eps_plus
        assert np.max(np.abs(report.mean - target)) < 1e-3
        # the plain [0, T] average carries the slow 1/(2BT) transient
        plain = dynamics.time_average(eig, init, "lr", T=80.0, dt=0.02,
                                      hermitian=False)
        assert np.max(np.abs(plain.mean - target)) < 0.05


def test_hermitian_average_weighted_band_difference():
    h = (1, 0, 0)
    eig = spectral.eigensystem(h)
    init = dynamics.InitialState(1.0, 0.0)
    report = dynamics.time_average(eig, init, "lr", T=40.0, dt=0.02)
    assert report.mean[0] == pytest.approx(1.0, abs=1e-12)
    assert report.drift < 1e-12

    init2 = dynamics.InitialState.from_seed(4)
    eig2 = spectral.eigensystem((0.6, 0.8, 0.3))
    report2 = dynamics.time_average(eig2, init2, "lr", T=300.0, dt=0.02)
    weight = abs(init2.c_plus) ** 2 - abs(init2.c_minus) ** 2
    target = weight * np.array([0.6, 0.8, 0.3]) / eig2.eps_plus.real
    assert np.max(np.abs(report2.mean - target)) < 2e-3


def test_ratio_law_for_averaged_components():
    # averaged sigma_j / averaged sigma_i converges to h_j / h_i
    rng = np.random.default_rng(22)
    for _ in range(200):
        h, eps = nh_point(rng, b_min=0.05)
        eig = spectral.eigensystem(h)
        init = dynamics.InitialState.from_seed(int(rng.integers(1 << 31)))
        T = 50.0 / abs(eps.imag)
        report = dynamics.time_average(eig, init, "lr", T=T, dt=0.05,
                                       t_start=T / 2, hermitian=False)
        ratio = report.mean[1] / report.mean[0]
        target = h[1] / h[0]
        assert abs(ratio - target) / (1 + abs(target)) < 1e-3


def test_drift_shrinks_with_horizon():
    rng = np.random.default_rng(23)
    shrunk = 0
    trials = 25
    for _ in range(trials):
        h, _ = nh_point(rng, b_min=0.02)
        eig = spectral.eigensystem(h)
        init = dynamics.InitialState.from_seed(int(rng.integers(1 << 31)))
        short = dynamics.time_average(eig, init, "lr", T=40, dt=0.05, hermitian=False)
        long = dynamics.time_average(eig, init, "lr", T=80, dt=0.05, hermitian=False)
        shrunk += long.drift < short.drift
    assert shrunk > trials * 0.7  # statistical, not pointwise


def test_overflow_safety_long_horizon():
    h = (1 + 0.2j, 0.5, -0.3)  # genuinely complex spectrum
    eig = spectral.eigensystem(h)
    B = abs(eig.eps_plus.imag)
    init = dynamics.InitialState.from_seed(5)
    t = 700.0 / B
    state, assoc = dynamics.evolve(eig, init, t)
    assert np.max(np.abs(state)) < 1e3
    assert np.max(np.abs(assoc)) < 1e3
    vals = dynamics.texture_at(eig, init, t, "rr")
    assert np.all(np.isfinite(vals))


def test_dt_clamp_keeps_oscillations_resolved():
    eig = spectral.eigensystem((3.0, 0, 0))  # |eps| = 3 > 0.05/0.02
    init = dynamics.InitialState.from_seed(6)
    report = dynamics.time_average(eig, init, "lr", T=10.0, dt=0.02)
    assert report.dt <= 0.05 / 3.0 + 1e-12


def test_averaged_azimuth_hermitian_point():
    # Hermitian averages converge like 1/(2 eps T); the angle error at this
    # point is ~4e-3 at T=200 and drops below 1e-3 by T=1000
    m = models.chiral1d(0.5, 1, 0, 0)
    init = dynamics.InitialState.from_seed(7)
    target = np.arctan(1 / 0.5)
    angle, info = dynamics.averaged_azimuth(m, np.pi / 2, ("y", "x"), init, T=200.0)
    assert abs(spectral.wrap_mod(angle - target, np.pi)) < 5e-3
    assert not info["analytic_fallback"]
    angle, _ = dynamics.averaged_azimuth(m, np.pi / 2, ("y", "x"), init, T=1000.0)
    assert abs(spectral.wrap_mod(angle - target, np.pi)) < 1e-3


def test_averaged_azimuth_fallback_near_real_spectrum():
    # k = 0 of this chain has exactly real eps despite delta != 0
    m = models.chiral1d(1.5, 1, 1, 0.2)
    init = dynamics.InitialState.from_seed(8)
    angle, info = dynamics.averaged_azimuth(m, 0.0, ("y", "x"), init)
    assert info["analytic_fallback"]
    hx, hy, hz = m.evaluate(0.0)
    lr, _, _, _ = spectral.stationary_texture_angles(hx, hy, hz, ("y", "x"))
    assert angle == pytest.approx(float(lr))


def test_rr_ll_kind_swap_tracks_dominant_band():
    m = models.nonchiral1d(1, 1, 0, 0.3, 0.5)
    init = dynamics.InitialState.from_seed(9)
    # B < 0 at k = +0.5: no swap for rr; B > 0 at k = -0.5: swapped
    _, info_neg = dynamics.averaged_azimuth(m, -0.5, ("y", "x"), init, kind="rr", T=60)
    _, info_pos = dynamics.averaged_azimuth(m, 0.5, ("y", "x"), init, kind="rr", T=60)
    assert info_neg["B"] > 0 and info_neg.get("kind_swapped", False)
    assert info_pos["B"] < 0 and "kind_swapped" not in info_pos


def test_texture_series_csv_shapes():
    m = models.chiral1d(0.5, 1, 0, 0)
    init = dynamics.InitialState.from_seed(10)
    lr = dynamics.texture_series(m, 0.3, init, kind="lr", T=1.0, dt=0.5)
    assert lr.header() == ("t", "sx_re", "sx_im", "sy_re", "sy_im", "sz_re", "sz_im")
    assert len(lr.rows()) == 3 and len(lr.rows()[0]) == 7
    rr = dynamics.texture_series(m, 0.3, init, kind="rr", T=1.0, dt=0.5)
    assert rr.header() == ("t", "sx", "sy", "sz")
    assert len(rr.rows()[0]) == 4
