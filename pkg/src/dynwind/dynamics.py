"""Biorthogonal time evolution and long-time-averaged spin textures.

A state prepared at fixed momentum evolves as
|psi(t)> = sum_mu c_mu exp(-i eps_mu t) |phi_mu>, with the associated bra
<psi~(t)| = sum_mu conj(c_mu) exp(i conj(eps_mu) t) <chi_mu|.  Three texture
families are observable: the biorthogonal left-right ratio (complex off the
Hermitian manifold) and the real right-right / left-left expectations of the
states evolved under H and its adjoint.  Amplitudes are rescaled by
exp(-|Im eps| t) throughout, which cancels in every ratio and keeps all
intermediates bounded for arbitrarily long times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissibleStateError
from .spectral import (
    _plane_pair,
    eigensystem,
    stationary_texture_angles,
    wrap_half_pi,
)

__all__ = [
    "InitialState",
    "evolve",
    "texture_at",
    "time_average",
    "AverageReport",
    "TextureSeries",
    "texture_series",
    "averaged_azimuth",
    "DEFAULT_T",
    "DEFAULT_DT",
    "REAL_SPECTRUM_CUTOFF",
]

DEFAULT_T = 80.0
DEFAULT_DT = 0.02
# Non-Hermitian momenta with |Im eps| below this fall back to the analytic
# stationary angle: the dominant-band picture needs a finite decay rate.
REAL_SPECTRUM_CUTOFF = 1e-4

KINDS = ("lr", "rr", "ll")


@dataclass(frozen=True)
class InitialState:
    """Amplitudes on the eigenbasis, |psi(0)> = c_plus |phi_+> + c_minus |phi_->."""

    c_plus: complex
    c_minus: complex
    seed: int | None = None

    @classmethod
    def from_seed(cls, seed, weight_plus=0.7):
        """Reproducible random state with fixed band weights and random phases."""
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        return cls(
            c_plus=np.sqrt(weight_plus) * np.exp(1j * phases[0]),
            c_minus=np.sqrt(1.0 - weight_plus) * np.exp(1j * phases[1]),
            seed=seed if seed is None else int(seed),
        )

    def check_admissible(self, hermitian, margin=1e-6):
        """Raise unless the long-time average converges for this state.

        Hermitian evolution needs unequal band weights; non-Hermitian needs
        both bands populated.
        """
        wp = abs(self.c_plus) ** 2
        wm = abs(self.c_minus) ** 2
        if hermitian:
            if abs(wp - wm) <= margin * max(wp + wm, 1e-300):
                raise InadmissibleStateError(
                    f"Hermitian average undefined for |c+|^2 = |c-|^2 = {wp:.6g}"
                )
        else:
            if wp <= margin or wm <= margin:
                raise InadmissibleStateError(
                    f"non-Hermitian average needs both bands: weights ({wp:.3g}, {wm:.3g})"
                )


def _amplitudes(eig, init, t):
    """Rescaled band amplitudes at times t (array).  Common factor exp(-|B|t)."""
    t = np.asarray(t, dtype=float)
    eps = eig.eps_plus
    shift = abs(eps.imag) * t
    a_plus = init.c_plus * np.exp(-1j * eps * t - shift)
    a_minus = init.c_minus * np.exp(1j * eps * t - shift)
    return a_plus, a_minus


def evolve(eig, init, t):
    """Evolved state and associated state at time(s) t, rescaled by exp(-|B|t).

    Returns (state, assoc) with shape (..., 2).  `assoc` is the ket whose
    conjugate is the associated bra: vdot(assoc, v) gives <psi~(t)|v> up to
    the common rescaling, so all texture ratios are exact.
    """
    a_plus, a_minus = _amplitudes(eig, init, t)
    ap = a_plus[..., None]
    am = a_minus[..., None]
    state = ap * eig.right_plus + am * eig.right_minus
    assoc = ap * np.conj(eig.left_plus) + am * np.conj(eig.left_minus)
    return state, assoc


def _pauli_triplet(bra0, bra1, v0, v1):
    """(sx, sy, sz, overlap) of <bra| sigma |v> for row data (no conjugation)."""
    sx = bra0 * v1 + bra1 * v0
    sy = -1j * bra0 * v1 + 1j * bra1 * v0
    sz = bra0 * v0 - bra1 * v1
    den = bra0 * v0 + bra1 * v1
    return sx, sy, sz, den


def _textures(eig, init, t, kind):
    """Normalized texture samples at times t. Returns (values (..., 3), valid mask)."""
    state, assoc = evolve(eig, init, t)
    v0, v1 = state[..., 0], state[..., 1]
    w0, w1 = assoc[..., 0], assoc[..., 1]
    if kind == "lr":
        sx, sy, sz, den = _pauli_triplet(np.conj(w0), np.conj(w1), v0, v1)
        mag = np.abs(v0) ** 2 + np.abs(v1) ** 2
        valid = np.abs(den) > 1e-12 * np.maximum(mag, 1e-300)
    elif kind == "rr":
        u0, u1 = v0, v1
        sx, sy, sz, den = _pauli_triplet(np.conj(u0), np.conj(u1), u0, u1)
        valid = den.real > 1e-300
    elif kind == "ll":
        u0, u1 = w0, w1
        sx, sy, sz, den = _pauli_triplet(np.conj(u0), np.conj(u1), u0, u1)
        valid = den.real > 1e-300
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.stack([sx, sy, sz], axis=-1) / den[..., None]
    if kind in ("rr", "ll"):
        vals = vals.real
    return vals, valid


def texture_at(eig, init, t, kind="lr"):
    """Spin texture (sx, sy, sz) at a single time; complex for kind 'lr'."""
    vals, valid = _textures(eig, init, np.asarray(float(t)), kind)
    if not bool(valid):
        raise ArithmeticError(f"vanishing denominator at t = {t}")
    return tuple(vals)


@dataclass(frozen=True)
class AverageReport:
    """Trapezoidal time average of one texture family with convergence data."""

    mean: np.ndarray
    T: float
    dt: float
    t_start: float
    drift: float
    n_samples: int
    n_skipped: int
    slow_convergence: bool


def _trapezoid_mean(values, times, valid):
    """Trapezoid average per component, skipping flagged samples."""
    if np.all(valid):
        span = times[-1] - times[0]
        return np.trapezoid(values, times, axis=0) / span
    keep = np.where(valid)[0]
    if keep.size < 2:
        raise ArithmeticError("too few valid samples for a time average")
    tt = times[keep]
    span = tt[-1] - tt[0]
    return np.trapezoid(values[keep], tt, axis=0) / span


def time_average(eig, init, kind="lr", T=DEFAULT_T, dt=DEFAULT_DT, t_start=0.0,
                 hermitian=None):
    """Long-time average of a texture family over [t_start, T].

    The step is clamped to min(dt, 0.05/|eps|, span/400) so oscillations at
    frequency 2|eps| are always resolved.  The drift field compares the mean
    against the half-span average; self-orthogonality instants are skipped
    and counted rather than interpolated.
    """
    if hermitian is None:
        hermitian = abs(eig.eps_plus.imag) == 0.0 and all(
            abs(complex(c).imag) < 1e-14 for c in eig.h
        )
    init.check_admissible(hermitian)
    span = float(T) - float(t_start)
    if span <= 0:
        raise ValueError("need T > t_start")
    dt_eff = min(float(dt), 0.05 / max(abs(eig.eps_plus), 1e-12), span / 400.0)
    n = int(np.ceil(span / dt_eff))
    times = np.linspace(float(t_start), float(T), n + 1)
    values, valid = _textures(eig, init, times, kind)
    mean = _trapezoid_mean(values, times, valid)
    half = n // 2 + 1
    mean_half = _trapezoid_mean(values[:half], times[:half], valid[:half])
    drift = float(np.max(np.abs(mean - mean_half)))
    n_skipped = int(np.size(valid) - np.count_nonzero(valid))
    slow = (not hermitian) and abs(eig.eps_plus.imag) < REAL_SPECTRUM_CUTOFF
    return AverageReport(
        mean=mean,
        T=float(T),
        dt=float(times[1] - times[0]),
        t_start=float(t_start),
        drift=drift,
        n_samples=n + 1,
        n_skipped=n_skipped,
        slow_convergence=bool(slow or drift > 0.5),
    )


@dataclass(frozen=True)
class TextureSeries:
    """Sampled time evolution of one texture family at fixed momentum."""

    times: np.ndarray
    values: np.ndarray
    kind: str

    def rows(self):
        """CSV rows: (t, sx_re, sx_im, ...) for 'lr', (t, sx, sy, sz) otherwise."""
        out = []
        for t, v in zip(self.times, self.values):
            if self.kind == "lr":
                out.append(
                    (t, v[0].real, v[0].imag, v[1].real, v[1].imag, v[2].real, v[2].imag)
                )
            else:
                out.append((t, v[0], v[1], v[2]))
        return out

    def header(self):
        if self.kind == "lr":
            return ("t", "sx_re", "sx_im", "sy_re", "sy_im", "sz_re", "sz_im")
        return ("t", "sx", "sy", "sz")


def texture_series(model, k, init, kind="lr", T=DEFAULT_T, dt=DEFAULT_DT):
    """Sample the texture evolution of a model at one momentum."""
    h = tuple(complex(c) for c in model.evaluate(k))
    eig = eigensystem(h)
    init.check_admissible(model.is_hermitian())
    n = int(np.ceil(float(T) / float(dt)))
    times = np.linspace(0.0, float(T), n + 1)
    values, valid = _textures(eig, init, times, kind)
    values = np.where(valid[..., None], values, np.nan)
    return TextureSeries(times=times, values=values, kind=kind)


def averaged_azimuth(model, k, plane, init, kind="lr", T=DEFAULT_T, dt=DEFAULT_DT,
                     t_start=0.0):
    """Mod-pi azimuthal angle of the time-averaged textures at one momentum.

    Returns (angle, info).  For 'lr' the angle is the real part extracted from
    the complex averaged ratio; 'rr'/'ll' take the plane angle of the real
    averaged components of the band-coherent texture family: where Im eps > 0
    the dominant band differs from the labeling anchor, and the measured
    right-right curve continues the left-left one (and vice versa), so the two
    measured kinds are swapped there.  Non-Hermitian momenta with a nearly
    real spectrum
    (|Im eps| < REAL_SPECTRUM_CUTOFF) use the analytic stationary angle and
    set info['analytic_fallback'].
    """
    j, i = _plane_pair(plane)
    hx, hy, hz = (complex(c) for c in model.evaluate(k))
    hermitian = model.is_hermitian()
    init.check_admissible(hermitian)
    eig = eigensystem((hx, hy, hz))
    info = {
        "k": np.asarray(k, dtype=float).tolist(),
        "B": eig.eps_plus.imag,
        "analytic_fallback": False,
        "singular": False,
    }
    if (not hermitian) and abs(eig.eps_plus.imag) < REAL_SPECTRUM_CUTOFF:
        lr, rr, ll, _band = stationary_texture_angles(hx, hy, hz, (j, i))
        info["analytic_fallback"] = True
        info["slow_convergence"] = True
        return float({"lr": lr, "rr": rr, "ll": ll}[kind]), info
    measured_kind = kind
    if kind in ("rr", "ll") and eig.eps_plus.imag > 0.0:
        measured_kind = "ll" if kind == "rr" else "rr"
        info["kind_swapped"] = True
    report = time_average(eig, init, kind=measured_kind, T=T, dt=dt, t_start=t_start,
                          hermitian=hermitian)
    comp = {"x": 0, "y": 1, "z": 2}
    s_j = report.mean[comp[j]]
    s_i = report.mean[comp[i]]
    info["drift"] = report.drift
    info["n_skipped"] = report.n_skipped
    info["slow_convergence"] = report.slow_convergence
    if abs(s_j) < 1e-9 and abs(s_i) < 1e-9:
        info["singular"] = True
    if kind == "lr":
        ratio = (s_i + 1j * s_j) / (s_i - 1j * s_j)
        angle = 0.5 * float(np.angle(ratio))
    else:
        angle = float(wrap_half_pi(np.arctan2(s_j.real, s_i.real)))
    return angle, info
