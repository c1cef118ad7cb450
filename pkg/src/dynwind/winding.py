"""Angle profiles on closed momentum loops and the winding numbers they carry.

Azimuthal angles are mod-pi classes: half-integer windings exist only at that
granularity, and the observable non-Hermitian angles are invariant under a
simultaneous sign flip of both plane components.  Unwrapping picks the branch
nearest the previous sample and demands steps below pi/4, safely inside the
pi/2 branch ambiguity; profiles that fail are refined dyadically and finally
rejected rather than guessed at.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import DEFAULT_DT, DEFAULT_T, InitialState, averaged_azimuth
from .errors import EPOnLoopError, ProfileInvalidError
from .models import reduce_momentum
from .spectral import _plane_pair, band_energy, stationary_texture_angles, wrap_mod

__all__ = [
    "AngleProfile",
    "angle_profile",
    "WindingResult",
    "dwn",
    "dwn_combined",
    "conventional_winding",
    "w_total",
    "snap",
    "MAX_STEP",
    "SNAP_TOL",
    "DEFAULT_SEED",
]

MAX_STEP = np.pi / 4.0
SNAP_TOL = 0.05
DEFAULT_SEED = 7
_REFINE_LIMIT = 6


@dataclass(frozen=True)
class AngleProfile:
    """Sampled mod-pi angles along a closed loop with their unwrapped lift.

    The last sample repeats the first momentum (shifted by a full period), so
    `closure` is a multiple of pi up to floating noise on a valid profile.
    """

    path: np.ndarray
    raw: np.ndarray
    unwrapped: np.ndarray
    max_step: float
    refinements: int
    source: str
    kind: str
    fallback_count: int = 0

    @property
    def closure(self):
        return float(self.unwrapped[-1] - self.unwrapped[0])


def _unwrap_mod_pi(raw):
    """Lift mod-pi samples to a continuous profile, nearest branch each step."""
    unwrapped = np.empty_like(raw)
    unwrapped[0] = raw[0]
    steps = wrap_mod(np.diff(raw), np.pi)
    unwrapped[1:] = raw[0] + np.cumsum(steps)
    max_step = float(np.max(np.abs(steps))) if steps.size else 0.0
    return unwrapped, max_step


def _default_loop(n):
    """Uniform closed 1D loop from -pi to pi, endpoint repeated."""
    return np.linspace(-np.pi, np.pi, n + 1)


def _raw_angles(model, plane, ks, source, kind, init, T, dt):
    # canonical momenta make the repeated loop endpoint bit-identical to the
    # start, so profile closure is an exact multiple of pi for every source
    ks = reduce_momentum(ks)
    if source == "analytic":
        hx, hy, hz = model.evaluate(ks)
        lr, rr, ll, _band = stationary_texture_angles(hx, hy, hz, plane)
        vals = np.asarray({"lr": lr, "rr": rr, "ll": ll}[kind], dtype=float)
        comps = {"x": hx, "y": hy, "z": hz}
        h_j, h_i = comps[plane[0]], comps[plane[1]]
        # both plane components vanishing is a pinch of the angle field;
        # the mod-pi value there is float noise, not data
        pinch = np.abs(h_j) ** 2 + np.abs(h_i) ** 2 <= (1e-9 * model.scale()) ** 2
        vals = np.where(pinch, np.nan, vals)
        return vals, 0
    if source == "dynamic":
        vals = np.empty(len(ks), dtype=float)
        fallbacks = 0
        for idx, k in enumerate(ks):
            angle, info = averaged_azimuth(model, k, plane, init, kind=kind, T=T, dt=dt)
            vals[idx] = angle
            fallbacks += bool(info["analytic_fallback"])
        return vals, fallbacks
    raise ValueError(f"source must be 'analytic' or 'dynamic', got {source!r}")


def angle_profile(model, plane, n_samples=256, source="analytic", kind="lr",
                  init=None, T=DEFAULT_T, dt=DEFAULT_DT, path=None,
                  max_refine=_REFINE_LIMIT):
    """Build a valid angle profile on a closed loop, refining until steps < pi/4.

    `path` maps loop parameters in [0, 1] to momenta (vectorized); the default
    is the full 1D zone.  Dynamic sources need an admissible `init` (a seeded
    default is created when omitted).
    """
    if source == "dynamic" and init is None:
        init = InitialState.from_seed(DEFAULT_SEED)
    n = max(int(n_samples), 64)
    plane = _plane_pair(plane)
    refinements = 0
    while True:
        if path is None:
            ks = _default_loop(n)
        else:
            ks = np.asarray(path(np.linspace(0.0, 1.0, n + 1)))
        raw, fallbacks = _raw_angles(model, plane, ks, source, kind, init, T, dt)
        if not np.all(np.isfinite(raw)):
            bad = int(np.argmax(~np.isfinite(raw)))
            raise ProfileInvalidError(
                f"angle undefined at k = {ks[bad]!r} (singular plane on the loop)",
                momentum=ks[bad],
            )
        unwrapped, max_step = _unwrap_mod_pi(raw)
        if max_step < MAX_STEP:
            return AngleProfile(
                path=ks, raw=raw, unwrapped=unwrapped, max_step=max_step,
                refinements=refinements, source=source, kind=kind,
                fallback_count=fallbacks,
            )
        if refinements >= max_refine:
            worst = int(np.argmax(np.abs(wrap_mod(np.diff(raw), np.pi))))
            raise ProfileInvalidError(
                f"profile not resolvable: step {max_step:.3f} >= pi/4 near "
                f"k = {ks[worst]!r} after {refinements} refinements",
                momentum=ks[worst],
            )
        n *= 2
        refinements += 1


def snap(raw_value, denominator):
    """Nearest rational with the given denominator and the snapping residual."""
    n = int(np.round(raw_value * denominator))
    frac = Fraction(n, denominator)
    return frac, abs(float(raw_value) - float(frac))


@dataclass(frozen=True)
class WindingResult:
    """A winding value with its snapped rational and resolution status."""

    raw_value: float
    snapped: Fraction
    residual: float
    method: str
    status: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def value(self):
        """The snapped rational; None when unresolved."""
        return self.snapped if self.status == "ok" else None


def _result(raw_value, denominator, method, diagnostics):
    frac, residual = snap(raw_value, denominator)
    status = "ok" if residual < SNAP_TOL else "unresolved"
    return WindingResult(
        raw_value=float(raw_value), snapped=frac, residual=residual,
        method=method, status=status, diagnostics=diagnostics,
    )


def dwn(model, plane="yx", n_samples=256, source="analytic", kind="lr",
        init=None, T=DEFAULT_T, dt=DEFAULT_DT, path=None, seed=DEFAULT_SEED):
    """Winding number of the averaged-texture azimuth around a closed loop.

    Snapped to the nearest half-integer; residuals above SNAP_TOL come back
    `unresolved` instead of being rounded.
    """
    if source == "dynamic" and init is None:
        init = InitialState.from_seed(seed)
    profile = angle_profile(
        model, plane, n_samples=n_samples, source=source, kind=kind,
        init=init, T=T, dt=dt, path=path,
    )
    raw_value = profile.closure / (2.0 * np.pi)
    method = {"lr": "dwn-lr", "rr": "dwn-rr", "ll": "dwn-ll"}[kind]
    diagnostics = {
        "n_samples": len(profile.path) - 1,
        "refinements": profile.refinements,
        "max_step": profile.max_step,
        "source": source,
        "kind": kind,
        "branch": "principal",
        "fallback_count": profile.fallback_count,
    }
    if source == "dynamic":
        diagnostics.update({"T": T, "dt": dt, "seed": init.seed})
    return _result(raw_value, 2, method, diagnostics)


def dwn_combined(model, plane="yx", n_samples=256, source="analytic",
                 init=None, T=DEFAULT_T, dt=DEFAULT_DT, path=None, seed=DEFAULT_SEED):
    """Half the sum of the right-right and left-left windings.

    This is the observable route to the left-right winding when the spectrum
    is complex: only same-state textures are real.
    """
    parts = {}
    for kind in ("rr", "ll"):
        parts[kind] = dwn(
            model, plane, n_samples=n_samples, source=source, kind=kind,
            init=init, T=T, dt=dt, path=path, seed=seed,
        )
    raw_value = 0.5 * (parts["rr"].raw_value + parts["ll"].raw_value)
    diagnostics = {
        "w_rr": parts["rr"].raw_value,
        "w_ll": parts["ll"].raw_value,
        "source": source,
        "branch": "principal",
    }
    result = _result(raw_value, 2, "dwn-combined", diagnostics)
    if "unresolved" in (parts["rr"].status, parts["ll"].status):
        result = WindingResult(
            raw_value=result.raw_value, snapped=result.snapped,
            residual=result.residual, method=result.method,
            status="unresolved", diagnostics=diagnostics,
        )
    return result


def _quadrature_samples(model, n_samples):
    ks = -np.pi + 2.0 * np.pi * np.arange(n_samples) / n_samples
    hx, hy, hz = model.evaluate(ks)
    dhx = model.hx.derivative(0)(ks)
    dhy = model.hy.derivative(0)(ks)
    return ks, hx, hy, hz, dhx, dhy


def conventional_winding(model, band="+", n_samples=2048):
    """Loop quadrature of the per-band Berry-connection integrand.

    Uses exact Fourier derivatives and the equal-weight periodic rule, which
    is spectrally accurate here.  The result is complex and generally not
    quantized once hz != 0; with hz = 0 it reduces to the chiral-symmetric
    form and is a (half-)integer.  Raises EPOnLoopError when the integrand is
    singular on a sample.
    """
    if band not in ("+", "-"):
        raise ValueError(f"band must be '+' or '-', got {band!r}")
    _, hx, hy, hz, dhx, dhy = _quadrature_samples(model, n_samples)
    eps = band_energy(hx, hy, hz)
    if band == "-":
        eps = -eps
    den = eps * (eps - hz)
    if np.any(np.abs(den) <= 1e-12 * model.scale() ** 2):
        raise EPOnLoopError("band-energy denominator vanishes on the loop")
    integrand = (hx * dhy - hy * dhx) / den
    return complex(np.mean(integrand))


def w_total(model, n_samples=2048):
    """Band-summed winding from the hz-free integrand, snapped to an integer."""
    _, hx, hy, hz, dhx, dhy = _quadrature_samples(model, n_samples)
    den = hx ** 2 + hy ** 2
    if np.any(np.abs(den) <= 1e-12 * model.scale() ** 2):
        raise EPOnLoopError("hx^2 + hy^2 vanishes on the loop")
    integrand = (hx * dhy - hy * dhx) / den
    value = 2.0 * np.mean(integrand)
    diagnostics = {"n_samples": int(n_samples), "imag": float(value.imag)}
    result = _result(value.real, 1, "quadrature", diagnostics)
    if abs(value.imag) > SNAP_TOL and result.status == "ok":
        result = WindingResult(
            raw_value=result.raw_value, snapped=result.snapped,
            residual=result.residual, method=result.method,
            status="unresolved", diagnostics=diagnostics,
        )
    return result
