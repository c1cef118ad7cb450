"""Closed-form biorthogonal eigensystems and azimuthal angles.

The two bands of H = hx*sx + hy*sy + hz*sz have energies +/-eps with
eps = sqrt(hx^2 + hy^2 + hz^2) on the principal branch (Re >= 0, and Im >= 0
on the branch cut).  Right/left eigenvectors come in two analytically
equivalent gauges anchored on eps_mu - hz and eps_mu + hz; each band uses
whichever anchor is farther from zero so the closed forms stay finite away
from exceptional points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExceptionalPointError, SingularPlaneError

__all__ = [
    "AXES",
    "PLANES",
    "plane_for_axis",
    "EigenSystem",
    "eigensystem",
    "band_energy",
    "equilibrium_azimuth",
    "bloch_angles",
    "real_azimuth_decomposition",
    "RealAzimuth",
    "stationary_texture_angles",
    "wrap_half_pi",
    "wrap_mod",
]

AXES = ("x", "y", "z")
_IDX = {"x": 0, "y": 1, "z": 2}

# Azimuth plane (numerator, denominator) attached to each reference axis:
# the angle for axis i is arctan(h_j / h_l) over the two remaining components.
PLANES = {"yx": ("y", "x"), "xz": ("x", "z"), "zy": ("z", "y")}
_AXIS_PLANE = {"x": ("z", "y"), "y": ("x", "z"), "z": ("y", "x")}


def plane_for_axis(axis):
    """The azimuth plane complementary to a reference axis."""
    try:
        return _AXIS_PLANE[axis]
    except KeyError:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}") from None


def _plane_pair(plane):
    if isinstance(plane, str):
        try:
            plane = PLANES[plane]
        except KeyError:
            raise ValueError(f"plane must be one of {sorted(PLANES)}, got {plane!r}") from None
    j, i = plane
    if j not in _IDX or i not in _IDX or j == i:
        raise ValueError(f"invalid plane {plane!r}")
    return j, i


def wrap_half_pi(x):
    """Canonical mod-pi representative in (-pi/2, pi/2]."""
    x = np.asarray(x, dtype=float)
    return x - np.pi * np.ceil(x / np.pi - 0.5)


def wrap_mod(x, period):
    """Symmetric wrap of x into (-period/2, period/2]."""
    x = np.asarray(x, dtype=float)
    return x - period * np.ceil(x / period - 0.5)


def band_energy(hx, hy, hz):
    """Principal-branch eps_+ for the upper band; broadcasts over arrays."""
    return np.sqrt(np.asarray(hx, complex) ** 2 + np.asarray(hy, complex) ** 2
                   + np.asarray(hz, complex) ** 2)


def _band_vectors(eps_mu, hx, hy, hz):
    """Eq.-of-motion eigenvector pair for one band, scalar inputs.

    Returns (right_ket, left_row, norm, gauge) with <left|right> = 1.
    """
    anchor_minus = eps_mu - hz
    anchor_plus = eps_mu + hz
    if abs(anchor_minus) >= abs(anchor_plus):
        norm = np.sqrt(2.0 * eps_mu * anchor_minus)
        right = np.array([hx - 1j * hy, anchor_minus]) / norm
        left = np.array([hx + 1j * hy, anchor_minus]) / norm
        gauge = "minus"
    else:
        norm = np.sqrt(2.0 * eps_mu * anchor_plus)
        right = np.array([anchor_plus, hx + 1j * hy]) / norm
        left = np.array([anchor_plus, hx - 1j * hy]) / norm
        gauge = "plus"
    return right, left, norm, gauge


@dataclass(frozen=True)
class EigenSystem:
    """Biorthogonal frame of a single momentum point.

    `left_*` store the bra rows <chi_mu| directly, i.e. <chi|v> is the plain
    dot product left @ v with no conjugation.
    """

    h: tuple
    eps_plus: complex
    right_plus: np.ndarray
    right_minus: np.ndarray
    left_plus: np.ndarray
    left_minus: np.ndarray
    norm_plus: complex
    norm_minus: complex
    gauge_plus: str
    gauge_minus: str
    branch: str = "principal"

    @property
    def A(self):
        """Real part of eps_+."""
        return float(self.eps_plus.real)

    @property
    def B(self):
        """Imaginary part of eps_+; its sign selects the long-time dominant band."""
        return float(self.eps_plus.imag)

    def hamiltonian(self):
        hx, hy, hz = self.h
        return np.array([[hz, hx - 1j * hy], [hx + 1j * hy, -hz]])

    def biorthonormality_residual(self):
        g = np.array(
            [
                [self.left_plus @ self.right_plus, self.left_plus @ self.right_minus],
                [self.left_minus @ self.right_plus, self.left_minus @ self.right_minus],
            ]
        )
        return float(np.max(np.abs(g - np.eye(2))))

    def completeness_residual(self):
        proj = np.outer(self.right_plus, self.left_plus) + np.outer(
            self.right_minus, self.left_minus
        )
        return float(np.max(np.abs(proj - np.eye(2))))


def eigensystem(h, ep_tol=1e-9):
    """Closed-form biorthogonal eigendecomposition at one momentum.

    Raises ExceptionalPointError when |eps_+| < ep_tol * |h|, where the
    eigenvectors coalesce and no gauge keeps the closed forms finite.
    """
    hx, hy, hz = (complex(c) for c in h)
    scale = np.sqrt(abs(hx) ** 2 + abs(hy) ** 2 + abs(hz) ** 2)
    eps = complex(band_energy(hx, hy, hz))
    if abs(eps) <= ep_tol * scale or scale == 0.0:
        raise ExceptionalPointError(
            f"eigenvalues coalesce at h = ({hx}, {hy}, {hz}); |eps| = {abs(eps):.3e}"
        )
    right_p, left_p, norm_p, gauge_p = _band_vectors(eps, hx, hy, hz)
    right_m, left_m, norm_m, gauge_m = _band_vectors(-eps, hx, hy, hz)
    return EigenSystem(
        h=(hx, hy, hz),
        eps_plus=eps,
        right_plus=right_p,
        right_minus=right_m,
        left_plus=left_p,
        left_minus=left_m,
        norm_plus=norm_p,
        norm_minus=norm_m,
        gauge_plus=gauge_p,
        gauge_minus=gauge_m,
    )


def _plane_components(h, plane):
    j, i = _plane_pair(plane)
    h = np.asarray(h, dtype=complex)
    return h[..., _IDX[j]] if h.ndim > 1 else h[_IDX[j]], \
        h[..., _IDX[i]] if h.ndim > 1 else h[_IDX[i]]


def _check_plane(h_j, h_i, tol=1e-12):
    g = h_i ** 2 + h_j ** 2
    s = abs(h_i) ** 2 + abs(h_j) ** 2
    if abs(g) <= tol * max(s, 1e-300):
        raise SingularPlaneError(
            f"plane is singular: h_i^2 + h_j^2 = {g:.3e} for (h_j, h_i) = ({h_j}, {h_i})"
        )


def equilibrium_azimuth(h, plane):
    """Complex azimuthal angle arctan(h_j / h_i) on the principal branch.

    Computed as log((h_i + i h_j)/(h_i - i h_j)) / 2i, which stays finite at
    h_i = 0 and is singular exactly where h_i^2 + h_j^2 = 0.
    """
    h_j, h_i = _plane_components(h, plane)
    _check_plane(complex(h_j), complex(h_i))
    ratio = (h_i + 1j * h_j) / (h_i - 1j * h_j)
    return complex(-0.5j * np.log(ratio))


def bloch_angles(h, axis):
    """Polar angle about `axis` and the azimuth in the complementary plane.

    cos(theta) = h_axis / eps_+ and tan(phi) = h_j / h_l with (j, l) the
    plane attached to the axis; both angles are complex off the Hermitian
    manifold.  Exactly at a singularity point of the plane (h_j^2 + h_l^2 = 0)
    the azimuth is undefined and phi comes back as None while theta is still
    meaningful (cos theta = +/-1 there).
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    h = np.asarray(h, dtype=complex)
    eps = complex(band_energy(*h))
    if eps == 0:
        raise ExceptionalPointError("cannot define Bloch angles at eps = 0")
    theta = complex(np.arccos(complex(h[_IDX[axis]]) / eps))
    try:
        phi = equilibrium_azimuth(h, plane_for_axis(axis))
    except SingularPlaneError:
        phi = None
    return theta, phi


@dataclass(frozen=True)
class RealAzimuth:
    """Real/imaginary decomposition of a complex azimuth plus its observable pair.

    re_phi is the canonical mod-pi representative of Re(phi); phi_rr and
    phi_ll are the two real angles seen by same-state spin textures for the
    supplied gauge constant.  (phi_rr + phi_ll)/2 equals re_phi modulo pi/2
    for every nonzero gauge constant.
    """

    re_phi: float
    im_phi: float
    phi_rr: float
    phi_ll: float
    gauge_constant: complex


def real_azimuth_decomposition(h, plane, gauge_constant=1.0):
    """Split the complex azimuth into observable real angles.

    exp(-2*im_phi) = |(h_i + i h_j)/(h_i - i h_j)| and the two real angles
    follow the shared-gauge tangent formulas; their mean reproduces re_phi
    modulo pi/2 independently of the gauge constant.
    """
    pounds = complex(gauge_constant)
    if pounds == 0:
        raise ValueError("gauge_constant must be nonzero")
    h_j, h_i = _plane_components(h, plane)
    a = pounds * complex(h_i)
    b = pounds * complex(h_j)
    _check_plane(b, a)
    ratio = (a + 1j * b) / (a - 1j * b)
    re_phi = 0.5 * float(np.angle(ratio))
    im_phi = -0.5 * float(np.log(abs(ratio)))
    phi_rr = float(np.arctan2(b.real + a.imag, a.real - b.imag))
    phi_ll = float(np.arctan2(b.real - a.imag, a.real + b.imag))
    return RealAzimuth(
        re_phi=re_phi,
        im_phi=im_phi,
        phi_rr=float(wrap_half_pi(phi_rr)),
        phi_ll=float(wrap_half_pi(phi_ll)),
        gauge_constant=pounds,
    )


def stationary_texture_angles(hx, hy, hz, plane):
    """Long-time angles of the three texture families, vectorized over arrays.

    Returns (lr, rr, ll, band).  `lr` is the mod-pi real part of the
    equilibrium azimuth.  `rr`/`ll` are the band-coherent same-state texture
    angles: the plane angles of the lower-band (principal branch, energy
    -eps) right and left eigenvectors, via the shared-gauge tangent formulas
    with gauge constant conj(h_l) - conj(eps), l being the axis complementary
    to the plane.  `band` = sign(Im eps) marks which band dominates the
    measured long-time textures at each point; where band = +1 the measured
    right-right angle equals `ll` and vice versa (opposite bands' right and
    left textures agree mod pi: their phases multiply to the real number
    -|h_j^2 + h_i^2|^2).  The labels swap under the opposite square-root
    branch; their mean is branch-invariant mod pi/2.
    """
    j, i = _plane_pair(plane)
    (l,) = set(AXES) - {j, i}
    comps = {"x": np.asarray(hx, complex), "y": np.asarray(hy, complex),
             "z": np.asarray(hz, complex)}
    h_j, h_i, h_l = comps[j], comps[i], comps[l]
    eps = band_energy(comps["x"], comps["y"], comps["z"])
    band = np.where(eps.imag < 0.0, -1.0, 1.0)
    pounds = np.conj(h_l) - np.conj(eps)
    a = pounds * h_i
    b = pounds * h_j
    up = h_i + 1j * h_j
    dn = h_i - 1j * h_j
    singular = np.abs(up) * np.abs(dn) <= 1e-12 * (np.abs(h_i) ** 2 + np.abs(h_j) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(singular, np.nan, 0.5 * np.angle(np.where(singular, 1.0, up / dn)))
    rr = wrap_half_pi(np.arctan2(b.real + a.imag, a.real - b.imag))
    ll = wrap_half_pi(np.arctan2(b.real - a.imag, a.real + b.imag))
    return lr, rr, ll, band
