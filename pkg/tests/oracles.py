"""Independent oracles used by the tests.

The band-summed winding of a 1D model equals the difference of the two loop
windings of f+/- = hx +/- i*hy around zero.  Both are Laurent polynomials in
z = exp(ik), so the windings follow from the argument principle by counting
polynomial roots inside the unit disk.  No angle fields, quadrature or
unwrapping are involved, which makes this a genuinely independent route.
"""

import numpy as np


def _laurent_coeffs(series, sign):
    """Coefficients of hx + sign*i*hy as {power: coefficient}."""
    out = {}
    for (m,), c in series[0].terms:
        out[m] = out.get(m, 0j) + c
    for (m,), c in series[1].terms:
        out[m] = out.get(m, 0j) + sign * 1j * c
    return {m: c for m, c in out.items() if abs(c) > 1e-15}


def _disk_winding(coeffs):
    """Winding of sum_m c_m z^m around 0 as z runs the unit circle once."""
    if not coeffs:
        raise ValueError("zero function has no winding")
    lo = min(coeffs)
    hi = max(coeffs)
    poly = [coeffs.get(m, 0j) for m in range(hi, lo - 1, -1)]
    roots = np.roots(poly)
    if np.any(np.abs(np.abs(roots) - 1.0) < 1e-9):
        raise ValueError("root on the unit circle: winding undefined")
    return int(np.count_nonzero(np.abs(roots) < 1.0)) + lo


def total_winding_by_roots(model):
    """w_+ + w_- of a 1D model by unit-disk root counting."""
    series = (model.hx, model.hy)
    return _disk_winding(_laurent_coeffs(series, +1)) - _disk_winding(
        _laurent_coeffs(series, -1)
    )


def chiral_winding_by_roots(model):
    """The common per-band winding of a chiral (hz = 0) model."""
    wt = total_winding_by_roots(model)
    return wt / 2.0
