"""Parameter-plane scans, boundary audits, and time-average convergence tables.

Cells are pure functions of (plan, indices, global seed), so grids are
deterministic for any worker count and a killed run resumes exactly from its
append-only store.  Failures at gapless or otherwise unresolvable cells are
recorded as sentinels; a sweep never aborts on a cell.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import chern as chern_mod
from . import winding as winding_mod
from .dynamics import DEFAULT_DT, DEFAULT_T, InitialState, averaged_azimuth
from .errors import InadmissibleStateError
from .models import BUILTIN_FAMILIES, builtin
from .spectral import equilibrium_azimuth, wrap_mod

__all__ = [
    "SweepPlan",
    "CellResult",
    "SweepGrid",
    "run_sweep",
    "boundary_audit",
    "convergence_study",
    "named_boundaries",
]

INVARIANTS = ("dwn-1d", "wtotal", "chern-dwn", "chern-oracle")


@dataclass(frozen=True)
class SweepPlan:
    """A rectangular scan over two parameters of a builtin family."""

    family: str
    fixed: dict
    axis1: tuple  # (name, lo, hi, count)
    axis2: tuple
    invariant: str
    seed: int = 7
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in BUILTIN_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.invariant not in INVARIANTS:
            raise ValueError(f"invariant must be one of {INVARIANTS}")
        names = BUILTIN_FAMILIES[self.family][1]
        for ax in (self.axis1, self.axis2):
            name, lo, hi, count = ax
            if name not in names:
                raise ValueError(f"{self.family} has no parameter {name!r}")
            if int(count) < 2 or not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError(f"bad axis specification {ax!r}")
        unknown = set(self.fixed) - set(names)
        if unknown:
            raise ValueError(f"fixed parameters {sorted(unknown)} not in {names}")

    def axis_values(self):
        n1 = (self.axis1[0], np.linspace(self.axis1[1], self.axis1[2], int(self.axis1[3])))
        n2 = (self.axis2[0], np.linspace(self.axis2[1], self.axis2[2], int(self.axis2[3])))
        return n1, n2

    def model_at(self, x, y):
        names = BUILTIN_FAMILIES[self.family][1]
        params = dict(self.fixed)
        params[self.axis1[0]] = x
        params[self.axis2[0]] = y
        missing = set(names) - set(params)
        if missing:
            raise ValueError(f"plan leaves parameters {sorted(missing)} unset")
        return builtin(self.family, [params[n] for n in names])

    def to_doc(self):
        return {
            "family": self.family,
            "fixed": dict(self.fixed),
            "axis1": list(self.axis1),
            "axis2": list(self.axis2),
            "invariant": self.invariant,
            "seed": self.seed,
            "options": dict(self.options),
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(
            family=doc["family"],
            fixed=dict(doc.get("fixed", {})),
            axis1=tuple(doc["axis1"]),
            axis2=tuple(doc["axis2"]),
            invariant=doc["invariant"],
            seed=int(doc.get("seed", 7)),
            options=dict(doc.get("options", {})),
        )


@dataclass(frozen=True)
class CellResult:
    status: str  # ok | unresolved | invalid
    numerator: int | None
    denominator: int | None
    detail: str = ""

    def fraction(self):
        if self.status != "ok":
            return None
        return Fraction(self.numerator, self.denominator)


def _cell_seed(seed, i, j):
    ss = np.random.SeedSequence([int(seed), int(i), int(j)])
    return int(ss.generate_state(1)[0])


def _compute_cell(plan, i, j, x, y):
    opts = plan.options
    try:
        model = plan.model_at(x, y)
        if plan.invariant == "dwn-1d":
            res = winding_mod.dwn(
                model,
                plane=opts.get("plane", "yx"),
                n_samples=int(opts.get("n_samples", 256)),
                source=opts.get("source", "analytic"),
                kind=opts.get("kind", "lr"),
                seed=_cell_seed(plan.seed, i, j),
                T=float(opts.get("T", DEFAULT_T)),
                dt=float(opts.get("dt", DEFAULT_DT)),
            )
        elif plan.invariant == "wtotal":
            res = winding_mod.w_total(model, n_samples=int(opts.get("n_samples", 2048)))
        elif plan.invariant == "chern-dwn":
            res = chern_mod.chern_dwn(
                model,
                axis=opts.get("axis", "y"),
                source=opts.get("source", "analytic"),
                n_samples=int(opts.get("n_samples", 192)),
                seed=_cell_seed(plan.seed, i, j),
            )
        else:
            res = chern_mod.chern_lattice_oracle(
                model, grid=tuple(opts.get("grid", (128, 128)))
            )
    except Exception as exc:  # sentinel, never abort the sweep
        return CellResult(status="invalid", numerator=None, denominator=None,
                          detail=f"{type(exc).__name__}: {exc}")
    if isinstance(res, winding_mod.WindingResult):
        if res.status != "ok":
            return CellResult(status=res.status, numerator=None, denominator=None,
                              detail=f"residual={res.residual:.3g}")
        frac = res.snapped
        return CellResult(status="ok", numerator=frac.numerator,
                          denominator=frac.denominator)
    if res.status != "ok":
        return CellResult(status=res.status, numerator=None, denominator=None)
    return CellResult(status="ok", numerator=int(res.value), denominator=1)


def _cell_worker(args):
    plan_doc, i, j, x, y = args
    plan = SweepPlan.from_doc(plan_doc)
    cell = _compute_cell(plan, i, j, x, y)
    return i, j, cell


@dataclass
class SweepGrid:
    plan: SweepPlan
    x_values: np.ndarray
    y_values: np.ndarray
    cells: list  # cells[i][j] -> CellResult

    def value_array(self):
        """Snapped values as floats with NaN at non-ok cells."""
        out = np.full((len(self.x_values), len(self.y_values)), np.nan)
        for i in range(len(self.x_values)):
            for j in range(len(self.y_values)):
                c = self.cells[i][j]
                if c.status == "ok":
                    out[i, j] = c.numerator / c.denominator
        return out

    def status_array(self):
        return np.array([[c.status for c in row] for row in self.cells])

    def rows(self):
        """CSV rows (axis1, axis2, value_num, value_den, status)."""
        out = []
        for i, x in enumerate(self.x_values):
            for j, y in enumerate(self.y_values):
                c = self.cells[i][j]
                out.append((float(x), float(y),
                            "" if c.numerator is None else c.numerator,
                            "" if c.denominator is None else c.denominator,
                            c.status))
        return out


def _load_store(path):
    done = {}
    if path and os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                done[(rec["i"], rec["j"])] = CellResult(
                    status=rec["status"],
                    numerator=rec["num"],
                    denominator=rec["den"],
                    detail=rec.get("detail", ""),
                )
    return done


def run_sweep(plan, parallelism=1, store_path=None, progress=False):
    """Execute a sweep plan; per-cell errors become sentinels.

    With `store_path` every finished cell is appended as a JSON line and a
    restarted run recomputes only missing cells.
    """
    (name1, xs), (name2, ys) = plan.axis_values()
    done = _load_store(store_path)
    todo = [
        (plan.to_doc(), i, j, float(xs[i]), float(ys[j]))
        for i in range(len(xs))
        for j in range(len(ys))
        if (i, j) not in done
    ]
    store = open(store_path, "a") if store_path else None

    def record(i, j, cell):
        done[(i, j)] = cell
        if store is not None:
            store.write(json.dumps({
                "i": i, "j": j, "status": cell.status,
                "num": cell.numerator, "den": cell.denominator,
                "detail": cell.detail,
            }) + "\n")
            store.flush()
        if progress and len(done) % 100 == 0:
            print(f"  {len(done)}/{len(xs) * len(ys)} cells")

    try:
        if parallelism > 1 and todo:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                for i, j, cell in pool.map(_cell_worker, todo, chunksize=8):
                    record(i, j, cell)
        else:
            for args in todo:
                _, i, j, x, y = args
                record(i, j, _compute_cell(plan, i, j, x, y))
    finally:
        if store is not None:
            store.close()
    cells = [[done[(i, j)] for j in range(len(ys))] for i in range(len(xs))]
    return SweepGrid(plan=plan, x_values=xs, y_values=ys, cells=cells)


# -- analytic phase boundaries --------------------------------------------


def named_boundaries(name, fixed=None):
    """Boundary curve set f(x, y) = 0 for the builtin phase diagrams.

    'chiral1d' and 'nonchiral1d' use axes (J0, delta) and take J2 from
    `fixed`; 'qah2d' uses axes (m_z, delta).
    """
    fixed = fixed or {}
    if name in ("chiral1d", "nonchiral1d"):
        J2 = float(fixed.get("J2", 0.0))
        curves = [
            ("J0+delta=1-J2", lambda x, y: x + y - (1.0 - J2)),
            ("J0-delta=1-J2", lambda x, y: x - y - (1.0 - J2)),
            ("J0+delta=-1-J2", lambda x, y: x + y + (1.0 + J2)),
            ("J0-delta=-1-J2", lambda x, y: x - y + (1.0 + J2)),
        ]
        if abs(J2) > 0.5:
            curves += [
                ("J0+delta=J2", lambda x, y: x + y - J2),
                ("J0-delta=J2", lambda x, y: x - y - J2),
            ]
        return curves
    if name == "qah2d":
        return [
            ("(m_z-1)^2+delta^2=1", lambda x, y: (x - 1.0) ** 2 + y ** 2 - 1.0),
            ("m_z=2", lambda x, y: x - 2.0),
        ]
    raise ValueError(f"no boundary set named {name!r}")


def boundary_audit(grid, boundaries):
    """Check that changes between resolved neighbors straddle a boundary curve.

    A change is explained when some curve changes sign between the two cell
    centers or comes within the local one-cell variation of zero.  Sentinel
    cells separate regions by construction and are not treated as changes.
    """
    xs, ys = grid.x_values, grid.y_values
    values = grid.value_array()
    changes = 0
    violations = []

    def explained(p, q):
        for _name, f in boundaries:
            fp, fq = f(*p), f(*q)
            if fp * fq <= 0.0:
                return True
            if min(abs(fp), abs(fq)) <= 1.01 * abs(fp - fq):
                return True
        return False

    for i in range(len(xs)):
        for j in range(len(ys)):
            a = values[i, j]
            if np.isnan(a):
                continue
            for di, dj in ((1, 0), (0, 1)):
                ii, jj = i + di, j + dj
                if ii >= len(xs) or jj >= len(ys):
                    continue
                b = values[ii, jj]
                if np.isnan(b) or a == b:
                    continue
                changes += 1
                p = (float(xs[i]), float(ys[j]))
                q = (float(xs[ii]), float(ys[jj]))
                if not explained(p, q):
                    violations.append({"from": p, "to": q, "values": [a, b]})
    return {
        "changes": changes,
        "violations": violations,
        "n_violations": len(violations),
    }


def convergence_study(model, k_points, T_values, dt=DEFAULT_DT, plane="xz",
                      init=None, kind="lr", seed=7):
    """Sup-norm gap between dynamic and equilibrium angles for each horizon.

    Returns a list of (T, max |eta - phi| mod pi) rows over the momentum set.
    """
    if init is None:
        init = InitialState.from_seed(seed)
    k_points = [np.asarray(k, dtype=float) for k in k_points]
    reference = []
    for k in k_points:
        h = tuple(complex(c) for c in model.evaluate(k))
        phi = equilibrium_azimuth(h, plane)
        reference.append(float(phi.real))
    rows = []
    for T in T_values:
        worst = 0.0
        for k, ref in zip(k_points, reference):
            try:
                eta, _info = averaged_azimuth(model, k, plane, init, kind=kind,
                                              T=float(T), dt=dt)
            except InadmissibleStateError:
                raise
            diff = abs(float(wrap_mod(eta - ref, np.pi)))
            worst = max(worst, diff)
        rows.append((float(T), worst))
    return rows
