"""Command-line front end: stable JSON/CSV serialization of every result type.

Exit codes: 0 for a resolved result, 2 for a computed-but-unresolved or
invalid one, 1 for usage errors.  Rationals serialize as [numerator,
denominator] pairs and complex numbers as [re, im].
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .chern import axis_sweep_check, chern_dwn, chern_lattice_oracle, find_sps
from .dynamics import DEFAULT_DT, DEFAULT_T, InitialState, texture_series
from .errors import ModelFormatError
from .models import BUILTIN_FAMILIES, builtin, parse_model, serialize_model
from .sweep import SweepPlan, boundary_audit, named_boundaries, run_sweep
from .winding import DEFAULT_SEED, conventional_winding, dwn, dwn_combined, w_total

__all__ = ["main", "build_parser", "emit"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return [obj.numerator, obj.denominator]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def emit(result, fmt="json"):
    """Serialize a result document to bytes-ready text."""
    if fmt == "json":
        return json.dumps(_jsonable(result), indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(result["header"])
        writer.writerows(result["rows"])
        return buf.getvalue()
    raise ValueError(f"format must be json or csv, got {fmt!r}")


def _winding_doc(res):
    return {
        "version": __version__,
        "method": res.method,
        "raw": res.raw_value,
        "snapped": res.snapped,
        "residual": res.residual,
        "status": res.status,
        "diagnostics": res.diagnostics,
    }


def _chern_doc(res):
    doc = {
        "version": __version__,
        "method": res.method,
        "C": res.value,
        "raw": None if not np.isfinite(res.raw) else res.raw,
        "status": res.status,
        "axis": res.axis,
        "sps": [
            {
                "k0": sp.k0,
                "pole": sp.pole,
                "w": None if sp.w_loop is None else sp.w_loop.snapped,
                "residual_h": sp.residual_h,
            }
            for sp in res.sps
        ],
        "diagnostics": res.diagnostics,
    }
    return doc


def _add_model_args(sub):
    sub.add_argument("--model", help="model document file (JSON)")
    sub.add_argument("--builtin", help=f"builtin family: {', '.join(BUILTIN_FAMILIES)}")
    sub.add_argument("--params", help="comma-separated family parameters")


def _add_dynamics_args(sub):
    sub.add_argument("--source", choices=["analytic", "dynamic"], default="analytic")
    sub.add_argument("--time", type=float, default=DEFAULT_T, dest="T")
    sub.add_argument("--dt", type=float, default=DEFAULT_DT)
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _load_model(args):
    if bool(args.model) == bool(args.builtin):
        raise UsageError("provide exactly one of --model FILE or --builtin NAME")
    if args.model:
        with open(args.model) as fh:
            return parse_model(fh.read())
    if not args.params:
        raise UsageError("--builtin requires --params a,b,c,...")
    params = [float(p) for p in args.params.split(",") if p != ""]
    return builtin(args.builtin, params)


def build_parser():
    parser = _Parser(prog="dynwind",
                     description="Topological invariants of two-band models "
                                 "from time-averaged spin textures")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("winding", help="1D winding numbers")
    _add_model_args(p)
    p.add_argument("--plane", choices=["yx", "xz", "zy"], default="yx")
    p.add_argument("--method", default="dwn",
                   choices=["dwn", "dwn-rr", "dwn-ll", "dwn-combined",
                            "conventional", "wtotal"])
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--band", choices=["+", "-"], default="+")
    _add_dynamics_args(p)
    p.add_argument("--out")

    p = subs.add_parser("wtotal", help="band-summed winding number")
    _add_model_args(p)
    p.add_argument("--samples", type=int, default=2048)
    p.add_argument("--out")

    p = subs.add_parser("chern", help="2D Chern number")
    _add_model_args(p)
    p.add_argument("--axis", choices=["x", "y", "z"], default="y")
    p.add_argument("--method", choices=["dwn", "oracle", "both"], default="dwn")
    p.add_argument("--grid", default="128x128", help="oracle grid NxM")
    p.add_argument("--coarse-grid", default="64x64", help="singularity scan grid NxM")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=256)
    _add_dynamics_args(p)
    p.add_argument("--out")

    p = subs.add_parser("find-sp", help="locate phase-singularity points")
    _add_model_args(p)
    p.add_argument("--axis", choices=["x", "y", "z"], default="y")
    p.add_argument("--coarse-grid", default="64x64")
    p.add_argument("--out")

    p = subs.add_parser("texture", help="spin-texture time series as CSV")
    _add_model_args(p)
    p.add_argument("--k", required=True, help="momentum, comma-separated")
    p.add_argument("--kind", choices=["lr", "rr", "ll"], default="lr")
    p.add_argument("--time", type=float, default=DEFAULT_T, dest="T")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")

    p = subs.add_parser("sweep", help="parameter-plane scan")
    p.add_argument("--plan", help="sweep plan file (JSON)")
    p.add_argument("--builtin")
    p.add_argument("--fixed", help="fixed params name=value,name=value")
    p.add_argument("--axis1", help="name,min,max,count")
    p.add_argument("--axis2", help="name,min,max,count")
    p.add_argument("--invariant", choices=["dwn-1d", "wtotal", "chern-dwn", "chern-oracle"])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--store", help="append-only JSONL store enabling resume")
    p.add_argument("--out", help="CSV output path (JSON sidecar written next to it)")

    p = subs.add_parser("audit", help="check sweep transitions against boundaries")
    p.add_argument("--plan", required=True, help="sweep plan file (JSON)")
    p.add_argument("--csv", required=True, help="sweep CSV produced by `sweep`")
    p.add_argument("--boundaries", required=True,
                   choices=["chiral1d", "nonchiral1d", "qah2d"])
    p.add_argument("--out")

    p = subs.add_parser("axes", help="cross-check Chern number over reference axes")
    _add_model_args(p)
    p.add_argument("--out")
    return parser


def _parse_grid(text):
    try:
        n, m = text.lower().split("x")
        return int(n), int(m)
    except ValueError:
        raise UsageError(f"grid must look like 128x128, got {text!r}") from None


def _write(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _status_code(*statuses):
    return 0 if all(s == "ok" for s in statuses) else 2


def _run_winding(args):
    model = _load_model(args)
    if args.method == "conventional":
        value = conventional_winding(model, band=args.band, n_samples=args.samples)
        doc = {"version": __version__, "method": "conventional", "band": args.band,
               "value": value, "status": "ok"}
        _write(emit(doc), args.out)
        return 0
    if args.method == "wtotal":
        res = w_total(model, n_samples=args.samples)
    elif args.method == "dwn-combined":
        res = dwn_combined(model, plane=args.plane, n_samples=args.samples,
                           source=args.source, T=args.T, dt=args.dt, seed=args.seed)
    else:
        kind = {"dwn": "lr", "dwn-rr": "rr", "dwn-ll": "ll"}[args.method]
        res = dwn(model, plane=args.plane, n_samples=args.samples, kind=kind,
                  source=args.source, T=args.T, dt=args.dt, seed=args.seed)
    _write(emit(_winding_doc(res)), args.out)
    return _status_code(res.status)


def _run_wtotal(args):
    model = _load_model(args)
    res = w_total(model, n_samples=args.samples)
    _write(emit(_winding_doc(res)), args.out)
    return _status_code(res.status)


def _run_chern(args):
    model = _load_model(args)
    docs = {}
    statuses = []
    if args.method in ("dwn", "both"):
        res = chern_dwn(model, axis=args.axis, source=args.source,
                        coarse_grid=_parse_grid(args.coarse_grid),
                        radius=args.radius, n_samples=args.samples,
                        T=args.T, dt=args.dt, seed=args.seed)
        docs["dwn"] = _chern_doc(res)
        statuses.append(res.status)
    if args.method in ("oracle", "both"):
        res = chern_lattice_oracle(model, grid=_parse_grid(args.grid))
        docs["oracle"] = _chern_doc(res)
        statuses.append(res.status)
    out = docs if args.method == "both" else next(iter(docs.values()))
    _write(emit(out), args.out)
    return _status_code(*statuses)


def _run_find_sp(args):
    model = _load_model(args)
    sps = find_sps(model, axis=args.axis, coarse_grid=_parse_grid(args.coarse_grid))
    doc = {
        "version": __version__,
        "axis": args.axis,
        "sps": [{"k0": sp.k0, "pole": sp.pole, "residual_h": sp.residual_h}
                for sp in sps],
    }
    _write(emit(doc), args.out)
    return 0


def _run_texture(args):
    model = _load_model(args)
    k = [float(v) for v in args.k.split(",")]
    k = k[0] if model.dimension == 1 else np.array(k)
    init = InitialState.from_seed(args.seed)
    series = texture_series(model, k, init, kind=args.kind, T=args.T, dt=args.dt)
    _write(emit({"header": series.header(), "rows": series.rows()}, fmt="csv"),
           args.out)
    return 0


def _plan_from_args(args):
    if args.plan:
        with open(args.plan) as fh:
            return SweepPlan.from_doc(json.load(fh))
    needed = [args.builtin, args.axis1, args.axis2, args.invariant]
    if any(v is None for v in needed):
        raise UsageError("sweep needs --plan or all of --builtin/--axis1/--axis2/--invariant")
    fixed = {}
    if args.fixed:
        for tok in args.fixed.split(","):
            name, _, value = tok.partition("=")
            if not _:
                raise UsageError(f"bad --fixed entry {tok!r}")
            fixed[name] = float(value)

    def parse_axis(text):
        name, lo, hi, count = text.split(",")
        return (name, float(lo), float(hi), int(count))

    return SweepPlan(
        family=args.builtin, fixed=fixed, axis1=parse_axis(args.axis1),
        axis2=parse_axis(args.axis2), invariant=args.invariant, seed=args.seed,
    )


def _run_sweep(args):
    plan = _plan_from_args(args)
    grid = run_sweep(plan, parallelism=args.parallelism, store_path=args.store)
    csv_text = emit({"header": ("axis1", "axis2", "value_num", "value_den", "status"),
                     "rows": grid.rows()}, fmt="csv")
    _write(csv_text, args.out)
    sidecar = {
        "version": __version__,
        "plan": plan.to_doc(),
        "statuses": {
            status: int(np.count_nonzero(grid.status_array() == status))
            for status in ("ok", "unresolved", "invalid")
        },
    }
    if args.out:
        with open(args.out + ".diag.json", "w") as fh:
            fh.write(emit(sidecar))
    else:
        sys.stderr.write(emit(sidecar))
    return 0


def _run_audit(args):
    with open(args.plan) as fh:
        plan = SweepPlan.from_doc(json.load(fh))
    from .sweep import CellResult, SweepGrid

    (_, xs), (_, ys) = plan.axis_values()
    lookup = {}
    with open(args.csv) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            x, y, num, den, status = row
            lookup[(round(float(x), 12), round(float(y), 12))] = CellResult(
                status=status,
                numerator=None if num == "" else int(num),
                denominator=None if den == "" else int(den),
            )
    cells = []
    for x in xs:
        row = []
        for y in ys:
            try:
                row.append(lookup[(round(float(x), 12), round(float(y), 12))])
            except KeyError:
                raise UsageError("CSV does not cover the plan grid") from None
        cells.append(row)
    grid = SweepGrid(plan=plan, x_values=xs, y_values=ys, cells=cells)
    fixed = plan.fixed
    report = boundary_audit(grid, named_boundaries(args.boundaries, fixed))
    doc = {"version": __version__, "boundaries": args.boundaries, **report}
    _write(emit(doc), args.out)
    return 0 if report["n_violations"] == 0 else 2


def _run_axes(args):
    model = _load_model(args)
    report = axis_sweep_check(model)
    doc = {"version": __version__, **report}
    _write(emit(doc), args.out)
    return 0 if report["consistent"] else 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "winding": _run_winding,
            "wtotal": _run_wtotal,
            "chern": _run_chern,
            "find-sp": _run_find_sp,
            "texture": _run_texture,
            "sweep": _run_sweep,
            "audit": _run_audit,
            "axes": _run_axes,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ModelFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
