"""Command-line front end: ``billiard-twist {analyze,sweep,portrait,rotation,verify}``.

Exit codes: 0 success, 1 usage or configuration error, 2 mathematical
refusal (non-elliptic orbit, blocking resonance or pole).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .billiard_map import _orbit_tu, _s_values, arclength, arclength_inverse
from .errors import BilliardTwistError, InvalidParameterError, MathematicalRefusal
from .formulas import TwistInput, classify, tau1_asym, tau1_sym, tau2_asym, tau2_sym
from .geometry import TableConfig, curvature_jet, load_table
from .normal_form import analyze
from .rotation import comparison_rows, rotation_report, write_comparison_csv
from .tables import EXAMPLES, build_example
from .verification import run_criterion, select

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_REFUSAL = 0, 1, 2
PARAM_NAMES = sorted({p for ex in EXAMPLES.values() for p in ex.params})


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit with 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def thread_count() -> int:
    raw = os.environ.get("BILLIARD_TWIST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidParameterError(f"BILLIARD_TWIST_THREADS must be an integer, got {raw!r}") from None


def _pmap(fn, items: Sequence[Any]) -> list[Any]:
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# table source


def _add_table_args(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("table source")
    src.add_argument("--config", type=Path, help="JSON table config")
    src.add_argument("--example", choices=sorted(EXAMPLES), help="named example table")
    for name in PARAM_NAMES:
        src.add_argument(f"--{name}", type=float, dest=f"param_{name}", metavar="X", help=f"example parameter {name}")


def _example_params(args: argparse.Namespace) -> dict[str, float]:
    return {name: getattr(args, f"param_{name}") for name in PARAM_NAMES if getattr(args, f"param_{name}") is not None}


def _table_from_args(args: argparse.Namespace, overrides: dict[str, float] | None = None) -> TableConfig:
    if (args.config is None) == (args.example is None):
        raise InvalidParameterError("give exactly one of --config or --example")
    if args.config is not None:
        if overrides:
            raise InvalidParameterError("grids need --example")
        return load_table(args.config)
    params = _example_params(args)
    params.update(overrides or {})
    return build_example(args.example, params)


def _source_dict(args: argparse.Namespace) -> dict[str, Any]:
    if args.config is not None:
        return {"config": str(args.config)}
    return {"example": args.example, "params": _example_params(args)}


def _open_out(path: Path | None):
    if path is None or str(path) == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# ---------------------------------------------------------------------------
# analyze


def closed_form(table: TableConfig) -> dict[str, Any]:
    """Closed-form tau1/tau2 for the same map the pipeline normalizes."""
    out: dict[str, Any] = {"tau1": None, "tau2": None, "errors": []}
    j0, j1 = curvature_jet(table.left), curvature_jet(table.right)
    try:
        if table.symmetric:
            out["tau1"] = tau1_sym(table.L, j0.R, j0.R2)
            out["tau2"] = tau2_sym(table.L, j0.R, j0.R2, j0.R4)
        else:
            inp = TwistInput(table.L, (j0, j1))
            out["tau1"] = tau1_asym(inp)
            out["tau2"] = tau2_asym(inp)
    except BilliardTwistError as exc:
        out["errors"].append({"code": exc.code, "message": str(exc)})
    return out


def _stability(table: TableConfig):
    j0, j1 = curvature_jet(table.left), curvature_jet(table.right)
    return classify(table.L, j0.R, j1.R, symmetric=table.symmetric)


def analysis_report(table: TableConfig) -> tuple[dict[str, Any], int]:
    """Full report for one table and the exit code it implies."""
    report: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "command": "analyze", "table": table.to_dict()}
    stab = _stability(table)
    code = EXIT_OK
    try:
        nf = analyze(table)
    except MathematicalRefusal as exc:
        report["stability"] = stab.to_dict()
        report["refusal"] = {"code": exc.code, "message": str(exc)}
        report["closed_form"] = closed_form(table)
        return report, EXIT_REFUSAL
    report["normal_form"] = nf.to_dict()
    report["stability"] = stab.with_twist(nf.tau1, nf.tau2).to_dict()
    cf = closed_form(table)
    report["closed_form"] = cf
    report["residuals"] = {
        "tau1": None if cf["tau1"] is None else nf.tau1 - cf["tau1"],
        "tau2": None if cf["tau2"] is None or nf.tau2 is None else nf.tau2 - cf["tau2"],
    }
    if nf.tau2 is None:
        reason = "pole" if any("pole" in n for n in nf.notes) else "resonance"
        report["refusal"] = {"code": reason, "message": "; ".join(nf.notes)}
        code = EXIT_REFUSAL
    return report, code


def cmd_analyze(args: argparse.Namespace) -> int:
    table = _table_from_args(args)
    report, code = analysis_report(table)
    report["source"] = _source_dict(args)
    fh, close = _open_out(args.out)
    try:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return code


# ---------------------------------------------------------------------------
# sweep


def parse_grid(spec: str) -> tuple[str, list[float]]:
    """``name=lo:hi:n`` (inclusive linspace) or ``name=v1,v2,...``."""
    if "=" not in spec:
        raise InvalidParameterError(f"grid {spec!r} must look like name=lo:hi:n or name=v1,v2")
    name, body = spec.split("=", 1)
    name = name.strip()
    try:
        if ":" in body:
            lo, hi, n = body.split(":")
            count = int(n)
            if count < 1:
                raise InvalidParameterError(f"grid {name} is empty")
            values = [float(v) for v in np.linspace(float(lo), float(hi), count)]
        else:
            values = [float(v) for v in body.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidParameterError(f"bad grid {spec!r}: {exc}") from None
    if not values:
        raise InvalidParameterError(f"grid {name} is empty")
    return name, values


SWEEP_FIXED = ("map", "class", "flags", "tau1_formula", "tau2_formula", "tau1_pipeline", "tau2_pipeline", "res_tau1", "res_tau2", "status")


def _sweep_row(job: tuple[str, dict[str, float], dict[str, float]]) -> list[Any]:
    example, fixed, point = job
    params = dict(fixed)
    params.update(point)
    try:
        table = build_example(example, params)
    except BilliardTwistError as exc:
        return ["", "", "", "", "", "", "", "", "", exc.code]
    stab = _stability(table)
    flags = ";".join(f"{k}={int(v)}" for k, v in sorted(stab.flags.items()))
    cf = closed_form(table)
    label = "F" if table.symmetric else "F2"
    try:
        nf = analyze(table)
    except MathematicalRefusal as exc:
        return [label, stab.cls, flags, cf["tau1"], cf["tau2"], "", "", "", "", exc.code]
    status = "ok"
    if nf.tau2 is None:
        status = "pole" if any("pole" in n for n in nf.notes) else "resonance"
    elif cf["errors"]:
        status = cf["errors"][0]["code"]

    def diff(a, b):
        return "" if a is None or b is None else a - b

    return [label, stab.cls, flags, cf["tau1"], cf["tau2"], nf.tau1, nf.tau2, diff(nf.tau1, cf["tau1"]), diff(nf.tau2, cf["tau2"]), status]


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.example is None:
        raise InvalidParameterError("sweep needs --example")
    if not args.grid or len(args.grid) > 2:
        raise InvalidParameterError("sweep needs one or two --grid options")
    grids = [parse_grid(g) for g in args.grid]
    allowed = EXAMPLES[args.example].params
    for name, _ in grids:
        if name not in allowed:
            raise InvalidParameterError(f"{args.example} has no parameter {name!r} (has {list(allowed)})")
    names = [g[0] for g in grids]
    fixed = {k: v for k, v in _example_params(args).items() if k not in names}
    jobs = [(args.example, fixed, dict(zip(names, combo))) for combo in itertools.product(*(g[1] for g in grids))]
    rows = _pmap(_sweep_row, jobs)
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*names, *SWEEP_FIXED])
        for (_, _, point), row in zip(jobs, rows):
            writer.writerow([_fmt(point[n]) for n in names] + [_fmt(v) for v in row])
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# portrait


def _portrait_orbit(job: tuple[TableConfig, float, float, int]) -> tuple[np.ndarray, np.ndarray, bool]:
    table, s0, u0, n = job
    prof = table.left
    t0 = arclength_inverse(prof, s0)
    raw = _orbit_tu(table, 0, t0, u0, 2 * n, stride=2)
    s = _s_values(table, raw.arcs, raw.t)
    return s[1:], raw.u[1:], raw.left_domain


def portrait_data(table: TableConfig, ns: int, nu: int, s_max: float, u_max: float, n: int) -> list[dict[str, Any]]:
    """Orbits of ``F^2`` on arc 0 from an ``ns x nu`` grid of initial conditions."""
    if n < 0 or ns < 1 or nu < 1:
        raise InvalidParameterError("grid sizes must be >= 1 and iterations >= 0")
    s_vals = np.linspace(-s_max, s_max, ns) if ns > 1 else np.array([s_max])
    u_vals = np.linspace(-u_max, u_max, nu) if nu > 1 else np.array([u_max])
    starts = [(float(s), float(u)) for s in s_vals for u in u_vals]
    jobs = [(table, s, u, n) for s, u in starts]
    results = _pmap(_portrait_orbit, jobs) if n > 0 else [(np.empty(0), np.empty(0), False) for _ in jobs]
    return [
        {"orbit": i, "s0": s0, "u0": u0, "s": s, "u": u, "left_domain": left}
        for i, ((s0, u0), (s, u, left)) in enumerate(zip(starts, results))
    ]


def write_portrait_csv(orbits: list[dict[str, Any]], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["orbit", "n", "s", "u", "left_domain"])
    for orb in orbits:
        flag = int(orb["left_domain"])
        for k, (s, u) in enumerate(zip(orb["s"], orb["u"]), start=1):
            writer.writerow([orb["orbit"], k, repr(float(s)), repr(float(u)), flag])


def write_portrait_svg(orbits: list[dict[str, Any]], path: Path, size: float, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "billiard-twist", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(size, size))
        for orb in orbits:
            if len(orb["s"]):
                ax.scatter(orb["s"], orb["u"], s=0.05, c="black" if not orb["left_domain"] else "tab:red", linewidths=0)
        ax.set_xlabel("s")
        ax.set_ylabel("u")
        ax.set_title(title)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def cmd_portrait(args: argparse.Namespace) -> int:
    table = _table_from_args(args)
    s_max = args.s_max if args.s_max is not None else 0.5 * arclength(table.left, table.left.eps)
    orbits = portrait_data(table, args.ns, args.nu, s_max, args.u_max, args.iterations)
    fh, close = _open_out(args.out_csv)
    try:
        write_portrait_csv(orbits, fh)
    finally:
        if close:
            fh.close()
    if args.out_svg is not None:
        title = args.example or str(args.config)
        write_portrait_svg(orbits, args.out_svg, args.size, title)
    escaped = sum(o["left_domain"] for o in orbits)
    print(f"{len(orbits)} orbits, {escaped} left the arc domain", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# rotation and verify


def cmd_rotation(args: argparse.Namespace) -> int:
    if args.t:
        ts = [float(x) for x in args.t.split(",") if x.strip()]
    else:
        ts = [float(x) for x in np.linspace(args.t_min, args.t_max, args.points)]
    if not ts:
        raise InvalidParameterError("empty t mesh")
    if args.iterations < 1:
        raise InvalidParameterError("iterations must be >= 1")
    rows = comparison_rows(args.b, ts, args.iterations, numeric=not args.no_numeric)
    fh, close = _open_out(args.out)
    try:
        write_comparison_csv(rows, fh)
    finally:
        if close:
            fh.close()
    if args.report is not None:
        rep = rotation_report(args.b, ts[0], args.iterations, numeric=False).to_dict()
        rep["schema_version"] = SCHEMA_VERSION
        rep["command"] = "rotation"
        args.report.write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    numbers = select(args.filter)
    if not numbers:
        raise InvalidParameterError(f"no acceptance criterion matches {args.filter!r}")
    ok = True
    for n in numbers:
        res = run_criterion(n)
        print(res.line(), flush=True)
        ok &= res.passed
    print(f"{'ALL PASS' if ok else 'SOME FAILED'} ({len(numbers)} criteria)")
    return EXIT_OK if ok else EXIT_USAGE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="billiard-twist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="normal form, closed forms and stability of one table")
    _add_table_args(p)
    p.add_argument("--out", type=Path, help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="tabulate twist coefficients over a parameter grid")
    _add_table_args(p)
    p.add_argument("--grid", action="append", metavar="NAME=LO:HI:N", help="grid axis; repeat for a 2-D sweep")
    p.add_argument("--out", type=Path, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("portrait", help="phase portrait of F^2 on the left arc")
    _add_table_args(p)
    p.add_argument("--ns", type=int, default=7, help="initial conditions along s")
    p.add_argument("--nu", type=int, default=1, help="initial conditions along u")
    p.add_argument("--s-max", type=float, help="half-width of the s grid (default: half the arc)")
    p.add_argument("--u-max", type=float, default=0.0, help="half-width of the u grid")
    p.add_argument("--iterations", type=int, default=1000, help="F^2 iterates per orbit")
    p.add_argument("--out-csv", type=Path, help="scatter CSV (default stdout)")
    p.add_argument("--out-svg", type=Path, help="SVG image")
    p.add_argument("--size", type=float, default=6.0, help="image size in inches")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("rotation", help="compare rotation numbers on the ellipse")
    p.add_argument("--b", type=float, required=True, help="ellipse semi-axis (other axis 1)")
    p.add_argument("--t", help="comma-separated launch angles")
    p.add_argument("--t-min", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=0.2)
    p.add_argument("--points", type=int, default=4)
    p.add_argument("--iterations", type=int, default=100_000, help="F^2 iterates per orbit")
    p.add_argument("--no-numeric", action="store_true", help="skip orbit measurement")
    p.add_argument("--out", type=Path, help="CSV path (default stdout)")
    p.add_argument("--report", type=Path, help="also write a JSON derivative report")
    p.set_defaults(func=cmd_rotation)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--filter", help="criterion number or tag, e.g. 'rotation'")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MathematicalRefusal as exc:
        print(f"refused ({exc.code}): {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except (BilliardTwistError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
