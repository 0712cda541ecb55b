"""Command-line front end: ``vicsek <subcommand> [flags]``.

Every subcommand prints JSON (``{"schema_version", "command", "payload"}``)
or CSV with a header row. Floats are written with 12 significant digits so
identical flags give byte-identical output.

Exit codes: 0 success, 2 invalid arguments, 3 size budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable

import numpy as np

from . import asymptotics, gaps, green, kernels
from .decimation import decimation_system, enumerate_spectrum
from .eigenfunc import build_eigenfunctions
from .vsgraph import BudgetError, GraphApprox, VicsekParams, cached_graph, vertex_budget

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


def num(x) -> float | None:
    """Round to 12 significant digits (None for NaN)."""
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return x
    return float(f"{x:.12g}")


def format_word(word, n: int) -> str:
    """Letters joined directly when all fit in one digit, else dot-separated."""
    if not word:
        return ""
    return ("" if 4 * n - 4 <= 9 else ".").join(str(int(c)) for c in word)


def parse_word(text: str) -> tuple:
    if not text:
        return ()
    return tuple(int(c) for c in (text.split(".") if "." in text else text))


def parse_address(g: GraphApprox, text: str) -> int:
    """Vertex of "F:<map word>,q:<corner>" (e.g. F:0233,q:3), or a plain vertex index."""
    text = text.replace(" ", "")
    if text.lstrip("-").isdigit():
        idx = int(text)
        if not 0 <= idx < g.num_vertices:
            raise ValueError(f"vertex index {idx} out of range")
        return idx
    fields = dict(part.split(":", 1) for part in text.split(","))
    if "F" not in fields or "q" not in fields:
        raise ValueError(f"point address must look like F:0233,q:3, got {text!r}")
    return g.vertex_of_address(parse_word(fields["F"]), int(fields["q"]))


def _graph(n: int, level: int) -> GraphApprox:
    if level < 0:
        raise ValueError("level must be ≥ 0")
    count = VicsekParams(n).vertex_count(level)
    if count > vertex_budget():
        raise BudgetError(f"Γ_{level} of VS_{n} has {count} vertices, budget is {vertex_budget()}")
    return cached_graph(n, level)


def _field_rows(g: GraphApprox, values) -> list[dict]:
    d = float(g.denominator)
    return [{"vertex_x": num(x / d), "vertex_y": num(y / d), "value": num(v)} for (x, y), v in zip(g.vertices, values)]


# subcommands: each returns (payload, csv_rows)


def cmd_spectrum(a):
    table = enumerate_spectrum(a.n, a.depth)
    rows = [
        {
            "value": num(r.value),
            "multiplicity": int(r.multiplicity),
            "series": r.series.value,
            "birth_level": int(r.birth_level),
            "word": format_word(r.word, a.n),
        }
        for r in table.records
    ]
    return rows, rows


def cmd_eigenfunction(a):
    table = enumerate_spectrum(a.n, a.depth)
    if not 0 <= a.index < len(table.records):
        raise ValueError(f"index must be in 0..{len(table.records) - 1}")
    rec = table.records[a.index]
    level = max(a.level, rec.settle_level)
    g = _graph(a.n, level)
    basis = build_eigenfunctions(rec, level)
    if not 0 <= a.component < len(basis.functions):
        raise ValueError(f"component must be in 0..{len(basis.functions) - 1}")
    rows = _field_rows(g, basis.functions[a.component].values)
    payload = {
        "value": num(rec.value),
        "series": rec.series.value,
        "word": format_word(rec.word, a.n),
        "level": level,
        "field": rows,
    }
    return payload, rows


def _kernel_payload(fld, rows):
    return {"time": num(fld.time) if fld.time is not None else None, "level": fld.level, "depth": fld.depth, "tail_bound": num(fld.tail_bound), "field": rows}


def cmd_heat(a):
    _graph(a.n, a.level)
    fld = kernels.heat_center(a.n, a.t, a.level, a.depth)
    rows = _field_rows(cached_graph(a.n, fld.level), fld.values)
    return _kernel_payload(fld, rows), rows


def cmd_wave(a):
    _graph(a.n, a.level)
    fld = kernels.wave_center(a.n, a.t, a.level, a.depth)
    rows = _field_rows(cached_graph(a.n, fld.level), fld.values)
    return _kernel_payload(fld, rows), rows


def cmd_trace(a):
    if not 0 < a.tmin < a.tmax:
        raise ValueError("need 0 < tmin < tmax")
    ts = np.geomspace(a.tmin, a.tmax, a.count)
    data = kernels.heat_trace(a.n, ts, a.depth)
    rows = [{"t": num(t), "trace": num(tr), "scaled": num(sc)} for t, tr, sc in data]
    payload = {"rows": rows}
    if a.fit:
        fit = kernels.fit_log_periodic([r[0] for r in data], [r[2] for r in data], VicsekParams(a.n).rho)
        payload["fit"] = dict(zip("abcd", map(num, fit)))
    return payload, rows


def cmd_project(a):
    g = _graph(a.n, a.level)
    x = parse_address(g, a.point)
    fld = kernels.projection_kernel(a.n, a.depth, x, a.level)
    rows = _field_rows(g, fld.values)
    return {"depth": a.depth, "level": a.level, "point": int(x), "field": rows}, rows


def cmd_weyl(a):
    table = enumerate_spectrum(a.n, a.depth)
    ss = np.linspace(0.0, 1.0, a.count, endpoint=False)
    samples = asymptotics.normalized_weyl(table, ss)
    rows = [{"s": num(s), "w": num(w)} for s, w in samples]
    return {"rows": rows, "special_values": {k: num(v) for k, v in asymptotics.weyl_special_values(a.n, 1).items()}}, rows


def cmd_gaps(a):
    sys_ = decimation_system(a.n)
    if a.point is not None:
        gap = gaps.gap_containing(sys_, a.ell, a.point)
        rows = [] if gap is None else [{"lo": num(gap[0]), "hi": num(gap[1])}]
        return {"n": a.n, "ell": a.ell, "point": num(a.point), "gap": None if gap is None else [num(gap[0]), num(gap[1])]}, rows
    cert = gaps.ratio_gaps(sys_, a.ell)
    rows = [{"lo": num(lo), "hi": num(hi)} for lo, hi in cert.gaps]
    return {"n": a.n, "ell": a.ell, "gaps": [[num(lo), num(hi)] for lo, hi in cert.gaps], "covering_interval_count": cert.covering_interval_count}, rows


def cmd_cluster(a):
    cert = gaps.clustering_certificate(a.n)
    payload = {"t": num(cert.t), "rprime": num(cert.rprime), "rho": cert.rho, "certified": cert.certified}
    rows = [dict(payload)]
    if a.count:
        demo = gaps.cluster_demo(a.n, a.count, a.eps)
        payload["demo"] = {
            "values": [gaps.mpmath.nstr(v, 30) for v in demo.values],
            "words": [format_word(r.word, a.n) for r in demo.records],
            "spread": gaps.mpmath.nstr(demo.spread, 12),
        }
    return payload, rows


def _skeleton_point(g: GraphApprox, text: str):
    if "arm" in text:
        return green.SkeletonPoint.parse(text)
    return parse_address(g, text)


def cmd_green(a):
    g = _graph(a.n, a.level)
    y = _skeleton_point(g, a.y)
    if a.x is not None:
        pts = green.skeleton_points(g)
        x = _skeleton_point(g, a.x)
        xp = pts[x] if isinstance(x, int) else x
        yp = pts[y] if isinstance(y, int) else y
        value = num(green.green_eval(xp, yp))
        return {"value": value}, [{"value": value}]
    rows = _field_rows(g, green.green_field(g, y).values)
    return {"level": a.level, "field": rows}, rows


def cmd_arm(a):
    sol = asymptotics.arm_system(a.n, a.series)
    rows = [{"index": i + 1, "eigenvalue": num(v)} for i, v in enumerate(sol.eigenvalues)]
    payload = {"series": a.series, "eigenvalues": [num(v) for v in sol.eigenvalues], "vectors": [[num(x) for x in col] for col in sol.vectors.T]}
    return payload, rows


def cmd_convergence(a):
    ns = [int(x) for x in a.ns.split(",")]
    table = asymptotics.cross_limit_check(a.j, a.series, ns)
    rows = [{"n": n, "value": num(v), "limit": num(lim), "error": num(e)} for n, v, lim, e in table.rows]
    return {"rows": rows, "order": num(table.order), "decreasing": table.decreasing}, rows


COMMANDS: dict[str, tuple[Callable, str]] = {
    "spectrum": (cmd_spectrum, "eigenvalues through depth k. CSV: value,multiplicity,series,birth_level,word"),
    "eigenfunction": (cmd_eigenfunction, "one eigenfunction on V_m. CSV: vertex_x,vertex_y,value"),
    "heat": (cmd_heat, "heat kernel h(t, q0, ·) on V_m. CSV: vertex_x,vertex_y,value"),
    "trace": (cmd_trace, "heat trace on a log grid. CSV: t,trace,scaled"),
    "wave": (cmd_wave, "wave propagator W(t, q0, ·) on V_m. CSV: vertex_x,vertex_y,value"),
    "project": (cmd_project, "spectral projection kernel K_k(x, ·). CSV: vertex_x,vertex_y,value"),
    "weyl": (cmd_weyl, "normalized Weyl ratio over one period. CSV: s,w"),
    "gaps": (cmd_gaps, "certified ratio gaps in [1, ρ]. CSV: lo,hi"),
    "cluster": (cmd_cluster, "spectral clustering certificate. CSV: t,rprime,rho,certified"),
    "green": (cmd_green, "Dirichlet Green's function G(·, y) on V_m. CSV: vertex_x,vertex_y,value"),
    "arm": (cmd_arm, "level-1 arm system eigenvalues. CSV: index,eigenvalue"),
    "convergence": (cmd_convergence, "low eigenvalue against its large-n limit. CSV: n,value,limit,error"),
}


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vicsek", description="Spectral decimation on Vicsek fractals.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="Vicsek parameter n ≥ 2")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write to this path instead of standard output")
    parsers = {name: sub.add_parser(name, parents=[common], help=text, description=text) for name, (_, text) in COMMANDS.items()}

    parsers["spectrum"].add_argument("--depth", type=int, default=3)
    p = parsers["eigenfunction"]
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--index", type=int, default=1, help="position in the sorted spectrum")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--component", type=int, default=0, help="basis vector within the eigenspace")
    for name in ("heat", "wave"):
        p = parsers[name]
        p.add_argument("--t", type=float, required=True)
        p.add_argument("--level", type=int, default=4)
        p.add_argument("--depth", type=int, default=4)
    p = parsers["trace"]
    p.add_argument("--tmin", type=_positive_float, default=1e-7)
    p.add_argument("--tmax", type=_positive_float, default=1e-3)
    p.add_argument("--count", type=int, default=400)
    p.add_argument("--depth", type=int, default=7)
    p.add_argument("--fit", action="store_true", help="fit a + b sin(c log t + d) to the scaled trace")
    p = parsers["project"]
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--point", default="0", help="vertex index or address such as F:0233,q:3")
    p = parsers["weyl"]
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--count", type=int, default=200)
    p = parsers["gaps"]
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--point", type=float, help="only search for a gap around this ratio")
    p = parsers["cluster"]
    p.add_argument("--count", type=int, default=0, help="also build this many clustered eigenvalues")
    p.add_argument("--eps", type=_positive_float, default=1e-3)
    p = parsers["green"]
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--y", default="arm:1,s:0.5", help="source point: arm:A,s:S,off:T or a vertex address")
    p.add_argument("--x", help="evaluate at a single point instead of the whole graph")
    parsers["arm"].add_argument("--series", choices=asymptotics.SERIES_CHOICES, default="fourthirds")
    p = parsers["convergence"]
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--series", choices=("zero", "fourthirds"), default="fourthirds")
    p.add_argument("--ns", default="8,16,32,64", help="comma-separated values of n")
    return parser


def render(command: str, payload, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"schema_version": SCHEMA_VERSION, "command": command, "payload": payload}, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.n < 2:
        print("error: n must be ≥ 2", file=sys.stderr)
        return EXIT_INVALID
    func = COMMANDS[args.command][0]
    try:
        payload, rows = func(args)
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = render(args.command, payload, rows, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
