"""Command-line interface: ``reset-verdict {analyze,hbeta-scan,simulate,demo}``.

Exit codes: 0 stable (or success), 3 not quadratically stable, 4 hypothesis
failed, 2 input or usage error, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import hbeta, nsv, sim
from .errors import ResetVerdictError, InputError, ImproperTransferFunction
from .system import DEMO_TUNING, SystemDescription, demo_system

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_INPUT = 2
EXIT_NOT_QS = 3
EXIT_HYPOTHESIS = 4

_VERDICT_EXIT = {
    nsv.Verdict.UBIBS_STABLE: EXIT_OK,
    nsv.Verdict.NOT_QUADRATICALLY_STABLE: EXIT_NOT_QS,
    nsv.Verdict.HYPOTHESIS_FAILED: EXIT_HYPOTHESIS,
}


def fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def round6(obj):
    """Round every float to 6 significant digits (stable textual output)."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.6g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round6(v) for v in obj]
    if hasattr(obj, "item"):
        return round6(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(round6(obj), indent=2, sort_keys=False) + "\n"


# ------------------------------------------------------------------ inputs


def load_system(args) -> SystemDescription:
    if args.demo:
        system = demo_system(args.demo)
    else:
        try:
            text = Path(args.input).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
        system = SystemDescription.from_json(text)
    if args.gamma is not None:
        try:
            system = system.with_gamma(args.gamma)
        except ValueError as exc:
            raise InputError(f"invalid --gamma: {exc}") from None
    return system


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt_flag(args, default: str = "md") -> str:
    for name in ("json", "csv", "md"):
        if getattr(args, name, False):
            return name
    return default


# ----------------------------------------------------------------- analyze


def _analysis_md(rep: nsv.ClassificationReport) -> str:
    d = rep.to_dict()
    rows = [
        ("verdict", d["verdict"]),
        ("type I", d["type_I"]),
        ("type II", d["type_II"]),
        ("M (rad/s)", ", ".join(fmt(w) for w in rep.M) or "empty"),
        ("Q (rad/s)", ", ".join(fmt(w) for w in rep.Q) or "empty"),
        ("sign upsilon on M", _signs(rep.upsilon_on_M)),
        ("sign chi on Q", _signs(rep.chi_on_Q)),
        ("I3", "empty" if not rep.I3 else "; ".join(f"{fmt(a)}-{fmt(b)}" for a, b in rep.I3)),
        ("theta1 (deg)", fmt(d["theta1_deg"])),
        ("theta2 (deg)", fmt(d["theta2_deg"])),
        ("delta1 / psi1", f"{fmt(rep.delta1)} / {fmt(rep.psi1)}"),
        ("delta2 / psi2", f"{fmt(rep.delta2)} / {fmt(rep.psi2)}"),
    ]
    lines = [f"# {rep.label or 'system'}", "", "| quantity | value |", "|---|---|"]
    lines += [f"| {k} | {fmt(v)} |" for k, v in rows]
    for note in rep.notes:
        lines.append(f"\nnote: {note}")
    return "\n".join(lines) + "\n"


def _signs(values) -> str:
    if not values:
        return "-"
    return "".join("+" if v > 0 else ("-" if v < 0 else "0") for v in values)


def _grid(args) -> nsv.FrequencyGrid:
    if not (0 < args.wmin < args.wmax) or args.points < 2:
        raise InputError("need 0 < --wmin < --wmax and --points >= 2")
    return nsv.FrequencyGrid(args.wmin, args.wmax, args.points)


def cmd_analyze(args) -> int:
    system = load_system(args)
    if system.reset_element.is_linear:
        raise InputError("gamma = 1 disables resetting; use 'simulate' for the linear loop")
    rep, curve = nsv.theorem1_verdict(system, _grid(args), return_curve=True)
    if args.emit_angles:
        Path(args.emit_angles).write_text(curve.angle_csv())
    if _fmt_flag(args) == "json":
        _emit(dumps(rep.to_dict()), args.out)
    else:
        _emit(_analysis_md(rep), args.out)
    return _VERDICT_EXIT[rep.verdict]


# -------------------------------------------------------------- hbeta-scan


def _scan(system, args) -> hbeta.FeasibleRegion:
    if not args.beta_min < args.beta_max or not args.rho_max > 1e-3 or args.res < 2:
        raise InputError("need --beta-min < --beta-max, --rho-max > 1e-3 and --res >= 2")
    return hbeta.scan(system, (args.beta_min, args.beta_max), (1e-3, args.rho_max), args.res)


def cmd_hbeta_scan(args) -> int:
    system = load_system(args)
    region = _scan(system, args)
    if not region.nonempty:
        print(f"warning: no feasible (beta, rho') pair found for {system.label or 'system'}",
              file=sys.stderr)
        for note in region.notes:
            print(f"warning: {note}", file=sys.stderr)
    summary = dumps(region.to_dict())
    if args.out:
        prefix = Path(args.out)
        if prefix.suffix in (".json", ".csv"):
            prefix = prefix.with_suffix("")
        prefix.with_suffix(".json").write_text(summary)
        prefix.with_suffix(".csv").write_text(region.to_csv())
    elif _fmt_flag(args, "json") == "csv":
        sys.stdout.write(region.to_csv())
    else:
        sys.stdout.write(summary)
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def _signal(args) -> sim.Signal:
    if args.sine is not None:
        if not args.sine > 0:
            raise InputError("--sine frequency must be positive")
        return sim.Signal("sine", 1.0, 0.0, 2 * math.pi * args.sine)
    if args.ramp:
        return sim.Signal("ramp", 1.0)
    return sim.step()


def cmd_simulate(args) -> int:
    system = load_system(args)
    if not args.horizon > 0:
        raise InputError("--horizon must be positive")
    cl = sim.assemble_system(system)
    r = _signal(args)
    if args.reference:
        if not r.is_piecewise_constant():
            raise InputError("--reference needs a piecewise-constant input (--step)")
        trace = sim.reference_trace(cl, r, args.horizon)
    else:
        trace = sim.simulate(cl, r, sim.Signal(), args.horizon)
    kind = _fmt_flag(args, "")
    if args.out and not kind:
        kind = "json" if args.out.endswith(".json") else "csv"
    if kind == "csv":
        _emit(trace.to_csv(), args.out)
    elif kind == "json":
        _emit(dumps(trace.to_dict()), args.out)
    else:
        _emit(_trace_summary(system, trace), args.out)
    return EXIT_OK


def _trace_summary(system, trace: sim.SimTrace) -> str:
    import numpy as np

    lines = [
        f"system: {system.label or 'system'}  gamma: {fmt(system.reset_element.gamma)}",
        f"horizon: {fmt(float(trace.times[-1]))} s  samples: {trace.times.size}",
        f"resets: {len(trace.reset_instants)}",
    ]
    if trace.reset_instants:
        lines.append(f"first reset: {fmt(trace.reset_instants[0])} s")
        lines.append(f"max |e| at resets: {fmt(float(np.max(np.abs(trace.reset_errors))))}")
    lines.append(f"max y: {fmt(float(trace.y.max()))}  final y: {fmt(float(trace.y[-1]))}")
    lines.append(f"max state norm: {fmt(float(np.linalg.norm(trace.states, axis=1).max()))}")
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------------- demo


def _demo_row(name: str, args) -> dict:
    system = demo_system(name)
    t0 = time.perf_counter()
    rep = nsv.theorem1_verdict(system, _grid(args))
    t1 = time.perf_counter()
    region = _scan(system, args)
    t2 = time.perf_counter()
    check = hbeta.cross_check(rep, region)
    return {
        "system": name,
        "verdict": rep.verdict.value,
        "type": "I" if rep.type_I else ("II" if rep.type_II else "-"),
        "M": list(rep.M),
        "Q": list(rep.Q),
        "sign_upsilon_on_M": _signs(rep.upsilon_on_M),
        "sign_chi_on_Q": _signs(rep.chi_on_Q),
        "I3_empty": not rep.I3,
        "delta1": rep.delta1,
        "psi1": rep.psi1,
        "delta1_lt_psi1": None if rep.delta1 is None else rep.delta1 < rep.psi1,
        "theta1_deg": math.degrees(rep.theta1),
        "theta2_deg": math.degrees(rep.theta2),
        "ratio_interval": None if region.ratio_interval is None else list(region.ratio_interval),
        "ratio_convex": region.ratio_convex,
        "cross_check": check.status,
        "seconds_analyze": t1 - t0,
        "seconds_scan": t2 - t1,
    }


DEMO_NOTES = [
    "L2: the tabulated reference upper bound of the rho'/beta interval is malformed; "
    "the value reported here is computed by the oracle.",
]


def _demo_md(rows: list[dict]) -> str:
    out = ["# Demo systems", "", "## Classification", "",
           "| system | M (rad/s) | Q (rad/s) | sign N_upsilon on M | sign N_chi on Q | I3 | "
           "delta1 | psi1 | delta1 < psi1 | theta1 (deg) | theta2 (deg) | type | verdict |",
           "|---|---|---|---|---|---|---|---|---|---|---|---|---|"]
    for r in rows:
        out.append("| " + " | ".join([
            r["system"], "-".join(fmt(w) for w in r["M"]), "-".join(fmt(w) for w in r["Q"]),
            r["sign_upsilon_on_M"], r["sign_chi_on_Q"], "empty" if r["I3_empty"] else "nonempty",
            fmt(r["delta1"]), fmt(r["psi1"]), fmt(r["delta1_lt_psi1"]),
            fmt(r["theta1_deg"]), fmt(r["theta2_deg"]), r["type"], r["verdict"]]) + " |")
    out += ["", "## Feasible rho'/beta interval (beta > 0)", "",
            "| system | lower | upper | interval | cross-check |", "|---|---|---|---|---|"]
    for r in rows:
        lo, hi = r["ratio_interval"] or (None, None)
        out.append(f"| {r['system']} | {fmt(lo)} | {fmt(hi)} | {fmt(r['ratio_convex'])} | {r['cross_check']} |")
    out.append("")
    out += [f"note: {n}" for n in DEMO_NOTES]
    return "\n".join(out) + "\n"


def cmd_demo(args) -> int:
    names = sorted(DEMO_TUNING)
    workers = min(len(names), max(1, hbeta.worker_threads()))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda n: _demo_row(n, args), names))
    else:
        rows = [_demo_row(n, args) for n in names]
    if _fmt_flag(args) == "json":
        report = {"systems": [{k: v for k, v in r.items() if not k.startswith("seconds")} for r in rows],
                  "notes": DEMO_NOTES}
        _emit(dumps(report), args.out)
    else:
        _emit(_demo_md(rows), args.out)
    worst = max(_VERDICT_EXIT[nsv.Verdict(r["verdict"])] for r in rows)
    return worst


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reset-verdict",
        description="Frequency-domain stability analysis and simulation of reset control systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    source = argparse.ArgumentParser(add_help=False)
    g = source.add_mutually_exclusive_group(required=True)
    g.add_argument("--demo", metavar="ID", help="demo system C1..C5 (L1..L5 accepted)")
    g.add_argument("--input", metavar="FILE", help="system description JSON")
    source.add_argument("--gamma", type=float, help="override the reset coefficient")

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--out", metavar="FILE")
    f = output.add_mutually_exclusive_group()
    f.add_argument("--json", action="store_true")
    f.add_argument("--csv", action="store_true")
    f.add_argument("--md", action="store_true")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--wmin", type=float, default=nsv.FrequencyGrid.wmin)
    grid.add_argument("--wmax", type=float, default=nsv.FrequencyGrid.wmax)
    grid.add_argument("--points", type=int, default=nsv.FrequencyGrid.points)

    box = argparse.ArgumentParser(add_help=False)
    box.add_argument("--beta-min", type=float, default=-10.0)
    box.add_argument("--beta-max", type=float, default=10.0)
    box.add_argument("--rho-max", type=float, default=100.0)
    box.add_argument("--res", type=int, default=200)

    p = sub.add_parser("analyze", parents=[source, grid, output],
                       help="classify a system and report its stability verdict")
    p.add_argument("--emit-angles", metavar="FILE", help="write (omega, theta_deg) CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("hbeta-scan", parents=[source, box, output],
                       help="scan (beta, rho') with the direct positivity check")
    p.set_defaults(func=cmd_hbeta_scan)

    p = sub.add_parser("simulate", parents=[source, output], help="simulate the reset loop")
    s = p.add_mutually_exclusive_group()
    s.add_argument("--step", action="store_true", help="unit step reference (default)")
    s.add_argument("--sine", type=float, metavar="F", help="unit sine reference at F Hz")
    s.add_argument("--ramp", action="store_true", help="unit-slope ramp reference")
    p.add_argument("--horizon", type=float, default=0.1, metavar="T")
    p.add_argument("--reference", action="store_true",
                   help="jump-free matrix-exponential trace instead of the hybrid simulation")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo", parents=[grid, box, output],
                       help="classification and oracle tables for all demo systems")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ImproperTransferFunction) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResetVerdictError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
