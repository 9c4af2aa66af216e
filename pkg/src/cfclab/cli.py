"""Command-line front end.

Subcommands
-----------
reduced    bin probabilities and per-site Fisher information of the doubly
           nested device; ``--paper-table`` runs the published-constants
           battery with pass/fail flags.
full       0-bit violation of the N x M device: exact sum, closed asymptote,
           or measured on the simulated device.
classical  ball-and-pipe protocol transcript and post-selection summary.
sweep      CSV of exact vs asymptotic violation over an (N, M) grid.

Exit codes: 0 success (and, where applicable, all checks passed);
2 usage error; 3 non-converged extrapolation; 1 failed checks.

Parallelism for sweeps is capped by the CFC_LAB_THREADS environment
variable (default 1). Identical flags and seed produce byte-identical
output.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

from . import analysis, classical, jsonio
from .circuits import BitProcess, ReducedParams, build_reduced
from .optics import Polarization, propagate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

PAPER_TABLE_REFERENCE_ANGLES = (0.05, 0.3, 0.7, 1.2)
PAPER_TABLE_CURVE_ANGLES = (0.05, 0.1, 0.2, 0.3)


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    if len(grid) < 2 or any(g <= 0 for g in grid) or any(
        grid[i] <= grid[i + 1] for i in range(len(grid) - 1)
    ):
        raise argparse.ArgumentTypeError(
            "grid must be >= 2 positive, strictly decreasing angles"
        )
    return grid


def _parse_range(text: str) -> tuple[int, ...]:
    """'2:8' or '2:64:2' (inclusive stop) or comma list '2,4,8'."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) == 2:
                start, stop, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ValueError
            if step <= 0 or stop < start:
                raise ValueError
            return tuple(range(start, stop + 1, step))
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfclab",
        description="Interferometer simulation and Fisher-information analysis "
        "of counterfactual communication protocols.",
    )
    parser.add_argument("--config", help="JSON file with flag defaults", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=("table", "json", "csv"), default="table")
        p.add_argument("--output", default=None, help="write to file instead of stdout")
        p.add_argument("--grid", type=_parse_grid, default=analysis.DEFAULT_GRID,
                       help="extrapolation grid, comma-separated decreasing angles")

    p_red = sub.add_parser("reduced", help="doubly nested device")
    add_common(p_red)
    p_red.add_argument("--bit", type=int, choices=(0, 1), default=0)
    p_red.add_argument("--theta1", type=float, default=0.0)
    p_red.add_argument("--theta2", type=float, default=0.0)
    p_red.add_argument("--postselect", action="store_true",
                       help="also report Fisher information conditioned on d0/d1")
    p_red.add_argument("--paper-table", action="store_true",
                       help="check all published constants; exit 0 iff all pass")
    p_red.add_argument("--error-target", type=float, default=0.05)

    p_full = sub.add_parser("full", help="N x M chained device")
    add_common(p_full)
    p_full.add_argument("-N", "--outer", type=int, required=True)
    p_full.add_argument("-M", "--inner", type=int, required=True)
    p_full.add_argument("--mode", choices=("sum", "asymptotic", "simulate"),
                        default="sum")
    p_full.add_argument("--bit", type=int, choices=(0, 1), default=0,
                        help="bit process for --mode simulate")
    p_full.add_argument("--error-target", type=float, default=0.05)

    p_cls = sub.add_parser("classical", help="ball-and-pipe protocol")
    add_common(p_cls)
    p_cls.add_argument("--length", type=int, default=10000)
    p_cls.add_argument("--seed", type=int, default=0)
    p_cls.add_argument("--message", default=None,
                       help="explicit bit string, overrides --length/--seed")

    p_sw = sub.add_parser("sweep", help="exact vs asymptotic violation grid")
    add_common(p_sw)
    p_sw.set_defaults(format="csv")
    p_sw.add_argument("--n-range", type=_parse_range, required=True)
    p_sw.add_argument("--m-range", type=_parse_range, required=True)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        parser.error("--config needs a path")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {path!r}: {exc}")
    if not isinstance(cfg, dict):
        parser.error(f"config {path!r} must hold a JSON object")
    subparsers = [
        p
        for sp in parser._subparsers._group_actions
        for p in sp.choices.values()
    ]
    known = {action.dest for p in subparsers for action in p._actions}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known:
            parser.error(f"unknown config key {key!r}")
        if dest == "grid" and isinstance(value, str):
            value = _parse_grid(value)
        if dest in ("n_range", "m_range") and isinstance(value, str):
            value = _parse_range(value)
        # subparser defaults shadow the parent namespace, so set them there
        for p in subparsers:
            if any(a.dest == dest for a in p._actions):
                p.set_defaults(**{dest: value})
    return argv[:idx] + argv[idx + 2:]


def _fisher_site_entry(bit, site, theta_site, theta_other, grid, keep):
    """Point evaluation when the site angle is positive, else the zero limit."""
    if theta_site > 0.0:
        circ = build_reduced(ReducedParams(bit=bit))
        other_site = "theta2" if site == "theta1" else "theta1"
        dist = propagate(
            circ, {site: theta_site, other_site: theta_other}, active_param=site
        )
        value = (
            analysis.fisher_postselected(dist, keep)
            if keep
            else analysis.fisher(dist)
        )
        return {"site": site, "theta": theta_site, "value": value,
                "extrapolated": False, "converged": True}
    report = analysis.fisher_limit(
        analysis.reduced_site_family(bit, site, other=theta_other),
        site=site, grid=grid, keep_roles=keep or None,
    )
    return {"site": site, "theta": 0.0, "value": report.limit,
            "extrapolated": True, "residual": report.residual,
            "converged": report.converged}


def cmd_reduced(args) -> tuple[object, int]:
    if args.paper_table:
        return _paper_table(args)
    bit = BitProcess(args.bit)
    circ = build_reduced(ReducedParams(theta1=args.theta1, theta2=args.theta2, bit=bit))
    dist = propagate(circ)
    bins = {}
    for bin_id in circ.bin_ids:
        bins[bin_id] = {
            "role": circ.bin_roles[bin_id],
            "H": dist.bins[(bin_id, Polarization.H)][0],
            "V": dist.bins[(bin_id, Polarization.V)][0],
        }
    report = {
        "bit": args.bit,
        "theta1": args.theta1,
        "theta2": args.theta2,
        "bins": bins,
        "fisher": {},
    }
    code = EXIT_OK
    for site, th, other in (
        ("theta1", args.theta1, args.theta2),
        ("theta2", args.theta2, args.theta1),
    ):
        entry = _fisher_site_entry(bit, site, th, other, args.grid, keep=())
        report["fisher"][site] = entry
        if not entry["converged"]:
            code = EXIT_NUMERIC
    if args.postselect:
        report["postselected"] = {}
        for site, th, other in (
            ("theta1", args.theta1, args.theta2),
            ("theta2", args.theta2, args.theta1),
        ):
            entry = _fisher_site_entry(
                bit, site, th, other, args.grid, keep=analysis.POSTSELECT_ROLES
            )
            report["postselected"][site] = entry
            if not entry["converged"]:
                code = EXIT_NUMERIC
    return report, code


def _paper_table(args) -> tuple[object, int]:
    rows = []

    def row(name, value, target, tol, ok=None):
        ok = (abs(value - target) <= tol) if ok is None else ok
        rows.append({"name": name, "value": value, "target": target,
                     "tolerance": tol, "pass": bool(ok)})

    ref = analysis.build_reference()
    worst = max(
        (analysis.fisher(propagate(ref, {"theta": th}, active_param="theta"))
         for th in PAPER_TABLE_REFERENCE_ANGLES),
        key=lambda f: abs(f - 4.0),
    )
    row("F_ref", worst, 4.0, 1e-9)

    vio = analysis.d_vio_reduced(error_target=args.error_target, grid=args.grid)
    site1, site2 = vio.sites
    row("F0(theta1)", site1.fisher_zero.limit, 1.6, 1e-6)

    curve_worst, curve_target = None, None
    for th1 in PAPER_TABLE_CURVE_ANGLES:
        rep = analysis.fisher_limit(
            analysis.reduced_site_family(BitProcess.ZERO, "theta2", other=th1),
            site="theta2", grid=args.grid,
        )
        target = 0.8 * (1.0 - math.cos(th1))
        if curve_worst is None or abs(rep.limit - target) > abs(curve_worst - curve_target):
            curve_worst, curve_target = rep.limit, target
    row("F0(theta2|theta1) curve", curve_worst, curve_target, 1e-9)

    row("F1(theta1)", site1.fisher_one.limit, 1.6, 1e-6)
    row("F1(theta2)", site2.fisher_one.limit, 0.4, 1e-6)

    circ0 = build_reduced(ReducedParams(bit=BitProcess.ZERO))
    circ1 = build_reduced(ReducedParams(bit=BitProcess.ONE))
    row("P(d0 | 0-bit)", propagate(circ0).probability("d0"), 0.04, 1e-12)
    row("P(d0 | 1-bit)", propagate(circ1).probability("d0"), 0.0, 1e-12)
    row("n_gamma", float(vio.plan.n_gamma), 74.0, 0.0,
        ok=vio.plan.n_gamma == 74)
    row("sum contributions", vio.contribution_sum, 0.45, 1e-9)
    row("D_vio", vio.d_vio, 33.3, 1e-9)

    all_pass = all(r["pass"] for r in rows) and vio.converged
    payload = {"rows": rows, "all_pass": all_pass, "converged": vio.converged}
    if not vio.converged:
        return payload, EXIT_NUMERIC
    return payload, EXIT_OK if all_pass else EXIT_FAIL


def cmd_full(args) -> tuple[object, int]:
    n, m = args.outer, args.inner
    if args.mode == "sum":
        return {"n": n, "m": m, "mode": "sum",
                "d_vio": analysis.d_vio_full_sum(n, m)}, EXIT_OK
    if args.mode == "asymptotic":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analysis.AsymptoticRegimeWarning)
            value = analysis.d_vio_full_asymptotic(n, m)
        return {"n": n, "m": m, "mode": "asymptotic", "d_vio": value,
                "regime_valid": analysis.asymptotic_regime_valid(n, m)}, EXIT_OK
    report = analysis.d_vio_full_simulated(
        n, m, BitProcess(args.bit), error_target=args.error_target, grid=args.grid
    )
    payload = report.to_dict()
    payload.pop("sites")  # per-site grids are bulky; summary only
    payload["mode"] = "simulate"
    return payload, EXIT_OK if report.converged else EXIT_NUMERIC


def cmd_classical(args) -> tuple[object, int]:
    if args.message is not None:
        try:
            message = tuple(int(c) for c in args.message)
        except ValueError:
            raise SystemExit(EXIT_USAGE)
    else:
        message = classical.generate_message(args.length, args.seed)
    transcript = classical.run_classical(message)
    ok = transcript.kept_all_counterfactual()
    if args.format == "csv":
        return transcript, EXIT_OK if ok else EXIT_FAIL
    payload = {"seed": args.seed, **transcript.to_dict()}
    del payload["decoded_bits"], payload["kept_indices"]  # summary output
    return payload, EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> tuple[object, int]:
    points = [(n, m) for n in args.n_range for m in args.m_range]

    def evaluate(point):
        n, m = point
        d_sum = analysis.d_vio_full_sum(n, m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analysis.AsymptoticRegimeWarning)
            d_asym = analysis.d_vio_full_asymptotic(n, m)
        return (n, m, d_sum, d_asym, abs(d_asym - d_sum) / d_sum)

    threads = int(os.environ.get("CFC_LAB_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(evaluate, points))
    else:
        rows = [evaluate(p) for p in points]
    return rows, EXIT_OK


def _paper_table_text(payload) -> str:
    ff = jsonio.format_float
    headers = ("constant", "value", "target", "tolerance", "status")
    body = [
        (
            r["name"],
            ff(r["value"], jsonio.TABLE_SIG),
            ff(r["target"], jsonio.TABLE_SIG),
            ff(r["tolerance"], 3),
            "pass" if r["pass"] else "FAIL",
        )
        for r in payload["rows"]
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.ljust(widths[i]) for i, c in enumerate(row)) for row in body]
    lines.append(
        "all constants reproduced" if payload["all_pass"] else "SOME CONSTANTS FAILED"
    )
    return "\n".join(lines) + "\n"


def _render(args, payload) -> str:
    from .classical import ClassicalTranscript

    if isinstance(payload, ClassicalTranscript):
        return payload.to_csv()
    if args.format == "table" and isinstance(payload, dict) and "rows" in payload:
        return _paper_table_text(payload)
    if args.command == "sweep":
        if args.format == "json":
            return jsonio.dumps(
                [dict(zip(("n", "m", "d_sum", "d_asym", "rel_gap"), r)) for r in payload]
            )
        header = "n,m,d_sum,d_asym,rel_gap"
        ff = jsonio.format_float
        lines = [header] + [
            f"{n},{m},{ff(ds)},{ff(da)},{ff(gap)}" for n, m, ds, da, gap in payload
        ]
        text = "\n".join(lines) + "\n"
        if args.format == "table":
            return text.replace(",", "\t")
        return text
    if args.format == "json":
        return jsonio.dumps(payload)
    if args.format == "csv":
        return jsonio.to_csv(payload)
    return jsonio.to_table(payload)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config(parser, argv)
    args = parser.parse_args(argv)

    handlers = {
        "reduced": cmd_reduced,
        "full": cmd_full,
        "classical": cmd_classical,
        "sweep": cmd_sweep,
    }
    payload, code = handlers[args.command](args)
    text = _render(args, payload)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
