"""Command-line front end: ``evolve``, ``sweep``, ``contours`` and ``verify``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .sweep import (CONFIG_KEYS, ConfigError, RunConfig, SweepGrid, apply_overrides, contour_rows,
                    evolve_rows, load_config, run_sweep, verify_report)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def fmt(x) -> str:
    """Nine significant digits, locale-independent, no negative zero."""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    return f"{x + 0.0 if x == 0 else x:.9g}"


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    sup = argparse.SUPPRESS
    p.add_argument("--config", default=sup, help="key = value configuration file")
    p.add_argument("--out", default=sup, help="output path (default stdout)")
    p.add_argument("--threads", type=int, default=sup, help="worker threads for sweeps")
    p.add_argument("--unsafe", action="store_true", default=sup,
                   help="allow |g0/delta| above the large-detuning limit")
    for key in CONFIG_KEYS:
        p.add_argument(f"--{key}", default=sup, metavar="VALUE", help=f"override {key}")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="tdft", parents=[common],
                                     description="Two-atom entanglement from a cavity transit.")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evolve", parents=[common], help="time trace of one transit")
    ev.add_argument("--samples", type=int, default=601)

    sw = sub.add_parser("sweep", parents=[common], help="entropy on a (v, z0) grid")
    sw.add_argument("--v_min", type=float, default=0.05)
    sw.add_argument("--v_max", type=float, default=2.0)
    sw.add_argument("--nv", type=int, default=101)
    sw.add_argument("--z0_min", type=float, default=-4.0)
    sw.add_argument("--z0_max", type=float, default=4.0)
    sw.add_argument("--nz", type=int, default=101)

    co = sub.add_parser("contours", parents=[common], help="maximal-entanglement lines")
    co.add_argument("--n_max", type=int, default=6)
    co.add_argument("--z0_min", type=float, default=0.0)
    co.add_argument("--z0_max", type=float, default=4.0)
    co.add_argument("--nz", type=int, default=81)
    co.add_argument("--allow_large", action="store_true", help="permit n_max above 6")

    sub.add_parser("verify", parents=[common], help="run all checks, print a JSON report")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            cfg = load_config(args.config, cfg)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from exc
    overrides = {k: getattr(args, k) for k in CONFIG_KEYS if hasattr(args, k)}
    cfg = apply_overrides(cfg, overrides)
    if getattr(args, "unsafe", False):
        from dataclasses import replace
        cfg = replace(cfg, unsafe=True)
    return cfg


def run(args) -> tuple[str, int]:
    cfg = resolve_config(args)
    threads = getattr(args, "threads", None)
    if args.command == "evolve":
        rows = evolve_rows(cfg, args.samples)
        header = ["t_us", "g1", "g2", "f", "theta", "p_ge", "p_eg", "entropy"]
        return write_csv(header, rows), EXIT_OK
    if args.command == "sweep":
        grid = SweepGrid(args.v_min, args.v_max, args.z0_min, args.z0_max, args.nv, args.nz)
        cfg.params()
        recs = run_sweep(grid, cfg, threads)
        rows = [(r.v_reduced, r.z0_reduced, r.theta_inf, r.entropy) for r in recs]
        return write_csv(["v_reduced", "z0_reduced", "theta_inf", "entropy"], rows), EXIT_OK
    if args.command == "contours":
        rows = contour_rows(args.n_max, args.z0_min, args.z0_max, args.nz,
                            allow_large=args.allow_large)
        return write_csv(["n", "z0_reduced", "v_reduced"], rows), EXIT_OK
    report = verify_report(cfg)
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    return text, EXIT_OK if report["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = run(args)
    except ConfigError as exc:
        print(f"tdft: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"tdft: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
