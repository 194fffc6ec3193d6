"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 I/O error, 4 statistically insufficient data. Logs go to stderr; stdout
carries only machine-readable output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import ChannelError, Conversion, DualRailParams, Reset, dual_rail_step
from .config import ConfigError, RunConfig, load_config
from .decoders import decode_batch
from .frame import FrameSampler
from .montecarlo import (
    CSV_HEADER,
    HierarchyResult,
    InsufficientStatistics,
    _compiled,
    build_circuit,
    fit_scaling_exponent,
    find_threshold,
    hierarchy_points,
    run_points,
)

log = logging.getLogger("erasureqec")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO, EXIT_STATS = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit(cfg: RunConfig, name: str, report: dict, rows=None):
    """Report JSON to stdout; with --out also <out>/<name>.json and <name>.csv."""
    text = _dump(report)
    if cfg.out is not None:
        _write(cfg.out / f"{name}.json", text)
        if rows is not None:
            _write(cfg.out / f"{name}.csv", rows_to_csv(rows))
    sys.stdout.write(text)


def _load(args) -> RunConfig:
    if not args.config:
        raise UsageError("--config is required for this command")
    cfg = load_config(args.config)
    return cfg.with_overrides(shots=args.shots, seed=args.seed, workers=args.workers, out=args.out)


def _run_series(cfg: RunConfig):
    rows = run_points(cfg.points, cfg.shots, cfg.seed, cfg.workers)
    by_series = {s.name: [] for s in cfg.series}
    for r in rows:
        by_series[r.point.series].append(r)
    return rows, by_series


# --------------------------------------------------------------------------- commands

def cmd_channel(args) -> int:
    try:
        if args.t1 is not None:
            if args.dt is None:
                raise UsageError("--t1 needs --dt")
            params = DualRailParams.from_t1(args.t1, args.dt, phi=args.phi, f_pos=args.f_pos, f_neg=args.f_neg,
                                            conversion=Conversion(args.conversion), reset=Reset(args.reset))
        else:
            params = DualRailParams(args.gamma, args.phi, args.f_pos, args.f_neg,
                                    Conversion(args.conversion), Reset(args.reset))
        eff = dual_rail_step(params)
    except (ChannelError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(json.dumps(eff.to_json_dict()) + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _load(args)
    point = cfg.points[0]
    if len(cfg.points) > 1:
        log.warning("config defines %d points; sampling the first (%s)", len(cfg.points), point.key())
    circuit = build_circuit(point)
    try:
        sampler = FrameSampler(circuit, cfg.force_checks)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    batch = sampler.sample(cfg.shots, cfg.seed)
    text = "".join(rec.to_json(i) + "\n" for i, rec in enumerate(batch.records()))
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    log.info("sampled %d shots, %d detectors, %d checks", cfg.shots, circuit.num_detectors, len(circuit.check_ids))
    return EXIT_OK


def cmd_decode(args) -> int:
    cfg = _load(args)
    if not args.input:
        raise UsageError("decode needs --input SHOTS.jsonl")
    point = cfg.points[0]
    circuit, _, graph = _compiled(point.structural())
    nd = circuit.num_detectors
    check_row = {c: i for i, c in enumerate(circuit.check_ids)}
    shots, dets, flags, obs = [], [], [], []
    with open(args.input) as fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                d = np.array([c == "1" for c in rec["detectors"]], dtype=np.uint8)
                fl = np.zeros(len(check_row), dtype=bool)
                fl[[check_row[int(c)] for c in rec["flags"]]] = True
                o = rec["obs"]
            except (ValueError, KeyError, TypeError) as exc:
                raise UsageError(f"{args.input}:{ln}: bad shot record ({exc})") from None
            if len(d) != nd:
                raise UsageError(f"{args.input}:{ln}: {len(d)} detectors, circuit has {nd}")
            shots.append(rec.get("shot", ln - 1))
            dets.append(d)
            flags.append(fl)
            obs.append(int(o[0]) if o else 0)
    if not shots:
        raise UsageError("no shots in input")
    pred, status = decode_batch(graph, point.decoder, np.array(dets), np.array(flags),
                                np.array(circuit.check_ids, dtype=np.int64))
    out = []
    fails = 0
    for s, p, a, st in zip(shots, pred, obs, status):
        fail = int(p & 1) != a
        fails += fail
        out.append(json.dumps({"shot": s, "predicted_obs": int(p & 1), "actual_obs": a, "fail": bool(fail),
                               "status": int(st)}) + "\n")
    if args.out:
        _write(Path(args.out), "".join(out))
    else:
        sys.stdout.write("".join(out))
    log.info("decoded %d shots, %d failures", len(shots), fails)
    return EXIT_OK


def cmd_threshold(args) -> int:
    cfg = _load(args)
    rows, by_series = _run_series(cfg)
    report = {"series": {}}
    for s in cfg.series:
        thr = find_threshold(by_series[s.name], s.analysis.rate, s.analysis.bootstrap, seed=cfg.seed)
        report["series"][s.name] = thr.to_json_dict() | {"rate": s.analysis.rate}
        if thr.found:
            log.info("series %r: crossing %.4f [%.4f, %.4f]", s.name, thr.crossing, thr.ci_lo, thr.ci_hi)
        else:
            log.warning("series %r: no crossing inside the grid", s.name)
    found = [v["crossing"] for v in report["series"].values() if v["found"]]
    if len(cfg.series) == 2 and len(found) == 2 and found[1] > 0:
        report["ratio"] = found[0] / found[1]
    _emit(cfg, "threshold", report, rows)
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg = _load(args)
    rows, by_series = _run_series(cfg)
    report = {"series": {}}
    problems = []
    for s in cfg.series:
        fits = {}
        for d in sorted({r.point.d for r in by_series[s.name]}):
            sub = [r for r in by_series[s.name] if r.point.d == d]
            try:
                fit = fit_scaling_exponent(sub, s.analysis.rate, s.analysis.threshold, s.analysis.min_failures)
                fits[str(d)] = fit.to_json_dict()
                log.info("series %r d=%d: slope %.3f (r2 %.4f)", s.name, d, fit.slope, fit.r2)
            except InsufficientStatistics as exc:
                problems.append(f"series {s.name!r} d={d}: {exc}")
                fits[str(d)] = {"error": str(exc)}
        report["series"][s.name] = {"rate": s.analysis.rate, "threshold": s.analysis.threshold, "fits": fits}
    _emit(cfg, "scaling", report, rows)
    if problems:
        for p in problems:
            log.error("insufficient statistics: %s", p)
        return EXIT_STATS
    return EXIT_OK


def cmd_hierarchy(args) -> int:
    cfg = _load(args)
    base = cfg.series[0]
    r = base.analysis.hierarchy_rate
    template = base.points[0]
    distances = sorted({p.d for p in base.points})
    points = [pt for d in distances for pt in hierarchy_points(d, r, template.rounds, template.decoder)]
    rows = run_points(points, cfg.shots, cfg.seed, cfg.workers)
    report = {"rate": r, "distances": {}}
    for d in distances:
        sub = {row.point.series: row for row in rows if row.point.d == d}
        h = HierarchyResult(sub["missed"], sub["pauli"], sub["heralded"])
        gap1, gap2 = h.separations()
        report["distances"][str(d)] = {
            "p_l": {k: sub[k].p_l for k in ("missed", "pauli", "heralded")},
            "separation_sigma": [gap1, gap2],
            "ordered_3sigma": h.ordered(3.0),
        }
        log.info("d=%d missed %.3g > pauli %.3g > heralded %.3g (gaps %.1f, %.1f sigma)", d,
                 sub["missed"].p_l, sub["pauli"].p_l, sub["heralded"].p_l, gap1, gap2)
    _emit(cfg, "hierarchy", report, rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    names = args.suite or list(verify.SUITES)
    unknown = [n for n in names if n not in verify.SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(verify.SUITES)}")
    failed = []
    for name in names:
        res = verify.SUITES[name]()
        sys.stdout.write(res.summary() + "\n")
        for line in res.lines:
            sys.stdout.write("  " + line.replace("\n", "\n  ") + "\n")
        if not res.passed:
            failed.append(name)
    if failed:
        log.error("failing suite(s): %s", ", ".join(failed))
        return EXIT_VERIFY
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--seed", type=int, help="override the base seed")
    common.add_argument("--shots", type=int, help="override shots per point")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output directory (file for sample/decode)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(prog="erasureqec", description="Erasure-qubit QEC simulator and decoders.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ch = sub.add_parser("channel", parents=[common], help="effective per-step channel of a dual-rail qubit")
    ch.add_argument("--gamma", type=float, default=0.0)
    ch.add_argument("--t1", type=float, help="decay time; with --dt sets gamma = 1 - exp(-dt/t1)")
    ch.add_argument("--dt", type=float)
    ch.add_argument("--phi", type=float, default=0.0)
    ch.add_argument("--f-pos", type=float, default=0.0)
    ch.add_argument("--f-neg", type=float, default=0.0)
    ch.add_argument("--conversion", choices=[c.value for c in Conversion], default="mixed")
    ch.add_argument("--reset", choices=[r.value for r in Reset], default="oneway")
    ch.set_defaults(func=cmd_channel)

    sp = sub.add_parser("sample", parents=[common], help="sample shots as JSONL")
    sp.set_defaults(func=cmd_sample)
    dp = sub.add_parser("decode", parents=[common], help="decode a JSONL shot file")
    dp.add_argument("--input", help="shots file from `sample`")
    dp.set_defaults(func=cmd_decode)
    for name, fn, hlp in (("threshold", cmd_threshold, "threshold crossing per series"),
                          ("scaling", cmd_scaling, "sub-threshold scaling exponents"),
                          ("hierarchy", cmd_hierarchy, "missed erasure vs Pauli vs erasure")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.set_defaults(func=fn)
    vp = sub.add_parser("verify", parents=[common], help="exhaustive small-instance checks")
    vp.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    vp.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except InsufficientStatistics as exc:
        log.error("insufficient statistics: %s", exc)
        return EXIT_STATS


if __name__ == "__main__":
    sys.exit(main())
