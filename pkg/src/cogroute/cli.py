"""Command line entry point.

    cogroute --config cfg.toml analyze
    cogroute --config cfg.toml --out results/ reproduce fig4
    cogroute --config cfg.toml calibrate fig4-90pct-4ch
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, ExperimentConfig
from .qos import InfeasibleQoS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_CALIBRATION = 4

log = logging.getLogger("cogroute")


def _cell(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return _cell(v.item())
    return "" if v is None else str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit(name: str, header, rows, out: str | None):
    text = to_csv(header, rows)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / f"{name}.csv", "w", newline="") as fh:
        fh.write(text)
    log.info("wrote %s", path / f"{name}.csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cogroute", description=__doc__.splitlines()[0] if __doc__ else None)
    ap.add_argument("--config", help="TOML experiment config (defaults apply when omitted)")
    ap.add_argument("--seed", type=int, help="override montecarlo.seed")
    ap.add_argument("--episodes", type=int, help="override montecarlo.episodes")
    ap.add_argument("--out", help="directory for CSV output (stdout when omitted)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", help="closed-form route report")
    sub.add_parser("mc", help="Monte Carlo estimate compared with the closed form")
    sub.add_parser("plan", help="QoS channel plan")
    sub.add_parser("sweep", help="vary one config field, one analysis row per value")
    rep = sub.add_parser("reproduce", help="data behind one figure (fig3..fig10)")
    rep.add_argument("figure", choices=experiments.FIGURES)
    cal = sub.add_parser("calibrate", help="fit the PU-return rate scale to a named target")
    cal.add_argument("target", choices=experiments.CALIBRATION_TARGETS)
    return ap


def load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.from_dict({})
    if args.seed is not None:
        cfg = cfg.replace("montecarlo.seed", args.seed)
    if args.episodes is not None:
        cfg = cfg.replace("montecarlo.episodes", args.episodes)
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "analyze":
            emit("analyze", *experiments.analyze(cfg), args.out)
        elif args.command == "mc":
            emit("mc", *experiments.monte_carlo(cfg), args.out)
        elif args.command == "plan":
            emit("plan", *experiments.plan_table(cfg), args.out)
        elif args.command == "sweep":
            emit("sweep", *experiments.sweep(cfg), args.out)
        elif args.command == "reproduce":
            emit(args.figure, *experiments.reproduce(cfg, args.figure), args.out)
        elif args.command == "calibrate":
            emit("calibrate", *experiments.calibration_report(cfg, args.target), args.out)
    except InfeasibleQoS as exc:
        print(f"infeasible QoS: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except experiments.CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
