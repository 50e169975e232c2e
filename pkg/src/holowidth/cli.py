"""Command line: ``holowidth {run,taylor,bounds,widths,cover,semilinear,report}``.

Exit status 0 on success, 1 on a numerical/domain failure, 2 on a bad
configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from . import io
from .config import ConfigError, load_config
from .errors import CombinatorialBlowupError, HolowidthError
from .runner import STUDIES, collect_report, predict_cover, build_setup, run_studies

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG = 0, 1, 2


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``affine_s3``."""
    ref = resources.files("holowidth") / "configs" / f"{name}.yaml"
    return Path(str(ref))


def _config_path(value: str) -> Path:
    p = Path(value)
    if not p.exists() and not p.suffix:
        cand = bundled_config(value)
        if cand.exists():
            return cand
    return p


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="YAML config path or bundled config name")
    p.add_argument("--out", required=True, help="artifacts directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for snapshot solves")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holowidth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="run every configured study"))
    for name in STUDIES:
        sp = sub.add_parser(name, help=f"run only the {name} study")
        _add_run_args(sp)
        if name == "widths":
            sp.add_argument("--snapshots", default=None, help="reuse a snapshot archive (.hws)")
    rp = sub.add_parser("report", help="merge summaries of artifact directories")
    rp.add_argument("dirs", nargs="*")
    rp.add_argument("--out", default=None, help="write report.csv here instead of stdout")
    return parser


def _report(args) -> int:
    if not args.dirs:
        print("report: need at least one artifacts directory", file=sys.stderr)
        return EXIT_DOMAIN
    missing = [d for d in args.dirs if not Path(d).is_dir()]
    if missing:
        print(f"report: not a directory: {', '.join(missing)}", file=sys.stderr)
        return EXIT_DOMAIN
    rows = collect_report([Path(d) for d in args.dirs])
    if not rows:
        print("report: no study summaries found", file=sys.stderr)
        return EXIT_DOMAIN
    header = ["run", "study", "key", "value"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_csv(out / "report.csv", header, rows)
    else:
        print(",".join(header))
        for r in rows:
            print(",".join(io.fmt(v) for v in r))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "report":
        return _report(args)
    path = _config_path(args.config)
    try:
        cfg = load_config(path)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        only = None if args.command == "run" else args.command
        if cfg.studies.cover is not None and only in (None, "cover"):
            pred = predict_cover(build_setup(cfg, path.parent))
            print(f"cover: J = {pred['J']}, predicted net size M = {pred['predicted_M']}", file=sys.stderr)
        results = run_studies(cfg, Path(args.out), path.parent, only=only, threads=max(1, args.threads),
                              snapshots=Path(args.snapshots) if getattr(args, "snapshots", None) else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CombinatorialBlowupError as exc:
        print(f"refusing to build covering: {exc} (predicted net size {exc.predicted_size})", file=sys.stderr)
        return EXIT_DOMAIN
    except (HolowidthError, ArithmeticError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    for name, summary in results.items():
        verdict = summary.get("rate_transfer")
        if verdict:
            status = "PASS" if verdict["pass"] else "FAIL"
            print(f"{name}: greedy slope {verdict['greedy_slope']:.3f} vs threshold "
                  f"{verdict['threshold_slope']:.3f} -> {status}")
        else:
            print(f"{name}: done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
