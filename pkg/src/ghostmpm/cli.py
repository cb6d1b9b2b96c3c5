"""Command line entry point: ``ghostmpm run <config>``.

Exit codes: 0 when the scenario ran (a diverged or failed run still counts
and is recorded in ``summary.json``), 1 for configuration errors, 2 for
unexpected internal errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path

from .config import load_config
from .errors import ConfigurationError, PointCloudParseError
from .scenarios import run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="ghostmpm", description="Ghost-stabilised material point method runner")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config", help="YAML scenario file")
    r.add_argument("--output-dir", help="artifact directory (default: output.directory in the config, else ./out/<scenario>)")
    r.add_argument("--snapshot-stride", type=int, help="write a VTK snapshot every N steps (0 disables)")
    r.add_argument("--dump-ghost-edges", action="store_true", help="write ghost_edges.csv with the boundary element edges of every step")
    return p


def _run(args):
    cfg = load_config(args.config)
    out = args.output_dir or cfg.output.get("directory")
    if out is None:
        out = Path("out") / cfg.name
    elif args.output_dir is None:
        out = cfg.resolve(out)
    if args.snapshot_stride is not None and args.snapshot_stride < 0:
        raise ConfigurationError("--snapshot-stride must be >= 0")
    res = run_scenario(cfg, output_dir=out, snapshot_stride=args.snapshot_stride, dump_ghost_edges=args.dump_ghost_edges)
    s = res.summary
    if s.get("diverged_at") is not None:
        print(f"{cfg.name}: diverged at step {s['diverged_at']} ({s.get('message', '')}); artifacts in {out}")
    elif s.get("failed_at") is not None:
        print(f"{cfg.name}: load step {s['failed_at']} failed, final stable step {s['final_stable_step']}; artifacts in {out}")
    else:
        print(f"{cfg.name}: completed; artifacts in {out}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigurationError, PointCloudParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:  # noqa: BLE001 - anything else is a bug worth a traceback
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
