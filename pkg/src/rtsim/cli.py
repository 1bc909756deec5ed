"""Command line entry point: ``rtsim run|trace|topo|validate <config>``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from rtsim.config import ConfigError, bundled_configs, resolve_config
from rtsim.experiment import RunError, run_experiment
from rtsim.network import Network, RunKey, build_topology


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rtsim",
        description="Real-time packet scheduling simulator for sensor networks.",
        epilog="Bundled configs: " + ", ".join(bundled_configs()))
    p.add_argument("--quiet", action="store_true", help="only print errors")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every sweep point and seed of a config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default: $RTS_SIM_OUT, else print CSV)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument("--trace", action="store_true",
                     help="also dump the event trace of the first sweep point")

    trace = sub.add_parser("trace", help="single run with an event-trace dump")
    trace.add_argument("config")
    trace.add_argument("--seed", type=int, default=None)
    trace.add_argument("--out", help="write the trace here instead of stdout")

    topo = sub.add_parser("topo", help="dump the deployed topology")
    topo.add_argument("config")
    topo.add_argument("--seed", type=int, default=None)

    val = sub.add_parser("validate", help="parse a config and report errors")
    val.add_argument("config")
    for sp in (run, trace, topo, val):
        sp.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return p


def _first_key(cfg, seed: Optional[int]) -> RunKey:
    return RunKey(cfg.policies[0], cfg.protocols[0], cfg.alphas[0], cfg.deadlines[0],
                  cfg.seeds[0] if seed is None else seed)


def _trace(cfg, key: RunKey, dest) -> None:
    net = Network(cfg, key, trace=dest)
    summary = net.run()
    logging.getLogger("rtsim").info(
        "published=%d on_time=%d late=%d dropped=%d miss=%.4f drop=%.4f control=%d",
        summary.published, summary.on_time, summary.late, summary.dropped,
        summary.miss_ratio, summary.drop_ratio, summary.control_messages)


def _cmd_run(args, cfg) -> int:
    out = args.out or os.environ.get("RTS_SIM_OUT")
    text, plots = run_experiment(cfg, out, max(1, args.jobs))
    if out is None:
        sys.stdout.write(text)
    else:
        logging.getLogger("rtsim").info("wrote %s.csv and %d plot-data files to %s",
                                        cfg.name, len(plots), out)
    if args.trace:
        if out is None:
            _trace(cfg, _first_key(cfg, None), sys.stderr)
        else:
            with open(Path(out) / f"{cfg.name}.trace", "w") as fh:
                _trace(cfg, _first_key(cfg, None), fh)
    return 0


def _cmd_trace(args, cfg) -> int:
    key = _first_key(cfg, args.seed)
    if args.out:
        with open(args.out, "w") as fh:
            _trace(cfg, key, fh)
    else:
        _trace(cfg, key, sys.stdout)
    return 0


def _cmd_topo(args, cfg) -> int:
    topo = build_topology(cfg, cfg.seeds[0] if args.seed is None else args.seed)
    print("\n".join(topo.dump()))
    logging.getLogger("rtsim").info("sink %s", topo.label(topo.sink))
    return 0


def _cmd_validate(args, cfg) -> int:
    runs = (len(cfg.policies) * len(cfg.protocols) * len(cfg.alphas)
            * len(cfg.deadlines) * len(cfg.seeds))
    if not args.quiet:
        print(f"{cfg.name}: ok ({runs} runs)")
    return 0


_COMMANDS = {"run": _cmd_run, "trace": _cmd_trace, "topo": _cmd_topo,
             "validate": _cmd_validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"rtsim: {args.config}: {exc}", file=sys.stderr)
    except (FileNotFoundError, RunError, KeyError, ValueError) as exc:
        print(f"rtsim: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
