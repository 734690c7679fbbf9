"""Command-line entry point.

Subcommands: run, verify-coupling, tv-test, sweep, dump-schedule,
replay-trace. All take an INI config (see README) except replay-trace, which
takes an exported event-trace file. CSV schemas:

  run            seed,scheduler,n,max_degree,model,param,T,makespan,
                 phase1_end,max_residence,max_chain_length,messages,bits
  sweep          n,seed,makespan,phase1_end,max_residence,max_chain_length,
                 messages,bits  (plus trailing '# fit ...' comment lines)

Exit codes: 0 success, 1 coupling mismatch, 2 invalid config or infeasible
input. Worker-pool size comes from the ASYNCMETRO_WORKERS env variable.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext

from . import harness, netsim
from .harness import ConfigError


def _out(path: str | None):
    if path is None or path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="asyncmetro",
        description="Asynchronous distributed Metropolis sampler simulator",
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, helptext, trace=False):
        p = sub.add_parser(name, help=helptext)
        if trace:
            p.add_argument("trace", help="event-trace file exported by a run")
        else:
            p.add_argument("config", help="INI experiment config")
            p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        return p

    run_p = add("run", "execute seeded simulations, write RunStats CSV")
    run_p.add_argument("--finals", default=None, help="also write final configurations here")
    add("verify-coupling", "compare every run against the sequential chain, exactly")
    add("tv-test", "empirical distribution of many runs vs the exhaustive table")
    add("sweep", "scaling table over an n grid with a + b*ln(n) fit")
    add("dump-schedule", "emit the shared-randomness schedule as text")
    add("replay-trace", "recompute RunStats from an exported event trace", trace=True)

    args = parser.parse_args(argv)

    if args.command == "replay-trace":
        try:
            with open(args.trace) as fh:
                stats, resolutions = netsim.replay_trace(fh)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"makespan={stats.makespan!r} phase1_end={stats.phase1_end!r}")
        print(f"messages={stats.message_count} phase1={stats.phase1_messages} "
              f"fragments={stats.phase1_fragments} decisions={stats.decision_messages}")
        print(f"total_bits={stats.total_bits} max_message_bits={stats.max_message_bits}")
        print(f"resolutions={len(resolutions)} max_residence={float(stats.residence.max() if len(stats.residence) else 0.0)!r}")
        return 0

    try:
        cfg = harness.load_config(args.config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        with _out(args.output) as out:
            if args.command == "run":
                if args.finals:
                    with open(args.finals, "w") as finals:
                        return harness.cmd_run(cfg, out, finals)
                return harness.cmd_run(cfg, out)
            if args.command == "verify-coupling":
                return harness.cmd_verify_coupling(cfg, out)
            if args.command == "tv-test":
                return harness.cmd_tv_test(cfg, out)
            if args.command == "sweep":
                return harness.cmd_sweep(cfg, out)
            if args.command == "dump-schedule":
                return harness.cmd_dump_schedule(cfg, out)
    except netsim.SimulationInvariantError as exc:
        print(f"simulation invariant violated: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
