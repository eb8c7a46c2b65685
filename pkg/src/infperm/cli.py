"""Command line entry point: ``infperm run|wick|stats|partitions``.

Exit codes: 0 when every criterion passes, 1 on a criterion failure, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import SizeLimitError
from .harness import PRESETS, STAT_KINDS, ExperimentConfig, UsageError, perm_registry, run_preset, stat_for
from .partitions import enumerate_nc, enumerate_pair_partitions, is_noncrossing
from .perms import stats_to_csv
from .wick import contributions_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _words(text: str) -> list[str]:
    return [x for x in text.replace(",", " ").split() if x]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="infperm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an experiment preset")
    r.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    r.add_argument("--config", help="JSON config file (flags override its fields)")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="directory for CSV/JSON tables")
    r.add_argument("--jobs", type=int)

    w = sub.add_parser("wick", help="exact pairing contributions of a word")
    w.add_argument("word", help="handles separated by spaces or commas, e.g. 'id,T,id,T' or 'sigma sigma*'")
    w.add_argument("--N", type=int, required=True)
    w.add_argument("--seed", type=int, default=0, help="seed for the sampled 'sigma' and 'tau'")

    s = sub.add_parser("stats", help="permutation statistics on uniform draws")
    s.add_argument("kinds", nargs="*", default=list(STAT_KINDS), help=f"subset of {', '.join(STAT_KINDS)}")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--seed", type=int, action="append", help="repeatable; default 0")

    q = sub.add_parser("partitions", help="list pair or non-crossing partitions")
    q.add_argument("n", type=int)
    q.add_argument("--nc", action="store_true", help="non-crossing set partitions instead of pairings")
    q.add_argument("--noncrossing-only", action="store_true", help="only non-crossing pairings")
    return p


def _run(args) -> int:
    overrides = {"seed": args.seed, "out_dir": args.out, "jobs": args.jobs}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        if args.preset:
            overrides["preset"] = args.preset
        cfg = ExperimentConfig.from_json(text, **overrides)
    else:
        if not args.preset:
            raise UsageError("--preset or --config is required")
        cfg = ExperimentConfig(args.preset, **{k: v for k, v in overrides.items() if v is not None})
    rep = run_preset(cfg)
    for c in rep.criteria:
        print(c.line())
    for path in rep.paths:
        print(f"wrote {path}")
    print(f"{rep.preset}: {'PASS' if rep.passed else 'FAIL'}")
    return 0 if rep.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "wick":
            reg = perm_registry(args.N, args.seed)
            sys.stdout.write(contributions_csv(_words(args.word), args.N, reg))
            return 0
        if args.command == "stats":
            unknown = [k for k in args.kinds if k not in STAT_KINDS]
            if unknown:
                raise UsageError(f"unknown statistic kinds {unknown}")
            seeds = args.seed or [0]
            sys.stdout.write(stats_to_csv([stat_for(k, args.N, s) for k in args.kinds for s in seeds]))
            return 0
        if args.command == "partitions":
            if args.nc:
                for part in enumerate_nc(args.n):
                    print(part)
            else:
                for part in enumerate_pair_partitions(args.n):
                    if not args.noncrossing_only or is_noncrossing(part):
                        print(part)
            return 0
    except (UsageError, SizeLimitError, KeyError, ValueError, OSError) as exc:
        print(f"infperm: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
