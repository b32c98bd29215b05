"""``coinfeed`` command line.

Every flag may also come from ``--config FILE`` (a JSON object with the same
keys, dashes or underscores); flags given on the command line win.
"""
from __future__ import annotations

import argparse
import sys

from .errors import CoinGameError, ConfigError
from .harness import EXIT_INVALID, ExperimentConfig, dump_json, parse_axis, run


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--seed", type=int)
    p.add_argument("--trace-out", help="write the game trace as JSONL")
    p.add_argument("--report-out", help="write the JSON report here as well as to stdout")
    p.add_argument("--csv-out", help="append a CSV summary row")
    p.add_argument("--threads", type=int, help="worker threads (default: COINFEED_THREADS or 1)")


def _game(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, help="number of coins")
    p.add_argument("--k", type=int, help="message bits (K = 2^k)")
    p.add_argument("--n", type=int, help="rounds")
    p.add_argument("--r", help="decoding radius, e.g. 31/67")
    p.add_argument("--ell", type=int, help="list size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coinfeed", description="Coin-game simulations and feedback list decoding.")
    sub = parser.add_subparsers(dest="mode", required=True)
    # SUPPRESS keeps unset flags out of the namespace so config-file values survive
    kw = {"argument_default": argparse.SUPPRESS}

    p = sub.add_parser("simulate", help="play one game", **kw)
    _common(p)
    _game(p)
    p.add_argument("--bob", help="sw | random:<seed> | script:<path>")
    p.add_argument("--eve", help="greedy | random:<seed> | base:<n> | recursive:<ell> | upperbound:<ell> | swattack:<q>")

    p = sub.add_parser("attack", help="31/67 attack on the SW strategy", **kw)
    _common(p)
    _game(p)
    p.add_argument("--q", type=int)
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("oracle", help="exact optimum by enumeration", **kw)
    _common(p)
    _game(p)
    p.add_argument("--bob")
    p.add_argument("--posc-index", type=int, help="1-based rank whose final position is optimized")
    p.add_argument("--direction", choices=("min", "max"))
    p.add_argument("--memo", action="store_true")
    p.add_argument("--objective", choices=("eve", "minimax"), help="eve: fixed Bob; minimax: Bob and Eve both optimal")

    p = sub.add_parser("verify", help="run monitors over a saved trace", **kw)
    _common(p)
    p.add_argument("--trace", help="JSONL trace to check")
    p.add_argument("--suite", choices=("sw-lemmas", "psi", "attack", "all"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--all-records", action="store_true", help="also list passing per-round assertions")

    p = sub.add_parser("codec", help="one feedback-code transmission", **kw)
    _common(p)
    _game(p)
    p.add_argument("--bob")
    p.add_argument("--adversary", help="none | all | random:<seed> | any eve name replayed as flips")
    p.add_argument("--x", type=int, help="message (default: seeded pick)")

    p = sub.add_parser("sweep", help="grid of runs into one CSV", **kw)
    _common(p)
    _game(p)
    p.add_argument("--base", choices=("simulate", "attack", "oracle", "verify", "codec"))
    p.add_argument("--grid", action="append", metavar="KEY=VALUES", help="e.g. n=7,14,21 or seed=1..100 or q=2..20:2")
    for flag in ("--bob", "--eve", "--adversary", "--direction", "--objective", "--suite", "--trace"):
        p.add_argument(flag)
    p.add_argument("--q", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--posc-index", type=int)
    p.add_argument("--x", type=int)
    p.add_argument("--memo", action="store_true")
    return parser


def _parse_grid(items) -> dict:
    grid = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep:
            raise ConfigError(f"grid axis must look like key=values, got {item!r}")
        grid[key.strip().replace("-", "_")] = parse_axis(values)
    return grid


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    given = vars(args).copy()
    path = given.pop("config", None)
    if "grid" in given:
        given["grid"] = _parse_grid(given["grid"])
    if path:
        return ExperimentConfig.from_file(path, given)
    return ExperimentConfig.from_dict(given)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = run(cfg)
    except ConfigError as exc:
        print(f"coinfeed: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CoinGameError as exc:
        print(f"coinfeed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(dump_json(result.report))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
