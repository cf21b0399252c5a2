"""Command-line entry point: ``profet <subcommand> ...``."""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bundle import load_bundle, save_bundle
from .exceptions import ProfetError, ValidationError
from .experiment import ScenarioGrid, cross_instance_eval, train_registry
from .features import dumps_corpus, ingest_runs, loads_corpus
from .synth import gen_corpus
from .trace import check_op_map, load_op_map

DEFAULT_SEED = 42
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("profet")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as exceptions, not exit(2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _existing(path):
    p = Path(path)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return p


def build_parser():
    parser = _Parser(prog="profet", description="Cross-instance training latency prediction.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(p, seed=True, config=True):
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help=f"random seed (default: $PROFET_SEED or {DEFAULT_SEED})")
        if config:
            p.add_argument("--config", type=_existing, help="experiment config JSON")
        p.add_argument("--format", choices=("table", "json"), default="table")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--families", type=int, default=15)
    p.add_argument("--noise", type=float, default=0.05, help="label noise sigma")

    p = sub.add_parser("ingest", help="build a corpus from profiler traces")
    common(p, seed=False, config=False)
    p.add_argument("--runs", required=True, type=_existing,
                   help="JSON list of runs: model, instance, batch, pixels, trace, "
                        "batch_latency_ms and optional format")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("train", help="train every instance pair into a bundle")
    common(p)
    p.add_argument("--corpus", required=True, type=_existing)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--pair", action="append", metavar="ANCHOR:TARGET",
                   help="restrict training to this pair (repeatable)")

    p = sub.add_parser("evaluate", help="leave-model-out cross-instance evaluation")
    common(p)
    p.add_argument("--corpus", required=True, type=_existing)
    p.add_argument("--out", type=Path, help="write the JSON report here")

    p = sub.add_parser("predict", help="predict target latency from an anchor profile")
    common(p, seed=False, config=False)
    p.add_argument("--bundle", required=True, type=_existing)
    p.add_argument("--anchor", required=True)
    p.add_argument("--target", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", type=_existing, help="anchor trace file")
    src.add_argument("--ops", type=_existing, help="JSON op -> latency (us) map")
    p.add_argument("--trace-format", choices=("jsonl", "csv"), default="jsonl")

    p = sub.add_parser("serve", help="serve predictions over HTTP")
    p.add_argument("--bundle", required=True, type=_existing)
    p.add_argument("--listen", default="127.0.0.1:8080", metavar="HOST:PORT")
    p.add_argument("--hide-base", action="store_true",
                   help="omit per-model predictions from responses")
    return parser


def _load_config(args):
    if getattr(args, "config", None) is None:
        return {}
    try:
        config = json.loads(args.config.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ValidationError("config must be a JSON object")
    return config


def resolve_seed(args, config):
    """--seed, then the config file, then $PROFET_SEED, then the default."""
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("PROFET_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"PROFET_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _emit(args, payload, table):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(table)


def _read_corpus(path):
    measurements, _ = loads_corpus(Path(path).read_text(encoding="utf-8"))
    return measurements


def cmd_synth(args, config, seed):
    grid = config.get("grid", {})
    kwargs = {}
    if "batch_sizes" in grid:
        kwargs["batch_sizes"] = tuple(grid["batch_sizes"])
    if "pixel_sizes" in grid:
        kwargs["pixel_sizes"] = tuple(grid["pixel_sizes"])
    if "feasibility" in grid:
        kwargs["feasibility"] = grid["feasibility"]
    ms = gen_corpus(n_families=args.families, seed=seed, noise_sigma=args.noise, **kwargs)
    args.out.write_text(dumps_corpus(ms), encoding="utf-8")
    _emit(args, {"measurements": len(ms), "out": str(args.out)},
          f"wrote {len(ms)} measurements to {args.out}")


def cmd_ingest(args, config, seed):
    try:
        runs = json.loads(args.runs.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"runs manifest is not valid JSON: {exc}") from None
    ms = ingest_runs(runs, args.runs.parent)
    args.out.write_text(dumps_corpus(ms), encoding="utf-8")
    _emit(args, {"measurements": len(ms), "out": str(args.out)},
          f"wrote {len(ms)} measurements to {args.out}")


def _parse_pairs(specs):
    if not specs:
        return None
    pairs = []
    for spec in specs:
        anchor, sep, target = spec.partition(":")
        if not sep or not anchor or not target:
            raise UsageError(f"--pair expects ANCHOR:TARGET, got {spec!r}")
        pairs.append((anchor, target))
    return pairs


def cmd_train(args, config, seed):
    pairs = _parse_pairs(args.pair)
    registry = train_registry(_read_corpus(args.corpus), config, seed, pairs=pairs)
    digest = save_bundle(registry, args.out)
    _emit(args, {"pairs": [list(p) for p in registry.pairs()], "sha256": digest,
                 "out": str(args.out)},
          f"trained {len(registry)} pairs into {args.out} (sha256 {digest})")


def cmd_evaluate(args, config, seed):
    grid = ScenarioGrid.from_dict(config["grid"]) if "grid" in config else None
    report = cross_instance_eval(_read_corpus(args.corpus), grid=grid, config=config,
                                 seed=seed)
    if args.out is not None:
        args.out.write_text(report.to_json(), encoding="utf-8")
    if args.format == "json":
        print(report.to_json(), end="")
    else:
        print(report.to_table())


def cmd_predict(args, config, seed):
    registry = load_bundle(args.bundle)
    if args.anchor == args.target:
        raise ValidationError("anchor and target must differ")
    predictor = registry.get(args.anchor, args.target)
    if predictor is None:
        available = ", ".join(f"{a}:{t}" for a, t in registry.pairs())
        raise ValidationError(
            f"no predictor for {args.anchor}:{args.target}; available: {available}"
        )
    if args.trace is not None:
        op_map = load_op_map(args.trace.read_text(encoding="utf-8"), args.trace_format)
    else:
        try:
            raw = json.loads(args.ops.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"ops file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ValidationError("ops file must hold a JSON object")
        op_map = check_op_map(raw)
    latency = predictor.predict(op_map)
    _emit(args, {"latency_ms": latency, "pair": [args.anchor, args.target]},
          f"{latency!r} ms")


def cmd_serve(args, config, seed):  # pragma: no cover
    from .service import serve

    serve(args.bundle, listen=args.listen, expose_base=not args.hide_base)


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "serve": cmd_serve,
}


def run(argv=None):
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        config = _load_config(args)
        seed = resolve_seed(args, config)
        COMMANDS[args.command](args, config, seed)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ProfetError as exc:
        print(f"profet: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        # --help exits through argparse with code 0
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"profet: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
