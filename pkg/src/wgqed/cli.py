"""Command line entry point: ``wgqed run | sweep | validate | list-presets``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import presets
from .config import RunConfig, config_from_mapping, parse_config
from .errors import ConfigError, ConvergenceError, DivergedError, WGQEDError
from .runner import run_config, sweep

log = logging.getLogger("wgqed")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_config(path: str) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_RUN_OVERRIDES = ("delta", "n", "t_max", "dt", "tol", "initial", "basis", "stride")


def _cmd_run(args) -> int:
    given = {k: getattr(args, k) for k in _RUN_OVERRIDES if getattr(args, k) is not None}
    if args.config:
        if given:
            raise ConfigError(f"--{sorted(given)[0].replace('_', '-')} cannot be combined with --config")
        cfg = _read_config(args.config)
    else:
        cfg = config_from_mapping({"preset": args.preset, "format": args.format, **given})
    output = args.output or cfg.output
    if output is None:
        raise ConfigError("output: give --output or set 'output' in the config")
    result, path = run_config(cfg, output)
    log.info("wrote %s (%d steps, dt=%.6g)", path, result.meta["n_steps"], result.meta["dt"])
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _read_config(args.config)
    if cfg.sweep is None:
        raise ConfigError("sweep: the config has no sweep section")
    if args.jobs is not None:
        cfg = dataclasses.replace(cfg, jobs=args.jobs)
    manifest = sweep(cfg, args.output)
    log.info("wrote manifest %s", manifest)
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .validation import run_all

    results = run_all(args.only)
    for res in results:
        print(res.line(), flush=True)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failing: {failed}" if failed else ""))
    return EXIT_OK if not failed else EXIT_NUMERIC


def _cmd_list(args) -> int:
    for name, p in presets.PRESETS.items():
        spec = presets.preset(name)
        meta = spec.meta
        print(f"{name:6s} n={p.n:<8.3g} g1*tau1={meta['gamma1_tau1']:<8.4g} "
              f"window={p.window:<8s} deltas={', '.join(p.deltas)}")
        if getattr(args, "verbose", False):
            print(f"       {p.summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    parser = _Parser(prog="wgqed", description="Two detuned emitters in a rectangular waveguide.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common], help="run one scenario and write CSV or JSON")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="YAML run configuration")
    src.add_argument("--preset", choices=sorted(presets.PRESETS))
    run.add_argument("--delta", help="detuning, e.g. '2*gamma1'")
    run.add_argument("--n", type=float, help="separation in TM11 wavelengths")
    run.add_argument("--t-max", dest="t_max", help="end time, e.g. '6*tau1'")
    run.add_argument("--dt", help="step size expression")
    run.add_argument("--tol", type=float, help="refine dt until runs agree to this")
    run.add_argument("--initial", choices=["antisym", "sym", "eg", "ge"])
    run.add_argument("--basis", choices=["bare", "sa"])
    run.add_argument("--stride", type=int, help="write every stride-th step")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument("--output", "-o", help="output file")
    run.set_defaults(func=_cmd_run)

    sw = sub.add_parser("sweep", parents=[common], help="run a parameter sweep from a config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--output", "-o", help="base output path (overrides the config)")
    sw.add_argument("--jobs", type=int, help="worker processes")
    sw.set_defaults(func=_cmd_sweep)

    val = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    val.add_argument("--only", type=int, nargs="+", metavar="N", help="criterion numbers")
    val.set_defaults(func=_cmd_validate)

    ls = sub.add_parser("list-presets", parents=[common], help="show the figure presets")
    ls.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (DivergedError, ConvergenceError) as exc:
        print(f"wgqed: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, WGQEDError, ValueError) as exc:
        print(f"wgqed: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"wgqed: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
