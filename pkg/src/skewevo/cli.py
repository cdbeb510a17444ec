"""Command-line entry point: ``skewevo --config analysis.json [--out report.json]``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import COMMANDS, ConfigError, load_config
from .report import run_config

EXIT_OK, EXIT_REJECTED, EXIT_ERROR = 0, 1, 2

log = logging.getLogger("skewevo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewevo",
        description="Verify skew-evolution axioms and certify exponential dichotomy/trichotomy "
                    f"from a JSON config (commands: {', '.join(COMMANDS)}).",
    )
    parser.add_argument("--config", required=True, metavar="PATH", help="analysis config (JSON)")
    parser.add_argument("--out", metavar="PATH", help="write the JSON report here (default: stdout)")
    parser.add_argument("--plot-data", metavar="PATH", help="write per-component trajectory norms as CSV")
    parser.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    parser.add_argument("--strict", action="store_true", help="exit 1 when the verdict is rejected")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed: must be >= 0"])
            cfg = cfg.with_seed(args.seed)
        start = time.perf_counter()
        output = dict(cfg.output)
        if args.out:
            output["report"] = args.out
        if args.plot_data:
            output["plot_data"] = args.plot_data
        cfg = replace(cfg, output=output)
        report = run_config(cfg)
        log.info("%s finished in %.2f s: %s", cfg.command, time.perf_counter() - start, report.verdict)
        if args.plot_data and not Path(args.plot_data).exists():
            log.warning("no projector families configured; plot data not written")
    except ConfigError as exc:
        print(f"skewevo: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"skewevo: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not output.get("report"):
        sys.stdout.write(report.to_json())
    print(f"{cfg.command}: {report.verdict}", file=sys.stderr)
    if args.strict and not report.passed:
        return EXIT_REJECTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
