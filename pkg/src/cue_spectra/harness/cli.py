"""``cue-spectra`` command line entry point.

Exit status: 0 when every checked statistic passes, 2 when any fails,
1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import output_paths, run
from .config import CAMPAIGNS, FORMATS, ConfigError, build_config, read_config_file

log = logging.getLogger("cue_spectra")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2

# flag -> config key
_FLAGS = {
    "n": "n", "l": "l", "l_rule": "l_rule", "c": "c", "k": "k", "z": "z",
    "samples": "samples", "seed": "seed", "workers": "workers", "out": "out", "format": "format",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cue-spectra", description="Run a CUE verification campaign.")
    p.add_argument("campaign", choices=CAMPAIGNS)
    p.add_argument("--config", help="flat 'key = value' config file; flags override it")
    p.add_argument("--n", help="matrix size(s), comma separated")
    lgroup = p.add_mutually_exclusive_group()
    lgroup.add_argument("--l", help="mesoscopic scale L")
    lgroup.add_argument("--l-rule", dest="l_rule", choices=["sqrt"], help="derive L from N")
    p.add_argument("--c", help="window constant(s) in (0, 1], comma separated")
    p.add_argument("--k", help="moment order(s) K, comma separated")
    p.add_argument("--z", help="evaluation point for the moment study")
    p.add_argument("--samples")
    p.add_argument("--seed")
    p.add_argument("--workers")
    p.add_argument("--out", help="output directory (default: $CUE_SPECTRA_OUT or ./results)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {key: getattr(args, flag) for flag, key in _FLAGS.items() if getattr(args, flag) is not None}
    try:
        file_pairs = read_config_file(args.config) if args.config else {}
        config = build_config(args.campaign, file_pairs, overrides)
    except (ConfigError, OSError) as exc:
        print(f"cue-spectra: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    record = run(config)
    for path in output_paths(config).values():
        log.info("wrote %s", path)
    for row in record.failed:
        print(f"FAIL {row.statistic}: value={row.value:.6g} target={row.target} tolerance={row.tolerance}",
              file=sys.stderr)
    print(f"{config.campaign}: {len(record.rows)} statistics, {len(record.failed)} failed, "
          f"{record.wall_time:.1f}s")
    return EXIT_OK if record.ok else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
