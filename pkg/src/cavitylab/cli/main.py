"""``cavitylab`` command-line entry point."""

import argparse
import os
import sys

from ..errors import CavityLabError
from .config import TASKS, parse_config

THREADS_ENV = "CAVITYLAB_THREADS"


def build_parser():
    p = argparse.ArgumentParser(prog="cavitylab", description="Run a configured cavity QED calculation.")
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--output", help="output directory (overrides output.directory)")
    p.add_argument("--task", choices=TASKS, help="task override")
    p.add_argument("--seed", type=int, help="seed override (unsigned 64-bit)")
    p.add_argument("--threads", type=int, help=f"kernel threads (default: ${THREADS_ENV})")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"error: {THREADS_ENV} must be an integer", file=sys.stderr)
            return 2
    if threads is not None and threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    # heavy imports only after argument parsing
    from .run import run

    try:
        config = parse_config(args.config, task=args.task, seed=args.seed)
        manifest = run(config, output=args.output, threads=threads)
    except CavityLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    out = args.output or config.output.directory
    print(f"{manifest['task']}: wrote {len(manifest['files'])} files to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
