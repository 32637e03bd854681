"""scarforge command line: run a named pipeline against a TOML config.

    scarforge <pipeline> --config cfg.toml --out results/

Scalar flags override config values; exit code 0 iff every enabled check
in the manifest passes.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, apply_cli_overrides, load_config
from .scarscan import PIPELINES, run_experiment


def build_parser():
    p = argparse.ArgumentParser(
        prog="scarforge",
        description="logarithmic quasimode experiments on a hyperbolic fixed point")
    p.add_argument("pipeline", choices=sorted(PIPELINES))
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--out", default="scarforge-out", help="output directory")
    p.add_argument("--hbar", type=float, help="override: single hbar value")
    p.add_argument("--epsilon", type=float, help="override: target width factor")
    p.add_argument("--epsilon-prime", type=float, dest="epsilon_prime",
                   help="override: Ehrenfest margin")
    p.add_argument("--lambda", type=float, dest="lam",
                   help="override: expansion rate (quadratic model)")
    p.add_argument("--order", type=int, help="override: expansion order")
    p.add_argument("--dim", type=int, help="override: grid / basis size")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        params = load_config(args.pipeline, args.config,
                             apply_cli_overrides(args.pipeline, args))
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    manifest = run_experiment(args.pipeline, params, args.out)
    n_pass = sum(1 for c in manifest["checks"] if c["pass"])
    for c in manifest["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"{status} {c['name']}: value={c['value']:.6g} "
              f"expected={c['expected']:.6g} tol={c['tol']:.3g}")
    print(f"{args.pipeline}: {n_pass}/{len(manifest['checks'])} checks passed "
          f"({manifest['wall_time_s']:.1f}s), results in {args.out}")
    return 0 if n_pass == len(manifest["checks"]) else 1


if __name__ == "__main__":
    sys.exit(main())
