"""Command line entry point: ``ticksim run | sweep | volcurve``."""
import argparse
import logging
import sys
import time

from .engine import ConfigError, load_config

log = logging.getLogger("ticksim")


def _cmd_run(args):
    from .experiments import run_scenario
    from .metrics import summarize

    config = load_config(args.config, seed=args.seed, total_steps=args.steps)
    t0 = time.perf_counter()
    output = run_scenario(config, args.out)
    row = summarize(output)
    log.info("finished %d steps in %.1fs -> %s", config.total_steps, time.perf_counter() - t0, args.out)
    print(", ".join(f"{k}={v}" for k, v in row.items()))


def _cmd_sweep(args):
    from .experiments import load_sweep_spec, run_sweep

    spec = load_sweep_spec(args.spec)
    report = run_sweep(spec, args.out, jobs=args.jobs)
    failed = sum(len(c.errors) for c in report.cells)
    print(f"sigma_bar={report.sigma_bar:.4f}%  cells={len(report.cells)}  "
          f"classified={report.fraction_correct():.2%}  failed_runs={failed}")
    return 1 if failed else 0


def _cmd_volcurve(args):
    from .experiments import load_sweep_spec, run_volatility_curve

    spec = load_sweep_spec(args.spec)
    sigma_bar, points = run_volatility_curve(spec, args.out, jobs=args.jobs)
    print(f"sigma_bar={sigma_bar:.4f}%")
    for p in points:
        print(f"dP_A={p.dp_a:g}%  sigma_t={p.sigma_t:.4f}%  sigma_t_dual={p.sigma_t_dual:.4f}%  W_A={p.w_a:.3f}")


def build_parser():
    parser = argparse.ArgumentParser(prog="ticksim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="override total_steps")
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="tick-size grid with borderlines")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out_sweep")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("volcurve", help="volatility and share against dP_A")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out_volcurve")
    p.set_defaults(func=_cmd_volcurve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"ticksim: error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"ticksim: invalid config: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
