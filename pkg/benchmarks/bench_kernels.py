#!/usr/bin/env python3
"""Compare the compiled kernels with the pure-numpy fallback.

Each mode runs in its own interpreter because the switch
(TICKSIM_DISABLE_NUMBA) is read at import time. Both modes must produce the
same trade log, which is checked via its hash.

    python3 benchmarks/bench_kernels.py [--steps 30000] [--book-orders 200000]
"""
import argparse
import json
import os
import subprocess
import sys
import time


def worker(steps, n_orders):
    import hashlib

    import numpy as np

    import ticksim
    from ticksim._jit import jit
    from ticksim.engine import ScenarioConfig, run
    from ticksim.orderbook import new_book_arrays, purge_expired, submit

    @jit
    def drive(book, sides, prices):
        fills = 0
        for i in range(sides.shape[0]):
            purge_expired(book, i)
            fills += submit(book, sides[i], prices[i], 1, i)[0]
        return fills

    cfg = ScenarioConfig(total_steps=steps, dp_a=0.01, dp_b=0.001, seed=1)
    t0 = time.perf_counter()
    run(cfg.replace(total_steps=min(steps, 2000)))  # compile / warm up
    warm = time.perf_counter() - t0

    t0 = time.perf_counter()
    out = run(cfg)
    engine_s = time.perf_counter() - t0

    rng = np.random.default_rng(0)
    sides = rng.integers(0, 2, n_orders)
    prices = 10_000_000 + 1000 * rng.integers(-20, 21, n_orders)
    drive(new_book_arrays(1000, 20000), sides[:100], prices[:100])
    t0 = time.perf_counter()
    drive(new_book_arrays(1000, 20000), sides, prices)
    book_s = time.perf_counter() - t0

    return {
        "numba": ticksim.USE_NUMBA, "warmup_s": warm,
        "us_per_step": 1e6 * engine_s / steps, "us_per_order": 1e6 * book_s / n_orders,
        "trades": len(out.trades), "sha256": hashlib.sha256(out.trades.tobytes()).hexdigest(),
    }


def measure(disable, steps, orders):
    env = dict(os.environ)
    if disable:
        env["TICKSIM_DISABLE_NUMBA"] = "1"
    else:
        env.pop("TICKSIM_DISABLE_NUMBA", None)
    cmd = [sys.executable, __file__, "--worker", "--steps", str(steps), "--book-orders", str(orders)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if res.returncode:
        sys.exit(res.stderr)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=30_000)
    ap.add_argument("--book-orders", type=int, default=200_000)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        print(json.dumps(worker(args.steps, args.book_orders)))
        return 0

    fast = measure(False, args.steps, args.book_orders)
    slow = measure(True, args.steps, args.book_orders)
    if not fast["numba"]:
        print("numba is not installed; both columns use the numpy fallback")

    print(f"{'':24}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for key, label in (("us_per_step", "engine us/step"), ("us_per_order", "book us/order"),
                       ("warmup_s", "warm-up s")):
        ratio = slow[key] / fast[key] if fast[key] else float("nan")
        print(f"{label:24}{fast[key]:12.3f}{slow[key]:12.3f}{ratio:10.1f}")
    same = fast["sha256"] == slow["sha256"]
    print(f"trade logs identical: {same} ({fast['trades']} trades)")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
