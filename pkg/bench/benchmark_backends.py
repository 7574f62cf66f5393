"""Throughput comparison of the compiled and pure-Python sampling backends.

The backend is chosen at import time from the RRMS_NO_JIT environment
variable, so each backend runs in its own subprocess.  Every worker warms
up first (letting the compiled backend finish jitting), times the real
workload, and reports an md5 of the raw sample bytes; the parent checks
that both backends produced bit-identical samples before printing the
table.

Usage: python3 bench/benchmark_backends.py [--n N] [--reps R] [--seed S]
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

SAMPLERS = ("direct", "bucket", "independent", "coupled")


def _worker(n: int, reps: int, seed: int) -> dict:
    from rrms.blocks import geometric_path_family
    from rrms.stats import McRunSpec, monte_carlo

    family = geometric_path_family(0.5)
    results = {}
    for sampler in SAMPLERS:
        monte_carlo(McRunSpec(family=family, n=50, reps=8, seed=seed,
                              sampler=sampler))  # warm-up / jit compile
        spec = McRunSpec(family=family, n=n, reps=reps, seed=seed,
                         sampler=sampler)
        t0 = time.perf_counter()
        samples = monte_carlo(spec)
        elapsed = time.perf_counter() - t0
        results[sampler] = {
            "seconds": elapsed,
            "md5": hashlib.md5(samples.tobytes()).hexdigest(),
        }
    return results


def _run_backend(no_jit: bool, n: int, reps: int, seed: int) -> dict:
    env = dict(os.environ)
    if no_jit:
        env["RRMS_NO_JIT"] = "1"
    else:
        env.pop("RRMS_NO_JIT", None)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--n", str(n), "--reps", str(reps), "--seed", str(seed)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000, help="growth horizon")
    parser.add_argument("--reps", type=int, default=100, help="replications")
    parser.add_argument("--seed", type=int, default=7, help="stream seed")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(_worker(args.n, args.reps, args.seed)))
        return 0

    print(f"workload: geometric_path(0.5), n={args.n}, reps={args.reps},"
          f" seed={args.seed}")
    jit = _run_backend(False, args.n, args.reps, args.seed)
    plain = _run_backend(True, args.n, args.reps, args.seed)

    mismatch = False
    print(f"{'sampler':<12} {'compiled':>10} {'pure py':>10} {'speedup':>8}"
          f"  identical")
    for sampler in SAMPLERS:
        a, b = jit[sampler], plain[sampler]
        same = a["md5"] == b["md5"]
        mismatch = mismatch or not same
        speed = b["seconds"] / a["seconds"] if a["seconds"] > 0 else float("inf")
        print(f"{sampler:<12} {a['seconds']:>9.4f}s {b['seconds']:>9.4f}s"
              f" {speed:>7.1f}x  {'yes' if same else 'NO'}")
    if mismatch:
        print("error: backends disagree on sample bytes", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
