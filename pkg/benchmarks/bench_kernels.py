"""Time the grid and sampling kernels under each available backend.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--cell 0.004]
"""

import argparse
import time

from ifslab import _backend, instantiate
from ifslab.attractor import chaos_game, compute_attractor, hutchinson_step, trapping_ball
from ifslab.families import load_fixture


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--cell", type=float, default=0.004)
    ap.add_argument("--points", type=int, default=1_000_000)
    args = ap.parse_args(argv)

    cases = [("rot45_pair", 0.95), ("diagonal_dust", 0.7), ("rot90_shrink_04", 0.99)]
    print(f"{'case':<24}{'kernel':<12}" + "".join(f"{b:>12}" for b in _backend.available()))
    for name, t in cases:
        fam = load_fixture(name)
        inst = instantiate(fam, t)
        trap = trapping_ball(fam, t)
        cover = compute_attractor(inst, trap, args.cell)
        rows = {
            "cover": lambda b: compute_attractor(inst, trap, args.cell, backend=b),
            "sweep": lambda b: hutchinson_step(cover, inst, backend=b),
            "chaos": lambda b: chaos_game(inst, args.points, seed=1, backend=b),
        }
        for kernel, fn in rows.items():
            cols = "".join(f"{best_of(lambda: fn(b), args.repeat):>11.4f}s" for b in _backend.available())
            print(f"{name + f' t={t}':<24}{kernel:<12}{cols}")


if __name__ == "__main__":
    main()
