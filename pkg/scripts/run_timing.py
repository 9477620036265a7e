"""Compact solve vs dense symmetric solve, wall time per size.

The dense side needs an n x n matrix (800 MB at n = 10000), so large sizes
take a while and a couple of GB of memory.

    python scripts/run_timing.py --sizes 100 1000 10000 --trials 3
"""
import argparse

from compact_broyden.harness import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--schedule", default="exp2")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'n':>6} {'t_compact_s':>12} {'t_dense_s':>10} {'speedup':>9}")
    prev = None
    for n in args.sizes:
        rep = run_experiment(ExperimentConfig(n=n, schedule_id=args.schedule,
                                              trials=args.trials, seed=args.seed))
        tc, td = rep.means["t_compact_s"], rep.means["t_dense_s"]
        growth = "" if prev is None else f"  (compact x{tc / prev:.2f} vs previous n)"
        print(f"{n:>6} {tc:>12.2e} {td:>10.2e} {td / tc:>9.0f}{growth}")
        prev = tc


if __name__ == "__main__":
    main()
