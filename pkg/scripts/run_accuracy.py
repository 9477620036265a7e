"""Mean Frobenius error and solve residual over a grid of sizes and schedules.

    python scripts/run_accuracy.py --sizes 100 1000 --trials 10
"""
import argparse

from compact_broyden.harness import SCHEDULES, ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000])
    ap.add_argument("--schedules", nargs="+", default=sorted(SCHEDULES))
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    header = f"{'n':>6} {'schedule':>8} {'frob_rel_err':>13} {'solve_resid':>12} {'ok':>5}"
    print(header)
    print("-" * len(header))
    for n in args.sizes:
        for sid in args.schedules:
            cfg = ExperimentConfig(n=n, schedule_id=sid, trials=args.trials, seed=args.seed,
                                   dense_solve=False, timing_repeats=1)
            rep = run_experiment(cfg)
            mu = rep.means
            print(f"{n:>6} {sid:>8} {mu['frob_rel_err']:>13.2e} {mu['solve_rel_resid']:>12.2e} "
                  f"{rep.succeeded:>2}/{rep.attempted}")


if __name__ == "__main__":
    main()
