"""Command line entry point: ``gen``, ``build``, ``solve``, ``eig``, ``experiment``.

Exit status is 0 on success, 1 for usage or input-file problems and 2 for
numerical failures.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .compact import build_compact, matvec_B
from .errors import CurvatureTooSmall, NumericalError, PairFileError
from .harness import SCHEDULES, ExperimentConfig, generate_experiment, run_experiment
from .inverse import build_inverse_compact, solve
from .pairstore import GramCache, load_pairs, save_pairs
from .spectra import eigenvalues

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_experiment_args(p):
    p.add_argument("--schedule", default="exp1", help=f"one of {', '.join(SCHEDULES)}")
    p.add_argument("--schedule-file", help="file with m phi tokens (floats or 'sr1')")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma-range", type=float, nargs=2, default=(0.1, 1.0),
                   metavar=("LO", "HI"))


def _config(args, **extra):
    return ExperimentConfig(n=args.n, m=args.m, schedule_id=args.schedule, seed=args.seed,
                            gamma_range=tuple(args.gamma_range),
                            schedule_file=args.schedule_file, **extra)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compact-broyden",
                     description="Compact representations of Broyden-class quasi-Newton matrices.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", help="write a pair file from a simulated experiment")
    _add_experiment_args(p)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("build", help="factor diagnostics for a pair file")
    p.add_argument("pairfile")

    p = sub.add_parser("solve", help="solve B r = z for a pair file and rhs file")
    p.add_argument("pairfile")
    p.add_argument("rhsfile")
    p.add_argument("-o", "--out", help="write the solution here instead of stdout")

    p = sub.add_parser("eig", help="spectral summary of a pair file")
    p.add_argument("pairfile")

    p = sub.add_parser("experiment", help="run an accuracy/timing campaign")
    _add_experiment_args(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--no-dense-solve", action="store_true",
                   help="skip the dense baseline solve (t_dense_s left empty)")
    p.add_argument("-o", "--out")
    return parser


def _emit(text, out=None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(args):
    gen = generate_experiment(_config(args, trials=1), args.trial)
    save_pairs(gen.pairs, gen.schedule, args.out)
    print(f"wrote {gen.pairs.m} pairs (n={gen.pairs.n}, resamples={gen.resamples}) to {args.out}")


def _load(path):
    seq, schedule = load_pairs(path)
    return seq, GramCache.from_pairs(seq), schedule


def _cmd_build(args):
    seq, cache, schedule = _load(args.pairfile)
    f = build_compact(seq, cache, schedule)
    print(f"n={f.n} m={f.m} l={f.l} gamma={f.gamma:.12g}")
    print(f"sr1_steps={[j for j in range(f.m) if schedule.is_sr1(j)]}")
    print(f"Mhat_cond={np.linalg.cond(f.Mhat):.6e}")
    print("Gamma=[" + ", ".join(f"{v:.12g}" for v in f.gamma_diag) + "]")


def _cmd_solve(args):
    seq, cache, schedule = _load(args.pairfile)
    try:
        z = np.array([float(t) for t in Path(args.rhsfile).read_text().split()])
    except ValueError as exc:
        raise UsageError(f"bad rhs file: {exc}") from None
    if z.shape[0] != seq.n:
        raise UsageError(f"rhs has {z.shape[0]} entries, pair file has n={seq.n}")
    fwd = build_compact(seq, cache, schedule)
    r = solve(build_inverse_compact(seq, cache, schedule, fwd), z)
    resid = np.linalg.norm(matvec_B(fwd, r) - z) / np.linalg.norm(z)
    _emit(" ".join(repr(float(v)) for v in r) + "\n", args.out)
    print(f"relative_residual={resid:.3e}", file=sys.stderr)


def _cmd_eig(args):
    seq, cache, schedule = _load(args.pairfile)
    print(eigenvalues(build_compact(seq, cache, schedule)).describe())


def _cmd_experiment(args):
    cfg = _config(args, trials=args.trials, dense_solve=not args.no_dense_solve)
    report = run_experiment(cfg)
    _emit(report.to_json() + "\n" if args.format == "json" else report.to_csv(), args.out)


COMMANDS = {"gen": _cmd_gen, "build": _cmd_build, "solve": _cmd_solve, "eig": _cmd_eig,
            "experiment": _cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, CurvatureTooSmall) as exc:
        step = getattr(exc, "step", None)
        where = f"step {step}" if step is not None else "build"
        reason = getattr(exc, "reason", str(exc))
        print(f"numerical error at {where}: {type(exc).__name__}: {reason}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PairFileError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
