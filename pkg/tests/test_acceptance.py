"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; ``-m "not slow"`` skips the
n = 10000 timing check.
"""
import numpy as np
import pytest

from compact_broyden.compact import (build_compact, byrd_sr1_Mmatrix, materialize_dense,
                                     matvec_B, phi_sr1, restricted_class_Mmatrix)
from compact_broyden.harness import ExperimentConfig, generate_experiment, run_experiment
from compact_broyden.inverse import build_inverse_compact, matvec_H, solve
from compact_broyden.pairstore import SR1, PhiSchedule
from compact_broyden.spectra import eigenvalues

from .conftest import SCHEDULE_IDS, curved_pairs, random_schedule, well_posed


def report(request, label, ok, detail):
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    if tr is not None:
        tr.write_line("")
        tr.write_line(line)
    else:
        print(line)
    assert ok, line


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.fixture(scope="module")
def accuracy_grid():
    out = {}
    for n in (100, 1000):
        for sid in SCHEDULE_IDS:
            cfg = ExperimentConfig(n=n, schedule_id=sid, trials=10, seed=0,
                                   dense_solve=False, timing_repeats=1)
            out[n, sid] = run_experiment(cfg)
    return out


def test_1_frobenius_accuracy(request, accuracy_grid):
    worst = max(r.means["frob_rel_err"] for r in accuracy_grid.values())
    ok = all(r.succeeded == 10 and r.means["frob_rel_err"] <= 1e-8
             for r in accuracy_grid.values())
    report(request, "1 compact vs dense Frobenius error", ok,
           f"worst mean over 8 cells = {worst:.2e} (limit 1e-8)")


def test_2_solve_residual(request, accuracy_grid):
    worst = max(r.means["solve_rel_resid"] for r in accuracy_grid.values())
    ok = all(r.succeeded == 10 and r.means["solve_rel_resid"] <= 1e-8
             for r in accuracy_grid.values())
    report(request, "2 inverse-compact solve residual", ok,
           f"worst mean over 8 cells = {worst:.2e} (limit 1e-8)")


@pytest.mark.slow
def test_3_timing_trend(request):
    big = run_experiment(ExperimentConfig(n=10000, schedule_id="exp2", trials=2, seed=0))
    small = run_experiment(ExperimentConfig(n=1000, schedule_id="exp2", trials=2, seed=0,
                                            dense_solve=False))
    t_big, t_dense = big.means["t_compact_s"], big.means["t_dense_s"]
    t_small = small.means["t_compact_s"]
    speedup, growth = t_dense / t_big, t_big / t_small
    ok = big.succeeded == 2 and speedup >= 50 and growth <= 5
    report(request, "3 timing trend", ok,
           f"n=10000 speedup {speedup:.0f}x (>= 50), compact growth 1000->10000 "
           f"{growth:.2f}x (<= 5)")


def test_4_spectral_equivalence(request):
    worst, mult_ok = 0.0, True
    for sid in SCHEDULE_IDS:
        cfg = ExperimentConfig(n=200, schedule_id=sid, trials=5, seed=0)
        for trial in range(5):
            gen = generate_experiment(cfg, trial)
            cases = [(gen.pairs, gen.cache, gen.schedule)]
            # independent pairs give a full-rank Psi_hat under the same schedule
            seq, cache = curved_pairs(100 * trial + 7, 200, 5)
            if well_posed(seq, gen.schedule):
                cases.append((seq, cache, gen.schedule))
            for seq, cache, schedule in cases:
                f = build_compact(seq, cache, schedule)
                summary = eigenvalues(f)
                dense = np.linalg.eigvalsh(materialize_dense(f))
                worst = max(worst, float(np.max(np.abs(summary.full_spectrum() - dense)
                                                / np.abs(dense))))
                full_rank = summary.rank == f.l
                if full_rank:
                    mult_ok &= summary.trivial_multiplicity == 200 - f.l
                mult_ok &= int(np.sum(np.abs(dense - f.gamma) <= 1e-9 * abs(f.gamma))) \
                    >= summary.trivial_multiplicity
    ok = worst <= 1e-8 and mult_ok
    report(request, "4 spectral equivalence", ok,
           f"max elementwise rel diff {worst:.2e} (limit 1e-8), multiplicity ok={mult_ok}")


def _schedule_file(tmp_path, name, tokens):
    path = tmp_path / name
    path.write_text(" ".join(tokens) + "\n")
    return str(path)


def test_5_closed_forms(request):
    # the closed forms assume positive curvature y^T s > 0, so pairs come from y = A s, A SPD
    worst, worst_sr1, builds = 0.0, 0.0, 0
    for seed in range(10):
        seq, cache = curved_pairs(seed, 100, 5)
        for phi in (0.0, 0.25, 1.0):
            schedule = PhiSchedule.constant(phi, 5)
            assert well_posed(seq, schedule)
            f = build_compact(seq, cache, schedule)
            T = f.recipe.grouped_transform(5)
            closed = T.T @ restricted_class_Mmatrix(seq, cache, phi) @ T
            worst = max(worst, rel(f.Mhat, closed))
            builds += 1
        schedule = PhiSchedule((SR1,) * 5)
        assert well_posed(seq, schedule)
        f = build_compact(seq, cache, schedule)
        worst_sr1 = max(worst_sr1, rel(f.Mhat, byrd_sr1_Mmatrix(seq, cache)))
    ok = worst <= 1e-10 and worst_sr1 <= 1e-10
    report(request, "5 closed-form middle matrices", ok,
           f"{builds} constant-phi builds {worst:.2e}, 10 all-SR1 builds {worst_sr1:.2e} "
           f"(limit 1e-10)")


def test_6_round_trip(request):
    worst = 0.0
    for sid in SCHEDULE_IDS:
        gen = generate_experiment(ExperimentConfig(n=1000, schedule_id=sid, seed=1), 0)
        fwd = build_compact(gen.pairs, gen.cache, gen.schedule)
        inv = build_inverse_compact(gen.pairs, gen.cache, gen.schedule, fwd)
        x = np.random.default_rng(sid.encode()[-1]).standard_normal(1000)
        worst = max(worst, rel(matvec_H(inv, matvec_B(fwd, x)), x))
    report(request, "6 round trip H(Bx) = x", worst <= 1e-9,
           f"max rel error {worst:.2e} (limit 1e-9)")


@pytest.fixture(scope="module")
def randomized_builds(tmp_path_factory):
    """100 mixed rank-one / rank-two builds from the line-search generator."""
    tmp = tmp_path_factory.mktemp("schedules")
    rng = np.random.default_rng(2024)
    builds = []
    seed = 0
    while len(builds) < 100:
        seed += 1
        schedule = random_schedule(seed, 5)
        if schedule.n_sr1 in (0, 5):
            continue
        n = int(rng.integers(10, 200))
        path = _schedule_file(tmp, f"s{seed}", schedule.tokens())
        gen = generate_experiment(ExperimentConfig(n=n, schedule_file=path, seed=seed), 0)
        fwd = build_compact(gen.pairs, gen.cache, gen.schedule)
        builds.append((gen, fwd))
    return builds


def test_7_block_identities(request, randomized_builds):
    worst_det, worst_inv, steps = 0.0, 0.0, 0
    for _, f in randomized_builds:
        for st in f.steps:
            def det(phi):
                return (1 / st.yts) * (-(1 - phi) / st.sBs - phi / st.yts)
            worst_det = max(worst_det, abs(det(phi_sr1(st.sBs, st.yts))) / abs(det(0.0)))
            if not st.sr1:
                O = np.array([[st.alpha, st.beta], [st.beta, st.delta]])
                expected = np.array([[-st.sBs + st.gamma_j, st.gamma_j],
                                  [st.gamma_j, st.yts + st.gamma_j]])
                worst_inv = max(worst_inv, rel(np.linalg.inv(O), expected))
            steps += 1
    ok = worst_det <= 1e-12 and worst_inv <= 1e-10
    report(request, "7 singular SR1 block and 2x2 inverse identity", ok,
           f"{steps} steps: det ratio {worst_det:.2e} (1e-12), inverse {worst_inv:.2e} (1e-10)")


def test_8_secant(request, randomized_builds):
    worst_b, worst_h = 0.0, 0.0
    for gen, fwd in randomized_builds:
        inv = build_inverse_compact(gen.pairs, gen.cache, gen.schedule, fwd)
        s, y = gen.pairs.S[-1], gen.pairs.Y[-1]
        worst_b = max(worst_b, rel(matvec_B(fwd, s), y))
        worst_h = max(worst_h, rel(solve(inv, y), s))
    ok = worst_b <= 1e-9 and worst_h <= 1e-9
    report(request, "8 secant conditions", ok,
           f"B s = y {worst_b:.2e}, H y = s {worst_h:.2e} over 100 builds (limit 1e-9)")
