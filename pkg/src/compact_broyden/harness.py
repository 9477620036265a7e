"""Simulated line-search experiments and the accuracy/timing campaigns.

Random streams: trial ``t`` of seed ``s`` draws from
``PCG64(SeedSequence(s, spawn_key=(t, k)))`` with ``k = 0`` for pair
generation and ``k = 1`` for the right-hand side. Generation draws, in order:
gamma, the random phi entries (left to right), ``x_0``, ``x_1``,
``g_0 .. g_m``, then per step ``j >= 1`` the step length followed by any
gradient redraws.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .compact import build_compact, psi_hat_matrix
from .dense_oracle import dense_build
from .errors import CurvatureTooSmall, NumericalError, ResampleLimitExceeded
from .inverse import build_inverse_compact, solve
from .pairstore import SR1, GramCache, PairSequence, PhiSchedule, append_pair, parse_phi_token

MAX_RESAMPLES = 100

# Schedule patterns; strings are random draws, see _draw_phi.
SCHEDULES = {
    "exp1": ("neg", 1.0, "unit", 0.0, "big"),
    "exp2": ("neg", 1.0, SR1, 0.0, "big"),
    "exp3": ("neg", 1.0, SR1, SR1, "big"),
    "exp4": (SR1, 1.0, SR1, 0.0, "big"),
}


def _draw_phi(kind, rng):
    if kind == "neg":
        return rng.uniform(-2.0, -0.1)
    if kind == "unit":
        # open interval (0, 1)
        while True:
            v = rng.uniform(0.0, 1.0)
            if v > 0.0:
                return v
    if kind == "big":
        return 3.0 - rng.uniform(0.0, 2.0)   # (1, 3]
    return kind


@dataclass
class ExperimentConfig:
    n: int
    m: int = 5
    schedule_id: str = "exp1"
    trials: int = 10
    seed: int = 0
    gamma_range: tuple = (0.1, 1.0)
    schedule_file: Optional[str] = None
    dense_solve: bool = True
    timing_repeats: int = 5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n < 2 * self.m:
            raise ValueError(f"need n >= 2m, got n={self.n}, m={self.m}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        lo, hi = self.gamma_range
        if not 0 < lo <= hi:
            raise ValueError("gamma_range must be a positive interval")
        self.gamma_range = (float(lo), float(hi))
        if self.schedule_file is None and self.schedule_id not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule_id!r}; "
                             f"choose from {sorted(SCHEDULES)} or pass a schedule file")


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial, stream))))


def draw_schedule(cfg: ExperimentConfig, rng: np.random.Generator) -> PhiSchedule:
    if cfg.schedule_file is not None:
        tokens = Path(cfg.schedule_file).read_text().split()
        if len(tokens) != cfg.m:
            raise ValueError(f"schedule file has {len(tokens)} entries, m={cfg.m}")
        return PhiSchedule(tuple(parse_phi_token(t) for t in tokens))
    pattern = SCHEDULES[cfg.schedule_id]
    return PhiSchedule(tuple(_draw_phi(pattern[i % len(pattern)], rng) for i in range(cfg.m)))


class GeneratedPairs(NamedTuple):
    pairs: PairSequence
    cache: GramCache
    schedule: PhiSchedule
    resamples: int


def generate_experiment(cfg: ExperimentConfig, trial: int) -> GeneratedPairs:
    """Pairs from a simulated line search ``x_{j+1} = x_j - a_j B_j^{-1} g_j``.

    A pair is accepted only if it passes the curvature floor and both compact
    builders succeed on the extended sequence; otherwise ``g_{j+1}`` is
    redrawn.
    """
    rng = trial_rng(cfg.seed, trial)
    n, m = cfg.n, cfg.m
    gamma = rng.uniform(*cfg.gamma_range)
    schedule = draw_schedule(cfg, rng)
    x0 = rng.standard_normal(n)
    x1 = rng.standard_normal(n)
    g = [rng.standard_normal(n) for _ in range(m + 1)]

    seq, cache = PairSequence.empty(n, gamma), GramCache()
    x = x1
    resamples = 0
    for j in range(m):
        if j == 0:
            s = x1 - x0
        else:
            r = solve(build_inverse_compact(seq, cache, schedule[:j]), g[j])
            x_next = x - rng.uniform(0.0, 1.0) * r
            s = x_next - x
            x = x_next
        for attempt in range(MAX_RESAMPLES + 1):
            try:
                seq2, cache2 = append_pair(seq, cache, s, g[j + 1] - g[j])
                fwd = build_compact(seq2, cache2, schedule[:j + 1])
                build_inverse_compact(seq2, cache2, schedule[:j + 1], fwd)
                break
            except (CurvatureTooSmall, NumericalError):
                if attempt == MAX_RESAMPLES:
                    raise ResampleLimitExceeded(
                        f"pair rejected after {MAX_RESAMPLES} gradient redraws", step=j) from None
                resamples += 1
                g[j + 1] = rng.standard_normal(n)
        seq, cache = seq2, cache2
    return GeneratedPairs(seq, cache, schedule, resamples)


def frobenius_rel_error(B: np.ndarray, f, block: int = 1024) -> float:
    """``||B - B_compact||_F / ||B||_F`` without forming ``B_compact``."""
    P = psi_hat_matrix(f)
    PM = P @ f.Mhat
    num = den = 0.0
    for r0 in range(0, f.n, block):
        r1 = min(r0 + block, f.n)
        rows = PM[r0:r1] @ P.T
        rows[np.arange(r1 - r0), np.arange(r0, r1)] += f.gamma
        diff = B[r0:r1] - rows
        num += float(np.sum(diff * diff))
        den += float(np.sum(B[r0:r1] ** 2))
    return math.sqrt(num / den)


CSV_COLUMNS = ("trial", "frob_rel_err", "solve_rel_resid", "t_compact_s", "t_dense_s",
               "resamples", "status")


@dataclass
class TrialRecord:
    trial: int
    frob_rel_err: float = math.nan
    solve_rel_resid: float = math.nan
    t_compact_s: float = math.nan
    t_dense_s: float = math.nan
    resamples: int = 0
    status: str = "ok"


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list = field(default_factory=list)

    @property
    def attempted(self) -> int:
        return len(self.records)

    @property
    def succeeded(self) -> int:
        return sum(r.status == "ok" for r in self.records)

    @property
    def failed(self) -> int:
        return self.attempted - self.succeeded

    def column(self, name: str, ok_only: bool = False) -> list:
        return [getattr(r, name) for r in self.records if not ok_only or r.status == "ok"]

    def mean(self, name: str) -> float:
        vals = self.column(name, ok_only=True)
        return float(np.mean(vals)) if vals else math.nan

    @property
    def means(self) -> dict:
        return {c: self.mean(c) for c in ("frob_rel_err", "solve_rel_resid",
                                          "t_compact_s", "t_dense_s")}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([repr(v) if isinstance(v, float) else v
                        for v in (getattr(r, c) for c in CSV_COLUMNS)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and math.isnan(v) else v
        cfg = asdict(self.config)
        cfg["gamma_range"] = list(cfg["gamma_range"])
        return {
            "config": cfg,
            "attempted": self.attempted,
            "succeeded": self.succeeded,
            "failed": self.failed,
            "means": {k: clean(v) for k, v in self.means.items()},
            "per_trial": {c: [clean(v) for v in self.column(c)] for c in CSV_COLUMNS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _time_compact_solve(seq, schedule, z, repeats):
    """Median wall time of the full compact pipeline: Gram caches, M_tilde, solve."""
    times = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        cache = GramCache.from_pairs(seq)
        r = solve(build_inverse_compact(seq, cache, schedule), z)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), r


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    rec = TrialRecord(trial=trial)
    try:
        gen = generate_experiment(cfg, trial)
        rec.resamples = gen.resamples
        z = trial_rng(cfg.seed, trial, stream=1).standard_normal(cfg.n)

        rec.t_compact_s, _ = _time_compact_solve(gen.pairs, gen.schedule, z, cfg.timing_repeats)

        fwd = build_compact(gen.pairs, gen.cache, gen.schedule)
        inv = build_inverse_compact(gen.pairs, gen.cache, gen.schedule, fwd)
        r = solve(inv, z)

        B = dense_build(gen.pairs, gen.schedule)
        rec.frob_rel_err = frobenius_rel_error(B, fwd)
        rec.solve_rel_resid = float(np.linalg.norm(B @ r - z) / np.linalg.norm(z))
        if cfg.dense_solve:
            t0 = time.perf_counter()
            scipy.linalg.solve(B, z, assume_a="sym", overwrite_a=True, check_finite=False)
            rec.t_dense_s = time.perf_counter() - t0
        del B
    except (NumericalError, CurvatureTooSmall, np.linalg.LinAlgError) as exc:
        rec.status = f"failed: {exc}"
    return rec


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    report = ExperimentReport(config=cfg)
    for t in range(cfg.trials):
        report.records.append(run_trial(cfg, t))
    return report
