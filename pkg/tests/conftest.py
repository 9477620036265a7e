import numpy as np
import pytest
from hypothesis import strategies as st

from compact_broyden.dense_oracle import dense_broyden_update
from compact_broyden.pairstore import SR1, PhiSchedule, build_pairs

SCHEDULE_IDS = ("exp1", "exp2", "exp3", "exp4")


def random_pairs(seed, n, m, gamma=None):
    rng = np.random.default_rng(seed)
    if gamma is None:
        gamma = rng.uniform(0.2, 2.0)
    S = rng.standard_normal((m, n))
    Y = rng.standard_normal((m, n))
    return build_pairs(n, gamma, S, Y)


def curved_pairs(seed, n, m, gamma=None):
    """Pairs with y = A s for a fixed SPD A, so every curvature y's is positive."""
    rng = np.random.default_rng(seed)
    if gamma is None:
        gamma = rng.uniform(0.2, 2.0)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * rng.uniform(0.5, 5.0, n)) @ Q.T
    S = rng.standard_normal((m, n))
    return build_pairs(n, gamma, S, S @ A)


def random_schedule(seed, m, sr1_prob=0.4):
    rng = np.random.default_rng(seed + 7919)
    out = []
    for _ in range(m):
        if rng.uniform() < sr1_prob:
            out.append(SR1)
        else:
            out.append(float(rng.choice([rng.uniform(-2, -0.1), 0.0, 1.0,
                                         rng.uniform(0, 1), rng.uniform(1, 3)])))
    return PhiSchedule(tuple(out))


def well_posed(seq, schedule, cond_limit=1e7, margin=1e-3):
    """Dense check that every step of the recursion is comfortably away from breakdown."""
    B = seq.gamma * np.eye(seq.n)
    for j in range(seq.m):
        s, y = seq.S[j], seq.Y[j]
        Bs = B @ s
        sBs, yts = s @ Bs, y @ s
        scale = np.linalg.norm(s) * max(np.linalg.norm(Bs), np.linalg.norm(y))
        if abs(sBs) < margin * scale or abs(yts) < margin * np.linalg.norm(s) * np.linalg.norm(y):
            return False
        if abs(yts - sBs) < margin * (abs(yts) + abs(sBs)):
            return False
        if not schedule.is_sr1(j):
            ref = yts / (yts - sBs)
            if abs(schedule[j] - ref) < margin * max(1.0, abs(ref)):
                return False
        try:
            B = dense_broyden_update(B, s, y, schedule[j])
        except ArithmeticError:
            return False
        if np.linalg.cond(B) > cond_limit:
            return False
    return True


@st.composite
def problems(draw, max_n=30, max_m=6):
    seed = draw(st.integers(0, 2**31 - 1))
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(2 * m, max(2 * m, max_n)))
    seq, cache = random_pairs(seed, n, m)
    schedule = random_schedule(seed, m)
    return seq, cache, schedule


@pytest.fixture
def diag_example():
    """gamma = 1, s = e1, y = 2 e1 in R^3."""
    e1 = np.array([1.0, 0.0, 0.0])
    return build_pairs(3, 1.0, [e1], [2 * e1])


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)
