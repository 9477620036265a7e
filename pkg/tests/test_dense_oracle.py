import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from compact_broyden.dense_oracle import (dense_broyden_update, dense_build,
                                          dense_inverse_update)
from compact_broyden.errors import Sr1Undefined
from compact_broyden.pairstore import SR1, PhiSchedule

from .conftest import problems, random_pairs, rel, well_posed

I3 = np.eye(3)
e1 = I3[0]


def test_fixed_point_s_equals_y():
    np.testing.assert_allclose(dense_broyden_update(I3, e1, e1, 0.0), I3, atol=1e-15)


@pytest.mark.parametrize("step", [SR1, 0.0])
def test_diag_example(step):
    np.testing.assert_allclose(dense_broyden_update(I3, e1, 2 * e1, step),
                               np.diag([2.0, 1.0, 1.0]), atol=1e-15)


def test_sr1_undefined():
    # y - Bs = 0 (s = y with B = I)
    with pytest.raises(Sr1Undefined):
        dense_broyden_update(I3, e1, e1, SR1)


def test_inverse_fixed_point():
    np.testing.assert_allclose(dense_inverse_update(I3, e1, e1, 0.7), I3, atol=1e-15)


def test_inverse_of_sr1_diag_example():
    # Phi^{SR1} = yts / (yts - yHy) = 2 / (2 - 4)
    H = dense_inverse_update(I3, e1, 2 * e1, -1.0)
    expected = np.linalg.inv(dense_broyden_update(I3, e1, 2 * e1, SR1))
    np.testing.assert_allclose(H, expected, atol=1e-15)
    np.testing.assert_allclose(H, np.diag([0.5, 1.0, 1.0]), atol=1e-15)


def test_empty_fold_is_gamma_identity():
    seq, _ = random_pairs(0, 4, 0, gamma=2.5)
    np.testing.assert_array_equal(dense_build(seq, PhiSchedule(())), 2.5 * np.eye(4))


def test_symmetric_after_update():
    seq, _ = random_pairs(4, 20, 3)
    B = dense_build(seq, PhiSchedule((-0.5, SR1, 2.0)))
    assert np.linalg.norm(B - B.T) == 0.0


def test_blocked_update_matches_plain_formula():
    # n larger than the block size exercises the blocked path
    rng = np.random.default_rng(1)
    n = 1500
    s, y = rng.standard_normal(n), rng.standard_normal(n)
    B0 = 0.8 * np.eye(n)
    Bs = B0 @ s
    sBs, yts = s @ Bs, y @ s
    w = y / yts - Bs / sBs
    phi = -0.4
    plain = B0 - np.outer(Bs, Bs) / sBs + np.outer(y, y) / yts + phi * sBs * np.outer(w, w)
    assert rel(dense_broyden_update(B0, s, y, phi), plain) < 1e-14


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 30))
def test_sr1_branches_agree(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    B = A @ A.T / n + np.eye(n)
    s, y = rng.standard_normal(n), rng.standard_normal(n)
    sBs, yts = s @ B @ s, y @ s
    assume(abs(yts - sBs) > 1e-3 * (abs(yts) + abs(sBs)))
    assume(abs(yts) > 1e-3 * np.linalg.norm(s) * np.linalg.norm(y))
    rank_one = dense_broyden_update(B, s, y, SR1)
    via_phi = dense_broyden_update(B, s, y, yts / (yts - sBs))
    assert rel(via_phi, rank_one) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(problems(max_n=50))
def test_secant_and_inverse_recursion(problem):
    seq, _, schedule = problem
    assume(well_posed(seq, schedule))
    B = seq.gamma * np.eye(seq.n)
    H = np.eye(seq.n) / seq.gamma
    for j in range(seq.m):
        s, y = seq.S[j], seq.Y[j]
        sBs, yts, yHy = s @ B @ s, y @ s, y @ H @ y
        if schedule.is_sr1(j):
            Phi = yts / (yts - yHy)
        else:
            phi = schedule[j]
            Phi = (1 - phi) * yts**2 / ((1 - phi) * yts**2 + phi * yHy * sBs)
        B = dense_broyden_update(B, s, y, schedule[j])
        H = dense_inverse_update(H, s, y, Phi)
        assert rel(B @ s, y) <= 1e-10
        assert rel(H @ y, s) <= 1e-10
        assert rel(H, np.linalg.inv(B)) <= 1e-9
