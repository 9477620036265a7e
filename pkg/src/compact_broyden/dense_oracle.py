"""Naive dense Broyden-class recursions used as ground truth.

Everything here costs ``O(n^2)`` per update on purpose. Updates are applied
in row blocks so that ``n = 10_000`` does not allocate full-size temporaries.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateDenominator, DimensionMismatch, NumericalError, Sr1Undefined
from .pairstore import CURVATURE_FLOOR, PairSequence, PhiSchedule, Sr1

DENOM_FLOOR = 1e-12
_BLOCK = 1024


def _lowrank_update_(A, U, C):
    """In place ``A += U C U^T`` processed in row blocks."""
    UC = U @ C
    for r0 in range(0, A.shape[0], _BLOCK):
        r1 = min(r0 + _BLOCK, A.shape[0])
        A[r0:r1] += UC[r0:r1] @ U.T
    return A


def symmetrize_(A):
    """In place ``A <- (A + A^T) / 2``, blockwise."""
    n = A.shape[0]
    for i0 in range(0, n, _BLOCK):
        i1 = min(i0 + _BLOCK, n)
        blk = A[i0:i1, i0:i1]
        A[i0:i1, i0:i1] = 0.5 * (blk + blk.T)
        for j0 in range(i1, n, _BLOCK):
            j1 = min(j0 + _BLOCK, n)
            avg = 0.5 * (A[i0:i1, j0:j1] + A[j0:j1, i0:i1].T)
            A[i0:i1, j0:j1] = avg
            A[j0:j1, i0:i1] = avg.T
    return A


def _check_inputs(M, s, y):
    n = M.shape[0]
    if M.shape != (n, n) or s.shape != (n,) or y.shape != (n,):
        raise DimensionMismatch(f"matrix {M.shape} incompatible with vectors {s.shape}, {y.shape}")


def dense_broyden_update(B, s, y, step, overwrite=False):
    """One Broyden-class update of a dense matrix.

    ``step`` is a real phi or the ``SR1`` marker. Real phi uses the textbook
    form ``B - Bss^TB/s^TBs + yy^T/y^Ts + phi (s^TBs) ww^T``; the marker uses
    the rank-one form ``B + uu^T/u^Ts`` with ``u = y - Bs``.
    """
    B = np.asarray(B, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_inputs(B, s, y)
    if not overwrite:
        B = B.copy()

    yts = float(y @ s)
    if not abs(yts) > CURVATURE_FLOOR * np.linalg.norm(y) * np.linalg.norm(s):
        raise DegenerateDenominator("y^T s below floor")
    Bs = B @ s
    sBs = float(s @ Bs)

    if isinstance(step, Sr1):
        u = y - Bs
        uts = float(u @ s)
        if not abs(uts) > DENOM_FLOOR * (abs(yts) + abs(sBs)):
            raise Sr1Undefined("y^T s - s^T B s below floor")
        _lowrank_update_(B, u[:, None], np.array([[1.0 / uts]]))
    else:
        if not abs(sBs) > DENOM_FLOOR * np.linalg.norm(s) * np.linalg.norm(Bs):
            raise DegenerateDenominator("s^T B s below floor")
        phi = float(step)
        w = y / yts - Bs / sBs
        U = np.column_stack([Bs, y, w])
        C = np.diag([-1.0 / sBs, 1.0 / yts, phi * sBs])
        _lowrank_update_(B, U, C)
    return symmetrize_(B)


def dense_inverse_update(H, s, y, Phi, overwrite=False):
    """One step of the inverse recursion with parameter ``Phi``.

    ``H + ss^T/s^Ty - Hyy^TH/y^THy + Phi (y^THy) vv^T`` with
    ``v = s/y^Ts - Hy/y^THy``.
    """
    H = np.asarray(H, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_inputs(H, s, y)
    if not overwrite:
        H = H.copy()

    yts = float(y @ s)
    if not abs(yts) > CURVATURE_FLOOR * np.linalg.norm(y) * np.linalg.norm(s):
        raise DegenerateDenominator("y^T s below floor")
    Hy = H @ y
    yHy = float(y @ Hy)
    if not abs(yHy) > DENOM_FLOOR * np.linalg.norm(y) * np.linalg.norm(Hy):
        raise DegenerateDenominator("y^T H y below floor")
    v = s / yts - Hy / yHy
    U = np.column_stack([s, Hy, v])
    C = np.diag([1.0 / yts, -1.0 / yHy, float(Phi) * yHy])
    _lowrank_update_(H, U, C)
    return symmetrize_(H)


def dense_build(seq: PairSequence, schedule: PhiSchedule):
    """Fold :func:`dense_broyden_update` over the pairs starting at ``gamma * I``."""
    if len(schedule) != seq.m:
        raise ValueError(f"schedule has {len(schedule)} entries for {seq.m} pairs")
    B = seq.gamma * np.eye(seq.n)
    for j in range(seq.m):
        try:
            dense_broyden_update(B, seq.S[j], seq.Y[j], schedule[j], overwrite=True)
        except NumericalError as exc:
            raise type(exc)(exc.reason, step=j) from None
    return B


def dense_step_quantities(seq: PairSequence, schedule: PhiSchedule):
    """Per-step ``s_j^T B_j s_j`` from the dense recursion (small ``n`` only)."""
    B = seq.gamma * np.eye(seq.n)
    out = []
    for j in range(seq.m):
        s = seq.S[j]
        out.append(float(s @ B @ s))
        dense_broyden_update(B, s, seq.Y[j], schedule[j], overwrite=True)
    return np.array(out)
