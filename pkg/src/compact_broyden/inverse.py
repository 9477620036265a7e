"""Compact representation of ``H = B^{-1}`` and fast solves ``B r = z``.

``H = gamma^{-1} I + Psi_tilde M_tilde Psi_tilde^T`` where the columns of
``Psi_tilde`` are ``s_j``, ``y_j / gamma`` or, at SR1 steps, the merged
``y_j / gamma - s_j``. The recursion needs ``s_j^T B_j s_j`` at every step and
takes it from the forward factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .compact import DENOM_FLOOR, ColumnRecipe, CompactFactor, build_compact
from .errors import DegenerateDenominator, DimensionMismatch, Sr1Undefined
from .pairstore import GramCache, PairSequence, PhiSchedule


@dataclass(frozen=True)
class InverseStepScalars:
    Phi: float
    yHy: float          # y_j^T H_j y_j
    alpha: float
    beta: float
    delta: float


@dataclass(frozen=True, eq=False)
class InverseCompactFactor:
    gamma: float
    recipe: ColumnRecipe
    Mtilde: np.ndarray
    steps: tuple
    pairs: PairSequence = field(repr=False)
    cache: GramCache = field(repr=False)

    @property
    def n(self) -> int:
        return self.pairs.n

    @property
    def m(self) -> int:
        return self.pairs.m

    @property
    def l(self) -> int:
        return self.recipe.l

    @cached_property
    def _coeffs(self):
        return self.recipe.coefficient_matrices(self.m, 1.0, 1.0 / self.gamma)


def phi_cap(phi: float, yHy: float, sBs: float, yts: float) -> float:
    """Inverse-recursion parameter dual to ``phi``.

    ``(1-phi) yts^2 / ((1-phi) yts^2 + phi yHy sBs)``; 1 at ``phi = 0`` and 0
    at ``phi = 1``.
    """
    num = (1.0 - phi) * yts * yts
    cross = phi * yHy * sBs
    den = num + cross
    if not abs(den) > DENOM_FLOOR * (abs(num) + abs(cross)):
        raise DegenerateDenominator("Phi denominator vanishes (updated matrix is singular)")
    return num / den


def build_inverse_compact(seq: PairSequence, cache: GramCache, schedule: PhiSchedule,
                          forward: Optional[CompactFactor] = None) -> InverseCompactFactor:
    """Grow ``M_tilde`` step by step.

    ``forward`` supplies ``s_j^T B_j s_j``; when omitted the forward
    recursion is run here (it also performs the SR1-proximity checks).
    """
    if forward is None:
        forward = build_compact(seq, cache, schedule)
    elif forward.pairs is not seq or len(forward.steps) != seq.m:
        raise ValueError("forward factor was built from a different pair sequence")

    g = seq.gamma
    StY, YtY = cache.StY, cache.YtY
    recipe = forward.recipe
    idx, a, b = recipe.weights(1.0, 1.0 / g)

    M = np.zeros((0, 0))
    steps = []
    ncols = 0
    for j in range(seq.m):
        yts = StY[j, j]
        yH0y = YtY[j, j] / g
        prev = slice(0, ncols)
        v = a[prev] * StY[idx[prev], j] + b[prev] * YtY[idx[prev], j]
        p = M @ v
        quad = float(v @ p)
        yHy = yH0y + quad
        if not abs(yHy) > DENOM_FLOOR * (abs(yH0y) + abs(quad)):
            raise DegenerateDenominator("y^T H_j y vanishes", step=j)

        sBs = forward.steps[j].sBs
        if schedule.is_sr1(j):
            denom = yts - yHy
            if not abs(denom) > DENOM_FLOOR * (abs(yts) + abs(yHy)):
                raise Sr1Undefined("y^T s equals y^T H y", step=j)
            Phi = yts / denom
            beta = -Phi / yts
            alpha = (1.0 + Phi * yHy / yts) / yts
            delta = -(1.0 - Phi) / yHy
            k = M.shape[0]
            nxt = np.empty((k + 1, k + 1))
            nxt[:k, :k] = M - beta * np.outer(p, p)
            nxt[:k, k] = nxt[k, :k] = -beta * p
            nxt[k, k] = -beta
            M = nxt
            ncols += 1
        else:
            try:
                Phi = phi_cap(float(schedule[j]), yHy, sBs, yts)
            except DegenerateDenominator as exc:
                raise DegenerateDenominator(exc.reason, step=j) from None
            alpha = (1.0 + Phi * yHy / yts) / yts
            beta = -Phi / yts
            delta = -(1.0 - Phi) / yHy
            k = M.shape[0]
            nxt = np.empty((k + 2, k + 2))
            nxt[:k, :k] = M + delta * np.outer(p, p)
            nxt[:k, k] = nxt[k, :k] = beta * p
            nxt[:k, k + 1] = nxt[k + 1, :k] = delta * p
            nxt[k:, k:] = [[alpha, beta], [beta, delta]]
            M = nxt
            ncols += 2
        steps.append(InverseStepScalars(Phi=Phi, yHy=yHy, alpha=alpha, beta=beta, delta=delta))

    return InverseCompactFactor(gamma=g, recipe=recipe, Mtilde=M, steps=tuple(steps),
                                pairs=seq, cache=cache)


def apply_psi_tilde(f: InverseCompactFactor, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != f.l:
        raise DimensionMismatch(f"expected {f.l} coefficients, got {coeffs.shape[0]}")
    Cs, Cy = f._coeffs
    return f.pairs.S_mat @ (Cs @ coeffs) + f.pairs.Y_mat @ (Cy @ coeffs)


def apply_psi_tilde_T(f: InverseCompactFactor, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != f.n:
        raise DimensionMismatch(f"expected length {f.n}, got {x.shape[0]}")
    Cs, Cy = f._coeffs
    return Cs.T @ (f.pairs.S_mat.T @ x) + Cy.T @ (f.pairs.Y_mat.T @ x)


def solve(f: InverseCompactFactor, z) -> np.ndarray:
    """``r = z / gamma + Psi_tilde M_tilde Psi_tilde^T z``, i.e. ``B r = z``."""
    z = np.asarray(z, dtype=float)
    return z / f.gamma + apply_psi_tilde(f, f.Mtilde @ apply_psi_tilde_T(f, z))


matvec_H = solve


def materialize_inverse(f: InverseCompactFactor) -> np.ndarray:
    P = apply_psi_tilde(f, np.eye(f.l))
    H = (P @ f.Mtilde) @ P.T
    H = 0.5 * (H + H.T)
    H[np.diag_indices_from(H)] += 1.0 / f.gamma
    return H
