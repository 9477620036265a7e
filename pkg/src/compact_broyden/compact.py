"""Compact representation ``B = gamma I + Psi_hat M_hat Psi_hat^T`` of a Broyden-class matrix.

``M_hat`` is grown one step at a time by symmetric bordering, so it is never
inverted. ``Psi_hat`` is never formed either: each of its columns is a scaled
``s_j``, a ``y_j``, or (for an SR1 step) the merged column ``y_j - gamma s_j``,
described by a :class:`ColumnRecipe`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import (DegenerateDenominator, DimensionMismatch, NearSingularUpdate,
                     SingularMiddleMatrix, Sr1Undefined)
from .pairstore import GramCache, PairSequence, PhiSchedule, ldr_split

DENOM_FLOOR = 1e-12
SR1_DETECT_TOL = 1e-10
MIDDLE_COND_LIMIT = 1e14


class ColumnKind(enum.Enum):
    RANK_TWO_S = "s"
    RANK_TWO_Y = "y"
    SR1_COMBINED = "sr1"


class Column(NamedTuple):
    kind: ColumnKind
    index: int


class ColumnRecipe(tuple):
    """Ordered column descriptors.

    A rank-two step ``j`` contributes ``(S, j), (Y, j)`` next to each other; an
    SR1 step contributes a single merged column. Steps appear in increasing
    ``j``.
    """

    @classmethod
    def from_schedule(cls, schedule: PhiSchedule) -> "ColumnRecipe":
        cols = []
        for j in range(len(schedule)):
            if schedule.is_sr1(j):
                cols.append(Column(ColumnKind.SR1_COMBINED, j))
            else:
                cols += [Column(ColumnKind.RANK_TWO_S, j), Column(ColumnKind.RANK_TWO_Y, j)]
        return cls(cols)

    @property
    def l(self) -> int:
        return len(self)

    def weights(self, s_scale: float, y_scale: float):
        """Per-column ``(index, a, b)`` so that column ``c`` is ``a[c] s_i + b[c] y_i``.

        The merged SR1 column is ``-(s part) + (y part)``, i.e. the column pair
        of that step multiplied by ``(-1, 1)^T``.
        """
        idx = np.array([c.index for c in self], dtype=int)
        a = np.zeros(len(self))
        b = np.zeros(len(self))
        for c, col in enumerate(self):
            if col.kind is ColumnKind.RANK_TWO_S:
                a[c] = s_scale
            elif col.kind is ColumnKind.RANK_TWO_Y:
                b[c] = y_scale
            else:
                a[c], b[c] = -s_scale, y_scale
        return idx, a, b

    def coefficient_matrices(self, m: int, s_scale: float, y_scale: float):
        """``(Cs, Cy)`` with ``Psi = S Cs + Y Cy``; both ``m x l``."""
        idx, a, b = self.weights(s_scale, y_scale)
        Cs = np.zeros((m, len(self)))
        Cy = np.zeros((m, len(self)))
        Cs[idx, np.arange(len(self))] = a
        Cy[idx, np.arange(len(self))] = b
        return Cs, Cy

    def grouped_transform(self, m: int) -> np.ndarray:
        """``2m x l`` matrix ``T`` with ``Psi_hat = (X_0 ... X_{m-1}  Z_0 ... Z_{m-1}) T``.

        ``X_j`` is the s-type column of step ``j`` (``gamma s_j`` for ``B``,
        ``s_j`` for ``H``) and ``Z_j`` the y-type one. ``T`` is the
        permutation-and-merge taking the grouped layout of the closed-form
        middle matrices to the recipe layout.
        """
        T = np.zeros((2 * m, len(self)))
        for c, col in enumerate(self):
            if col.kind is ColumnKind.RANK_TWO_S:
                T[col.index, c] = 1.0
            elif col.kind is ColumnKind.RANK_TWO_Y:
                T[m + col.index, c] = 1.0
            else:
                T[col.index, c] = -1.0
                T[m + col.index, c] = 1.0
        return T


@dataclass(frozen=True)
class StepScalars:
    phi: float          # effective phi (the SR1 value at SR1 steps)
    sr1: bool
    yts: float
    sBs: float          # s_j^T B_j s_j
    alpha: float
    beta: float
    delta: float
    gamma_j: float      # diagonal entry of Gamma, 0 at SR1 steps


@dataclass(frozen=True, eq=False)
class CompactFactor:
    gamma: float
    recipe: ColumnRecipe
    Mhat: np.ndarray
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

    @property
    def gamma_diag(self) -> np.ndarray:
        return np.array([st.gamma_j for st in self.steps])

    @cached_property
    def _coeffs(self):
        return self.recipe.coefficient_matrices(self.m, self.gamma, 1.0)

    def psi_gram(self) -> np.ndarray:
        """``Psi_hat^T Psi_hat`` assembled from the Gram cache, no n-vectors touched."""
        Cs, Cy = self._coeffs
        c = self.cache
        cross = Cs.T @ c.StY @ Cy
        G = Cs.T @ c.StS @ Cs + cross + cross.T + Cy.T @ c.YtY @ Cy
        return 0.5 * (G + G.T)


def phi_sr1(sBs: float, yts: float, floor: float = DENOM_FLOOR) -> float:
    """The phi that turns the Broyden update into SR1: ``yts / (yts - sBs)``."""
    denom = yts - sBs
    if not abs(denom) > floor * (abs(yts) + abs(sBs)):
        raise Sr1Undefined("y^T s equals s^T B s; SR1 update undefined")
    return yts / denom


def _border_rank_one(M, p, diag, off):
    k = M.shape[0]
    out = np.empty((k + 1, k + 1))
    out[:k, :k] = M + diag * np.outer(p, p)
    out[:k, k] = out[k, :k] = off * p
    out[k, k] = diag
    return out


def _border_rank_two(M, p, corner, left, right, diag_coef):
    """``[[M + c pp^T, l p, r p], [., corner]]`` with ``corner`` 2x2."""
    k = M.shape[0]
    out = np.empty((k + 2, k + 2))
    out[:k, :k] = M + diag_coef * np.outer(p, p)
    out[:k, k] = out[k, :k] = left * p
    out[:k, k + 1] = out[k + 1, :k] = right * p
    out[k:, k:] = corner
    return out


def build_compact(seq: PairSequence, cache: GramCache, schedule: PhiSchedule) -> CompactFactor:
    """Run the forward recursion for ``M_hat`` over all stored pairs.

    At step ``j`` only Gram-cache entries are read: ``Psi_hat^T s_j`` comes
    from the ``j``-th columns of ``S^T S`` and rows of ``S^T Y``.
    """
    m = seq.m
    if m < 1:
        raise ValueError("need at least one pair")
    if len(schedule) != m:
        raise ValueError(f"schedule has {len(schedule)} entries for {m} pairs")
    if cache.m != m:
        raise DimensionMismatch(f"cache holds {cache.m} pairs, sequence holds {m}")

    g = seq.gamma
    StS, StY = cache.StS, cache.StY
    recipe = ColumnRecipe.from_schedule(schedule)
    idx, a, b = recipe.weights(g, 1.0)

    M = np.zeros((0, 0))
    steps = []
    ncols = 0
    for j in range(m):
        yts = StY[j, j]
        sB0s = g * StS[j, j]
        prev = slice(0, ncols)
        u = a[prev] * StS[idx[prev], j] + b[prev] * StY[j, idx[prev]]
        p = M @ u
        quad = float(u @ p)
        sBs = sB0s + quad
        if not abs(sBs) > DENOM_FLOOR * (abs(sB0s) + abs(quad)):
            raise DegenerateDenominator("s^T B_j s vanishes", step=j)

        if schedule.is_sr1(j):
            try:
                phi = phi_sr1(sBs, yts)
            except Sr1Undefined as exc:
                raise Sr1Undefined(exc.reason, step=j) from None
            beta = -phi / yts
            alpha = -(1.0 - phi) / sBs
            delta = (1.0 + phi * sBs / yts) / yts
            M = _border_rank_one(M, p, -beta, beta)
            gamma_j = 0.0
            ncols += 1
        else:
            phi = float(schedule[j])
            try:
                ref = phi_sr1(sBs, yts)
            except Sr1Undefined:
                ref = None
            if ref is not None and abs(phi - ref) <= SR1_DETECT_TOL * abs(ref):
                raise NearSingularUpdate(
                    f"phi={phi!r} is within {SR1_DETECT_TOL:g} of the SR1 value {ref!r}",
                    step=j)
            alpha = -(1.0 - phi) / sBs
            beta = -phi / yts
            delta = (1.0 + phi * sBs / yts) / yts
            corner = np.array([[alpha, beta], [beta, delta]])
            M = _border_rank_two(M, p, corner, alpha, beta, alpha)
            gamma_j = phi / (alpha + beta) + 0.0   # no -0.0 when phi == 0
            ncols += 2
        steps.append(StepScalars(phi=phi, sr1=schedule.is_sr1(j), yts=float(yts),
                                 sBs=float(sBs), alpha=alpha, beta=beta, delta=delta,
                                 gamma_j=gamma_j))

    return CompactFactor(gamma=g, recipe=recipe, Mhat=M, steps=tuple(steps),
                         pairs=seq, cache=cache)


def apply_psi_hat(f: CompactFactor, coeffs) -> np.ndarray:
    """``Psi_hat @ coeffs``; ``coeffs`` may be an ``l``-vector or ``l x k`` block."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != f.l:
        raise DimensionMismatch(f"expected {f.l} coefficients, got {coeffs.shape[0]}")
    Cs, Cy = f._coeffs
    return f.pairs.S_mat @ (Cs @ coeffs) + f.pairs.Y_mat @ (Cy @ coeffs)


def apply_psi_hat_T(f: CompactFactor, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != f.n:
        raise DimensionMismatch(f"expected length {f.n}, got {x.shape[0]}")
    Cs, Cy = f._coeffs
    return Cs.T @ (f.pairs.S_mat.T @ x) + Cy.T @ (f.pairs.Y_mat.T @ x)


def matvec_B(f: CompactFactor, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return f.gamma * x + apply_psi_hat(f, f.Mhat @ apply_psi_hat_T(f, x))


def psi_hat_matrix(f: CompactFactor) -> np.ndarray:
    """Explicit ``n x l`` ``Psi_hat``. Test support and eigenvectors only."""
    return apply_psi_hat(f, np.eye(f.l))


def materialize_dense(f: CompactFactor) -> np.ndarray:
    P = psi_hat_matrix(f)
    B = (P @ f.Mhat) @ P.T
    B = 0.5 * (B + B.T)
    B[np.diag_indices_from(B)] += f.gamma
    return B


# -- closed-form middle matrices (cross-check targets) -------------------------

def _checked_inverse(A: np.ndarray) -> np.ndarray:
    if np.linalg.cond(A) > MIDDLE_COND_LIMIT:
        raise SingularMiddleMatrix(f"middle matrix condition number exceeds {MIDDLE_COND_LIMIT:g}")
    Ainv = np.linalg.inv(A)
    return 0.5 * (Ainv + Ainv.T)


def _leading(cache: GramCache, k: int) -> GramCache:
    return GramCache(StS=cache.StS[:k, :k], StY=cache.StY[:k, :k], YtY=cache.YtY[:k, :k])


def _restricted_middle(cache: GramCache, gamma: float, phi: float, sBs):
    k = cache.m
    L, D, _ = ldr_split(cache)
    yts = np.diag(cache.StY)
    lam = 1.0 / (-(1.0 - phi) / sBs[:k] - phi / yts)
    G = phi * np.diag(lam)
    Omega = np.block([[-gamma * cache.StS + G, -L + G],
                      [-L.T + G, D + G]])
    return _checked_inverse(Omega)


def restricted_class_Mmatrix(seq: PairSequence, cache: GramCache, phi: float) -> np.ndarray:
    """Closed-form ``M`` for a constant-phi schedule, columns ``(gamma S, Y)``.

    The ``s_i^T B_i s_i`` needed by ``Lambda`` are obtained from the closed
    form of the previous step (``B_i = gamma I + Psi_{i-1} M_{i-1} Psi_{i-1}^T``),
    so the bordering recursion is never consulted. The formula holds for any
    constant phi that avoids the SR1 value, not only phi in [0, 1].
    """
    m, g = seq.m, seq.gamma
    phi = float(phi)
    sBs = np.empty(m)
    M = None
    for k in range(m):
        s_sq = cache.StS[k, k]
        if k == 0:
            sBs[k] = g * s_sq
        else:
            u = np.concatenate([g * cache.StS[:k, k], cache.StY[k, :k]])
            sBs[k] = g * s_sq + u @ M @ u
        M = _restricted_middle(_leading(cache, k + 1), g, phi, sBs)
    return M


def byrd_sr1_Mmatrix(seq: PairSequence, cache: GramCache) -> np.ndarray:
    """``(D + L + L^T - gamma S^T S)^{-1}`` for an all-SR1 schedule, columns ``Y - gamma S``."""
    L, D, _ = ldr_split(cache)
    return _checked_inverse(D + L + L.T - seq.gamma * cache.StS)


def broyden_class_Mmatrix(seq: PairSequence, cache: GramCache, schedule: PhiSchedule,
                          sBs) -> np.ndarray:
    """Direct ``(T^T Omega T)^{-1}`` for a mixed schedule.

    ``sBs`` must hold ``s_j^T B_j s_j`` from an independent source (e.g. the
    dense recursion). ``T`` is :meth:`ColumnRecipe.grouped_transform`.
    """
    g = seq.gamma
    L, D, _ = ldr_split(cache)
    yts = np.diag(cache.StY)
    sBs = np.asarray(sBs, dtype=float)
    gam = np.zeros(seq.m)
    for j in range(seq.m):
        if not schedule.is_sr1(j):
            phi = float(schedule[j])
            gam[j] = phi / (-(1.0 - phi) / sBs[j] - phi / yts[j])
    G = np.diag(gam)
    Omega = np.block([[-g * cache.StS + G, -L + G],
                      [-L.T + G, D + G]])
    T = ColumnRecipe.from_schedule(schedule).grouped_transform(seq.m)
    return _checked_inverse(T.T @ Omega @ T)
