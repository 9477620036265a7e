"""Eigenvalues of ``B = gamma I + Psi_hat M_hat Psi_hat^T``.

With ``Psi_hat = Q R`` the nontrivial eigenvalues are ``gamma + eig(R M_hat R^T)``
and ``gamma`` fills the remaining ``n - rank`` slots. For values only, ``R``
comes from a pivoted Cholesky of ``Psi_hat^T Psi_hat`` built from the Gram
cache; eigenvectors need ``Q`` and use an explicit pivoted QR.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .compact import CompactFactor, psi_hat_matrix
from .errors import NumericalBreakdown

RANK_TOL = 1e-12
EPS_FLOOR = 1e-14


@dataclass(frozen=True)
class SpectralSummary:
    gamma: float
    n: int
    rank: int
    shifted: np.ndarray     # gamma + d_i, ascending
    cond: float             # inf when the spectrum touches zero

    @property
    def trivial_multiplicity(self) -> int:
        return self.n - self.rank

    @property
    def singular(self) -> bool:
        return np.isinf(self.cond)

    def full_spectrum(self) -> np.ndarray:
        """All ``n`` eigenvalues, sorted ascending."""
        full = np.concatenate([np.full(self.trivial_multiplicity, self.gamma), self.shifted])
        return np.sort(full)

    def trace(self) -> float:
        return self.gamma * self.trivial_multiplicity + float(self.shifted.sum())

    def describe(self) -> str:
        shifted = ", ".join(f"{v:.12g}" for v in self.shifted)
        cond = "inf" if self.singular else f"{self.cond:.12g}"
        return (f"gamma={self.gamma:.12g} multiplicity={self.trivial_multiplicity}; "
                f"shifted=[{shifted}]; cond={cond}")


def _cond(gamma, multiplicity, shifted):
    mags = np.abs(shifted)
    if multiplicity > 0:
        mags = np.append(mags, abs(gamma))
    hi, lo = mags.max(), mags.min()
    if lo <= EPS_FLOOR * hi:
        return np.inf
    return float(hi / lo)


def _gram_factor(f: CompactFactor):
    """``R`` (rank x l) with ``Psi_hat^T Psi_hat = R^T R``, or None on failure."""
    G = f.psi_gram()
    tol = RANK_TOL * float(np.max(np.diag(G)))
    U, piv, rank, info = lapack.dpstrf(G, tol=tol, lower=0)
    if info < 0 or not np.all(np.isfinite(U[:rank])):
        return None
    R = np.zeros((rank, f.l))
    R[:, piv - 1] = np.triu(U)[:rank]
    return R


def _qr_factor(f: CompactFactor):
    """``(Q, R)`` from a pivoted thin QR of the explicit ``Psi_hat``."""
    P = psi_hat_matrix(f)
    Q, Rp, piv = scipy.linalg.qr(P, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rp))
    if diag.size == 0 or not np.all(np.isfinite(Rp)):
        raise NumericalBreakdown("QR of Psi_hat failed")
    rank = int(np.sum(diag ** 2 > RANK_TOL * diag[0] ** 2))
    R = np.zeros((rank, f.l))
    R[:, piv] = Rp[:rank]
    return Q[:, :rank], R


def _shift_eigs(f, R, vectors=False):
    K = R @ f.Mhat @ R.T
    K = 0.5 * (K + K.T)
    if vectors:
        return np.linalg.eigh(K)
    return np.linalg.eigvalsh(K)


def eigenvalues(f: CompactFactor) -> SpectralSummary:
    R = _gram_factor(f)
    if R is None:
        _, R = _qr_factor(f)
    d = _shift_eigs(f, R)
    rank = R.shape[0]
    shifted = np.sort(f.gamma + d)
    return SpectralSummary(gamma=f.gamma, n=f.n, rank=rank, shifted=shifted,
                           cond=_cond(f.gamma, f.n - rank, shifted))


def eigenvectors_nontrivial(f: CompactFactor):
    """Eigenpairs for the shifted eigenvalues.

    Returns ``(values, vectors)`` with ``vectors`` of shape ``n x rank`` and
    orthonormal columns. No vector for the trivial eigenvalue is produced.
    """
    Q, R = _qr_factor(f)
    d, V = _shift_eigs(f, R, vectors=True)
    return f.gamma + d, Q @ V


def condition_number(f: CompactFactor) -> float:
    return eigenvalues(f).cond
