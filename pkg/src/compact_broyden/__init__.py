"""Compact representations of Broyden-class quasi-Newton matrices.

Mixed rank-one and rank-two updates with a per-step parameter phi (negative
values allowed), fast solves through the inverse representation, and
eigenvalues from a small factorization of the low-rank part.
"""
from .compact import (CompactFactor, ColumnRecipe, apply_psi_hat, apply_psi_hat_T,
                      build_compact, byrd_sr1_Mmatrix, materialize_dense, matvec_B, phi_sr1,
                      restricted_class_Mmatrix)
from .dense_oracle import dense_broyden_update, dense_build, dense_inverse_update
from .errors import *  # noqa: F401,F403
from .inverse import (InverseCompactFactor, build_inverse_compact, matvec_H, phi_cap,
                      solve)
from .pairstore import (SR1, GramCache, PairSequence, PhiSchedule, Sr1, append_pair,
                        build_pairs, ldr_split, load_pairs, save_pairs)
from .spectra import SpectralSummary, condition_number, eigenvalues, eigenvectors_nontrivial

__version__ = "0.1.0"
