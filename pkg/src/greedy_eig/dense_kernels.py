"""Small dense linear-algebra primitives.

Everything here operates on matrices of size at most max_j N_j (direction
solves) or n+1 (Galerkin bases), so plain LAPACK via numpy/scipy is the right
tool.  The generalized problems are reduced by Cholesky congruence rather
than matrix square roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IllConditionedGram, KernelFailure, SingularSystem

PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray   # ascending
    vectors: np.ndarray  # orthonormal columns


def sym_eig_full(S) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, ascending eigenvalues."""
    S = np.asarray(S, dtype=float)
    try:
        vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise KernelFailure(f"symmetric eigendecomposition failed: {exc}") from exc
    return EigenDecomposition(vals, vecs)


def cholesky_spd(S) -> np.ndarray:
    """Lower Cholesky factor; raises IllConditionedGram when S is not SPD."""
    S = np.asarray(S, dtype=float)
    diag_scale = float(np.max(np.abs(np.diag(S)))) if S.size else 0.0
    if diag_scale == 0.0:
        raise IllConditionedGram("matrix is identically zero")
    try:
        L = np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError:
        raise IllConditionedGram("Cholesky factorization failed") from None
    if np.min(np.diag(L)) ** 2 <= PIVOT_RTOL * diag_scale:
        raise IllConditionedGram("Cholesky pivot below tolerance")
    return L


def gen_sym_eig_smallest(A, B):
    """Smallest eigenpair of A c = tau B c with B SPD; returns (tau, c).

    The eigenvector is normalized so that c^T B c = 1.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    L = cholesky_spd(B)
    # congruence: L^-1 A L^-T has the same generalized spectrum
    tmp = scipy.linalg.solve_triangular(L, A, lower=True)
    C = scipy.linalg.solve_triangular(L, tmp.T, lower=True).T
    dec = sym_eig_full(C)
    tau = float(dec.values[0])
    y = dec.vectors[:, 0]
    c = scipy.linalg.solve_triangular(L.T, y, lower=False)
    c = c / np.sqrt(c @ B @ c)
    return tau, c


def spd_solve(S, rhs) -> np.ndarray:
    """Solve S x = rhs with S SPD via Cholesky."""
    rhs = np.asarray(rhs, dtype=float)
    L = cholesky_spd(S)
    y = scipy.linalg.solve_triangular(L, rhs, lower=True)
    return scipy.linalg.solve_triangular(L.T, y, lower=False)


def sym_indefinite_solve(S, rhs) -> np.ndarray:
    """Solve S x = rhs for symmetric, possibly indefinite S.

    Raises SingularSystem when a pivot falls below the relative tolerance.
    """
    S = np.asarray(S, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    S = 0.5 * (S + S.T)
    try:
        lu, piv = scipy.linalg.lu_factor(S)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"factorization failed: {exc}") from exc
    upiv = np.abs(np.diag(lu))
    scale = float(np.max(upiv)) if upiv.size else 0.0
    if scale == 0.0 or np.min(upiv) <= PIVOT_RTOL * scale:
        raise SingularSystem("pivot below tolerance; system is singular")
    return scipy.linalg.lu_solve((lu, piv), rhs)
