"""Sparse linear solves for policy evaluation and MFPT systems.

``solve`` is the accurate path (sparse LU with partial pivoting via SuperLU);
``solve_iterative`` is a Gauss-Seidel sweep for callers that only need a
rough answer, such as state rankings.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import gauss_seidel_sweep
from .errors import DimensionError, NoConvergence, SingularMatrix, ZeroDiagonal

PIVOT_TOL = 1e-12


def _check_system(a, b):
    A = sp.csr_matrix(a, dtype=float)
    rhs = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix must be square, got {A.shape}")
    if A.shape[0] != rhs.shape[0]:
        raise DimensionError(f"matrix has {A.shape[0]} rows but rhs has length {rhs.shape[0]}")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("right-hand side must be finite")
    return A, rhs


def residual_norm(a, x, b) -> float:
    r = sp.csr_matrix(a) @ np.asarray(x) - np.asarray(b)
    return float(np.max(np.abs(r))) if r.size else 0.0


def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` by sparse LU.

    Raises SingularMatrix if any pivot of U is smaller than 1e-12 in magnitude.
    """
    A, rhs = _check_system(a, b)
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:  # SuperLU: "Factor is exactly singular"
        raise SingularMatrix(str(exc)) from None
    if np.min(np.abs(lu.U.diagonal())) < PIVOT_TOL:
        raise SingularMatrix("pivot magnitude below 1e-12")
    x = lu.solve(rhs)
    bound = 1e-6 * (1.0 + np.max(np.abs(rhs)))
    for _ in range(2):
        r = rhs - A @ x
        if np.max(np.abs(r)) <= bound:
            break
        x = x + lu.solve(r)
    if not np.all(np.isfinite(x)):
        raise SingularMatrix("solution is not finite")
    return x


def solve_iterative(a, b, tol: float = 1e-3, max_sweeps: int = 10_000, x0=None) -> np.ndarray:
    """Gauss-Seidel until ``max|a x - b| <= tol``; raises NoConvergence otherwise."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    A, rhs = _check_system(a, b)
    A.sort_indices()
    diag = A.diagonal()
    if np.any(np.abs(diag) < PIVOT_TOL):
        raise ZeroDiagonal(f"zero diagonal at rows {np.flatnonzero(np.abs(diag) < PIVOT_TOL)[:10].tolist()}")
    x = np.zeros(A.shape[0]) if x0 is None else np.array(x0, dtype=float)
    res = np.inf
    for sweep in range(1, max_sweeps + 1):
        gauss_seidel_sweep(A.indptr, A.indices, A.data, diag, rhs, x)
        res = residual_norm(A, x, rhs)
        if not np.isfinite(res):
            break
        if res <= tol:
            return x
    raise NoConvergence(f"residual {res:.3g} > {tol} after {sweep} sweeps", res, sweep)
