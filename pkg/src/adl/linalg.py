"""Dense matrix primitives shared by the coding and update stages.

Matrices are float64 numpy arrays. Dictionaries and signal matrices keep
samples/atoms in columns, and anything serialized to disk is written in
column-major order (see model_io).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A numerical routine produced a non-finite or unusable result."""


class ConvergenceError(NumericalError):
    """An iterative solver ran out of iterations before reaching tolerance."""


def check_matrix(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a 2-D real matrix: at least 1x1, all entries finite.

    Returns the input as a float64 array (no copy when already float64).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D matrix with at least one row "
                         f"and one column, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError(f"{name} contains non-finite entries")
    return M


@dataclass(frozen=True)
class SymEig:
    """Result of the minimum-eigenvalue solve: the value and sweeps used."""

    min_eigenvalue: float
    iterations_used: int


def frob_sq(M: np.ndarray) -> float:
    """Squared Frobenius norm, sum of squared entries (= trace(M M^T))."""
    M = np.asarray(M, dtype=np.float64)
    return float(np.sum(M * M))


def trace_prod(A: np.ndarray, B: np.ndarray) -> float:
    """trace(A B^T) for same-shaped A and B, without forming the product.

    Convention: both arguments are p x q and the result is
    sum_ij A_ij * B_ij.  trace_prod(M, M) equals frob_sq(M).
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"trace_prod needs equal shapes, got {A.shape} vs {B.shape}")
    return float(np.sum(A * B))


def min_eig_sym(M: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> SymEig:
    """Minimum eigenvalue of a symmetric matrix via cyclic Jacobi sweeps.

    The input must be square and symmetric to within 1e-10 entrywise; it is
    symmetrized as (M + M^T)/2 before solving.  Sweeps run until the
    off-diagonal Frobenius norm drops below max(tol, k*eps*||M||_F); the
    second term is the float64 floor, below which no further accuracy is
    representable for large-norm inputs.  The returned eigenvalue is then
    within that threshold of the exact one.

    Raises ConvergenceError if max_sweeps cyclic sweeps do not reach the
    threshold (quadratic convergence makes this pathological in practice).
    """
    M = check_matrix(M, "M")
    k = M.shape[0]
    if M.shape[1] != k:
        raise ValueError(f"min_eig_sym needs a square matrix, got {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-10:
        raise ValueError("matrix is not symmetric to within 1e-10")
    A = 0.5 * (M + M.T)
    if k == 1:
        return SymEig(float(A[0, 0]), 0)

    norm = np.sqrt(frob_sq(A))
    floor = k * np.finfo(np.float64).eps * norm
    threshold = max(tol, floor)
    # Entries at most threshold/k cannot push the off-diagonal norm above
    # threshold even if all of them are skipped, so rotating them is wasted work.
    skip = threshold / k

    diag_mask = ~np.eye(k, dtype=bool)
    for sweep in range(max_sweeps):
        # Summing the off-diagonal entries directly avoids the cancellation
        # that frob_sq(A) - sum(diag^2) suffers near convergence.
        off_sq = float(np.sum(A[diag_mask] ** 2))
        if np.sqrt(off_sq) <= threshold:
            return SymEig(float(np.min(np.diag(A))), sweep)
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                # Stable rotation angle (Golub & Van Loan).
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = A[p, p], A[q, q]
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                # Set the rotated 2x2 block analytically to curb drift.
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0

    off = np.sqrt(float(np.sum(A[diag_mask] ** 2)))
    if off <= threshold:
        return SymEig(float(np.min(np.diag(A))), max_sweeps)
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e}, threshold {threshold:.3e})")


def least_squares_on_support(D: np.ndarray, y: np.ndarray, support) -> np.ndarray:
    """Least-squares coefficients of y over the atoms named by `support`.

    Solves min_x ||y - D[:, support] x||_2 and scatters the solution into a
    length-k vector that is zero off the support.  The support is sorted
    ascending before solving, so the result depends only on the index set,
    not its order.  A rank-deficient subdictionary falls back to the
    minimum-norm solution and is logged.
    """
    D = np.asarray(D, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, k = D.shape
    if y.shape[0] != m:
        raise ValueError(f"y has length {y.shape[0]}, expected {m}")
    support = sorted(int(j) for j in support)
    coeffs = np.zeros(k)
    if not support:
        return coeffs
    if len(set(support)) != len(support):
        raise ValueError("support indices must be distinct")
    if support[0] < 0 or support[-1] >= k:
        raise ValueError(f"support indices must lie in [0, {k})")
    if len(support) > m:
        raise ValueError(f"support size {len(support)} exceeds signal dimension {m}")
    sub = D[:, support]
    x, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
    if rank < len(support):
        logger.warning("rank-deficient subdictionary (rank %d < %d); "
                       "returning the minimum-norm solution", rank, len(support))
    coeffs[support] = x
    return coeffs
