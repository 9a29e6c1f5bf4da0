"""Dictionary update stage: operand construction and block coordinate descent.

Given signals Y and fixed codes S for one class, the update minimizes

    -2 trace(A D^T) + trace(D Bbar D^T)   subject to unit-norm columns,

where A and B pool the own-class statistics minus a rho-weighted sum of
off-class statistics.  B can be indefinite because of the subtraction, so it
is shifted to Bbar = B - lambda_min(B) I, which is positive semidefinite and
changes the objective only by a constant on unit-norm dictionaries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .linalg import NumericalError, check_matrix, frob_sq, min_eig_sym, trace_prod

if TYPE_CHECKING:
    from .sparse_coding import SparseCodeMatrix

logger = logging.getLogger(__name__)

# Columns whose shifted curvature or update direction degenerates below these
# bounds get no valid closed-form step; they are left untouched and flagged.
EPS_DIAG = 1e-10
EPS_NORM = 1e-12


@dataclass(frozen=True, eq=False)
class Dictionary:
    """m x k matrix of unit-norm atoms, one atom per column."""

    atoms: np.ndarray

    def __eq__(self, other):
        return isinstance(other, Dictionary) and np.array_equal(self.atoms, other.atoms)

    def __post_init__(self):
        atoms = check_matrix(self.atoms, "atoms").copy()
        norms = np.linalg.norm(atoms, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-9)
        if bad.size:
            raise ValueError(f"atoms must have unit norm; columns {bad.tolist()} "
                             f"have norms {norms[bad].tolist()}")
        atoms.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)

    @property
    def m(self) -> int:
        return self.atoms.shape[0]

    @property
    def k(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class UpdateOperands:
    """The (A, B) statistics plus the convexifying shift of B.

    Bbar = B - lambda_min * I_k is positive semidefinite up to the
    eigensolve tolerance whenever lambda_min is B's minimum eigenvalue.
    """

    A: np.ndarray
    B: np.ndarray
    B_bar: np.ndarray
    lambda_min: float

    def __post_init__(self):
        A = check_matrix(self.A, "A")
        B = check_matrix(self.B, "B")
        B_bar = check_matrix(self.B_bar, "B_bar")
        k = A.shape[1]
        if B.shape != (k, k) or B_bar.shape != (k, k):
            raise ValueError(f"B and B_bar must be {k} x {k}, got {B.shape} and {B_bar.shape}")
        if np.max(np.abs(B - B.T)) > 1e-10:
            raise ValueError("B must be symmetric to within 1e-10")
        expected = B - self.lambda_min * np.eye(k)
        if not np.allclose(B_bar, expected, rtol=1e-9, atol=1e-9 * (1.0 + abs(self.lambda_min))):
            raise ValueError("B_bar must equal B - lambda_min * I")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "B_bar", B_bar)

    @property
    def k(self) -> int:
        return self.A.shape[1]


def _dense_codes(S) -> np.ndarray:
    if hasattr(S, "to_dense"):
        return S.to_dense()
    return np.asarray(S, dtype=np.float64)


def build_operands_multiclass_batch(Yi: np.ndarray, Si,
                                    offclass: Sequence[tuple],
                                    rho: float,
                                    eig_tol: float = 1e-10) -> UpdateOperands:
    """Operands with all off classes pooled into one batch.

    A = (1/N_i) Y_i S_i^T - rho * sum_j (1/N_j) Y_j S_j^T and likewise for B
    from the codes alone, where the sum runs over every off-class entry
    (Y_j, S_j) and each term carries its own class's sample count.  With
    rho = 0 the off-class terms are skipped entirely, leaving the plain
    reconstructive statistics.
    """
    if rho < 0:
        raise ValueError("rho must be non-negative")
    Yi = check_matrix(Yi, "Yi")
    Si = _dense_codes(Si)
    n_i = Yi.shape[1]
    if Si.shape[1] != n_i:
        raise ValueError(f"codes have {Si.shape[1]} columns, signals have {n_i}")
    A = (Yi @ Si.T) / n_i
    B = (Si @ Si.T) / n_i
    if rho > 0:
        if not offclass:
            raise ValueError("rho > 0 requires at least one off-class entry")
        for idx, (Yj, Sj) in enumerate(offclass):
            Yj = check_matrix(Yj, f"off-class signals {idx}")
            Sj = _dense_codes(Sj)
            n_j = Yj.shape[1]
            if Sj.shape[1] != n_j:
                raise ValueError(f"off-class entry {idx}: codes have {Sj.shape[1]} "
                                 f"columns, signals have {n_j}")
            if Yj.shape[0] != Yi.shape[0] or Sj.shape[0] != Si.shape[0]:
                raise ValueError(f"off-class entry {idx}: dimension mismatch")
            A -= (rho / n_j) * (Yj @ Sj.T)
            B -= (rho / n_j) * (Sj @ Sj.T)
    B = 0.5 * (B + B.T)
    eig = min_eig_sym(B, tol=eig_tol)
    B_bar = B - eig.min_eigenvalue * np.eye(B.shape[0])
    return UpdateOperands(A=A, B=B, B_bar=B_bar, lambda_min=eig.min_eigenvalue)


def build_operands_binary(Yc: np.ndarray, Sc, Ybar, Sbar,
                          rho: float, eig_tol: float = 1e-10) -> UpdateOperands:
    """Operands for the two-class case: one own class, one pooled off class."""
    if rho > 0:
        return build_operands_multiclass_batch(Yc, Sc, [(Ybar, Sbar)], rho, eig_tol)
    return build_operands_multiclass_batch(Yc, Sc, [], 0.0, eig_tol)


def bcd_update(D: Dictionary, ops: UpdateOperands, sweeps: int = 1,
               eps_diag: float = EPS_DIAG,
               eps_norm: float = EPS_NORM) -> tuple[Dictionary, tuple[int, ...]]:
    """One or more warm-started block coordinate descent sweeps.

    Per sweep, column j moves to the exact minimizer of the surrogate over
    the unit sphere with the other columns held fixed:

        u = d_j + (a_j - D bbar_j) / Bbar_jj,   d_j <- u / ||u||.

    Columns with Bbar_jj <= eps_diag or ||u|| <= eps_norm have no usable
    step; they are left unchanged and returned as flagged indices so the
    caller can reinitialize them.  The surrogate value never increases.
    """
    if sweeps < 0:
        raise ValueError("sweeps must be non-negative")
    atoms = D.atoms
    m, k = atoms.shape
    if ops.A.shape != (m, k):
        raise ValueError(f"operands expect a {ops.A.shape} dictionary, got {atoms.shape}")
    W = atoms.copy()
    B_bar = ops.B_bar
    A = ops.A
    flagged: set[int] = set()
    for _ in range(sweeps):
        for j in range(k):
            bjj = B_bar[j, j]
            if bjj <= eps_diag:
                flagged.add(j)
                continue
            u = W[:, j] + (A[:, j] - W @ B_bar[:, j]) / bjj
            if not np.isfinite(u).all():
                raise NumericalError(f"non-finite update direction at column {j}")
            u_norm = float(np.linalg.norm(u))
            if u_norm <= eps_norm:
                flagged.add(j)
                continue
            W[:, j] = u / u_norm
    return Dictionary(W), tuple(sorted(flagged))


def surrogate_value(D: Dictionary, ops: UpdateOperands) -> float:
    """-2 trace(A D^T) + trace(D Bbar D^T); the constant shift term is omitted."""
    atoms = D.atoms
    return -2.0 * trace_prod(ops.A, atoms) + trace_prod(atoms @ ops.B_bar, atoms)


def objective_value(Dc: Dictionary, Yc: np.ndarray, Sc,
                    Ybar, Sbar, rho: float) -> float:
    """Own-class reconstruction error minus the rho-weighted cross error.

    (1/N) ||Yc - D Sc||_F^2 - (rho/Nbar) ||Ybar - D Sbar||_F^2, each term
    normalized by its own sample count.  Used for logging and convergence.
    """
    Yc = check_matrix(Yc, "Yc")
    Sc = _dense_codes(Sc)
    atoms = Dc.atoms
    value = frob_sq(Yc - atoms @ Sc) / Yc.shape[1]
    if rho > 0:
        Ybar = check_matrix(Ybar, "Ybar")
        Sbar = _dense_codes(Sbar)
        value -= (rho / Ybar.shape[1]) * frob_sq(Ybar - atoms @ Sbar)
    return value
