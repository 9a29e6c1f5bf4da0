"""Sparse coding: greedy orthogonal matching pursuit plus a brute-force oracle.

Every encoder returns a SparseCode whose support never exceeds the
coefficient budget L, with coefficients solved by least squares on the
selected atoms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dict_update import Dictionary
from .linalg import least_squares_on_support

# Relative residual below which pursuit stops early; avoids refitting on a
# numerically exhausted residual.
DEFAULT_STOP_TOL = 1e-7


@dataclass(frozen=True)
class SparseCode:
    """Coefficients of one signal: `values[i]` multiplies atom `indices[i]`.

    Indices are distinct, ascending, and fewer than or equal to the sparsity
    budget used to produce the code; `length` is the atom count k.
    """

    indices: tuple[int, ...]
    values: tuple[float, ...]
    length: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("indices must be distinct")
        if self.indices and (min(self.indices) < 0 or max(self.indices) >= self.length):
            raise ValueError(f"indices must lie in [0, {self.length})")
        if any(self.indices[i] >= self.indices[i + 1] for i in range(len(self.indices) - 1)):
            raise ValueError("indices must be ascending")

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.length)
        if self.indices:
            dense[list(self.indices)] = self.values
        return dense

    @staticmethod
    def from_dense(x: np.ndarray) -> "SparseCode":
        x = np.asarray(x, dtype=np.float64).ravel()
        idx = np.flatnonzero(x)
        return SparseCode(tuple(int(j) for j in idx),
                          tuple(float(v) for v in x[idx]), len(x))


@dataclass(frozen=True)
class SparseCodeMatrix:
    """Codes for a batch of signals, one SparseCode per column of a k x N matrix."""

    columns: tuple[SparseCode, ...]
    length: int = field(default=0)

    def __post_init__(self):
        if self.columns:
            k = self.columns[0].length
            if any(c.length != k for c in self.columns):
                raise ValueError("all columns must share the same length k")
            object.__setattr__(self, "length", k)
        elif self.length < 0:
            raise ValueError("length must be non-negative")

    @property
    def k(self) -> int:
        return self.length

    @property
    def n(self) -> int:
        return len(self.columns)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.length, len(self.columns)))
        for j, code in enumerate(self.columns):
            if code.indices:
                dense[list(code.indices), j] = code.values
        return dense


def _as_unit_dictionary(D) -> np.ndarray:
    if isinstance(D, Dictionary):
        return D.atoms
    return Dictionary(np.asarray(D, dtype=np.float64)).atoms


def _code_from_support(atoms: np.ndarray, y: np.ndarray, support) -> tuple[SparseCode, np.ndarray]:
    coeffs = least_squares_on_support(atoms, y, support)
    residual = y - atoms @ coeffs
    support = sorted(int(j) for j in support)
    return (SparseCode(tuple(support), tuple(float(coeffs[j]) for j in support),
                       atoms.shape[1]), residual)


def omp_encode(D, y: np.ndarray, L: int,
               stop_tol: float = DEFAULT_STOP_TOL) -> SparseCode:
    """Greedy orthogonal matching pursuit with at most L coefficients.

    At each step the atom with the largest |correlation| against the current
    residual joins the support (ties go to the lowest index), and the
    coefficients are re-solved by least squares over the whole support.
    Stops after L atoms, when the residual norm falls below
    stop_tol * ||y||, when no atom correlates above stop_tol * ||residual||,
    or when the best atom is already selected.
    """
    atoms = _as_unit_dictionary(D)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, k = atoms.shape
    if y.shape[0] != m:
        raise ValueError(f"signal length {y.shape[0]} does not match atom size {m}")
    if not np.isfinite(y).all():
        raise ValueError("signal contains non-finite entries")
    if L < 1:
        raise ValueError("L must be at least 1")

    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return SparseCode((), (), k)

    budget = min(L, k, m)
    support: list[int] = []
    residual = y
    code = SparseCode((), (), k)
    for _ in range(budget):
        r_norm = float(np.linalg.norm(residual))
        if r_norm <= stop_tol * y_norm:
            break
        corr = atoms.T @ residual
        best = int(np.argmax(np.abs(corr)))
        if abs(corr[best]) <= stop_tol * r_norm:
            break
        if best in support:
            break
        support.append(best)
        code, residual = _code_from_support(atoms, y, support)
    return code


def batch_encode(D, Y: np.ndarray, L: int,
                 stop_tol: float = DEFAULT_STOP_TOL) -> SparseCodeMatrix:
    """Encode every column of Y with omp_encode; column order is preserved.

    Column failures are re-raised with the column index attached.  An empty
    Y (zero columns) yields an empty code matrix.
    """
    atoms = _as_unit_dictionary(D)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != atoms.shape[0]:
        raise ValueError(f"Y must be {atoms.shape[0]} x N, got shape {Y.shape}")
    codes = []
    for j in range(Y.shape[1]):
        try:
            codes.append(omp_encode(atoms, Y[:, j], L, stop_tol))
        except ValueError as exc:
            raise ValueError(f"column {j}: {exc}") from exc
    return SparseCodeMatrix(tuple(codes), length=atoms.shape[1])


def exhaustive_encode(D, y: np.ndarray, L: int) -> SparseCode:
    """Globally optimal code by enumerating every support of size <= L.

    Test oracle for omp_encode; guarded to k <= 24 and L <= 3 so the
    enumeration stays small.  Supports are visited by ascending size then
    lexicographic order, and only a strictly smaller residual replaces the
    incumbent, so exact ties resolve to the smallest, earliest support.
    """
    atoms = _as_unit_dictionary(D)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, k = atoms.shape
    if k > 24 or L > 3:
        raise ValueError(f"exhaustive_encode is guarded to k <= 24 and L <= 3, "
                         f"got k={k}, L={L}")
    if L < 1:
        raise ValueError("L must be at least 1")
    if y.shape[0] != m:
        raise ValueError(f"signal length {y.shape[0]} does not match atom size {m}")

    best_code = SparseCode((), (), k)
    best_err = float(np.linalg.norm(y))
    for size in range(1, min(L, m) + 1):
        for support in itertools.combinations(range(k), size):
            code, residual = _code_from_support(atoms, y, support)
            err = float(np.linalg.norm(residual))
            if err < best_err:
                best_err = err
                best_code = code
    return best_code
