"""Shared sparse/dense kernels: CSR assembly, SPD factorization, triple products.

Thin layer over scipy.sparse with the contracts the solver modules rely on:
deterministic triplet compaction, a Cholesky-style SPD factorization with a
"not SPD" diagnosis, Galerkin triple products, Matrix Market exchange, and
dense helpers used as oracles in the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SOLVE_RESIDUAL_RTOL",
    "ALGEBRAIC_RTOL",
    "NotSpdError",
    "TripletBuffer",
    "compact",
    "SparseFactorization",
    "factorize_spd",
    "triple_product",
    "write_matrix_market",
    "read_matrix_market",
    "operator_to_dense",
    "dense_condition_number",
]

# Centralized tolerances.
SOLVE_RESIDUAL_RTOL = 1e-10  # ||A x - b|| <= rtol ||b|| for direct solves
ALGEBRAIC_RTOL = 1e-12  # exact algebraic identities checked in floating point

# Below this dimension SPD systems are factorized densely.
DENSE_FALLBACK_DIM = 64


class NotSpdError(ValueError):
    """Raised when a factorization meets a nonpositive pivot."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


@dataclass
class TripletBuffer:
    """Accumulates (row, col, value) contributions in insertion order."""

    rows: list = field(default_factory=list)
    cols: list = field(default_factory=list)
    vals: list = field(default_factory=list)

    def add(self, rows, cols, vals) -> None:
        self.rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self.cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self.vals.append(np.asarray(vals, dtype=float).ravel())

    def tocsr(self, shape: tuple[int, int]) -> sp.csr_matrix:
        if not self.rows:
            return compact([], [], [], shape)
        return compact(
            np.concatenate(self.rows),
            np.concatenate(self.cols),
            np.concatenate(self.vals),
            shape,
        )


def compact(rows, cols, vals, shape: tuple[int, int]) -> sp.csr_matrix:
    """Sum duplicate triplets into canonical CSR (sorted, unique columns)."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if rows.size and (
        rows.min() < 0 or rows.max() >= shape[0] or cols.min() < 0 or cols.max() >= shape[1]
    ):
        raise IndexError(f"triplet index out of range for shape {shape}")
    A = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


@dataclass
class SparseFactorization:
    """Direct solver handle for an SPD matrix (dense Cholesky or SuperLU).

    ``solve`` accepts a vector or a matrix of right-hand sides and satisfies
    ``||A x - b|| <= SOLVE_RESIDUAL_RTOL * ||b||`` in this artifact's size
    range.  ``pivots`` exposes the (permuted) elimination pivots for
    rank-deficiency diagnostics.
    """

    dim: int
    pivots: np.ndarray
    _dense_chol: tuple | None = None
    _splu: object | None = None

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self._dense_chol is not None:
            return scipy.linalg.cho_solve(self._dense_chol, b)
        return self._splu.solve(b)


def factorize_spd(A, dense_below: int = DENSE_FALLBACK_DIM) -> SparseFactorization:
    """Factorize a symmetric positive definite matrix for repeated solves.

    Small systems use dense Cholesky; larger ones SuperLU with symmetric-mode
    minimum-degree ordering and diagonal pivoting, which for SPD input acts
    as a fill-reduced Cholesky-type factorization.  A nonpositive pivot
    raises :class:`NotSpdError` with the offending pivot index.
    """
    A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    if A.nnz:
        asym = abs(A - A.T).max()
        if asym > ALGEBRAIC_RTOL * max(abs(A).max(), 1.0):
            raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.2e})")
    if n < dense_below:
        dense = A.toarray()
        try:
            c, lower = scipy.linalg.cho_factor(dense)
        except scipy.linalg.LinAlgError as exc:
            idx = _leading_minor_index(str(exc))
            raise NotSpdError(f"matrix not SPD: {exc}", pivot_index=idx) from exc
        return SparseFactorization(n, np.diag(c) ** 2, _dense_chol=(c, lower))
    lu = spla.splu(
        A.tocsc(),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )
    pivots = lu.U.diagonal()
    bad = np.where(pivots <= 0)[0]
    if bad.size:
        raise NotSpdError(
            f"matrix not SPD: nonpositive pivot {pivots[bad[0]]:.3e} at "
            f"elimination index {bad[0]}",
            pivot_index=int(bad[0]),
        )
    return SparseFactorization(n, pivots, _splu=lu)


def _leading_minor_index(message: str) -> int | None:
    # LAPACK reports "k-th leading minor ... not positive definite".
    head = message.split("-", 1)[0]
    return int(head) - 1 if head.isdigit() else None


def triple_product(R, A) -> sp.csr_matrix:
    """Galerkin product R A R^T with exactly symmetric output."""
    R = sp.csr_matrix(R) if not sp.issparse(R) else R.tocsr()
    A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    if R.shape[1] != A.shape[0]:
        raise ValueError(f"dimension mismatch: R is {R.shape}, A is {A.shape}")
    B = (R @ A @ R.T).tocsr()
    B = 0.5 * (B + B.T)
    return B.tocsr()


def write_matrix_market(path, A) -> None:
    """Write a sparse matrix or dense vector in Matrix Market format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(np.atleast_2d(A)) if not sp.issparse(A) else A)


def read_matrix_market(path):
    """Read a Matrix Market file; sparse matrices come back as CSR."""
    A = scipy.io.mmread(str(path))
    return A.tocsr() if sp.issparse(A) else np.asarray(A)


def operator_to_dense(apply, dim: int) -> np.ndarray:
    """Materialize a linear operator by applying it to identity columns."""
    return np.asarray(apply(np.eye(dim)))


def dense_condition_number(A) -> float:
    """kappa_2 of a symmetric (sparse or dense) matrix by dense eigensolve."""
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    w = scipy.linalg.eigvalsh(0.5 * (dense + dense.T))
    return float(w[-1] / w[0])
