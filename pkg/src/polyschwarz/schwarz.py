"""One- and two-level overlapping additive Schwarz preconditioners.

The preconditioner is the sum of exact solves on overlapping subdomain
problems, optionally plus a coarse solve:

    M^-1 r = sum_k R_k^T A_k^-1 R_k r   (k = 0 coarse term in two-level mode)

Each local space consists of the free fine DOFs anchored strictly inside the
open subdomain box; R_k is the corresponding index restriction and
A_k = R_k A R_k^T the principal submatrix, factorized once at setup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import DofMap
from .coarse import CoarseSpace
from .geometry import Decomposition
from .linalg import SparseFactorization, factorize_spd

__all__ = ["LEVELS", "LocalSpace", "AdditiveSchwarz", "build_local_spaces", "apply"]

LEVELS = ("none", "one-level", "two-level")


@dataclass(frozen=True)
class LocalSpace:
    """Free DOFs strictly inside one subdomain, with A_k factorized."""

    index: int
    dof_indices: np.ndarray
    factorization: SparseFactorization


def build_local_spaces(
    decomposition: Decomposition, dofmap: DofMap, A: sp.csr_matrix
) -> list[LocalSpace]:
    """Extract and factorize every subdomain problem.

    DOF selection is by anchor strictly inside the open subdomain box, which
    realizes the clamped condition of the local space by exclusion.
    """
    if A.shape != (dofmap.free_count, dofmap.free_count):
        raise ValueError("stiffness matrix does not match the dofmap")
    if decomposition.fine_mesh.cells_per_axis != dofmap.mesh.cells_per_axis:
        raise ValueError("decomposition fine mesh does not match the dofmap")
    steps = dofmap.anchor_steps
    spaces = []
    for k, ((ilo, ihi), (jlo, jhi)) in enumerate(decomposition.subdomains):
        # Strict interior in h/2 units: cell box [ilo, ihi) spans steps
        # [2*ilo, 2*ihi] along x.
        inside = (
            (steps[:, 0] > 2 * ilo)
            & (steps[:, 0] < 2 * ihi)
            & (steps[:, 1] > 2 * jlo)
            & (steps[:, 1] < 2 * jhi)
        )
        idx = np.where(inside)[0]
        if idx.size == 0:
            raise ValueError(
                f"subdomain {k} contains no free DOFs; the decomposition is "
                "too fine for this mesh"
            )
        Ak = A[idx][:, idx].tocsc()
        spaces.append(LocalSpace(k, idx, factorize_spd(Ak)))
    return spaces


@dataclass(frozen=True)
class AdditiveSchwarz:
    """Additive Schwarz operator; immutable and shareable once built.

    ``level`` selects the identity ("none"), the subdomain sum
    ("one-level"), or subdomains plus coarse solve ("two-level").
    Application accepts a vector or a matrix of columns; contributions are
    accumulated in subdomain index order, so results are reproducible.
    """

    level: str
    dim: int
    local_spaces: tuple[LocalSpace, ...] = ()
    coarse: CoarseSpace | None = None

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        if self.level in ("one-level", "two-level") and not self.local_spaces:
            raise ValueError(f"{self.level} preconditioner needs local spaces")
        if self.level == "two-level" and self.coarse is None:
            raise ValueError("two-level preconditioner needs a coarse space")

    def apply(self, r: np.ndarray) -> np.ndarray:
        """z = sum_k R_k^T A_k^-1 R_k r."""
        r = np.asarray(r, dtype=float)
        if r.shape[0] != self.dim:
            raise ValueError(f"residual has dimension {r.shape[0]}, expected {self.dim}")
        if self.level == "none":
            return r.copy()
        z = np.zeros_like(r)
        for ls in self.local_spaces:
            z[ls.dof_indices] += ls.factorization.solve(r[ls.dof_indices])
        if self.level == "two-level":
            rc = self.coarse.prolongation.T @ r
            z += self.coarse.prolongation @ self.coarse.factorization.solve(rc)
        return z

    __call__ = apply


def apply(preconditioner: AdditiveSchwarz, r: np.ndarray) -> np.ndarray:
    """Module-level alias for :meth:`AdditiveSchwarz.apply`."""
    return preconditioner.apply(r)
