"""Universal coarse space: generator functions, polynomial factors, prolongation.

The coarse space attached to a coarse grid of size H is

    V_0 = span{ phi_i * p : i interior coarse vertex, p in P_{m-1} },

where each generator phi_i is supported on the 2x2 coarse-cell patch around
vertex x^i, the generators sum to one over the whole domain, and
|phi_i|_{W^{j,inf}} scales like H^-j.  On rectangular grids the generators
are tensor products of a 1-D degree-(2m-1) Hermite value profile:

    m = 2:  psi(t) = 1 - 3 t^2 + 2 |t|^3          (cubic, C^1)
    m = 3:  psi(t) = 1 - 10 |t|^3 + 15 t^4 - 6 |t|^5   (quintic, C^2)

which is exactly the value-nodal basis function of the conforming tensor
Hermite space on the coarse grid.  The prolongation into a fine element
space is nodal interpolation: each fine DOF functional applied to phi_i * p,
expanded by the Leibniz rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

from .assembly import DofMap
from .geometry import CartesianMesh
from .linalg import SparseFactorization, factorize_spd, triple_product

__all__ = [
    "CoarseGenerator",
    "CoarseSpace",
    "CoarseRankError",
    "hermite_profile",
    "profile_eval",
    "build_generator",
    "build_coarse_space",
    "partition_of_unity",
]

# Pivots of the coarse operator below this fraction of its largest diagonal
# entry indicate a linearly dependent coarse basis.
COARSE_PIVOT_RTOL = 1e-12

_PROFILE_COEFFS = {
    2: np.polynomial.Polynomial([1.0, 0.0, -3.0, 2.0]),
    3: np.polynomial.Polynomial([1.0, 0.0, 0.0, -10.0, 15.0, -6.0]),
}


class CoarseRankError(RuntimeError):
    """Coarse operator factorization hit a near-zero pivot."""


def hermite_profile(m: int) -> np.polynomial.Polynomial:
    """The 1-D profile as a polynomial in |t| on [0, 1]."""
    if m not in _PROFILE_COEFFS:
        raise ValueError(f"profiles exist for m in {{2, 3}}, got {m}")
    return _PROFILE_COEFFS[m]


def profile_eval(m: int, t, k: int = 0) -> np.ndarray:
    """k-th derivative of the even profile psi_m at t (zero for |t| >= 1).

    psi is C^(m-1) everywhere and its derivatives through order m-1 vanish
    at |t| = 1; evaluation exactly on a kink returns the interior limit.
    """
    t = np.asarray(t, dtype=float)
    P = _PROFILE_COEFFS[m].deriv(k) if k else _PROFILE_COEFFS[m]
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    # Even function: psi^(k)(t) = P^(k)(|t|) * sign(t)^k.
    out[inside] = P(np.abs(t[inside])) * np.sign(t[inside]) ** k
    return out


@dataclass(frozen=True)
class CoarseGenerator:
    """Tensor-product generator phi_i around one coarse vertex."""

    m: int
    H: float
    vertex: tuple[float, float]

    def eval(self, x, y, deriv: tuple[int, int] = (0, 0)) -> np.ndarray:
        """D^deriv phi_i, for deriv[0] + deriv[1] <= m."""
        a, b = deriv
        if a + b > self.m:
            raise ValueError(f"derivative order {a + b} exceeds m={self.m}")
        tx = (np.asarray(x, dtype=float) - self.vertex[0]) / self.H
        ty = (np.asarray(y, dtype=float) - self.vertex[1]) / self.H
        return (
            profile_eval(self.m, tx, a)
            * profile_eval(self.m, ty, b)
            / self.H ** (a + b)
        )

    def __call__(self, x, y):
        return self.eval(x, y)


def build_generator(
    coarse_mesh: CartesianMesh, m: int, vertex: tuple[int, int]
) -> CoarseGenerator:
    """Generator for coarse vertex (iv, jv); any vertex of the grid is valid."""
    iv, jv = vertex
    nc = coarse_mesh.cells_per_axis
    if not (0 <= iv <= nc and 0 <= jv <= nc):
        raise ValueError(f"vertex {vertex} outside the coarse grid (n={nc})")
    return CoarseGenerator(m, coarse_mesh.cell_size, coarse_mesh.vertex(iv, jv))


def partition_of_unity(
    coarse_mesh: CartesianMesh, m: int, x, y, deriv: tuple[int, int] = (0, 0)
) -> np.ndarray:
    """Sum of D^deriv phi_i over all coarse vertices (boundary included).

    Equals 1 everywhere for deriv (0, 0) and 0 for derivative orders in
    [1, m] away from generator kinks.
    """
    nc = coarse_mesh.cells_per_axis
    x = np.asarray(x, dtype=float)
    total = np.zeros(np.broadcast(x, np.asarray(y)).shape)
    for jv in range(nc + 1):
        for iv in range(nc + 1):
            total += build_generator(coarse_mesh, m, (iv, jv)).eval(x, y, deriv)
    return total


# P_{m-1} factors in a fixed order: exponents (a, b) with a + b <= m - 1.
def _poly_factors(m: int) -> tuple[tuple[int, int], ...]:
    return tuple((a, s - a) for s in range(m) for a in range(s, -1, -1))


@dataclass(frozen=True)
class CoarseSpace:
    """Coarse basis {phi_i p_ab}, its prolongation, and the factorized A0.

    ``prolongation`` is the (free fine DOFs) x dim(V0) nodal-interpolation
    matrix R0^T; ``basis`` lists (iv, jv, a, b) per column, where p_ab is the
    H-scaled monomial ((x - x^i)/H)^a ((y - y^i)/H)^b centered at the vertex.
    """

    coarse_mesh: CartesianMesh
    m: int
    basis: tuple[tuple[int, int, int, int], ...]
    prolongation: sp.csr_matrix
    coarse_matrix: sp.csr_matrix
    factorization: SparseFactorization

    @property
    def dim(self) -> int:
        return len(self.basis)


def _column_values(
    gen: CoarseGenerator,
    anchors: np.ndarray,
    derivs: np.ndarray,
    p_ab: tuple[int, int],
) -> np.ndarray:
    """D^beta (phi_i p_ab) at the fine anchors by the Leibniz rule."""
    a, b = p_ab
    H = gen.H
    tx = (anchors[:, 0] - gen.vertex[0]) / H
    ty = (anchors[:, 1] - gen.vertex[1]) / H
    vals = np.zeros(anchors.shape[0])
    for deriv in {tuple(d) for d in derivs.tolist()}:
        mask = (derivs[:, 0] == deriv[0]) & (derivs[:, 1] == deriv[1])
        acc = np.zeros(mask.sum())
        for g0 in range(deriv[0] + 1):
            for g1 in range(deriv[1] + 1):
                d0, d1 = deriv[0] - g0, deriv[1] - g1  # falls on the monomial
                if d0 > a or d1 > b:
                    continue
                falling = (
                    factorial(a)
                    // factorial(a - d0)
                    * factorial(b)
                    // factorial(b - d1)
                )
                pmono = (
                    falling
                    * tx[mask] ** (a - d0)
                    * ty[mask] ** (b - d1)
                    / H ** (d0 + d1)
                )
                phi = gen.eval(
                    anchors[mask, 0], anchors[mask, 1], deriv=(g0, g1)
                )
                acc += comb(deriv[0], g0) * comb(deriv[1], g1) * phi * pmono
        vals[mask] = acc
    return vals


def build_coarse_space(
    coarse_mesh: CartesianMesh, m: int, dofmap: DofMap, A: sp.csr_matrix
) -> CoarseSpace:
    """Build V0, the prolongation R0^T, and the factorized A0 = R0 A R0^T."""
    nc = coarse_mesh.cells_per_axis
    nf = dofmap.mesh.cells_per_axis
    if nc < 2:
        raise ValueError(f"coarse grid needs interior vertices; got n={nc}")
    if nf % nc != 0:
        raise ValueError(f"fine mesh (n={nf}) does not refine coarse mesh (n={nc})")
    if dofmap.m != m:
        raise ValueError(
            f"smoothness order m={m} does not match family "
            f"{dofmap.family!r} (m={dofmap.m})"
        )
    if A.shape != (dofmap.free_count, dofmap.free_count):
        raise ValueError("stiffness matrix does not match the dofmap")

    ratio = nf // nc
    factors = _poly_factors(m)
    basis = []
    rows, cols, vals = [], [], []
    col = 0
    for jv in range(1, nc):
        for iv in range(1, nc):
            gen = build_generator(coarse_mesh, m, (iv, jv))
            # Free DOFs anchored strictly inside the 2x2-cell patch omega_i
            # (anchor steps are in h/2 units; the patch spans 2*ratio cells).
            sx, sy = 2 * iv * ratio, 2 * jv * ratio
            w = 2 * ratio
            in_patch = (
                (np.abs(dofmap.anchor_steps[:, 0] - sx) < w)
                & (np.abs(dofmap.anchor_steps[:, 1] - sy) < w)
            )
            idx = np.where(in_patch)[0]
            anchors = dofmap.anchors[idx]
            derivs = dofmap.derivs[idx]
            for p_ab in factors:
                v = _column_values(gen, anchors, derivs, p_ab)
                nz = v != 0.0
                rows.append(idx[nz])
                cols.append(np.full(nz.sum(), col, dtype=np.int64))
                vals.append(v[nz])
                basis.append((iv, jv) + p_ab)
                col += 1

    R0T = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofmap.free_count, col),
    ).tocsr()
    A0 = triple_product(R0T.T.tocsr(), A)
    fact = factorize_spd(A0)
    threshold = COARSE_PIVOT_RTOL * A0.diagonal().max()
    if fact.pivots.min() < threshold:
        raise CoarseRankError(
            f"coarse basis is (nearly) linearly dependent: pivot "
            f"{fact.pivots.min():.3e} below {threshold:.3e}"
        )
    return CoarseSpace(coarse_mesh, m, tuple(basis), R0T, A0, fact)
