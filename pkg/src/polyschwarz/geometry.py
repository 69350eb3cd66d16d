"""Uniform cartesian meshes of the unit square and overlapping decompositions.

Meshes are n-by-n grids of square cells on [0, 1]^2.  A decomposition pairs a
coarse and a nested fine mesh and covers the domain with one overlapping
subdomain per coarse cell, obtained by dilating the coarse cell by a fixed
number of fine-cell layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CartesianMesh", "Decomposition", "build_mesh", "build_decomposition"]


@dataclass(frozen=True)
class CartesianMesh:
    """Uniform grid of ``n x n`` square cells on the unit square.

    Cell ``(i, j)`` occupies ``[i/n, (i+1)/n] x [j/n, (j+1)/n]`` for
    ``0 <= i, j < n``.  All coordinates are computed as integer multiples of
    ``1/n``, never accumulated, so repeated evaluation is bit-identical.
    """

    cells_per_axis: int

    @property
    def cell_size(self) -> float:
        return 1.0 / self.cells_per_axis

    @property
    def vertices_per_axis(self) -> int:
        return self.cells_per_axis + 1

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis**2

    def vertex(self, i: int, j: int) -> tuple[float, float]:
        """Coordinates of vertex ``(i, j)``."""
        n = self.cells_per_axis
        return (i / n, j / n)

    def cell_origin(self, i: int, j: int) -> tuple[float, float]:
        """Lower-left corner of cell ``(i, j)``."""
        return self.vertex(i, j)

    def cell_origins(self) -> np.ndarray:
        """Lower-left corners of all cells, row-major, shape (n_cells, 2)."""
        n = self.cells_per_axis
        idx = np.arange(n)
        ox, oy = np.meshgrid(idx, idx, indexing="xy")
        return np.column_stack([ox.ravel() / n, oy.ravel() / n])

    def refines(self, coarse: "CartesianMesh") -> bool:
        return self.cells_per_axis % coarse.cells_per_axis == 0


def build_mesh(n: int) -> CartesianMesh:
    """Build the uniform ``n x n`` cell mesh of the unit square."""
    if n < 1:
        raise ValueError(f"cells_per_axis must be >= 1, got {n}")
    return CartesianMesh(int(n))


@dataclass(frozen=True)
class Decomposition:
    """Overlapping subdomain covering driven by a coarse/fine mesh pair.

    Subdomain ``k`` is the box of fine cells under coarse cell ``k`` dilated
    by ``overlap_layers`` fine cells per side and clipped to the grid.  Boxes
    are stored as ``((ilo, ihi), (jlo, jhi))`` half-open fine-cell index
    ranges, ordered row-major over coarse cells (j outer, i inner).
    """

    coarse_mesh: CartesianMesh
    fine_mesh: CartesianMesh
    overlap_layers: int
    subdomains: tuple[tuple[tuple[int, int], tuple[int, int]], ...]

    @property
    def n_subdomains(self) -> int:
        return len(self.subdomains)

    @property
    def delta(self) -> float:
        """Overlap width: overlap_layers fine cells."""
        return self.overlap_layers / self.fine_mesh.cells_per_axis

    def membership_counts(self) -> np.ndarray:
        """Number of subdomains containing each fine cell, shape (n, n).

        Indexed ``[j, i]`` (row = y cell index).
        """
        n = self.fine_mesh.cells_per_axis
        counts = np.zeros((n, n), dtype=int)
        for (ilo, ihi), (jlo, jhi) in self.subdomains:
            counts[jlo:jhi, ilo:ihi] += 1
        return counts


def build_decomposition(
    coarse: CartesianMesh, fine: CartesianMesh, overlap_layers: int
) -> Decomposition:
    """Cover the fine mesh with one dilated subdomain per coarse cell.

    Requires the fine mesh to refine the coarse one and
    ``1 <= overlap_layers < n_fine / n_coarse`` (overlap smaller than a
    coarse cell).
    """
    n_c = coarse.cells_per_axis
    n_f = fine.cells_per_axis
    if n_f % n_c != 0:
        raise ValueError(f"fine mesh (n={n_f}) does not refine coarse mesh (n={n_c})")
    ratio = n_f // n_c
    if not 1 <= overlap_layers < ratio:
        raise ValueError(
            f"overlap_layers must satisfy 1 <= l < {ratio} (= n_fine/n_coarse), "
            f"got {overlap_layers}"
        )
    boxes = []
    for J in range(n_c):
        for I in range(n_c):
            ilo = max(0, I * ratio - overlap_layers)
            ihi = min(n_f, (I + 1) * ratio + overlap_layers)
            jlo = max(0, J * ratio - overlap_layers)
            jhi = min(n_f, (J + 1) * ratio + overlap_layers)
            boxes.append(((ilo, ihi), (jlo, jhi)))
    return Decomposition(coarse, fine, int(overlap_layers), tuple(boxes))
