"""Global DOF numbering, clamped-boundary elimination, and sparse assembly.

Degrees of freedom are physical point values/derivatives at mesh anchors:
vertices for the Hermite-type families (bfs, adini, jinwu) and the tensor
Lagrange nodes for c0ip.  The clamped condition is imposed by eliminating
(index removal, not penalization) every DOF anchored on the boundary:

* bfs / adini / jinwu: all DOFs at boundary vertices;
* c0ip: boundary Lagrange nodes (the normal-derivative condition is enforced
  weakly by the penalty term).

Since global DOFs are physical derivatives while reference shape functions
carry reference derivatives, the local-to-global map rescales local DOF i by
``(h/2)^|deriv_i|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse as sp

from .elements import (
    FAMILY_M,
    VERTEX_DOF_DERIVS,
    QuadratureRule,
    ReferenceElement,
    _monomial_table,
    gauss_legendre,
    local_stiffness,
)
from .geometry import CartesianMesh
from .linalg import TripletBuffer, compact

__all__ = [
    "ELIMINATED",
    "DofMap",
    "build_dofmap",
    "assemble_stiffness",
    "assemble_c0ip_edges",
    "assemble_load",
    "interpolate",
    "evaluate",
]

ELIMINATED = -1

# Gauss points per edge for the interior penalty terms (trace integrands are
# degree <= 4 polynomials; 4 points are exact to degree 7).
EDGE_QUAD_POINTS = 4


@dataclass(frozen=True)
class DofMap:
    """Global numbering of free DOFs for one mesh/family pair.

    Free DOFs are numbered row-major by anchor (y outer, x inner), then by
    the family derivative order.  Anchors are also kept as integer steps in
    units of ``h/2`` (vertices sit at even steps, c0ip edge/center nodes at
    odd ones) so that geometric predicates are exact.
    """

    mesh: CartesianMesh
    family: str
    free_count: int
    anchors: np.ndarray  # (free_count, 2) physical coordinates
    anchor_steps: np.ndarray  # (free_count, 2) integer anchor in h/2 units
    derivs: np.ndarray  # (free_count, 2) derivative multi-indices
    cell_dofs: np.ndarray  # (n_cells, n_local) global index or ELIMINATED

    @property
    def m(self) -> int:
        return FAMILY_M[self.family]

    def entries(self):
        """All DOFs (anchor, deriv, global index or None), eliminated included."""
        n = self.mesh.cells_per_axis
        if self.family == "c0ip":
            for gy, gx in product(range(2 * n + 1), repeat=2):
                free = 0 < gx < 2 * n and 0 < gy < 2 * n
                idx = (gy - 1) * (2 * n - 1) + (gx - 1) if free else None
                yield ((gx / (2 * n), gy / (2 * n)), (0, 0), idx)
            return
        derivs = VERTEX_DOF_DERIVS[self.family]
        nd = len(derivs)
        for jv, iv in product(range(n + 1), repeat=2):
            interior = 0 < iv < n and 0 < jv < n
            for d, deriv in enumerate(derivs):
                idx = ((jv - 1) * (n - 1) + (iv - 1)) * nd + d if interior else None
                yield ((iv / n, jv / n), deriv, idx)


def build_dofmap(mesh: CartesianMesh, family: str) -> DofMap:
    """Number the free DOFs of one family on a mesh (requires n >= 2)."""
    n = mesh.cells_per_axis
    if n < 2:
        raise ValueError(f"no free DOFs on an n={n} mesh; need n >= 2")
    if family == "c0ip":
        return _build_dofmap_c0ip(mesh)
    if family not in VERTEX_DOF_DERIVS:
        raise ValueError(f"unknown element family {family!r}")
    return _build_dofmap_vertex(mesh, family)


def _build_dofmap_vertex(mesh: CartesianMesh, family: str) -> DofMap:
    n = mesh.cells_per_axis
    derivs = np.array(VERTEX_DOF_DERIVS[family])
    nd = len(derivs)
    free = nd * (n - 1) ** 2

    # vertex_index[jv, iv, d] -> global index or ELIMINATED
    vertex_index = np.full((n + 1, n + 1, nd), ELIMINATED, dtype=np.int64)
    inner = np.arange(1, n)
    base = ((inner[:, None] - 1) * (n - 1) + (inner[None, :] - 1)) * nd
    vertex_index[1:n, 1:n, :] = base[:, :, None] + np.arange(nd)

    iv, jv = np.meshgrid(inner, inner, indexing="xy")
    anchors = np.empty((free, 2))
    anchors[:, 0] = np.repeat(iv.ravel(), nd) / n
    anchors[:, 1] = np.repeat(jv.ravel(), nd) / n
    steps = np.empty((free, 2), dtype=np.int64)
    steps[:, 0] = np.repeat(2 * iv.ravel(), nd)
    steps[:, 1] = np.repeat(2 * jv.ravel(), nd)
    dof_derivs = np.tile(derivs, ((n - 1) ** 2, 1))

    ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ci, cj = ci.ravel(), cj.ravel()
    cell_dofs = np.empty((n * n, 4 * nd), dtype=np.int64)
    for c, (dx, dy) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
        cell_dofs[:, c * nd : (c + 1) * nd] = vertex_index[cj + dy, ci + dx, :]

    return DofMap(mesh, family, free, anchors, steps, dof_derivs, cell_dofs)


def _build_dofmap_c0ip(mesh: CartesianMesh) -> DofMap:
    n = mesh.cells_per_axis
    g = 2 * n
    free = (g - 1) ** 2

    node_index = np.full((g + 1, g + 1), ELIMINATED, dtype=np.int64)
    inner = np.arange(1, g)
    node_index[1:g, 1:g] = (inner[:, None] - 1) * (g - 1) + (inner[None, :] - 1)

    gx, gy = np.meshgrid(inner, inner, indexing="xy")
    anchors = np.column_stack([gx.ravel() / g, gy.ravel() / g])
    steps = np.column_stack([gx.ravel(), gy.ravel()])
    dof_derivs = np.zeros((free, 2), dtype=np.int64)

    ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ci, cj = ci.ravel(), cj.ravel()
    cell_dofs = np.empty((n * n, 9), dtype=np.int64)
    local = [(lx, ly) for ly in range(3) for lx in range(3)]  # matches element anchors
    for c, (lx, ly) in enumerate(local):
        cell_dofs[:, c] = node_index[2 * cj + ly, 2 * ci + lx]

    return DofMap(mesh, "c0ip", free, anchors, steps, dof_derivs, cell_dofs)


def _check_consistent(mesh: CartesianMesh, elem: ReferenceElement, dofmap: DofMap):
    if elem.family != dofmap.family:
        raise ValueError(
            f"element family {elem.family!r} does not match dofmap family "
            f"{dofmap.family!r}"
        )
    if mesh.cells_per_axis != dofmap.mesh.cells_per_axis:
        raise ValueError("mesh does not match the mesh the dofmap was built on")


def _dof_scale(elem: ReferenceElement, h: float) -> np.ndarray:
    """Physical-DOF rescaling (h/2)^|deriv| of the local reference basis."""
    return (h / 2.0) ** elem.dof_deriv_orders


def _scatter_symmetric(buf: TripletBuffer, gd: np.ndarray, M: np.ndarray) -> None:
    """Append the dense local matrix M for every row of local-to-global gd."""
    rows = np.broadcast_to(gd[:, :, None], (gd.shape[0], M.shape[0], M.shape[1]))
    cols = np.broadcast_to(gd[:, None, :], rows.shape)
    vals = np.broadcast_to(M, rows.shape)
    mask = (rows >= 0) & (cols >= 0)
    buf.add(rows[mask], cols[mask], vals[mask])


def assemble_stiffness(
    mesh: CartesianMesh,
    elem: ReferenceElement,
    dofmap: DofMap,
    quad: QuadratureRule | None = None,
) -> sp.csr_matrix:
    """Assemble the (broken) order-2m volume stiffness matrix.

    On a uniform mesh every cell shares one local matrix, so assembly reduces
    to a single scatter.  Eliminated rows/columns are dropped.  For c0ip this
    is the volume part only; add :func:`assemble_c0ip_edges`.
    """
    _check_consistent(mesh, elem, dofmap)
    h = mesh.cell_size
    K = local_stiffness(elem, h, quad)
    scale = _dof_scale(elem, h)
    Kc = K * scale[:, None] * scale[None, :]

    buf = TripletBuffer()
    _scatter_symmetric(buf, dofmap.cell_dofs, Kc)
    A = buf.tocsr((dofmap.free_count, dofmap.free_count))
    return (0.5 * (A + A.T)).tocsr()


def _edge_tables(elem: ReferenceElement, axis: int, face: float, t: np.ndarray):
    """First/second reference derivative along `axis` on a cell face.

    Points run along the face: (face, t) for vertical faces (axis 0),
    (t, face) for horizontal ones (axis 1).
    """
    pts = np.empty((t.size, 2))
    pts[:, axis] = face
    pts[:, 1 - axis] = t
    d1 = (1, 0) if axis == 0 else (0, 1)
    d2 = (2, 0) if axis == 0 else (0, 2)
    D1 = _monomial_table(elem.monomials, pts, d1) @ elem.coeffs
    D2 = _monomial_table(elem.monomials, pts, d2) @ elem.coeffs
    return D1, D2


def _interior_edge_matrices(elem: ReferenceElement, h: float, axis: int):
    """Consistency and unit-penalty matrices of one interior edge.

    Local basis is [minus-side cell dofs, plus-side cell dofs]; the edge
    normal points from the minus cell (face +1) to the plus cell (face -1).
    """
    t, w = np.polynomial.legendre.leggauss(EDGE_QUAD_POINTS)
    s1 = 2.0 / h
    D1m, D2m = _edge_tables(elem, axis, +1.0, t)
    D1p, D2p = _edge_tables(elem, axis, -1.0, t)
    J = s1 * np.hstack([-D1m, D1p])  # [[du/dnu]] = (+)side - (-)side
    M2 = 0.5 * s1**2 * np.hstack([D2m, D2p])  # {{d2u/dnu2}}
    ds = w * (h / 2.0)
    cons = (M2.T * ds) @ J
    cons = cons + cons.T
    pen = (1.0 / h) * (J.T * ds) @ J
    return cons, pen


def _boundary_edge_matrices(elem: ReferenceElement, h: float, axis: int, face: float):
    """Same for a boundary face; outward normal sign equals `face`."""
    t, w = np.polynomial.legendre.leggauss(EDGE_QUAD_POINTS)
    s1 = 2.0 / h
    D1, D2 = _edge_tables(elem, axis, face, t)
    J = -face * s1 * D1  # [[du/dnu]] = -du/dnu_outward
    M2 = s1**2 * D2
    ds = w * (h / 2.0)
    cons = (M2.T * ds) @ J
    cons = cons + cons.T
    pen = (1.0 / h) * (J.T * ds) @ J
    return cons, pen


def _assemble_edges(
    mesh: CartesianMesh,
    elem: ReferenceElement,
    dofmap: DofMap,
    eta: float,
    include_consistency: bool = True,
) -> sp.csr_matrix:
    n = mesh.cells_per_axis
    h = mesh.cell_size
    cd = dofmap.cell_dofs
    cell = lambda i, j: j * n + i
    buf = TripletBuffer()

    def local(cons, pen):
        return (cons if include_consistency else 0.0) + eta * pen

    # Interior vertical edges: minus = left cell, plus = right cell.
    cons, pen = _interior_edge_matrices(elem, h, axis=0)
    E = local(cons, pen)
    i, j = np.meshgrid(np.arange(n - 1), np.arange(n), indexing="xy")
    gd = np.hstack([cd[cell(i.ravel(), j.ravel())], cd[cell(i.ravel() + 1, j.ravel())]])
    _scatter_symmetric(buf, gd, E)

    # Interior horizontal edges: minus = bottom cell, plus = top cell.
    cons, pen = _interior_edge_matrices(elem, h, axis=1)
    E = local(cons, pen)
    i, j = np.meshgrid(np.arange(n), np.arange(n - 1), indexing="xy")
    gd = np.hstack([cd[cell(i.ravel(), j.ravel())], cd[cell(i.ravel(), j.ravel() + 1)]])
    _scatter_symmetric(buf, gd, E)

    # Boundary edges: (axis, face, cell row/column).
    rng = np.arange(n)
    for axis, face, cells in [
        (0, -1.0, cell(np.zeros(n, dtype=int), rng)),  # left
        (0, +1.0, cell(np.full(n, n - 1), rng)),  # right
        (1, -1.0, cell(rng, np.zeros(n, dtype=int))),  # bottom
        (1, +1.0, cell(rng, np.full(n, n - 1))),  # top
    ]:
        cons, pen = _boundary_edge_matrices(elem, h, axis, face)
        _scatter_symmetric(buf, cd[cells], local(cons, pen))

    A = buf.tocsr((dofmap.free_count, dofmap.free_count))
    return (0.5 * (A + A.T)).tocsr()


def assemble_c0ip_edges(
    mesh: CartesianMesh, elem: ReferenceElement, dofmap: DofMap, eta: float
) -> sp.csr_matrix:
    """Edge contribution of the C0 interior penalty form.

    Adds, over every edge, the symmetrized consistency terms
    {{d2u/dnu2}} [[dv/dnu]] + {{d2v/dnu2}} [[du/dnu]] and the penalty
    (eta/|e|) [[du/dnu]] [[dv/dnu]], with the boundary-edge conventions
    [[du/dnu]] = -du/dnu and {{d2u/dnu2}} = d2u/dnu2.
    """
    _check_consistent(mesh, elem, dofmap)
    if elem.family != "c0ip":
        raise ValueError(f"edge terms apply to the c0ip family, not {elem.family!r}")
    if eta <= 0:
        raise ValueError(f"penalty parameter must be positive, got {eta}")
    return _assemble_edges(mesh, elem, dofmap, eta)


def assemble_load(
    mesh: CartesianMesh,
    elem: ReferenceElement,
    dofmap: DofMap,
    f,
    quad: QuadratureRule | None = None,
) -> np.ndarray:
    """Assemble the load vector for a scalar field f (eliminated DOFs dropped)."""
    _check_consistent(mesh, elem, dofmap)
    if quad is None:
        quad = gauss_legendre(6 if elem.family != "jinwu" else 8)
    h = mesh.cell_size
    N0 = _monomial_table(elem.monomials, quad.points, (0, 0)) @ elem.coeffs
    origins = mesh.cell_origins()
    X = origins[:, 0:1] + (quad.points[:, 0] + 1.0) * (h / 2.0)
    Y = origins[:, 1:2] + (quad.points[:, 1] + 1.0) * (h / 2.0)
    F = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    bloc = (h / 2.0) ** 2 * (F * quad.weights) @ N0
    bloc = bloc * _dof_scale(elem, h)

    b = np.zeros(dofmap.free_count)
    mask = dofmap.cell_dofs >= 0
    np.add.at(b, dofmap.cell_dofs[mask], bloc[mask])
    return b


def interpolate(dofmap: DofMap, field) -> np.ndarray:
    """DOF vector of the nodal interpolant of a smooth field.

    ``field`` either provides ``deriv(a, b) -> callable`` (needed by the
    Hermite-type families) or is a plain callable for value-only DOFs.
    """
    u = np.zeros(dofmap.free_count)
    for deriv in {tuple(d) for d in dofmap.derivs.tolist()}:
        mask = (dofmap.derivs[:, 0] == deriv[0]) & (dofmap.derivs[:, 1] == deriv[1])
        if hasattr(field, "deriv"):
            fn = field.deriv(*deriv)
        elif deriv == (0, 0):
            fn = field
        else:
            raise TypeError(
                f"family {dofmap.family!r} has derivative DOFs; field must "
                "provide .deriv(a, b)"
            )
        u[mask] = fn(dofmap.anchors[mask, 0], dofmap.anchors[mask, 1])
    return u


def evaluate(
    dofmap: DofMap,
    elem: ReferenceElement,
    u: np.ndarray,
    points: np.ndarray,
    deriv: tuple[int, int] = (0, 0),
) -> np.ndarray:
    """Evaluate D^deriv of the FE function with DOF vector u at points.

    Points on cell boundaries are attributed to the lower-left cell; the
    families are continuous in every derivative their DOFs carry, so this
    choice only matters for derivatives beyond that smoothness.
    """
    _check_consistent(dofmap.mesh, elem, dofmap)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = dofmap.mesh.cells_per_axis
    h = dofmap.mesh.cell_size
    ci = np.clip(np.floor(pts[:, 0] * n).astype(int), 0, n - 1)
    cj = np.clip(np.floor(pts[:, 1] * n).astype(int), 0, n - 1)
    ref = np.column_stack(
        [2.0 * (pts[:, 0] * n - ci) - 1.0, 2.0 * (pts[:, 1] * n - cj) - 1.0]
    )
    tab = _monomial_table(elem.monomials, ref, deriv) @ elem.coeffs
    gd = dofmap.cell_dofs[cj * n + ci]
    coeff = np.where(gd >= 0, u[np.clip(gd, 0, None)], 0.0) * _dof_scale(elem, h)
    return (tab * coeff).sum(axis=1) * (2.0 / h) ** (deriv[0] + deriv[1])
