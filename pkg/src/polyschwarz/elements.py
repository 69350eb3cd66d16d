"""Reference elements for the four plate/triharmonic discretizations.

Each element family is described by a monomial span and a set of point-value
or point-derivative functionals on the reference square [-1, 1]^2.  Shape
functions are obtained numerically by inverting the generalized Vandermonde
matrix (functional i applied to monomial j), so one factory serves every
family and unisolvence doubles as a construction self-test.

Families
--------
bfs
    Bogner-Fox-Schmit: Q3 span, 16 DOFs (value, d/dx, d/dy, d2/dxdy at each
    vertex), conforming for the fourth-order problem (m = 2).
adini
    P3 + {x^3 y, x y^3}, 12 DOFs (value, d/dx, d/dy at each vertex),
    nonconforming, m = 2.
c0ip
    Q2 Lagrange, 9 point values on the 3x3 tensor nodes; used with interior
    penalty edge terms, m = 2.
jinwu
    Q1 * {1, x^2, y^2, x^4, y^4}, 20 DOFs (value, first and pure second
    derivatives at each vertex), nonconforming, m = 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

__all__ = [
    "FAMILIES",
    "FAMILY_M",
    "DofFunctional",
    "ReferenceElement",
    "QuadratureRule",
    "gauss_legendre",
    "build_element",
    "shape_eval",
    "local_stiffness",
    "local_load",
]

FAMILIES = ("bfs", "adini", "c0ip", "jinwu")

FAMILY_M = {"bfs": 2, "adini": 2, "c0ip": 2, "jinwu": 3}

# Vertex DOF derivative lists (reference corners carry these multi-indices).
VERTEX_DOF_DERIVS = {
    "bfs": ((0, 0), (1, 0), (0, 1), (1, 1)),
    "adini": ((0, 0), (1, 0), (0, 1)),
    "jinwu": ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2)),
}

# Tensor corner order: matches cell vertices (i,j), (i+1,j), (i,j+1), (i+1,j+1).
CORNERS = ((-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0))

# Gauss points per axis for exact volume integration (with margin).
DEFAULT_QUAD_POINTS = {"bfs": 6, "adini": 6, "c0ip": 6, "jinwu": 8}

# Maximum acceptable condition number of the generalized Vandermonde matrix;
# beyond this the DOF/monomial sets are considered inconsistent.
VANDERMONDE_COND_LIMIT = 1e8


@dataclass(frozen=True)
class DofFunctional:
    """Point-derivative functional: u -> d^(a+b) u / dx^a dy^b (anchor)."""

    anchor: tuple[float, float]
    deriv: tuple[int, int]
    anchor_class: str  # "vertex" | "edge-midpoint" | "cell-center"


@dataclass(frozen=True)
class ReferenceElement:
    """One element family on the reference square [-1, 1]^2.

    ``coeffs`` maps shape functions to monomial coefficients: shape function
    ``N_j = sum_k coeffs[k, j] * x^monomials[k]``, with
    ``functional_i(N_j) = delta_ij``.
    """

    family: str
    m: int
    monomials: tuple[tuple[int, int], ...]
    coeffs: np.ndarray
    dofs: tuple[DofFunctional, ...]

    @property
    def n_dofs(self) -> int:
        return len(self.dofs)

    @property
    def dof_deriv_orders(self) -> np.ndarray:
        """Total derivative order |deriv| of each functional."""
        return np.array([d.deriv[0] + d.deriv[1] for d in self.dofs])


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule on [-1, 1]^2."""

    points: np.ndarray  # (nq, 2)
    weights: np.ndarray  # (nq,)


def gauss_legendre(q: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with q points per axis (degree 2q-1)."""
    x, w = np.polynomial.legendre.leggauss(q)
    X, Y = np.meshgrid(x, x, indexing="xy")
    W = np.outer(w, w)
    return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel())


def _anchor_class(anchor: tuple[float, float]) -> str:
    on_edge = sum(abs(c) == 1.0 for c in anchor)
    if on_edge == 2:
        return "vertex"
    if on_edge == 1:
        return "edge-midpoint"
    return "cell-center"


def _family_dofs(family: str) -> tuple[DofFunctional, ...]:
    if family == "c0ip":
        nodes = [(x, y) for y in (-1.0, 0.0, 1.0) for x in (-1.0, 0.0, 1.0)]
        return tuple(DofFunctional(p, (0, 0), _anchor_class(p)) for p in nodes)
    derivs = VERTEX_DOF_DERIVS[family]
    return tuple(
        DofFunctional(corner, d, "vertex") for corner in CORNERS for d in derivs
    )


def _family_monomials(family: str) -> tuple[tuple[int, int], ...]:
    if family == "bfs":
        return tuple((a, b) for b in range(4) for a in range(4))
    if family == "c0ip":
        return tuple((a, b) for b in range(3) for a in range(3))
    if family == "adini":
        p3 = [(a, b) for s in range(4) for a in range(s + 1) for b in [s - a]]
        return tuple(p3 + [(3, 1), (1, 3)])
    if family == "jinwu":
        mono = []
        for c, d in ((0, 0), (2, 0), (0, 2), (4, 0), (0, 4)):
            for b in (0, 1):
                for a in (0, 1):
                    mono.append((a + c, b + d))
        assert len(set(mono)) == 20
        return tuple(mono)
    raise ValueError(f"unknown element family {family!r}")


def _monomial_table(
    monomials: tuple[tuple[int, int], ...], points: np.ndarray, deriv: tuple[int, int]
) -> np.ndarray:
    """Evaluate D^deriv of each monomial at each point, shape (npts, nmono)."""
    a, b = deriv
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros((pts.shape[0], len(monomials)))
    for k, (p, q) in enumerate(monomials):
        if p < a or q < b:
            continue
        c = (factorial(p) // factorial(p - a)) * (factorial(q) // factorial(q - b))
        out[:, k] = c * pts[:, 0] ** (p - a) * pts[:, 1] ** (q - b)
    return out


def build_element(family: str) -> ReferenceElement:
    """Construct a reference element by generalized Vandermonde inversion."""
    if family not in FAMILIES:
        raise ValueError(f"unknown element family {family!r}; expected one of {FAMILIES}")
    dofs = _family_dofs(family)
    monomials = _family_monomials(family)
    if len(dofs) != len(monomials):
        raise ValueError(
            f"{family}: {len(dofs)} functionals vs {len(monomials)} monomials"
        )
    V = np.vstack(
        [_monomial_table(monomials, [f.anchor], f.deriv)[0] for f in dofs]
    )
    cond = np.linalg.cond(V)
    if cond > VANDERMONDE_COND_LIMIT:
        raise ValueError(
            f"{family}: Vandermonde condition number {cond:.2e} exceeds "
            f"{VANDERMONDE_COND_LIMIT:.0e}; DOF/monomial sets are inconsistent"
        )
    coeffs = np.linalg.inv(V)
    return ReferenceElement(family, FAMILY_M[family], monomials, coeffs, dofs)


def shape_eval(
    elem: ReferenceElement, points: np.ndarray, max_deriv: int = 0
) -> dict[tuple[int, int], np.ndarray]:
    """Tabulate D^(a,b) of all shape functions for a + b <= max_deriv.

    Parameters
    ----------
    points : array_like, shape (npts, 2) or (2,)
        Reference coordinates in [-1, 1]^2.

    Returns
    -------
    dict
        Maps (a, b) to an (npts, n_dofs) array of derivative values,
        computed by exact monomial differentiation.
    """
    if max_deriv > elem.m:
        raise ValueError(f"max_deriv {max_deriv} exceeds element order m={elem.m}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tables = {}
    for a in range(max_deriv + 1):
        for b in range(max_deriv + 1 - a):
            tables[(a, b)] = _monomial_table(elem.monomials, pts, (a, b)) @ elem.coeffs
    return tables


def _energy_derivs(m: int) -> list[tuple[tuple[int, int], int]]:
    """Order-m multi-indices with multinomial weights m!/alpha!.

    The Frobenius product of order-m derivative tensors counts each mixed
    multi-index (a, b) with multiplicity binom(m, a).
    """
    return [((a, m - a), comb(m, a)) for a in range(m + 1)]


def local_stiffness(
    elem: ReferenceElement, h: float, quad: QuadratureRule | None = None
) -> np.ndarray:
    """Single-cell stiffness matrix of the order-2m broken energy.

    K_ij = sum_{|alpha|=m} (m!/alpha!) int_T D^alpha N_i D^alpha N_j dx on a
    physical cell of size h, in terms of the mapped reference shape
    functions: every reference derivative of total order m picks up (2/h)^m
    and the volume element contributes (h/2)^2.
    """
    if h <= 0:
        raise ValueError(f"cell size must be positive, got {h}")
    if quad is None:
        quad = gauss_legendre(DEFAULT_QUAD_POINTS[elem.family])
    m = elem.m
    K = np.zeros((elem.n_dofs, elem.n_dofs))
    for alpha, weight in _energy_derivs(m):
        tab = _monomial_table(elem.monomials, quad.points, alpha) @ elem.coeffs
        K += weight * (tab.T * quad.weights) @ tab
    K *= (2.0 / h) ** (2 * m) * (h / 2.0) ** 2
    asym = np.abs(K - K.T).max()
    if asym > 1e-12 * max(np.abs(K).max(), 1.0):
        raise AssertionError(f"local stiffness asymmetry {asym:.2e}")
    return 0.5 * (K + K.T)


def local_load(
    elem: ReferenceElement,
    origin: tuple[float, float],
    h: float,
    f,
    quad: QuadratureRule | None = None,
) -> np.ndarray:
    """Load vector b_i = int_T f N_i dx on the cell [ox, ox+h] x [oy, oy+h].

    ``f`` is called with coordinate arrays and may return a scalar for
    constant fields.
    """
    if quad is None:
        quad = gauss_legendre(DEFAULT_QUAD_POINTS[elem.family])
    x = origin[0] + (quad.points[:, 0] + 1.0) * (h / 2.0)
    y = origin[1] + (quad.points[:, 1] + 1.0) * (h / 2.0)
    vals = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)
    N0 = _monomial_table(elem.monomials, quad.points, (0, 0)) @ elem.coeffs
    return (h / 2.0) ** 2 * (quad.weights * vals) @ N0


def unisolvence_residual(elem: ReferenceElement) -> float:
    """Max |functional_i(N_j) - delta_ij|; should be ~1e-14."""
    G = np.vstack(
        [
            _monomial_table(elem.monomials, [f.anchor], f.deriv)[0] @ elem.coeffs
            for f in elem.dofs
        ]
    )
    return float(np.abs(G - np.eye(elem.n_dofs)).max())
