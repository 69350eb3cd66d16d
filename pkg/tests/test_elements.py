import numpy as np
import pytest

from polyschwarz.elements import (
    FAMILIES,
    _monomial_table,
    build_element,
    gauss_legendre,
    local_load,
    local_stiffness,
    shape_eval,
    unisolvence_residual,
)


@pytest.fixture(scope="module", params=FAMILIES)
def elem(request):
    return build_element(request.param)


def test_monomial_counts():
    counts = {"bfs": 16, "adini": 12, "c0ip": 9, "jinwu": 20}
    for family, expected in counts.items():
        e = build_element(family)
        assert e.n_dofs == expected
        assert len(e.monomials) == expected


def test_unisolvence(elem):
    assert unisolvence_residual(elem) <= 1e-12


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        build_element("argyris")


def test_jinwu_vandermonde_row_entry():
    # functional d2/dx2 at vertex (1,1) applied to monomial x^4 y: 12 x^2 y = 12
    elem = build_element("jinwu")
    i = next(
        k for k, f in enumerate(elem.dofs)
        if f.anchor == (1.0, 1.0) and f.deriv == (2, 0)
    )
    j = elem.monomials.index((4, 1))
    V = _monomial_table(elem.monomials, [elem.dofs[i].anchor], elem.dofs[i].deriv)[0]
    assert V[j] == pytest.approx(12.0, abs=1e-12)


def test_bfs_value_shape_is_tensor_hermite():
    # 1-D Hermite value function at t = -1 on [-1, 1]
    elem = build_element("bfs")
    j = next(
        k for k, f in enumerate(elem.dofs)
        if f.anchor == (-1.0, -1.0) and f.deriv == (0, 0)
    )
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 1, size=(30, 2))
    vals = shape_eval(elem, pts)[(0, 0)][:, j]
    herm = lambda t: 0.25 * (1 - t) ** 2 * (2 + t)
    assert np.allclose(vals, herm(pts[:, 0]) * herm(pts[:, 1]), atol=1e-12)


def test_nodal_property_at_vertices():
    elem = build_element("bfs")
    tab = shape_eval(elem, [(-1.0, -1.0)])[(0, 0)][0]
    j = next(
        k for k, f in enumerate(elem.dofs)
        if f.anchor == (-1.0, -1.0) and f.deriv == (0, 0)
    )
    expected = np.zeros(16)
    expected[j] = 1.0
    assert np.allclose(tab, expected, atol=1e-12)


def test_c0ip_center_lagrange():
    elem = build_element("c0ip")
    tab = shape_eval(elem, [(0.0, 0.0)])[(0, 0)][0]
    j = next(k for k, f in enumerate(elem.dofs) if f.anchor == (0.0, 0.0))
    expected = np.zeros(9)
    expected[j] = 1.0
    assert np.allclose(tab, expected, atol=1e-12)


def _dof_vector_of(elem, poly):
    """Apply the element's functionals to a polynomial given as (a,b)->coeff."""
    v = np.zeros(elem.n_dofs)
    monos = list(poly.keys())
    coefs = np.array([poly[m] for m in monos])
    for i, f in enumerate(elem.dofs):
        row = _monomial_table(tuple(monos), [f.anchor], f.deriv)[0]
        v[i] = row @ coefs
    return v


def _eval_poly(poly, pts):
    monos = tuple(poly.keys())
    coefs = np.array([poly[m] for m in monos])
    return _monomial_table(monos, pts, (0, 0)) @ coefs


def test_adini_reproduces_cubics():
    elem = build_element("adini")
    rng = np.random.default_rng(3)
    poly = {(a, b): rng.standard_normal() for s in range(4) for a in range(s + 1) for b in [s - a]}
    v = _dof_vector_of(elem, poly)
    pts = rng.uniform(-1, 1, size=(20, 2))
    vals = shape_eval(elem, pts)[(0, 0)] @ v
    assert np.allclose(vals, _eval_poly(poly, pts), atol=1e-11)


def test_adini_reproduces_linear_coordinate():
    # interpolating p(x, y) = x through the 12 vertex DOFs gives back x
    elem = build_element("adini")
    v = _dof_vector_of(elem, {(1, 0): 1.0})
    val = shape_eval(elem, [(0.3, -0.7)])[(0, 0)] @ v
    assert val[0] == pytest.approx(0.3, abs=1e-12)


def test_shape_eval_rejects_high_derivative():
    elem = build_element("bfs")
    with pytest.raises(ValueError):
        shape_eval(elem, [(0.0, 0.0)], max_deriv=3)


class TestLocalStiffness:
    def test_annihilates_low_order_polynomials(self, elem):
        # K v = 0 for every polynomial of degree <= m-1
        K = local_stiffness(elem, h=0.37)
        scale = np.abs(K).max()
        for s in range(elem.m):
            for a in range(s + 1):
                v = _dof_vector_of(elem, {(a, s - a): 1.0})
                assert np.linalg.norm(K @ v) <= 1e-10 * scale * np.linalg.norm(v)

    def test_kernel_dimension(self, elem):
        K = local_stiffness(elem, h=1.0)
        w = np.linalg.eigvalsh(K)
        dim_p = elem.m * (elem.m + 1) // 2  # dim P_{m-1}
        assert (w < 1e-10 * w[-1]).sum() == dim_p
        assert w[dim_p] > 1e-10 * w[-1]  # rest strictly positive

    def test_matches_high_order_quadrature_oracle(self, elem):
        # independent oracle: direct 12x12 Gauss integration of the energy
        from math import comb

        h = 1.0
        quad = gauss_legendre(12)
        m = elem.m
        K_oracle = np.zeros((elem.n_dofs, elem.n_dofs))
        for a in range(m + 1):
            alpha = (a, m - a)
            tab = _monomial_table(elem.monomials, quad.points, alpha) @ elem.coeffs
            K_oracle += comb(m, a) * (tab.T * quad.weights) @ tab
        K_oracle *= (2.0 / h) ** (2 * m) * (h / 2.0) ** 2
        K = local_stiffness(elem, h)
        assert np.abs(K - K_oracle).max() <= 1e-12 * np.abs(K_oracle).max()

    def test_quadrature_order_independence(self, elem):
        from polyschwarz.elements import DEFAULT_QUAD_POINTS

        q = DEFAULT_QUAD_POINTS[elem.family]
        K1 = local_stiffness(elem, 0.5, gauss_legendre(q))
        K2 = local_stiffness(elem, 0.5, gauss_legendre(q + 2))
        assert np.abs(K1 - K2).max() <= 1e-12 * np.abs(K1).max()

    def test_scaling_law(self, elem):
        K1 = local_stiffness(elem, 0.5)
        K2 = local_stiffness(elem, 0.25)
        factor = 2.0 ** (2 * elem.m - 2)
        assert np.allclose(K2, factor * K1, rtol=1e-12)

    def test_positive_semidefinite(self, elem):
        w = np.linalg.eigvalsh(local_stiffness(elem, 1.0))
        assert w[0] >= -1e-10 * w[-1]

    def test_rejects_nonpositive_h(self, elem):
        with pytest.raises(ValueError):
            local_stiffness(elem, 0.0)


class TestLocalLoad:
    def test_zero_field(self, elem):
        b = local_load(elem, (0.0, 0.0), 0.5, lambda x, y: 0.0)
        assert np.all(b == 0.0)

    def test_constant_field_partition(self):
        # Lagrange basis sums to one, so entries sum to the cell area
        elem = build_element("c0ip")
        b = local_load(elem, (0.25, 0.5), 0.5, lambda x, y: 1.0)
        assert b.sum() == pytest.approx(0.25, abs=1e-13)

    def test_linear_field_against_quadrature(self):
        # sum over value rows = integral of f (value functions partition unity
        # when derivative DOFs of 1 vanish); oracle = direct Gauss quadrature
        elem = build_element("bfs")
        b = local_load(elem, (0.0, 0.0), 1.0, lambda x, y: x)
        value_rows = [i for i, f in enumerate(elem.dofs) if f.deriv == (0, 0)]
        assert b[value_rows].sum() == pytest.approx(0.5, abs=1e-13)


def test_quadrature_weights_sum():
    for q in (2, 4, 6, 8):
        rule = gauss_legendre(q)
        assert rule.weights.sum() == pytest.approx(4.0, rel=1e-14)
        assert rule.weights.min() > 0
