import numpy as np
import pytest

from polyschwarz.geometry import build_decomposition, build_mesh


def test_smallest_grid():
    mesh = build_mesh(1)
    assert mesh.n_cells == 1
    assert mesh.vertices_per_axis == 2
    corners = [mesh.vertex(i, j) for j in (0, 1) for i in (0, 1)]
    assert corners == [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]


def test_counts_n4():
    mesh = build_mesh(4)
    assert mesh.n_cells == 16
    assert mesh.vertices_per_axis**2 == 25
    assert mesh.cell_size == 0.25


def test_vertex_coordinates_exact():
    mesh = build_mesh(8)
    assert mesh.vertex(3, 5) == (0.375, 0.625)


def test_vertex_bit_reproducible():
    mesh = build_mesh(7)
    for i in range(8):
        for j in range(8):
            a = mesh.vertex(i, j)
            b = mesh.vertex(i, j)
            assert a[0] == b[0] and a[1] == b[1]


def test_rejects_empty_mesh():
    with pytest.raises(ValueError):
        build_mesh(0)


def test_cell_origins_row_major():
    mesh = build_mesh(2)
    origins = mesh.cell_origins()
    assert origins.tolist() == [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]]


class TestDecomposition:
    def test_one_layer_clipped(self):
        dec = build_decomposition(build_mesh(2), build_mesh(8), 1)
        assert dec.n_subdomains == 4
        assert dec.subdomains[0] == ((0, 5), (0, 5))

    def test_two_layers_cross_point(self):
        dec = build_decomposition(build_mesh(2), build_mesh(8), 2)
        assert dec.subdomains[0] == ((0, 6), (0, 6))
        # fine cells adjacent to the cross point lie in all 4 subdomains
        counts = dec.membership_counts()
        assert counts[3, 3] == 4 and counts[4, 4] == 4

    def test_paper_overlap_family(self):
        # delta = 4h = 2^-4 for h = 2^-6, H = 2^-2
        dec = build_decomposition(build_mesh(4), build_mesh(64), 4)
        assert dec.delta == 2.0**-4

    def test_rejects_non_nested(self):
        with pytest.raises(ValueError):
            build_decomposition(build_mesh(3), build_mesh(8), 1)

    def test_rejects_overlap_out_of_range(self):
        with pytest.raises(ValueError):
            build_decomposition(build_mesh(2), build_mesh(8), 0)
        with pytest.raises(ValueError):
            build_decomposition(build_mesh(2), build_mesh(8), 4)

    @pytest.mark.parametrize("n_c,ratio,layers", [(2, 4, 1), (2, 4, 2), (4, 4, 1),
                                                  (4, 8, 3), (8, 4, 1), (8, 8, 3)])
    def test_cover_and_coloring(self, n_c, ratio, layers):
        dec = build_decomposition(build_mesh(n_c), build_mesh(n_c * ratio), layers)
        counts = dec.membership_counts()
        assert counts.min() >= 1  # union covers every fine cell
        if 2 * layers < ratio:
            assert counts.max() <= 4

    def test_diameter_bound(self):
        dec = build_decomposition(build_mesh(4), build_mesh(32), 2)
        H, delta = 0.25, dec.delta
        for (ilo, ihi), (jlo, jhi) in dec.subdomains:
            w = (ihi - ilo) / 32
            h_ = (jhi - jlo) / 32
            assert w <= H + 2 * delta + 1e-15 and h_ <= H + 2 * delta + 1e-15
