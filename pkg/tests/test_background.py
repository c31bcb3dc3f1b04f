"""Initial mesh: Delaunay wrapper, lattice construction, determinism."""

import numpy as np
import pytest

from envtet.background import delaunay_tetrahedralize, generate_background_mesh
from envtet.envelope import points_surface_distance
from envtet.mesh import validate_mesh
from envtet.models import cube, icosphere


class TestDelaunay:
    def test_unit_cube_corners(self):
        pts = np.array([[x, y, z] for x in (0, 1) for y in (0, 1)
                        for z in (0, 1)], dtype=float)
        mesh = delaunay_tetrahedralize(pts)
        assert abs(mesh.total_volume() - 1.0) < 1e-12
        assert validate_mesh(mesh) == []

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            delaunay_tetrahedralize(np.zeros((3, 3)))

    def test_coplanar_rejected(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0],
                        [0.5, 0.5, 0.0]], dtype=float)
        with pytest.raises(ValueError):
            delaunay_tetrahedralize(pts)


class TestBackgroundMesh:
    def build(self, soup=None, eps=1e-3, spacing=0.25):
        if soup is None:
            soup = cube()
        return soup, generate_background_mesh(soup, eps, spacing=spacing)

    def test_fills_expanded_box(self):
        eps = 1e-3
        soup, mesh = self.build(eps=eps)
        side = 1.0 + 4.0 * eps
        assert abs(mesh.total_volume() - side ** 3) < 1e-9

    def test_all_positive(self):
        _, mesh = self.build()
        assert not any(v[0] == "orientation" for v in validate_mesh(mesh))

    def test_soup_vertices_bitwise_first(self):
        soup, mesh = self.build()
        assert np.array_equal(mesh.vertices[:len(soup.vertices)],
                              soup.vertices)

    def test_grid_clear_of_surface(self):
        eps = 1e-3
        soup, mesh = self.build(eps=eps)
        extra = mesh.vertices[len(soup.vertices):]
        d = points_surface_distance(extra, soup.all_triangle_points())
        assert d.min() >= eps

    def test_hull_flags_on_box(self):
        eps = 1e-3
        soup, mesh = self.build(eps=eps)
        lo = soup.vertices.min(axis=0) - 2 * eps
        hi = soup.vertices.max(axis=0) + 2 * eps
        flagged = mesh.vertices[mesh.on_bbox[:mesh.nv]]
        assert len(flagged)
        on_face = (np.isclose(flagged, lo[None]) | np.isclose(flagged, hi[None]))
        assert np.all(on_face.any(axis=1))

    def test_deterministic(self):
        _, m1 = self.build(soup=icosphere(1, radius=0.5))
        _, m2 = self.build(soup=icosphere(1, radius=0.5))
        assert np.array_equal(m1.vertices, m2.vertices)
        assert np.array_equal(m1.tets, m2.tets)

    def test_spacing_controls_resolution(self):
        _, coarse = self.build(spacing=0.5)
        _, fine = self.build(spacing=0.2)
        assert fine.nv > coarse.nv
