"""Winding numbers, inside/outside filtering, and Boolean expressions."""

import math

import numpy as np
import pytest

from envtet import filtering as flt
from envtet.filtering import (BooleanExpr, boolean_filter, filter_outside,
                              parse_boolean, tracked_surface_soup,
                              winding_number, winding_numbers)
from envtet.mesh import TetMesh, face_key
from envtet.models import icosphere, open_half_sphere, tet_surface


def two_tet_mesh():
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ])
    return TetMesh(verts, [[0, 1, 2, 3], [0, 2, 1, 4]])


def tag_closed_tet(mesh, t, sid):
    """Tag the four faces of tet t, wound outward, as surface sid."""
    a, b, c, d = (int(v) for v in mesh._tets[t])
    for tri in ((b, c, d), (a, d, c), (a, b, d), (a, c, b)):
        mesh.tag_face(face_key(*tri), sid, tri)


class TestWindingNumber:
    def test_closed_tet_inside(self):
        soup = tet_surface()
        tp = soup.all_triangle_points()
        centroid = soup.vertices.mean(axis=0)
        assert abs(winding_number(tp, centroid) - 1.0) < 1e-12

    def test_closed_tet_outside(self):
        tp = tet_surface().all_triangle_points()
        assert abs(winding_number(tp, [5.0, 5.0, 5.0])) < 1e-12

    def test_icosphere_inside_outside(self):
        tp = icosphere(2, radius=0.5).all_triangle_points()
        assert abs(winding_number(tp, [0.0, 0.0, 0.0]) - 1.0) < 1e-9
        assert abs(winding_number(tp, [2.0, 0.0, 0.0])) < 1e-9

    def test_on_surface_raises(self):
        tp = tet_surface().all_triangle_points()
        centroid = tp[0].mean(axis=0)
        with pytest.raises(ValueError):
            winding_number(tp, centroid)

    def test_open_surface_fraction(self):
        # far below an open upward-facing half sphere the winding tends to 0,
        # right under the dome it approaches the covered solid-angle fraction
        tp = open_half_sphere(n_lat=12, n_lon=32).all_triangle_points()
        near = winding_number(tp, [0.0, 0.0, 0.5])
        far = winding_number(tp, [0.0, 0.0, -50.0])
        assert 0.5 < abs(near) < 1.05
        assert abs(far) < 1e-3

    def test_batch_matches_scalar(self):
        tp = icosphere(1, radius=0.7).all_triangle_points()
        rng = np.random.default_rng(7)
        pts = rng.uniform(-1.5, 1.5, size=(40, 3))
        w = winding_numbers(tp, pts)
        for i, p in enumerate(pts):
            try:
                ref = winding_number(tp, p)
            except ValueError:
                continue
            assert abs(w[i] - ref) < 1e-10

    def test_empty_surface(self):
        assert np.array_equal(winding_numbers(np.zeros((0, 3, 3)),
                                              [[0, 0, 0]]), [0.0])


class TestTrackedSurfaceSoup:
    def test_collects_oriented_triples(self):
        m = two_tet_mesh()
        tag_closed_tet(m, 0, 0)
        soup = tracked_surface_soup(m)
        assert len(soup.triangles) == 4

    def test_surface_id_restriction(self):
        m = two_tet_mesh()
        tag_closed_tet(m, 0, 0)
        tag_closed_tet(m, 1, 1)
        assert len(tracked_surface_soup(m, 0).triangles) == 4
        assert len(tracked_surface_soup(m, 1).triangles) == 4
        # the shared face carries both tags
        assert len(tracked_surface_soup(m).triangles) == 8

    def test_empty(self):
        m = two_tet_mesh()
        assert len(tracked_surface_soup(m).triangles) == 0


class TestFilterOutside:
    def test_keeps_enclosed_tet_only(self):
        m = two_tet_mesh()
        tag_closed_tet(m, 0, 0)
        dropped = filter_outside(m)
        assert dropped == 1
        assert list(m.alive_tet_ids()) == [0]

    def test_no_tags_is_noop(self):
        m = two_tet_mesh()
        assert filter_outside(m) == 0
        assert len(m.alive_tet_ids()) == 2


class TestParseBoolean:
    def test_leaf(self):
        e = parse_boolean("3")
        assert e.op == "leaf" and e.soup_id == 3

    def test_operators_and_aliases(self):
        for text in ("0 ∪ 1", "0 union 1"):
            assert parse_boolean(text).op == "union"
        for text in ("0 ∩ 1", "0 inter 1", "0 intersection 1"):
            assert parse_boolean(text).op == "inter"
        for text in ("0 − 1", "0 - 1", "0 diff 1", "0 difference 1"):
            assert parse_boolean(text).op == "diff"

    def test_left_associative(self):
        e = parse_boolean("0 - 1 - 2")
        assert e.op == "diff" and e.left.op == "diff"
        assert e.right.soup_id == 2

    def test_parentheses(self):
        e = parse_boolean("0 - (1 union 2)")
        assert e.op == "diff" and e.right.op == "union"
        assert e.soup_ids() == {0, 1, 2}

    def test_errors(self):
        for text in ("0 @ 1", "0 union", "(0 union 1", "0 1"):
            with pytest.raises(ValueError):
                parse_boolean(text)

    def test_evaluate(self):
        a = np.array([True, True, False, False])
        b = np.array([True, False, True, False])
        mem = {0: a, 1: b}
        assert list(parse_boolean("0 union 1").evaluate(mem)) \
            == [True, True, True, False]
        assert list(parse_boolean("0 inter 1").evaluate(mem)) \
            == [True, False, False, False]
        assert list(parse_boolean("0 - 1").evaluate(mem)) \
            == [False, True, False, False]


class TestBooleanFilter:
    def make(self):
        m = two_tet_mesh()
        tag_closed_tet(m, 0, 0)
        tag_closed_tet(m, 1, 1)
        return m

    def test_union_keeps_both(self):
        m = self.make()
        assert boolean_filter(m, "0 union 1") == 0
        assert len(m.alive_tet_ids()) == 2

    def test_intersection_empty(self):
        m = self.make()
        assert boolean_filter(m, "0 inter 1") == 2
        assert len(m.alive_tet_ids()) == 0

    def test_difference(self):
        m = self.make()
        assert boolean_filter(m, "0 - 1") == 1
        assert list(m.alive_tet_ids()) == [0]

    def test_unknown_surface_rejected(self):
        m = self.make()
        with pytest.raises(ValueError):
            boolean_filter(m, "0 - 7")

    def test_expr_object_accepted(self):
        m = self.make()
        expr = BooleanExpr("leaf", soup_id=1)
        boolean_filter(m, expr)
        assert list(m.alive_tet_ids()) == [1]
