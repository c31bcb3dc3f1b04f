"""Triangle insertion: cut detection vs oracle, journaling, cover tags."""

import numpy as np
import pytest

from envtet import insertion as ins
from envtet.background import generate_background_mesh
from envtet.envelope import build_envelope, points_surface_distance
from envtet.mesh import TriangleSoup, validate_mesh
from envtet.models import cube, open_half_sphere
from envtet.table import build_table

EPS = 1e-3
DELTA = 1e-6


def snapshot(mesh):
    return (mesh.nv, mesh.nt, mesh.vertices.copy(), mesh.tets.copy(),
            mesh.alive.copy(), {k: list(v) for k, v in mesh.tracked.items()},
            mesh.on_tracked[:mesh.nv].copy())


def assert_same_state(mesh, snap):
    nv, nt, verts, tets, alive, tracked, flags = snap
    assert mesh.nv == nv and mesh.nt == nt
    assert np.array_equal(mesh.vertices, verts)
    assert np.array_equal(mesh.tets, tets)
    assert np.array_equal(mesh.alive, alive)
    assert mesh.tracked == tracked
    assert np.array_equal(mesh.on_tracked[:nv], flags)


@pytest.fixture(scope="module")
def setup():
    soup = cube()
    env = build_envelope(soup, EPS)
    mesh = generate_background_mesh(soup, EPS, spacing=1.0 / 3)
    return soup, env, mesh, build_table()


class TestFindCutTets:
    def test_matches_bruteforce_oracle(self, setup):
        soup, env, mesh, table = setup
        rng = np.random.default_rng(23)
        for _ in range(25):
            center = rng.uniform(-0.45, 0.45, 3)
            tri = center + 0.15 * rng.standard_normal((3, 3))
            try:
                fast = sorted(ins.find_cut_tets(tri, mesh))
            except ValueError:
                fast = []
            slow = sorted(ins.find_cut_tets_bruteforce(tri, mesh))
            assert fast == slow

    def test_outside_triangle_raises(self, setup):
        _, _, mesh, _ = setup
        tri = np.array([[5.0, 5, 5], [6, 5, 5], [5, 6, 5]])
        with pytest.raises(ValueError):
            ins.find_cut_tets(tri, mesh)


class TestInsertTriangle:
    def fresh(self):
        soup = cube()
        env = build_envelope(soup, EPS)
        mesh = generate_background_mesh(soup, EPS, spacing=1.0 / 3)
        return soup, env, mesh, build_table()

    def test_insert_and_cover(self):
        soup, env, mesh, table = self.fresh()
        vol0 = mesh.total_volume()
        tri = soup.triangle_points(0)
        ok, cover = ins.insert_triangle(tri, mesh, table, env, DELTA)
        assert ok and cover
        assert validate_mesh(mesh) == []
        assert abs(mesh.total_volume() - vol0) < 1e-12
        # cover faces stay in the envelope and near the triangle's plane
        a, e1, e2, n = ins._plane_basis(tri)
        for key in cover:
            pts = mesh.vertices[list(key)]
            assert env.triangle_in_envelope(pts)
            assert np.abs((pts - a) @ n).max() <= DELTA
            assert all(mesh.on_tracked[v] for v in key)

    def test_cover_area_matches_triangle(self):
        soup, env, mesh, table = self.fresh()
        tri = soup.triangle_points(0)
        ok, cover = ins.insert_triangle(tri, mesh, table, env, DELTA)
        assert ok
        a, e1, e2, n = ins._plane_basis(tri)
        area = 0.0
        for key in cover:
            p = mesh.vertices[list(key)]
            area += 0.5 * float(np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0])))
        want = 0.5 * float(np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])))
        # snapped vertices sit up to delta off the plane, so the cover is a
        # gently crinkled copy of the triangle
        assert abs(area - want) <= 1e-4 * want

    def test_whole_surface_inserts(self):
        soup, env, mesh, table = self.fresh()
        for i in range(len(soup.triangles)):
            ok, _ = ins.insert_triangle(soup.triangle_points(i), mesh, table,
                                        env, DELTA)
            assert ok
        assert validate_mesh(mesh) == []
        # every tracked face lies in the envelope
        for key in mesh.tracked:
            assert env.triangle_in_envelope(mesh.vertices[list(key)])

    def test_failure_rolls_back(self):
        soup, env, mesh, table = self.fresh()
        snap = snapshot(mesh)
        tri = np.array([[5.0, 5, 5], [6, 5, 5], [5, 6, 5]])  # outside
        ok, cover = ins.insert_triangle(tri, mesh, table, env, DELTA)
        assert not ok and cover == []
        assert_same_state(mesh, snap)

    def test_degenerate_rejected(self):
        soup, env, mesh, table = self.fresh()
        tri = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
        with pytest.raises(ValueError):
            ins.insert_triangle(tri, mesh, table, env, DELTA)

    def test_deterministic(self):
        results = []
        for _ in range(2):
            soup, env, mesh, table = self.fresh()
            for i in range(len(soup.triangles)):
                ins.insert_triangle(soup.triangle_points(i), mesh, table,
                                    env, DELTA)
            results.append((mesh.vertices.copy(), mesh.tets.copy(),
                            mesh.alive.copy()))
        assert np.array_equal(results[0][0], results[1][0])
        assert np.array_equal(results[0][1], results[1][1])
        assert np.array_equal(results[0][2], results[1][2])


class TestUndoLog:
    def test_manual_roundtrip(self):
        _, env, mesh, table = TestInsertTriangle().fresh()
        snap = snapshot(mesh)
        log = ins.UndoLog(mesh)
        v0 = int(mesh.tets[0][0])
        log.record_move(v0)
        mesh.move_vertex(v0, mesh.vertices[v0] + 0.01)
        t = int(mesh.alive_tet_ids()[0])
        log.record_kill(t)
        mesh.kill_tet(t)
        nv = mesh.add_vertex([0.0, 0.0, 0.0])
        mesh.add_tet([int(x) for x in mesh.tets[1][:3]] + [nv])
        log.record_tag((1, 2, 3))
        mesh.tracked[(1, 2, 3)] = [(0, (1, 2, 3))]
        log.record_flag("on_tracked", v0)
        mesh.on_tracked[v0] = True
        log.undo()
        assert_same_state(mesh, snap)


class TestOpenBoundaryDetection:
    def test_closed_surface_has_none(self):
        assert ins.detect_open_boundary_edges(cube()) == set()

    def test_half_sphere_rim(self):
        soup = open_half_sphere(n_lat=4, n_lon=8)
        open_edges = ins.detect_open_boundary_edges(soup)
        assert len(open_edges) == 8  # one rim edge per longitude step
        rim_verts = {v for e in open_edges for v in e}
        # the rim sits on the equator z = 0
        assert np.allclose(soup.vertices[sorted(rim_verts)][:, 2], 0.0,
                           atol=1e-12)

    def test_coplanar_same_side_fan_is_open(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [0.3, 1.0, 0], [0.7, 1.0, 0]],
                     dtype=float)
        soup = TriangleSoup(v, [[0, 1, 2], [0, 1, 3]])
        assert (0, 1) in ins.detect_open_boundary_edges(soup)

    def test_coplanar_opposite_sides_is_interior(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [0.5, 1.0, 0], [0.5, -1.0, 0]],
                     dtype=float)
        soup = TriangleSoup(v, [[0, 1, 2], [0, 1, 3]])
        assert (0, 1) not in ins.detect_open_boundary_edges(soup)
