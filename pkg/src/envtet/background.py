"""Initial valid tetrahedral mesh.

Delaunay tetrahedralization of the preprocessed soup vertices, the corners of
the bounding box expanded by 2 eps, and a regular interior grid whose points
within eps of the input faces are skipped. Soup vertex coordinates enter the
mesh bitwise unchanged; grid points receive a deterministic sub-spacing
jitter so that structured co-planarities/co-sphericities do not starve the
triangulator, and tets are re-oriented Positive under the exact predicate
(exactly flat ones are dropped; they carry no volume).
"""

import hashlib

import numpy as np
from scipy.spatial import Delaunay as _SciDelaunay

from . import predicates as pred
from .envelope import points_surface_distance
from .mesh import TetMesh

_JITTER_SCALE = 1e-4


def _orient_and_filter(points, simplices):
    """Swap tets Positive, drop exactly degenerate ones."""
    p = points[simplices]
    signs = pred.orient3d_batch(p[:, 0], p[:, 1], p[:, 2], p[:, 3])
    out = simplices.copy()
    neg = signs < 0
    out[neg, 0], out[neg, 1] = simplices[neg, 1], simplices[neg, 0]
    return out[signs != 0]


def delaunay_tetrahedralize(points):
    """Delaunay tet mesh of a point set (>= 4 affinely independent)."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) < 4:
        raise ValueError("need at least 4 points")
    try:
        tri = _SciDelaunay(points)
    except Exception as e:  # qhull raises on flat input
        raise ValueError(f"degenerate point set: {e}") from e
    tets = _orient_and_filter(points, np.asarray(tri.simplices, dtype=np.int64))
    if len(tets) == 0:
        raise ValueError("all points coplanar")
    return TetMesh(points, tets)


def _deterministic_jitter(ij, spacing):
    """Reproducible per-grid-point offset in (-scale, scale)^3."""
    h = hashlib.blake2b(np.int64(ij).tobytes(), digest_size=12).digest()
    u = np.frombuffer(h, dtype="<u4").astype(float) / 2 ** 32
    return (2.0 * u - 1.0) * _JITTER_SCALE * spacing


def generate_background_mesh(soup, eps, d=1.0, spacing=None):
    """Background mesh over the 2-eps expanded bounding box.

    spacing defaults to d/20; the pipeline passes the target edge length so
    the initial resolution tracks the sizing parameter."""
    if spacing is None:
        spacing = d / 20.0
    v = soup.vertices
    lo = v.min(axis=0) - 2.0 * eps
    hi = v.max(axis=0) + 2.0 * eps
    counts = np.maximum(1, np.round((hi - lo) / spacing).astype(int))
    # per-axis spacing fitted so lattice planes land exactly on the hull
    sp = (hi - lo) / counts
    tri_pts = soup.all_triangle_points()
    raw = []
    idx = []
    hull = []
    # body-centered lattice (cell corners including the hull, plus cell
    # centers): its Delaunay tessellation is unambiguous and near-uniform
    # quality, unlike the simple cubic grid whose co-spherical cells
    # degenerate into slivers
    for i in range(counts[0] + 1):
        for j in range(counts[1] + 1):
            for k in range(counts[2] + 1):
                raw.append(lo + sp * np.array([i, j, k]))
                idx.append((2 * i, 2 * j, 2 * k))
                hull.append(i in (0, counts[0]) or j in (0, counts[1])
                            or k in (0, counts[2]))
    for i in range(counts[0]):
        for j in range(counts[1]):
            for k in range(counts[2]):
                raw.append(lo + sp * (np.array([i, j, k]) + 0.5))
                idx.append((2 * i + 1, 2 * j + 1, 2 * k + 1))
                hull.append(False)
    raw = np.array(raw)
    hull = np.array(hull)
    jit = np.array([_deterministic_jitter(ij, spacing) for ij in idx])
    # hull points jitter only tangentially so the box stays a box
    on_min = np.isclose(raw, lo[None, :])
    on_max = np.isclose(raw, hi[None, :])
    jit[on_min | on_max] = 0.0
    raw = np.clip(raw + jit, lo, hi)
    dist = points_surface_distance(raw, tri_pts)
    keep = dist >= eps
    grid_pts = raw[keep]
    grid_hull = hull[keep]
    points = np.vstack([v, grid_pts])
    mesh = delaunay_tetrahedralize(points)
    mesh.on_bbox[len(v):len(v) + len(grid_pts)] = grid_hull
    return mesh
