"""Epsilon-envelope membership oracle for points and triangles.

A query triangle is accepted only when every point of it is certified to lie
within eps_inner (< eps) of the input surface. Certification uses the fact
that the distance to a single convex set (one input triangle) is a convex
function: if all three corners of a (sub-)triangle are within eps_inner of
the same input triangle, the whole sub-triangle is. Queries that cannot be
certified at the top level are refined by midpoint subdivision; sub-triangles
that bottom out below the sampling step without a certificate, or whose
corner samples leave the inner envelope, reject the query (conservative by
contract: rejection is always allowed, acceptance implies soundness).
"""

import numpy as np
from scipy.spatial import cKDTree


def point_triangle_distance_sq(p, a, b, c):
    """Squared distance from points to triangles; all args broadcastable
    (..., 3) arrays."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("...i,...i->...", ab, ap)
    d2 = np.einsum("...i,...i->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...i,...i->...", ab, bp)
    d4 = np.einsum("...i,...i->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...i,...i->...", ab, cp)
    d6 = np.einsum("...i,...i->...", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom

    shape = np.broadcast_shapes(p.shape, a.shape, b.shape, c.shape)
    closest = np.empty(shape)
    interior = a + v[..., None] * ab + w[..., None] * ac
    closest[...] = interior

    on_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    closest = np.where(on_bc[..., None], b + t_bc[..., None] * (c - b), closest)
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    closest = np.where(on_ac[..., None], a + t_ac[..., None] * ac, closest)
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    closest = np.where(on_ab[..., None], a + t_ab[..., None] * ab, closest)
    at_c = (d6 >= 0) & (d5 <= d6)
    closest = np.where(at_c[..., None], c, closest)
    at_b = (d3 >= 0) & (d4 <= d3)
    closest = np.where(at_b[..., None], b, closest)
    at_a = (d1 <= 0) & (d2 <= 0)
    closest = np.where(at_a[..., None], a, closest)

    diff = p - closest
    return np.einsum("...i,...i->...", diff, diff)


def points_surface_distance(points, tri_pts):
    """Exact (floating) distance from each point to a triangle set.

    Brute force over all triangles; this is the test oracle and the small-n
    workhorse. points (n,3), tri_pts (m,3,3) -> (n,)."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.empty(len(points))
    chunk = max(1, 4_000_000 // max(1, len(tri_pts)))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        d = point_triangle_distance_sq(
            p[:, None, :], tri_pts[None, :, 0], tri_pts[None, :, 1], tri_pts[None, :, 2])
        out[s:s + chunk] = d.min(axis=1)
    return np.sqrt(out)


class Envelope:
    def __init__(self, soup, eps):
        if len(soup.triangles) == 0:
            raise ValueError("cannot build an envelope around an empty soup")
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.surface = soup
        self.eps = float(eps)
        self.eps_inner = 0.999 * self.eps
        self.sampling_step = 2.0 * np.sqrt(self.eps ** 2 - self.eps_inner ** 2)
        self.tri_pts = soup.all_triangle_points()
        self.centroids = self.tri_pts.mean(axis=1)
        self.radii = np.linalg.norm(
            self.tri_pts - self.centroids[:, None, :], axis=2).max(axis=1)
        self.max_radius = float(self.radii.max())
        self.spatial_index = cKDTree(self.centroids)

    # -- candidate gathering ----------------------------------------------

    def _candidates(self, center, radius):
        idx = self.spatial_index.query_ball_point(center, radius + self.max_radius)
        idx = np.asarray(sorted(idx), dtype=np.int64)
        if len(idx):
            d = np.linalg.norm(self.centroids[idx] - center, axis=1)
            idx = idx[d <= radius + self.radii[idx]]
        return idx

    def _dists_sq(self, points, cand):
        """(npoints, ncand) squared distances."""
        t = self.tri_pts[cand]
        return point_triangle_distance_sq(
            np.asarray(points, dtype=float)[:, None, :],
            t[None, :, 0], t[None, :, 1], t[None, :, 2])

    # -- queries -----------------------------------------------------------

    def point_in_envelope(self, p):
        p = np.asarray(p, dtype=float)
        cand = self._candidates(p, self.eps_inner)
        if not len(cand):
            return False
        d = self._dists_sq(p[None], cand)
        return bool(d.min() <= self.eps_inner ** 2)

    def triangle_in_envelope(self, t):
        t = np.asarray(t, dtype=float).reshape(3, 3)
        center = t.mean(axis=0)
        radius = float(np.linalg.norm(t - center, axis=1).max())
        cand = self._candidates(center, radius + self.eps_inner)
        if not len(cand):
            return False
        thr_sq = self.eps_inner ** 2
        # fast paths on the corners alone: a single input triangle covering
        # all three corners certifies the whole query by convexity, and a
        # corner outside the inner envelope refutes it
        dc = self._dists_sq(t, cand)
        if np.any(dc.max(axis=0) <= thr_sq):
            return True
        if np.any(dc.min(axis=1) > thr_sq):
            return False
        leaf = max(self.sampling_step, 1e-7 * self.eps)
        budget = 4000  # refinement cap; exhausting it rejects (conservative)
        stack = [(t, cand)]
        while stack:
            budget -= 1
            if budget < 0:
                return False
            corners, cand = stack.pop()
            a, b, c = corners
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            samples = np.array([a, b, c, ab, bc, ca, (a + b + c) / 3.0])
            d = self._dists_sq(samples, cand)
            if np.any(d.min(axis=1) > thr_sq):
                return False  # a sample leaves the inner envelope
            if np.any(d[:3].max(axis=0) <= thr_sq):
                continue  # single-triangle certificate covers this node
            edge = max(float(np.linalg.norm(corners[i] - corners[(i + 1) % 3]))
                       for i in range(3))
            if edge <= leaf:
                return False  # cannot certify at sampling resolution
            # prune candidates for the children, then split at edge midpoints
            keep = d.min(axis=0) <= (self.eps_inner + edge) ** 2
            cand = cand[keep]
            stack.append((np.array([a, ab, ca]), cand))
            stack.append((np.array([ab, b, bc]), cand))
            stack.append((np.array([ca, bc, c]), cand))
            stack.append((np.array([ab, bc, ca]), cand))
        return True

    def triangle_samples(self, t):
        """The reference sample set of a triangle: a barycentric lattice at
        the sampling step plus vertices and edge midpoints. Used by the
        soundness oracle in tests."""
        t = np.asarray(t, dtype=float).reshape(3, 3)
        edge = max(np.linalg.norm(t[i] - t[(i + 1) % 3]) for i in range(3))
        n = max(1, int(np.ceil(edge / self.sampling_step)))
        pts = []
        for i in range(n + 1):
            for j in range(n + 1 - i):
                k = n - i - j
                pts.append((i * t[0] + j * t[1] + k * t[2]) / n)
        for i in range(3):
            pts.append((t[i] + t[(i + 1) % 3]) / 2)
        return np.array(pts)


def build_envelope(soup, eps):
    return Envelope(soup, eps)
