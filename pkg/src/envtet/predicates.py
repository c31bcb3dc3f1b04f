"""Exact and tolerance-controlled geometric predicates.

All topological decisions in the pipeline funnel through this module. Signs
are computed with a cheap floating-point static filter and fall back to exact
rational arithmetic (gmpy2.mpq) when the filter cannot certify the sign.
Constructions (intersection points, distances) are ordinary floating point;
callers that need topology re-consult the exact predicates.

Coordinates are assumed finite. The pipeline works in a normalized frame
where the input bounding-box diagonal is 1, so the zero tolerances below are
absolute.
"""

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from gmpy2 import mpq


class Sign(IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1


@dataclass(frozen=True)
class Tolerances:
    """Zero tolerances for length / area / volume comparisons."""

    eps_zero: float = 1e-8

    def __post_init__(self):
        if not self.eps_zero > 1e-20:
            raise ValueError("eps_zero must exceed 1e-20")

    @property
    def eps_zero_sq(self):
        return self.eps_zero ** 2

    @property
    def eps_zero_cubed(self):
        return self.eps_zero ** 3


DEFAULT_TOLERANCES = Tolerances()

# static filter constant for the 3x3 orientation determinant, in the style of
# adaptive-precision predicates: |det| above _O3D_FILTER * permanent certifies
# the floating sign
_O3D_FILTER = 7.7715611723761027e-16


def _check_finite(*points):
    for p in points:
        for x in p:
            if not math.isfinite(x):
                raise ValueError("non-finite coordinate in predicate input")


def _sign(x):
    if x > 0:
        return Sign.POSITIVE
    if x < 0:
        return Sign.NEGATIVE
    return Sign.ZERO


def _q(p):
    return (mpq(p[0]), mpq(p[1]), mpq(p[2]))


def _qsub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _qcross(a, b):
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def _qdot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def orient3d_exact(a, b, c, d):
    """Sign of det[b-a, c-a, d-a] in exact rational arithmetic."""
    aq, bq, cq, dq = _q(a), _q(b), _q(c), _q(d)
    u, v, w = _qsub(bq, aq), _qsub(cq, aq), _qsub(dq, aq)
    det = _qdot(u, _qcross(v, w))
    return _sign(det)


def orient3d(a, b, c, d):
    """Exact sign of det[b-a, c-a, d-a].

    Positive means d lies on the positive side of the oriented plane (a,b,c)
    (the canonical tet (0,0,0),(1,0,0),(0,1,0),(0,0,1) is Positive).
    """
    ux, uy, uz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    vx, vy, vz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    wx, wy, wz = d[0] - a[0], d[1] - a[1], d[2] - a[2]
    det = (ux * (vy * wz - vz * wy)
           - uy * (vx * wz - vz * wx)
           + uz * (vx * wy - vy * wx))
    perm = (abs(ux) * (abs(vy * wz) + abs(vz * wy))
            + abs(uy) * (abs(vx * wz) + abs(vz * wx))
            + abs(uz) * (abs(vx * wy) + abs(vy * wx)))
    if not math.isfinite(perm):
        _check_finite(a, b, c, d)  # non-finite input raises here
    if abs(det) > _O3D_FILTER * perm:
        return _sign(det)
    return orient3d_exact(a, b, c, d)


def orient3d_batch(a, b, c, d):
    """Vectorized orient3d. Inputs broadcastable (n,3) arrays.

    Returns an int8 array of signs; rows the float filter cannot certify are
    resolved exactly.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    u, v, w = b - a, c - a, d - a
    c1 = v[..., 1] * w[..., 2]
    c2 = v[..., 2] * w[..., 1]
    c3 = v[..., 0] * w[..., 2]
    c4 = v[..., 2] * w[..., 0]
    c5 = v[..., 0] * w[..., 1]
    c6 = v[..., 1] * w[..., 0]
    det = u[..., 0] * (c1 - c2) - u[..., 1] * (c3 - c4) + u[..., 2] * (c5 - c6)
    perm = (np.abs(u[..., 0]) * (np.abs(c1) + np.abs(c2))
            + np.abs(u[..., 1]) * (np.abs(c3) + np.abs(c4))
            + np.abs(u[..., 2]) * (np.abs(c5) + np.abs(c6)))
    out = np.sign(det).astype(np.int8)
    unsure = np.abs(det) <= _O3D_FILTER * perm
    if np.any(unsure):
        aa = np.broadcast_to(a, det.shape + (3,))
        bb = np.broadcast_to(b, det.shape + (3,))
        cc = np.broadcast_to(c, det.shape + (3,))
        dd = np.broadcast_to(d, det.shape + (3,))
        for idx in np.argwhere(unsure):
            t = tuple(idx)
            out[t] = int(orient3d_exact(aa[t], bb[t], cc[t], dd[t]))
    return out


def insphere_exact(a, b, c, d, e):
    """Exact sign of the 4x4 in-sphere determinant.

    Rows are (p - e, |p - e|^2) for p in (a, b, c, d). For a Positively
    oriented tet (a,b,c,d), the sign is Positive exactly when e lies strictly
    inside the open circumsphere.
    """
    pts = [_q(p) for p in (a, b, c, d)]
    eq = _q(e)
    rows = []
    for p in pts:
        r = _qsub(p, eq)
        rows.append((r[0], r[1], r[2], _qdot(r, r)))
    # 4x4 determinant by cofactor expansion along the last column
    def det3(m):
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
    total = mpq(0)
    for i in range(4):
        minor = [rows[j][:3] for j in range(4) if j != i]
        cof = det3(minor) * rows[i][3]
        total += cof if i % 2 == 0 else -cof
    # row order (a,b,c,d) with the lifted column last: expansion above gives
    # det of [[r, |r|^2]] up to a fixed sign; calibrate so that "inside" is
    # Positive for a Positive tet.
    return _sign(total)


def point_in_circumsphere(a, b, c, d, e):
    """True iff e is strictly inside the circumsphere of tet (a,b,c,d)."""
    o = orient3d(a, b, c, d)
    if o == Sign.ZERO:
        raise ValueError("degenerate tetrahedron has no circumsphere")
    s = insphere_exact(a, b, c, d, e)
    return (s == Sign.POSITIVE) if o == Sign.POSITIVE else (s == Sign.NEGATIVE)


def point_plane_distance(p, plane):
    """Unsigned Euclidean distance from p to the infinite plane through the
    three points of `plane`."""
    a, b, c = (np.asarray(x, dtype=float) for x in plane)
    p = np.asarray(p, dtype=float)
    n = np.cross(b - a, c - a)
    nn = np.linalg.norm(n)
    if nn == 0.0:
        raise ValueError("degenerate plane")
    return abs(float(np.dot(n, p - a))) / nn


def plane_edge_intersection(plane, e):
    """Intersection of the plane through `plane` with the open segment e.

    Returns the floating-point intersection point when the endpoints have
    strictly opposite orientation signs against the plane, else None. The
    point is the correctly rounded rational intersection.
    """
    a, b, c = plane
    p0, p1 = e
    s0 = orient3d(a, b, c, p0)
    s1 = orient3d(a, b, c, p1)
    if s0 == Sign.ZERO or s1 == Sign.ZERO or s0 == s1:
        return None
    aq, bq, cq = _q(a), _q(b), _q(c)
    q0, q1 = _q(p0), _q(p1)
    n = _qcross(_qsub(bq, aq), _qsub(cq, aq))
    denom = _qdot(n, _qsub(q1, q0))
    t = _qdot(n, _qsub(aq, q0)) / denom
    pt = tuple(q0[i] + t * (q1[i] - q0[i]) for i in range(3))
    return np.array([float(x) for x in pt])


def _triangle_plane_points(tri_q, n_other, p0_other):
    """Points of tri (rational) lying on the plane (n_other, p0_other).

    Returns a list of rational 3D points (vertices on the plane plus edge
    crossings), or None if the triangle lies strictly on one side.
    """
    signs = [_sign(_qdot(n_other, _qsub(v, p0_other))) for v in tri_q]
    if all(s == Sign.POSITIVE for s in signs) or all(s == Sign.NEGATIVE for s in signs):
        return None
    pts = []
    for i, s in enumerate(signs):
        if s == Sign.ZERO:
            pts.append(tri_q[i])
    for i in range(3):
        j = (i + 1) % 3
        if signs[i] * signs[j] < 0:
            q0, q1 = tri_q[i], tri_q[j]
            denom = _qdot(n_other, _qsub(q1, q0))
            t = _qdot(n_other, _qsub(p0_other, q0)) / denom
            pts.append(tuple(q0[k] + t * (q1[k] - q0[k]) for k in range(3)))
    return pts


def _point_strictly_inside_triangle_q(p, tri_q, n_q):
    """p assumed on tri's plane; strict interiority via in-plane side tests."""
    for i in range(3):
        a, b = tri_q[i], tri_q[(i + 1) % 3]
        side = _qdot(_qcross(_qsub(b, a), _qsub(p, a)), n_q)
        if not side > 0:
            return False
    return True


def _coplanar_interiors_intersect(t1q, t2q, n_q):
    """Exact 2D separating-axis test on the dominant-axis projection."""
    k = max(range(3), key=lambda i: abs(n_q[i]))
    u, v = [i for i in range(3) if i != k]

    def proj(tri):
        return [(p[u], p[v]) for p in tri]

    def area2(t):
        return ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1])
                - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))

    a2, b2 = proj(t1q), proj(t2q)
    if area2(a2) < 0:
        a2 = [a2[0], a2[2], a2[1]]
    if area2(b2) < 0:
        b2 = [b2[0], b2[2], b2[1]]
    for poly, other in ((a2, b2), (b2, a2)):
        for i in range(3):
            p, q2 = poly[i], poly[(i + 1) % 3]
            ex, ey = q2[0] - p[0], q2[1] - p[1]
            # interiors are separated along this edge if every vertex of the
            # other triangle sits on or outside the edge line
            if all((r[0] - p[0]) * ey - (r[1] - p[1]) * ex >= 0 for r in other):
                return False
    return True


def triangle_cuts_through_triangle(t1, t2, tol=DEFAULT_TOLERANCES):
    """True iff the intersection of t1 and t2 contains interior points of
    both triangles.

    Triangles that merely touch along edges/vertices, or share an edge while
    otherwise disjoint, do not count. Exact (rational) decision.
    """
    min_area_sq = (2.0 * tol.eps_zero_sq) ** 2

    def _fcross_sq(t):
        ux, uy, uz = t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]
        vx, vy, vz = t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]
        cx, cy, cz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
        return cx * cx + cy * cy + cz * cz

    fa1 = _fcross_sq(t1)
    fa2 = _fcross_sq(t2)
    if fa1 <= 4.0 * min_area_sq or fa2 <= 4.0 * min_area_sq:
        # near the degeneracy threshold: decide the area test exactly
        t1q0 = [_q(p) for p in t1]
        t2q0 = [_q(p) for p in t2]
        en1 = _qcross(_qsub(t1q0[1], t1q0[0]), _qsub(t1q0[2], t1q0[0]))
        en2 = _qcross(_qsub(t2q0[1], t2q0[0]), _qsub(t2q0[2], t2q0[0]))
        if float(_qdot(en1, en1)) <= min_area_sq \
                or float(_qdot(en2, en2)) <= min_area_sq:
            raise ValueError("degenerate triangle in intersection test")

    # a triangle that does not strictly straddle the other's plane meets it
    # only along its own boundary, which contains no interior points
    signs2 = [orient3d(t1[0], t1[1], t1[2], p) for p in t2]
    coplanar = all(s == Sign.ZERO for s in signs2)
    if not coplanar and not (any(s > 0 for s in signs2)
                             and any(s < 0 for s in signs2)):
        return False
    if not coplanar:
        signs1 = [orient3d(t2[0], t2[1], t2[2], p) for p in t1]
        if not (any(s > 0 for s in signs1) and any(s < 0 for s in signs1)):
            return False

    t1q = [_q(p) for p in t1]
    t2q = [_q(p) for p in t2]
    n1 = _qcross(_qsub(t1q[1], t1q[0]), _qsub(t1q[2], t1q[0]))
    n2 = _qcross(_qsub(t2q[1], t2q[0]), _qsub(t2q[2], t2q[0]))

    if coplanar:
        return _coplanar_interiors_intersect(t1q, t2q, n1)

    pts1 = _triangle_plane_points(t1q, n2, t2q[0])
    if pts1 is None:
        return False
    pts2 = _triangle_plane_points(t2q, n1, t1q[0])
    if pts2 is None:
        return False

    axis = _qcross(n1, n2)

    def interval(pts):
        keyed = [(_qdot(axis, p), p) for p in pts]
        lo = min(keyed, key=lambda kp: kp[0])
        hi = max(keyed, key=lambda kp: kp[0])
        return lo, hi

    lo1, hi1 = interval(pts1)
    lo2, hi2 = interval(pts2)
    lo = lo1 if lo1[0] >= lo2[0] else lo2
    hi = hi1 if hi1[0] <= hi2[0] else hi2
    if not hi[0] > lo[0]:
        return False
    mid = tuple((lo[1][i] + hi[1][i]) / 2 for i in range(3))
    return (_point_strictly_inside_triangle_q(mid, t1q, n1)
            and _point_strictly_inside_triangle_q(mid, t2q, n2))


def triangle_inside_tet(t, tet):
    """True iff all three triangle vertices lie inside or on tet.

    tet must be Positively oriented.
    """
    if orient3d(*tet) != Sign.POSITIVE:
        raise ValueError("tet must be positively oriented")
    for p in t:
        for i in range(4):
            others = [tet[j] for j in range(4) if j != i]
            s_ref = orient3d(*others, tet[i])
            s_p = orient3d(*others, p)
            if s_p != Sign.ZERO and s_p != s_ref:
                return False
    return True
