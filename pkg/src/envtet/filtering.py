"""Inside/outside classification by generalized winding numbers.

Tets are classified at their centroids against the tracked surface (or the
per-input tracked surfaces for Boolean expressions) and kept when the winding
number exceeds 1/2. The evaluation is the exact sum of signed solid angles
over all triangles; no acceleration structure.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .envelope import points_surface_distance
from .mesh import TriangleSoup
from .predicates import DEFAULT_TOLERANCES

WARN_BAND = 1e-6


def winding_number(tri_pts, p, tol=DEFAULT_TOLERANCES):
    """Generalized winding number of point p w.r.t. a triangle set (m,3,3).

    Sum of signed solid angles divided by 4 pi, accumulated with compensated
    summation. Raises ValueError when p lies on the surface (within
    eps_zero), where the number is undefined."""
    tri_pts = np.asarray(tri_pts, dtype=float).reshape(-1, 3, 3)
    p = np.asarray(p, dtype=float)
    if len(tri_pts) and float(points_surface_distance(p[None], tri_pts)[0]) <= tol.eps_zero:
        raise ValueError("winding number undefined on the surface")
    terms = []
    for a, b, c in tri_pts:
        terms.append(_solid_angle(a - p, b - p, c - p))
    return math.fsum(terms) / (4.0 * math.pi)


def _solid_angle(a, b, c):
    """Signed solid angle of the triangle (a, b, c) seen from the origin."""
    la, lb, lc = (float(np.linalg.norm(v)) for v in (a, b, c))
    num = float(np.dot(a, np.cross(b, c)))
    den = (la * lb * lc + float(np.dot(a, b)) * lc
           + float(np.dot(b, c)) * la + float(np.dot(c, a)) * lb)
    return 2.0 * math.atan2(num, den)


def winding_numbers(tri_pts, points):
    """Vectorized winding numbers of many points, (n, 3) -> (n,).

    Chunked over triangles with pairwise-stable accumulation; the scalar
    winding_number is the oracle."""
    tri_pts = np.asarray(tri_pts, dtype=float).reshape(-1, 3, 3)
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.zeros(len(points))
    if not len(tri_pts):
        return out
    chunk = max(1, 2_000_000 // max(1, len(tri_pts)))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        a = tri_pts[None, :, 0] - p[:, None]
        b = tri_pts[None, :, 1] - p[:, None]
        c = tri_pts[None, :, 2] - p[:, None]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        num = np.einsum("nmi,nmi->nm", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("nmi,nmi->nm", a, b) * lc
               + np.einsum("nmi,nmi->nm", b, c) * la
               + np.einsum("nmi,nmi->nm", c, a) * lb)
        out[s:s + chunk] = 2.0 * np.arctan2(num, den).sum(axis=1)
    return out / (4.0 * math.pi)


def tracked_surface_soup(mesh, surface_id=None):
    """Triangle soup of the tracked faces (oriented triples), optionally
    restricted to one input surface id."""
    tris = []
    for key in sorted(mesh.tracked):
        for sid, oriented in mesh.tracked[key]:
            if surface_id is None or sid == surface_id:
                tris.append(oriented)
    if not tris:
        return TriangleSoup(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    tris = np.asarray(tris, dtype=np.int64)
    return TriangleSoup(mesh.vertices.copy(), tris)


def _keep_mask(mesh, tri_pts, warnings):
    ids = mesh.alive_tet_ids()
    if not len(ids) or not len(tri_pts):
        return ids, np.ones(len(ids), dtype=bool)
    w = winding_numbers(tri_pts, mesh.centroids(ids))
    close = np.abs(w - 0.5) < WARN_BAND
    if np.any(close) and warnings is not None:
        warnings.append(f"{int(close.sum())} centroids within {WARN_BAND} "
                        "of the 0.5 winding threshold")
    return ids, w > 0.5


def _prune_dangling_tags(mesh):
    """Drop tracked tags of faces no longer bounding any alive tet; thin
    double covers can lose both incident tets to the filter."""
    live = set()
    for t in mesh.alive_tet_ids():
        live.update(mesh.tet_faces(t))
    for key in [k for k in mesh.tracked if k not in live]:
        del mesh.tracked[key]


def filter_outside(mesh, surface_id=None, warnings=None):
    """Drop alive tets whose centroid winding number is not above 1/2."""
    soup = tracked_surface_soup(mesh, surface_id)
    if not len(soup.triangles):
        return 0
    ids, keep = _keep_mask(mesh, soup.all_triangle_points(), warnings)
    dropped = 0
    for t, k in zip(ids, keep):
        if not k:
            mesh.kill_tet(int(t))
            dropped += 1
    if dropped:
        _prune_dangling_tags(mesh)
    return dropped


# ---------------------------------------------------------------------------
# Boolean expressions


@dataclass
class BooleanExpr:
    op: str  # "leaf", "union", "inter", "diff"
    left: object = None
    right: object = None
    soup_id: int = None

    def soup_ids(self):
        if self.op == "leaf":
            return {self.soup_id}
        return self.left.soup_ids() | self.right.soup_ids()

    def evaluate(self, membership):
        """membership: soup id -> boolean array; returns boolean array."""
        if self.op == "leaf":
            return membership[self.soup_id]
        a = self.left.evaluate(membership)
        b = self.right.evaluate(membership)
        if self.op == "union":
            return a | b
        if self.op == "inter":
            return a & b
        if self.op == "diff":
            return a & ~b
        raise ValueError(f"unknown operator {self.op!r}")


_TOKEN = re.compile(r"\s*(\d+|\(|\)|∪|∩|−|-|\bunion\b|\binter\b|"
                    r"\bintersection\b|\bdiff\b|\bdifference\b)")

_OP_ALIAS = {"∪": "union", "union": "union",
             "∩": "inter", "inter": "inter", "intersection": "inter",
             "−": "diff", "-": "diff", "diff": "diff", "difference": "diff"}


def parse_boolean(text):
    """Parse a parenthesized infix Boolean expression over soup indices,
    e.g. "(0 ∪ 1) − 2" or "0 inter 1". All operators are left-associative
    with equal precedence."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad token at offset {pos}: {text[pos:]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    out, rest = _parse_expr(tokens, 0)
    if rest != len(tokens):
        raise ValueError("trailing tokens in Boolean expression")
    return out


def _parse_expr(tokens, i):
    node, i = _parse_atom(tokens, i)
    while i < len(tokens) and tokens[i] in _OP_ALIAS:
        op = _OP_ALIAS[tokens[i]]
        rhs, i = _parse_atom(tokens, i + 1)
        node = BooleanExpr(op, node, rhs)
    return node, i


def _parse_atom(tokens, i):
    if i >= len(tokens):
        raise ValueError("unexpected end of Boolean expression")
    t = tokens[i]
    if t == "(":
        node, i = _parse_expr(tokens, i + 1)
        if i >= len(tokens) or tokens[i] != ")":
            raise ValueError("unbalanced parenthesis in Boolean expression")
        return node, i + 1
    if t.isdigit():
        return BooleanExpr("leaf", soup_id=int(t)), i + 1
    raise ValueError(f"unexpected token {t!r} in Boolean expression")


def boolean_filter(mesh, expr, warnings=None):
    """Keep tets satisfying the Boolean expression over per-input winding
    membership (w_i > 0.5 at the centroid)."""
    if isinstance(expr, str):
        expr = parse_boolean(expr)
    present = set()
    for entries in mesh.tracked.values():
        for sid, _ in entries:
            present.add(sid)
    missing = expr.soup_ids() - present
    if missing:
        raise ValueError(f"Boolean expression references unknown surface ids "
                         f"{sorted(missing)}")
    ids = mesh.alive_tet_ids()
    centroids = mesh.centroids(ids)
    membership = {}
    for sid in sorted(expr.soup_ids()):
        soup = tracked_surface_soup(mesh, sid)
        w = winding_numbers(soup.all_triangle_points(), centroids)
        close = np.abs(w - 0.5) < WARN_BAND
        if np.any(close) and warnings is not None:
            warnings.append(f"surface {sid}: {int(close.sum())} centroids "
                            f"within {WARN_BAND} of the 0.5 threshold")
        membership[sid] = w > 0.5
    keep = expr.evaluate(membership)
    dropped = 0
    for t, k in zip(ids, keep):
        if not k:
            mesh.kill_tet(int(t))
            dropped += 1
    if dropped:
        _prune_dangling_tags(mesh)
    return dropped
