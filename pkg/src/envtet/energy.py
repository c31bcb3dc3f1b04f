"""Conformal tetrahedron distortion energy and its gradient.

The energy of a tet is tr(J^T J) / det(J)^(2/3) where J maps a regular
reference tetrahedron onto the tet. Its minimum is 3, attained exactly on
regular tets; it blows up toward degeneracy. Evaluation is floating point
with an exact rational fallback for the near-degenerate regime where the
float expression loses all significance: the cubed energy
tr^3 / det(J)^2 is a rational function of the coordinates, so it is computed
exactly, rounded once to float64, and the cube root taken. The cubed form
squares the determinant, which makes the rational value well defined (and
vertex-permutation invariant) even when the float determinant estimate has
the wrong sign.
"""

import numpy as np
from gmpy2 import mpq

RATIONAL_FALLBACK_THRESHOLD = 1e8

# reference regular tet (unit edge): (0,0,0), (1,0,0), (1/2, sqrt(3)/2, 0),
# (1/2, sqrt(3)/6, sqrt(6)/3). _COEFF maps absolute vertex coordinates to the
# Jacobian: J = verts^T . _COEFF with verts of shape (4, 3); column j of
# _COEFF is the j-th column of the inverse reference matrix prefixed by the
# balancing -sum row for v0.
_COEFF = np.array([
    [-1.0, -0.5773502691896258, -0.4082482904638631],
    [1.0, -0.5773502691896258, -0.4082482904638631],
    [0.0, 1.1547005383792515, -0.4082482904638631],
    [0.0, 0.0, 1.2247448713915890],
])

# G = Ri . Ri^T, used by the difference-form energy/gradient
_G = np.array([
    [1.5, -0.5, -0.5],
    [-0.5, 1.5, -0.5],
    [-0.5, -0.5, 1.5],
])


def amips_float_batch(verts):
    """Pure floating-point energy of tets given as an (m, 4, 3) array.

    Evaluates the closed-form expression in absolute coordinates. Tets whose
    determinant estimate is non-positive get +inf. No rational repair: on
    slivers far from the origin this path loses significance (that is the
    point of the fallback).
    """
    verts = np.asarray(verts, dtype=float)
    single = verts.ndim == 2
    if single:
        verts = verts[None]
    J = np.einsum("mki,kj->mij", verts, _COEFF)
    tr = np.einsum("mij,mij->m", J, J)
    det = (J[:, 0, 0] * (J[:, 1, 1] * J[:, 2, 2] - J[:, 1, 2] * J[:, 2, 1])
           - J[:, 0, 1] * (J[:, 1, 0] * J[:, 2, 2] - J[:, 1, 2] * J[:, 2, 0])
           + J[:, 0, 2] * (J[:, 1, 0] * J[:, 2, 1] - J[:, 1, 1] * J[:, 2, 0]))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        e = tr / np.cbrt(det * det)
    e = np.where((det > 0) & np.isfinite(e), e, np.inf)
    return e[0] if single else e


def amips_rational_cubed(verts):
    """Exact cubed energy tr(J^T J)^3 / det(J)^2 as an mpq, or None if the
    tet is exactly degenerate.

    Uses the difference form: with D = [v1-v0, v2-v0, v3-v0] (columns),
    tr(J^T J) = tr(D^T D G) = half the sum of squared edge lengths of the
    tet, and det(J)^2 = 2 det(D)^2. All quantities are rational, so the
    result is exactly invariant under vertex permutations.
    """
    q = [[mpq(x) for x in v] for v in verts]
    d = [[q[j + 1][i] - q[0][i] for j in range(3)] for i in range(3)]
    det = (d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1])
           - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
           + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]))
    if det == 0:
        return None
    tr = mpq(0)
    for i in range(4):
        for j in range(i + 1, 4):
            tr += sum((q[i][k] - q[j][k]) ** 2 for k in range(3))
    tr /= 2
    return tr ** 3 / (2 * det * det)


def amips_rational(verts):
    """Energy via the exact cubed form, rounded once to float64."""
    cubed = amips_rational_cubed(verts)
    if cubed is None or cubed <= 0:
        return np.inf
    return float(cubed) ** (1.0 / 3.0)


def amips_energy(verts):
    """Energy of one tet (4x3 array-like).

    Positively oriented well-conditioned tets use the float path; estimates
    beyond RATIONAL_FALLBACK_THRESHOLD (including float-degenerate cases
    reported as +inf) are re-evaluated exactly. Cleanly inverted tets return
    +inf.
    """
    verts = np.asarray(verts, dtype=float)
    e = float(amips_float_batch(verts))
    if e <= RATIONAL_FALLBACK_THRESHOLD:
        return e
    er = amips_rational(verts)
    if er <= RATIONAL_FALLBACK_THRESHOLD and not np.isfinite(e):
        # the float path called it inverted and the exact energy is moderate:
        # genuinely inverted, keep the sentinel
        return np.inf
    return er


def amips_energies(verts):
    """Batch energy with rational repair, (m, 4, 3) -> (m,)."""
    e = np.atleast_1d(amips_float_batch(verts))
    bad = ~(e <= RATIONAL_FALLBACK_THRESHOLD)
    if np.any(bad):
        verts = np.asarray(verts, dtype=float)
        for i in np.nonzero(bad)[0]:
            e[i] = amips_energy(verts[i])
    return e


def amips_gradient(verts):
    """Analytic gradient of the energy w.r.t. the 4 vertex positions.

    Returns a (4, 3) array. Valid for positively oriented non-degenerate
    tets; with D the difference matrix,
      grad_D = k det(D)^(-2/3) (2 D G - (2/3) A D^(-T)),  A = tr(D^T D G),
    where k = det(Ri)^(-2/3) = 2^(-1/3); column j is the gradient w.r.t.
    v_{j+1} and the v0 gradient balances the columns to zero sum.
    """
    verts = np.asarray(verts, dtype=float)
    D = (verts[1:] - verts[0]).T
    det = float(np.linalg.det(D))
    if det <= 0:
        raise ValueError("gradient undefined for non-positive tets")
    A = float(np.einsum("ij,ij->", D @ _G, D))
    Dinv_T = np.linalg.inv(D).T
    gD = (2.0 ** (-1.0 / 3.0)) * det ** (-2.0 / 3.0) * (
        2.0 * D @ _G - (2.0 / 3.0) * A * Dinv_T)
    out = np.empty((4, 3))
    out[1:] = gD.T
    out[0] = -gD.sum(axis=1)
    return out
