"""End-to-end tetrahedralization pipeline.

Stages: normalize the input to a unit-diagonal frame, preprocess (merge +
envelope-constrained simplify), build the background mesh, insert every input
triangle, improve quality until the stop energy or the iteration cap, filter
by winding number (or a Boolean over the per-input surfaces), optionally
extract and repair the boundary surface, then denormalize. Fully serial and
deterministic; a report dict with per-stage wall time and quality statistics
is returned next to the mesh.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .background import generate_background_mesh
from .energy import amips_energies
from .envelope import build_envelope
from .filtering import boolean_filter, filter_outside
from .improvement import ImprovementConfig, improvement_pass
from .insertion import detect_open_boundary_edges, insert_triangle
from .mesh import TriangleSoup
from .predicates import DEFAULT_TOLERANCES
from .preprocess import PREP_EPS_FACTOR, preprocess
from .surface import extract_boundary, make_manifold
from .table import build_table

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    eps: float = 1e-3            # envelope size, relative to the bbox diagonal
    edge_length: float = 1.0 / 20  # target edge length, relative
    stop_energy: float = 10.0
    max_iterations: int = 80
    boolean: str = None          # infix expression over input indices
    filter: bool = True          # winding-number filtering when no boolean
    extract_surface: bool = False
    manifold: bool = False
    threads: int = 1             # accepted for CLI compatibility; serial run

    def __post_init__(self):
        if not (0 < self.eps < 1):
            raise ValueError("eps must be in (0, 1)")
        if not (0 < self.edge_length < 1):
            raise ValueError("edge_length must be in (0, 1)")


def merge_inputs(soups):
    """Concatenate input soups; triangle provenance is the input index."""
    verts, tris, prov = [], [], []
    off = 0
    for k, s in enumerate(soups):
        verts.append(np.asarray(s.vertices, dtype=float))
        tris.append(np.asarray(s.triangles, dtype=np.int64) + off)
        prov.append(np.full(len(s.triangles), k, dtype=np.int64))
        off += len(s.vertices)
    return TriangleSoup(np.vstack(verts), np.vstack(tris),
                        np.concatenate(prov))


def _denormalize(mesh, lo, d):
    mesh._verts[:len(mesh.vertices)] *= d
    mesh._verts[:len(mesh.vertices)] += lo
    mesh._tet_lo *= d
    mesh._tet_lo += lo
    mesh._tet_hi *= d
    mesh._tet_hi += lo


def tetrahedralize(soups, config=None, tol=DEFAULT_TOLERANCES):
    """Run the whole pipeline on one or more triangle soups.

    Returns (mesh, surface, report): surface is None unless extraction was
    requested. All coordinates in the outputs are in the original frame."""
    if config is None:
        config = PipelineConfig()
    if isinstance(soups, TriangleSoup):
        soups = [soups]
    report = {"stages": {}, "warnings": []}
    t_total = time.perf_counter()

    soup = merge_inputs(soups)
    if not len(soup.triangles):
        raise ValueError("input has no triangles")
    lo = soup.vertices.min(axis=0)
    hi = soup.vertices.max(axis=0)
    d = float(np.linalg.norm(hi - lo))
    if d <= 0:
        raise ValueError("input is a single point")
    norm = TriangleSoup((soup.vertices - lo) / d, soup.triangles.copy(),
                        soup.provenance.copy())
    eps = config.eps
    delta = max(tol.eps_zero, 1e-3 * eps)

    t0 = time.perf_counter()
    env_prep = build_envelope(norm, PREP_EPS_FACTOR * eps)
    processed = preprocess(norm, env_prep, tol)
    if not len(processed.triangles):
        raise ValueError("no triangles survive preprocessing")
    report["stages"]["preprocess"] = time.perf_counter() - t0
    report["input_triangles"] = int(len(soup.triangles))
    report["preprocessed_triangles"] = int(len(processed.triangles))
    log.info("preprocess: %d -> %d triangles (%.2fs)", len(soup.triangles),
             len(processed.triangles), report["stages"]["preprocess"])

    t0 = time.perf_counter()
    env = build_envelope(processed, eps)
    mesh = generate_background_mesh(processed, eps,
                                    spacing=config.edge_length)
    report["stages"]["background"] = time.perf_counter() - t0
    log.info("background: %d tets (%.2fs)", int(mesh.alive.sum()),
             report["stages"]["background"])

    # map each triangle to the coordinates of its open-boundary edges
    open_edges = detect_open_boundary_edges(processed)
    tri_open = []
    for tri in processed.triangles:
        pairs = []
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            if key in open_edges:
                pairs.append((processed.vertices[a].copy(),
                              processed.vertices[b].copy()))
        tri_open.append(pairs)

    t0 = time.perf_counter()
    table = build_table()
    pending = []
    for i in range(len(processed.triangles)):
        tri_pts = processed.triangle_points(i)
        prov = int(processed.provenance[i])
        ok, _ = insert_triangle(tri_pts, mesh, table, env, delta,
                                provenance_id=prov,
                                open_edges_pts=tri_open[i] or None, tol=tol)
        if not ok:
            pending.append((tri_pts, prov, tri_open[i] or None))
    report["stages"]["insertion"] = time.perf_counter() - t0
    log.info("insertion: %d/%d inserted, %d tets (%.2fs)",
             len(processed.triangles) - len(pending),
             len(processed.triangles), int(mesh.alive.sum()),
             report["stages"]["insertion"])

    t0 = time.perf_counter()
    icfg = ImprovementConfig(stop_energy=config.stop_energy,
                             max_iterations=config.max_iterations,
                             target_edge_length=config.edge_length)
    result = improvement_pass(mesh, icfg, env, pending=pending, table=table,
                              tol=tol)
    report["stages"]["improvement"] = time.perf_counter() - t0
    report["improvement_iterations"] = result["iterations"]
    report["uninserted_triangles"] = len(result["pending"])
    log.info("improvement: %d iterations, max energy %.3g (%.2fs)",
             result["iterations"], result["max_energy"],
             report["stages"]["improvement"])

    t0 = time.perf_counter()
    dropped = 0
    if config.boolean is not None:
        dropped = boolean_filter(mesh, config.boolean, report["warnings"])
    elif config.filter:
        dropped = filter_outside(mesh, warnings=report["warnings"])
    mesh.compact()
    report["stages"]["filtering"] = time.perf_counter() - t0
    report["filtered_tets"] = int(dropped)
    log.info("filtering: dropped %d tets, %d remain (%.2fs)", dropped,
             int(mesh.alive.sum()), report["stages"]["filtering"])

    surface = None
    if config.extract_surface or config.manifold:
        t0 = time.perf_counter()
        surface = extract_boundary(mesh)
        if config.manifold:
            surface = make_manifold(surface)
        report["stages"]["surface"] = time.perf_counter() - t0
        report["surface_triangles"] = int(len(surface.triangles))

    _denormalize(mesh, lo, d)
    if surface is not None and len(surface.vertices):
        surface.vertices[:] = surface.vertices * d + lo

    ids = mesh.alive_tet_ids()
    if len(ids):
        e = amips_energies(mesh._verts[mesh._tets[ids]])
        report["max_energy"] = float(e.max())
        report["avg_energy"] = float(e.mean())
    else:
        report["max_energy"] = report["avg_energy"] = float("nan")
    report["tets"] = int(len(ids))
    report["vertices"] = int(len(mesh.vertices))
    report["total_seconds"] = time.perf_counter() - t_total
    return mesh, surface, report
