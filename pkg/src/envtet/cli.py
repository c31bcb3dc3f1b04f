"""Command line front end.

Reads one or more surface files, runs the pipeline, writes the tet mesh and a
JSON report. Exit codes: 0 success, 1 I/O or pipeline failure, 2 invalid
arguments.
"""

import argparse
import json
import logging
import sys

from .io import ParseError, read_surface, write_obj, write_tetmesh
from .pipeline import PipelineConfig, tetrahedralize


def build_parser():
    p = argparse.ArgumentParser(
        prog="envtet",
        description="Robust envelope-constrained tetrahedral meshing of "
                    "triangle soups.")
    p.add_argument("--input", "-i", action="append", required=True,
                   metavar="SURFACE",
                   help="input surface (.obj/.stl/.ply); repeatable, inputs "
                        "are indexed 0.. for Boolean expressions")
    p.add_argument("--output", "-o", required=True, metavar="MESH",
                   help="output tet mesh (.msh for MSH 2.2 ASCII, anything "
                        "else for the simple ASCII format)")
    p.add_argument("--eps", type=float, default=1e-3,
                   help="envelope size relative to the bbox diagonal "
                        "(default 1e-3)")
    p.add_argument("--edge-length", type=float, default=1.0 / 20,
                   help="target edge length relative to the bbox diagonal "
                        "(default 0.05)")
    p.add_argument("--stop-energy", type=float, default=10.0,
                   help="quality improvement stops when the max energy drops "
                        "below this (default 10)")
    p.add_argument("--max-iters", type=int, default=80,
                   help="improvement iteration cap (default 80)")
    p.add_argument("--boolean", default=None, metavar="EXPR",
                   help="Boolean expression over input indices, e.g. "
                        "'0 union 1' or '(0 - 1) inter 2'")
    p.add_argument("--no-filter", "--skip-filter", dest="filter",
                   action="store_false",
                   help="keep the whole tetrahedralized bounding box")
    p.add_argument("--extract-surface", metavar="OBJ", default=None,
                   help="also write the boundary surface of the result")
    p.add_argument("--manifold", action="store_true",
                   help="repair the extracted surface to be manifold")
    p.add_argument("--report", metavar="JSON", default=None,
                   help="write the run report to this path (default: next to "
                        "the output mesh)")
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; execution is serial")
    p.add_argument("--log-level", default="info",
                   choices=["debug", "info", "warning", "error"])
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.eps <= 0 or args.eps >= 1:
        print("error: --eps must be in (0, 1)", file=sys.stderr)
        return 2
    if args.edge_length <= 0 or args.edge_length >= 1:
        print("error: --edge-length must be in (0, 1)", file=sys.stderr)
        return 2
    if args.max_iters < 1:
        print("error: --max-iters must be positive", file=sys.stderr)
        return 2
    if args.stop_energy <= 3:
        print("error: --stop-energy must exceed 3 (the flat minimum)",
              file=sys.stderr)
        return 2

    soups = []
    for path in args.input:
        try:
            soups.append(read_surface(path))
        except (OSError, ParseError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 1

    config = PipelineConfig(
        eps=args.eps, edge_length=args.edge_length,
        stop_energy=args.stop_energy, max_iterations=args.max_iters,
        boolean=args.boolean,
        filter=args.filter,
        extract_surface=args.extract_surface is not None,
        manifold=args.manifold, threads=args.threads)
    try:
        mesh, surface, report = tetrahedralize(soups, config)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        write_tetmesh(mesh, args.output)
        if args.extract_surface is not None and surface is not None:
            write_obj(surface, args.extract_surface)
        report_path = args.report or args.output + ".json"
        with open(report_path, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {args.output}: {report['tets']} tets, "
          f"max energy {report['max_energy']:.3g}, "
          f"{report['uninserted_triangles']} uninserted, "
          f"{report['total_seconds']:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
