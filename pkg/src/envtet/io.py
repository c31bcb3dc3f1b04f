"""Surface readers and tet-mesh writers.

Readers: OBJ (ASCII v/f), STL (binary and ASCII), PLY (ASCII). Writers: MSH
2.2 ASCII and a simple ASCII tet format; both round-trip bitwise through
%.17g formatting. Parse failures raise ValueError with a line or byte-offset
context and never return a partial soup.
"""

import struct

import numpy as np

from .mesh import TriangleSoup


class ParseError(ValueError):
    pass


def _fan(indices):
    return [(indices[0], indices[i], indices[i + 1])
            for i in range(1, len(indices) - 1)]


def read_obj(path):
    verts = []
    faces = []
    with open(path, "r", errors="replace") as f:
        for ln, line in enumerate(f, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ParseError(f"{path}:{ln}: vertex needs 3 coordinates")
                try:
                    verts.append([float(x) for x in parts[1:4]])
                except ValueError as e:
                    raise ParseError(f"{path}:{ln}: {e}") from e
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    tok = tok.split("/")[0]
                    try:
                        i = int(tok)
                    except ValueError as e:
                        raise ParseError(f"{path}:{ln}: bad face index {tok!r}") from e
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise ParseError(f"{path}:{ln}: face needs 3+ vertices")
                faces.extend(_fan(idx))
    if not faces:
        raise ParseError(f"{path}: no triangles")
    return TriangleSoup(np.array(verts), np.array(faces, dtype=np.int64))


def _read_stl_ascii(path, text):
    verts = []
    cur = []
    for ln, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "vertex":
            if len(parts) != 4:
                raise ParseError(f"{path}:{ln}: vertex needs 3 coordinates")
            try:
                cur.append([float(x) for x in parts[1:4]])
            except ValueError as e:
                raise ParseError(f"{path}:{ln}: {e}") from e
        elif parts[0] == "endfacet":
            if len(cur) != 3:
                raise ParseError(f"{path}:{ln}: facet with {len(cur)} vertices")
            verts.extend(cur)
            cur = []
    if not verts:
        raise ParseError(f"{path}: no facets")
    v = np.array(verts)
    t = np.arange(len(v), dtype=np.int64).reshape(-1, 3)
    return TriangleSoup(v, t)


def _read_stl_binary(path, data):
    if len(data) < 84:
        raise ParseError(f"{path}: truncated binary header ({len(data)} bytes)")
    (n,) = struct.unpack_from("<I", data, 80)
    need = 84 + 50 * n
    if len(data) < need:
        raise ParseError(f"{path}: expected {need} bytes for {n} facets, "
                         f"got {len(data)} (offset {len(data)})")
    raw = np.frombuffer(data, dtype=np.uint8, count=50 * n, offset=84)
    tri = raw.reshape(n, 50)[:, 12:48].copy().view("<f4").reshape(n, 3, 3)
    v = tri.reshape(-1, 3).astype(float)
    t = np.arange(len(v), dtype=np.int64).reshape(-1, 3)
    if n == 0:
        raise ParseError(f"{path}: no facets")
    return TriangleSoup(v, t)


def read_stl(path):
    with open(path, "rb") as f:
        data = f.read()
    head = data[:5]
    if head == b"solid":
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError:
            return _read_stl_binary(path, data)
        if "facet" in text or "endsolid" in text:
            return _read_stl_ascii(path, text)
    return _read_stl_binary(path, data)


def read_ply(path):
    with open(path, "r", errors="replace") as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(f"{path}:1: not a PLY file")
    n_vert = n_face = None
    props = []
    in_vertex = False
    i = 1
    fmt = None
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            in_vertex = parts[1] == "vertex"
            if parts[1] == "vertex":
                n_vert = int(parts[2])
            elif parts[1] == "face":
                n_face = int(parts[2])
        elif parts[0] == "property" and in_vertex:
            props.append(parts[-1])
        elif parts[0] == "end_header":
            break
    else:
        raise ParseError(f"{path}: missing end_header")
    if fmt != "ascii":
        raise ParseError(f"{path}: only ASCII PLY supported, got {fmt!r}")
    if n_vert is None or n_face is None:
        raise ParseError(f"{path}: missing vertex or face element")
    try:
        ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
    except ValueError as e:
        raise ParseError(f"{path}: vertex element lacks x/y/z") from e
    verts = []
    for k in range(n_vert):
        if i + k >= len(lines):
            raise ParseError(f"{path}:{i + k + 1}: truncated vertex list")
        parts = lines[i + k].split()
        try:
            verts.append([float(parts[ix]), float(parts[iy]), float(parts[iz])])
        except (ValueError, IndexError) as e:
            raise ParseError(f"{path}:{i + k + 1}: {e}") from e
    i += n_vert
    faces = []
    for k in range(n_face):
        if i + k >= len(lines):
            raise ParseError(f"{path}:{i + k + 1}: truncated face list")
        parts = lines[i + k].split()
        try:
            cnt = int(parts[0])
            idx = [int(x) for x in parts[1:1 + cnt]]
        except (ValueError, IndexError) as e:
            raise ParseError(f"{path}:{i + k + 1}: {e}") from e
        if cnt < 3 or len(idx) != cnt:
            raise ParseError(f"{path}:{i + k + 1}: bad face record")
        faces.extend(_fan(idx))
    if not faces:
        raise ParseError(f"{path}: no triangles")
    return TriangleSoup(np.array(verts), np.array(faces, dtype=np.int64))


def read_surface(path):
    """Dispatch on extension; .obj, .stl, .ply supported."""
    p = str(path).lower()
    if p.endswith(".obj"):
        return read_obj(path)
    if p.endswith(".stl"):
        return read_stl(path)
    if p.endswith(".ply"):
        return read_ply(path)
    raise ParseError(f"{path}: unsupported surface format")


# ---------------------------------------------------------------------------
# tet mesh output


def _mesh_arrays(mesh):
    ids = mesh.alive_tet_ids()
    tets = mesh._tets[ids]
    used = np.unique(tets) if len(tets) else np.zeros(0, dtype=np.int64)
    remap = {int(v): i for i, v in enumerate(used)}
    verts = mesh.vertices[used] if len(used) else np.zeros((0, 3))
    tets = np.array([[remap[int(v)] for v in t] for t in tets], dtype=np.int64)
    return verts, tets


def write_msh(mesh, path):
    """MSH ASCII 2.2 with type-4 (tet) elements; 1-based node ids."""
    verts, tets = _mesh_arrays(mesh)
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write(f"$Nodes\n{len(verts)}\n")
        for i, (x, y, z) in enumerate(verts, 1):
            f.write(f"{i} {x:.17g} {y:.17g} {z:.17g}\n")
        f.write("$EndNodes\n")
        f.write(f"$Elements\n{len(tets)}\n")
        for i, (a, b, c, d) in enumerate(tets, 1):
            f.write(f"{i} 4 2 0 1 {a + 1} {b + 1} {c + 1} {d + 1}\n")
        f.write("$EndElements\n")


def read_msh(path):
    """(vertices, tets) from an MSH 2.2 ASCII file (type-4 elements only)."""
    verts = []
    tets = []
    with open(path) as f:
        lines = f.read().splitlines()
    i = 0
    while i < len(lines):
        if lines[i].strip() == "$Nodes":
            n = int(lines[i + 1])
            for k in range(n):
                parts = lines[i + 2 + k].split()
                verts.append([float(x) for x in parts[1:4]])
            i += n + 2
        elif lines[i].strip() == "$Elements":
            n = int(lines[i + 1])
            for k in range(n):
                parts = lines[i + 2 + k].split()
                if parts[1] != "4":
                    continue
                ntags = int(parts[2])
                idx = [int(x) - 1 for x in parts[3 + ntags:7 + ntags]]
                tets.append(idx)
            i += n + 2
        else:
            i += 1
    return np.array(verts), np.array(tets, dtype=np.int64)


def write_tet_ascii(mesh, path):
    """Simple ASCII format: counts header, vertex lines, 4-index tet lines."""
    verts, tets = _mesh_arrays(mesh)
    with open(path, "w") as f:
        f.write(f"{len(verts)} {len(tets)}\n")
        for x, y, z in verts:
            f.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c, d in tets:
            f.write(f"{a} {b} {c} {d}\n")


def read_tet_ascii(path):
    with open(path) as f:
        lines = f.read().split("\n")
    nv, nt = (int(x) for x in lines[0].split())
    verts = np.array([[float(x) for x in lines[1 + i].split()]
                      for i in range(nv)]) if nv else np.zeros((0, 3))
    tets = np.array([[int(x) for x in lines[1 + nv + i].split()]
                     for i in range(nt)], dtype=np.int64) if nt \
        else np.zeros((0, 4), dtype=np.int64)
    return verts, tets


def write_tetmesh(mesh, path, fmt=None):
    """Write the alive part of the mesh; format from extension unless given
    ("msh" or "tet")."""
    if fmt is None:
        fmt = "msh" if str(path).lower().endswith(".msh") else "tet"
    if fmt == "msh":
        write_msh(mesh, path)
    elif fmt == "tet":
        write_tet_ascii(mesh, path)
    else:
        raise ValueError(f"unknown tet mesh format {fmt!r}")


def write_obj(soup, path):
    with open(path, "w") as f:
        for x, y, z in soup.vertices:
            f.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in soup.triangles:
            f.write(f"f {a + 1} {b + 1} {c + 1}\n")
