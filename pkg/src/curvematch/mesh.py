"""Triangle meshes of a square domain with an embedded closed polygonal curve.

The curve is a chain of interior mesh edges, so deforming the mesh moves the
curve for free. The template generator surrounds a regular polygon inscribed
in a circle with staggered point rings (near-equilateral triangles whose
empty diametral circles force every polygon chord to be a Delaunay edge),
grades the spacing geometrically outward, and hands the far field to a
square grid clipped at the domain boundary.
"""

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .errors import (
    CurveNotClosed,
    CurveOnBoundary,
    GenerationFailure,
    ParseError,
    SingularCell,
    TangledMesh,
)


@dataclass(frozen=True)
class MeshGenConfig:
    half_width: float = 10.0
    h: float = 1.0
    radius: float = 1.0
    segments: int = 48


@dataclass(frozen=True)
class Mesh:
    """Fixed topology plus template coordinates.

    ``vertices`` holds the template positions; deformed configurations are
    separate (nv, 2) arrays passed alongside. ``cell_edges[c, i]`` is the
    edge opposite local vertex i, matching the element's edge order.
    ``edge_cells`` has -1 in the second slot for boundary edges.
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    edge_cells: np.ndarray
    vertex_on_boundary: np.ndarray
    edge_on_boundary: np.ndarray

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class CurveLoop:
    """Closed chain of curve facets, ordered counterclockwise.

    Facet i runs from ``vertex_ids[i]`` to ``vertex_ids[(i+1) % n]``;
    ``lengths0`` and ``normals0`` (outward) refer to the template position.
    """

    vertex_ids: np.ndarray
    edge_ids: np.ndarray
    lengths0: np.ndarray
    normals0: np.ndarray

    @property
    def num_facets(self) -> int:
        return self.edge_ids.shape[0]


def build_mesh(vertices: np.ndarray, cells: np.ndarray) -> Mesh:
    """Assemble topology from vertex coordinates and CCW cell connectivity."""
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    d1 = vertices[cells[:, 1]] - vertices[cells[:, 0]]
    d2 = vertices[cells[:, 2]] - vertices[cells[:, 0]]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if (det <= 0).any():
        raise SingularCell(f"{int((det <= 0).sum())} cells not CCW or degenerate")

    pairs = np.stack(
        [cells[:, [1, 2]], cells[:, [0, 2]], cells[:, [0, 1]]], axis=1
    ).reshape(-1, 2)
    pairs.sort(axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    cell_edges = inverse.reshape(-1, 3).astype(np.int64)

    edge_cells = np.full((edges.shape[0], 2), -1, dtype=np.int64)
    for c in range(cells.shape[0]):
        for i in range(3):
            e = cell_edges[c, i]
            if edge_cells[e, 0] < 0:
                edge_cells[e, 0] = c
            elif edge_cells[e, 1] < 0:
                edge_cells[e, 1] = c
            else:
                raise ParseError(f"edge {e} shared by more than two cells")

    edge_on_boundary = edge_cells[:, 1] < 0
    vertex_on_boundary = np.zeros(vertices.shape[0], dtype=bool)
    vertex_on_boundary[edges[edge_on_boundary].ravel()] = True
    return Mesh(
        vertices=vertices,
        cells=cells,
        edges=edges,
        cell_edges=cell_edges,
        edge_cells=edge_cells,
        vertex_on_boundary=vertex_on_boundary,
        edge_on_boundary=edge_on_boundary,
    )


def chain_curve(mesh: Mesh, curve_edges) -> CurveLoop:
    """Chain the given edge ids into one CCW loop and attach template frames."""
    curve_edges = sorted(int(e) for e in curve_edges)
    if len(curve_edges) < 3:
        raise CurveNotClosed("fewer than three curve facets")
    incident: dict[int, list[int]] = {}
    for e in curve_edges:
        if mesh.edge_on_boundary[e]:
            raise CurveOnBoundary(f"curve edge {e} lies on the domain boundary")
        for v in mesh.edges[e]:
            incident.setdefault(int(v), []).append(e)
    for v, es in incident.items():
        if len(es) != 2:
            raise CurveNotClosed(f"curve vertex {v} has {len(es)} curve facets")

    start = min(incident)
    verts = [start]
    edge_seq = [incident[start][0]]
    while True:
        e = edge_seq[-1]
        a, b = mesh.edges[e]
        nxt = int(b) if int(a) == verts[-1] else int(a)
        if nxt == start:
            break
        verts.append(nxt)
        e1, e2 = incident[nxt]
        edge_seq.append(e2 if e1 == e else e1)
        if len(verts) > len(curve_edges):
            raise CurveNotClosed("curve facets do not form a single loop")
    if len(edge_seq) != len(curve_edges):
        raise CurveNotClosed("curve facets form more than one loop")

    vertex_ids = np.array(verts, dtype=np.int64)
    pts = mesh.vertices[vertex_ids]
    nxt = np.roll(pts, -1, axis=0)
    area2 = float((pts[:, 0] * nxt[:, 1] - pts[:, 1] * nxt[:, 0]).sum())
    if area2 < 0:
        vertex_ids = np.concatenate([vertex_ids[:1], vertex_ids[1:][::-1]])
        edge_seq = [edge_seq[-1]] + edge_seq[:-1][::-1]
        pts = mesh.vertices[vertex_ids]

    d = np.roll(pts, -1, axis=0) - pts
    lengths = np.hypot(d[:, 0], d[:, 1])
    tangents = d / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    return CurveLoop(
        vertex_ids=vertex_ids,
        edge_ids=np.array(edge_seq, dtype=np.int64),
        lengths0=lengths,
        normals0=normals,
    )


def curve_polygon(loop: CurveLoop, coords: np.ndarray) -> np.ndarray:
    """Ordered curve vertex positions (n, 2) in the given configuration."""
    return np.ascontiguousarray(coords[loop.vertex_ids])


def generate_template_mesh(cfg: MeshGenConfig):
    """Deterministic template mesh; returns (Mesh, CurveLoop).

    Raises GenerationFailure if any polygon chord is missing from the
    triangulation or a size/validity check fails.
    """
    W, h, r, n = cfg.half_width, cfg.h, cfg.radius, cfg.segments
    if n < 8 or h <= 0 or r <= 0 or W <= 2 * r:
        raise GenerationFailure("config out of range")
    s0 = 2.0 * np.pi * r / n  # chord scale on the curve
    band = np.sqrt(3.0) / 2.0 * s0

    groups = []
    ang = 2.0 * np.pi * np.arange(n) / n
    groups.append(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
    ncurve = n

    def ring(rad, count, offset):
        a = 2.0 * np.pi * np.arange(count) / count + offset
        return np.column_stack([rad * np.cos(a), rad * np.sin(a)])

    # staggered collars pin the chords as Delaunay (Gabriel) edges
    groups.append(ring(r - band, n, np.pi / n))
    groups.append(ring(r + band, n, np.pi / n))

    # interior fill: constant spacing rings down to the center
    rad = r - band
    parity = 0
    while rad - band > 0.55 * band:
        rad -= band
        parity += 1
        count = 4 * max(1, int(round(np.pi * rad / (2.0 * s0))))
        groups.append(ring(rad, count, np.pi / n + (parity % 2) * np.pi / count))
    groups.append(np.zeros((1, 2)))

    # exterior: geometrically graded rings until the spacing reaches the far size
    far = 0.95 * h
    rad, s, parity = r + band, s0, 0
    while s < far:
        s = min(s * 1.28, far)
        rad += np.sqrt(3.0) / 2.0 * s
        parity += 1
        count = 4 * max(1, int(round(np.pi * rad / (2.0 * s))))
        groups.append(ring(rad, count, np.pi / n + (parity % 2) * np.pi / count))
    blend = rad + 0.62 * far

    side = 2 * int(np.ceil(W / far)) + 1
    axis = np.linspace(-W, W, side)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    grid = grid[np.hypot(grid[:, 0], grid[:, 1]) >= blend]
    groups.append(grid)

    points = np.concatenate(groups, axis=0)
    if rad >= W - 2.0 * far:
        raise GenerationFailure("graded rings reach the domain boundary")

    tri = Delaunay(points)
    if tri.coplanar.size > 0 or tri.points.shape[0] != points.shape[0]:
        raise GenerationFailure("triangulation dropped input points")
    cells = tri.simplices.astype(np.int64)
    d1 = points[cells[:, 1]] - points[cells[:, 0]]
    d2 = points[cells[:, 2]] - points[cells[:, 0]]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]

    mesh = build_mesh(points, cells)

    # the polygon chords must be present as edges
    lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(mesh.edges)}
    chord_edges = []
    for k in range(n):
        a, b = k, (k + 1) % n
        key = (min(a, b), max(a, b))
        if key not in lookup:
            raise GenerationFailure(f"polygon chord {key} is not a mesh edge")
        chord_edges.append(lookup[key])
    loop = chain_curve(mesh, chord_edges)

    diam = _max_cell_diameter(mesh)
    if diam > 2.0 * h:
        raise GenerationFailure(f"max cell diameter {diam:.3f} exceeds {2 * h}")
    return mesh, loop


def _max_cell_diameter(mesh: Mesh) -> float:
    p = mesh.vertices[mesh.cells]
    d = [p[:, i] - p[:, j] for i, j in ((0, 1), (1, 2), (2, 0))]
    return float(max(np.hypot(v[:, 0], v[:, 1]).max() for v in d))


def min_cell_angle(mesh: Mesh, coords=None) -> float:
    """Smallest interior angle over all cells, in degrees."""
    p = (mesh.vertices if coords is None else coords)[mesh.cells]
    worst = np.inf
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        na = np.hypot(a[:, 0], a[:, 1])
        nb = np.hypot(b[:, 0], b[:, 1])
        cosang = np.clip((a * b).sum(axis=1) / (na * nb), -1.0, 1.0)
        worst = min(worst, np.degrees(np.arccos(cosang)).min())
    return float(worst)


# --- deformation --------------------------------------------------------


def deformation_gradient(mesh: Mesh, coords_t: np.ndarray, cell: int) -> np.ndarray:
    """F = E_t E_0^{-1} for one cell (template -> current edge matrices)."""
    tri = mesh.cells[cell]
    E0 = np.column_stack(
        [mesh.vertices[tri[1]] - mesh.vertices[tri[0]], mesh.vertices[tri[2]] - mesh.vertices[tri[0]]]
    )
    Et = np.column_stack([coords_t[tri[1]] - coords_t[tri[0]], coords_t[tri[2]] - coords_t[tri[0]]])
    det = E0[0, 0] * E0[1, 1] - E0[0, 1] * E0[1, 0]
    scale = max(np.abs(E0).max(), 1.0e-300) ** 2
    if abs(det) < 1.0e-14 * scale:
        raise SingularCell(f"template cell {cell} degenerate (det {det:.3e})")
    E0inv = np.array([[E0[1, 1], -E0[0, 1]], [-E0[1, 0], E0[0, 0]]]) / det
    return Et @ E0inv


def displace(mesh: Mesh, coords: np.ndarray, velocity: np.ndarray, dt: float) -> np.ndarray:
    """Move vertices by dt * velocity; reject configurations with inverted cells.

    Boundary vertices must not move (velocity is clamped there upstream).
    """
    if velocity.shape != coords.shape:
        raise TangledMesh(f"velocity shape {velocity.shape} does not match coordinates")
    vb = velocity[mesh.vertex_on_boundary]
    if vb.size and np.abs(vb).max() > 1.0e-12:
        raise TangledMesh("boundary vertices must have zero velocity")
    new = coords + dt * velocity
    p = new[mesh.cells]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if (det <= 0).any():
        raise TangledMesh(f"{int((det <= 0).sum())} cells inverted by displacement")
    return new


# --- snapshots ------------------------------------------------------------


def write_mesh_snapshot(out_dir: str, mesh: Mesh, loop: CurveLoop, coords=None, prefix: str = "mesh") -> None:
    """Write <prefix>_vertices.csv, <prefix>_cells.csv and <prefix>.json."""
    coords = mesh.vertices if coords is None else coords
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"{prefix}_vertices.csv"), "w") as fh:
        fh.write("id,x,y\n")
        for i, (x, y) in enumerate(coords):
            fh.write(f"{i},{float(x)!r},{float(y)!r}\n")
    with open(os.path.join(out_dir, f"{prefix}_cells.csv"), "w") as fh:
        fh.write("id,v0,v1,v2\n")
        for i, (a, b, c) in enumerate(mesh.cells):
            fh.write(f"{i},{a},{b},{c}\n")
    header = {
        "vertex_count": int(mesh.num_vertices),
        "cell_count": int(mesh.num_cells),
        "edge_count": int(mesh.num_edges),
        "curve_facets": [
            [int(loop.vertex_ids[i]), int(loop.vertex_ids[(i + 1) % loop.num_facets])]
            for i in range(loop.num_facets)
        ],
    }
    with open(os.path.join(out_dir, f"{prefix}.json"), "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_mesh_snapshot(out_dir: str, prefix: str = "mesh"):
    """Rebuild (Mesh, CurveLoop) from a snapshot directory."""
    verts = np.loadtxt(os.path.join(out_dir, f"{prefix}_vertices.csv"), delimiter=",", skiprows=1)
    cells = np.loadtxt(
        os.path.join(out_dir, f"{prefix}_cells.csv"), delimiter=",", skiprows=1, dtype=np.int64
    )
    with open(os.path.join(out_dir, f"{prefix}.json")) as fh:
        header = json.load(fh)
    mesh = build_mesh(verts[:, 1:3], cells[:, 1:4])
    lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(mesh.edges)}
    edge_ids = [lookup[(min(a, b), max(a, b))] for a, b in header["curve_facets"]]
    return mesh, chain_curve(mesh, edge_ids)


# --- MSH 2.2 loader -------------------------------------------------------


def load_msh(path: str):
    """Load a text MSH 2.2 mesh: line elements mark the curve, triangles the domain."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    sections: dict[str, list[str]] = {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.startswith("$") and not ln.startswith("$End"):
            name = ln[1:]
            j = i + 1
            while j < len(lines) and lines[j] != f"$End{name}":
                j += 1
            if j == len(lines):
                raise ParseError(f"section {name} not terminated")
            sections[name] = lines[i + 1 : j]
            i = j + 1
        elif ln == "":
            i += 1
        else:
            raise ParseError(f"unexpected content outside sections: {ln!r}")

    if "MeshFormat" not in sections or not sections["MeshFormat"]:
        raise ParseError("missing MeshFormat section")
    fmt = sections["MeshFormat"][0].split()
    if len(fmt) < 3 or not fmt[0].startswith("2.2") or fmt[1] != "0":
        raise ParseError(f"unsupported mesh format {sections['MeshFormat'][0]!r}")
    if "Nodes" not in sections or "Elements" not in sections:
        raise ParseError("missing Nodes or Elements section")

    try:
        nn = int(sections["Nodes"][0])
        node_rows = [ln.split() for ln in sections["Nodes"][1 : 1 + nn]]
        if len(node_rows) != nn:
            raise ParseError("node count mismatch")
        ids = [int(r[0]) for r in node_rows]
        coords = np.array([[float(r[1]), float(r[2])] for r in node_rows])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad node data: {exc}") from exc
    remap = {nid: k for k, nid in enumerate(ids)}
    if len(remap) != nn:
        raise ParseError("duplicate node ids")

    tris, segs = [], []
    try:
        ne = int(sections["Elements"][0])
        rows = sections["Elements"][1 : 1 + ne]
        if len(rows) != ne:
            raise ParseError("element count mismatch")
        for ln in rows:
            parts = [int(tok) for tok in ln.split()]
            etype, ntags = parts[1], parts[2]
            conn = parts[3 + ntags :]
            if etype == 1:
                if len(conn) != 2:
                    raise ParseError("line element needs 2 nodes")
                segs.append([remap[conn[0]], remap[conn[1]]])
            elif etype == 2:
                if len(conn) != 3:
                    raise ParseError("triangle element needs 3 nodes")
                tris.append([remap[c] for c in conn])
            else:
                raise ParseError(f"unsupported element type {etype}")
    except (ValueError, IndexError, KeyError) as exc:
        raise ParseError(f"bad element data: {exc}") from exc
    if not tris:
        raise ParseError("no triangles in mesh")
    if not segs:
        raise ParseError("no curve facets in mesh")

    cells = np.array(tris, dtype=np.int64)
    d1 = coords[cells[:, 1]] - coords[cells[:, 0]]
    d2 = coords[cells[:, 2]] - coords[cells[:, 0]]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]
    mesh = build_mesh(coords, cells)

    lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(mesh.edges)}
    edge_ids = set()
    for a, b in segs:
        key = (min(a, b), max(a, b))
        if key not in lookup:
            raise ParseError(f"curve segment {key} is not an edge of any triangle")
        edge_ids.add(lookup[key])
    return mesh, chain_curve(mesh, edge_ids)
