"""STL parsing, vertex welding, edge adjacency and manifold validation.

Vertex identity is bitwise coordinate equality: STL repeats exact coordinates
per facet, so no tolerance welding is needed and none is done.  Facet normals
are always re-derived from the vertex winding (right-hand rule); the normal
stored in the file is only compared against for diagnostics.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFileError, NonManifoldError, StlParseError, TruncatedFileError

BINARY_HEADER_LEN = 80
BINARY_RECORD_LEN = 50

_RECORD_DTYPE = np.dtype([("data", "<f4", (12,)), ("attr", "<u2")])

# cosine defect beyond which a stored normal counts as disagreeing with the
# winding-derived one
NORMAL_MISMATCH_COS = 1e-6


@dataclass(frozen=True)
class TriangleMesh:
    """Welded, indexed triangle mesh.

    Immutable once built; all arrays are marked read-only so a mesh can be
    shared freely across threads.

    Attributes
    ----------
    vertices : (V, 3) float64
        Welded vertex table.
    facets : (F, 3) int32
        Vertex ids per facet, original winding preserved.
    normals : (F, 3) float64
        Unit normals re-derived from winding.
    edges : (E, 2) int32
        Canonical undirected edges; the endpoint whose position is
        lexicographically smaller comes first.
    edge_facets : (E, 2) int32
        Adjacent facet ids per edge, lowest facet first, -1 when absent.
    facet_edges : (F, 3) int32
        Edge id for traversal slots V0->V1, V1->V2, V2->V0.
    facet_edge_dir : (F, 3) int8
        +1 where the canonical edge direction matches the facet traversal,
        -1 where it is reversed.
    """

    vertices: np.ndarray
    facets: np.ndarray
    normals: np.ndarray
    edges: np.ndarray
    edge_facets: np.ndarray
    facet_edges: np.ndarray
    facet_edge_dir: np.ndarray
    edge_facet_count: np.ndarray
    edge_dir_sum: np.ndarray
    degenerate_count: int = 0
    normal_mismatch_count: int = 0

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def facet_count(self) -> int:
        return len(self.facets)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def axis_distances(self) -> np.ndarray:
        """Distance of every vertex from the x-axis, d(V) = sqrt(y^2 + z^2)."""
        y = self.vertices[:, 1]
        z = self.vertices[:, 2]
        return np.sqrt(y * y + z * z)

    def to_raw_facets(self) -> np.ndarray:
        """Back to the raw per-facet (normal + 9 coords) float32 layout."""
        out = np.empty((self.facet_count, 12), dtype=np.float32)
        out[:, 0:3] = self.normals.astype(np.float32)
        out[:, 3:12] = self.vertices[self.facets].reshape(-1, 9).astype(np.float32)
        return out


@dataclass
class ManifoldReport:
    """Result of 2-manifold validation."""

    is_manifold: bool
    boundary_edges: list = field(default_factory=list)
    overshared_edges: list = field(default_factory=list)
    misoriented_edges: list = field(default_factory=list)

    def offending_edges(self) -> list:
        return sorted(set(self.boundary_edges) | set(self.overshared_edges) | set(self.misoriented_edges))

    def summary(self) -> str:
        if self.is_manifold:
            return "manifold"
        parts = []
        if self.boundary_edges:
            parts.append(f"{len(self.boundary_edges)} boundary edge(s)")
        if self.overshared_edges:
            parts.append(f"{len(self.overshared_edges)} edge(s) with >2 facets")
        if self.misoriented_edges:
            parts.append(f"{len(self.misoriented_edges)} inconsistently oriented edge(s)")
        return "non-manifold: " + ", ".join(parts)


def detect_format(data: bytes) -> str:
    """Classify raw STL bytes as ``"binary"`` or ``"ascii"``.

    A file is ASCII only if it starts with the token ``solid`` and actually
    parses as ASCII STL; the binary record-length equation wins ties, since
    binary files may legally start with "solid" in their header.
    """
    if not data:
        raise EmptyFileError("empty STL file")
    if len(data) >= BINARY_HEADER_LEN + 4:
        (count,) = struct.unpack_from("<I", data, BINARY_HEADER_LEN)
        if len(data) == BINARY_HEADER_LEN + 4 + BINARY_RECORD_LEN * count:
            return "binary"
    if data.lstrip()[:5] == b"solid":
        try:
            _parse_ascii(data)
        except StlParseError:
            return "binary"
        return "ascii"
    return "binary"


def parse_stl(data: bytes, fmt: str | None = None) -> np.ndarray:
    """Parse STL bytes into raw facets, one row of 12 float32 per facet:
    nx ny nz, then the three vertices."""
    if fmt is None:
        fmt = detect_format(data)
    if fmt == "binary":
        return _parse_binary(data)
    return _parse_ascii(data)


def _parse_binary(data: bytes) -> np.ndarray:
    if len(data) < BINARY_HEADER_LEN + 4:
        raise TruncatedFileError(
            f"binary STL needs at least {BINARY_HEADER_LEN + 4} bytes, got {len(data)}"
        )
    (count,) = struct.unpack_from("<I", data, BINARY_HEADER_LEN)
    expected = BINARY_HEADER_LEN + 4 + BINARY_RECORD_LEN * count
    if len(data) != expected:
        raise TruncatedFileError(
            f"binary STL declares {count} facet(s), expected {expected} bytes, got {len(data)}"
        )
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, count=count, offset=BINARY_HEADER_LEN + 4)
    # attribute bytes are read and discarded
    return records["data"].copy()


def _parse_ascii(data: bytes) -> np.ndarray:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise StlParseError(f"not ASCII text: {exc}") from None

    lines = text.splitlines()
    pos = 0

    def next_line() -> tuple[int, str]:
        nonlocal pos
        while pos < len(lines):
            stripped = lines[pos].strip()
            pos += 1
            if stripped:
                return pos, stripped
        raise StlParseError("unexpected end of ASCII STL")

    def take_floats(lineno: int, tokens: list[str], n: int) -> list[float]:
        if len(tokens) != n:
            raise StlParseError(f"line {lineno}: expected {n} numbers, got {len(tokens)}")
        try:
            return [float(t) for t in tokens]
        except ValueError as exc:
            raise StlParseError(f"line {lineno}: {exc}") from None

    lineno, line = next_line()
    if line.split(None, 1)[0].lower() != "solid":
        raise StlParseError(f"line {lineno}: expected 'solid'")

    rows = []
    while True:
        lineno, line = next_line()
        words = line.split()
        keyword = words[0].lower()
        if keyword == "endsolid":
            break
        if keyword != "facet" or len(words) < 2 or words[1].lower() != "normal":
            raise StlParseError(f"line {lineno}: expected 'facet normal' or 'endsolid'")
        normal = take_floats(lineno, words[2:], 3)

        lineno, line = next_line()
        if line.lower() != "outer loop":
            raise StlParseError(f"line {lineno}: expected 'outer loop'")

        verts = []
        for _ in range(3):
            lineno, line = next_line()
            words = line.split()
            if words[0].lower() != "vertex":
                raise StlParseError(f"line {lineno}: expected 'vertex'")
            verts.extend(take_floats(lineno, words[1:], 3))

        lineno, line = next_line()
        if line.lower() != "endloop":
            raise StlParseError(f"line {lineno}: expected 'endloop'")
        lineno, line = next_line()
        if line.lower() != "endfacet":
            raise StlParseError(f"line {lineno}: expected 'endfacet'")

        rows.append(normal + verts)

    while pos < len(lines):
        if lines[pos].strip():
            raise StlParseError(f"line {pos + 1}: content after 'endsolid'")
        pos += 1

    return np.array(rows, dtype=np.float32).reshape(len(rows), 12)


def _lex_swap(a_pos: np.ndarray, b_pos: np.ndarray, a_id: np.ndarray, b_id: np.ndarray) -> np.ndarray:
    """True where (b_pos, b_id) sorts strictly before (a_pos, a_id).

    Vertex id is the tie-break: distinct welded vertices can compare equal by
    value (0.0 vs -0.0) while being bitwise distinct.
    """
    lt = b_pos[:, 0] < a_pos[:, 0]
    eq = b_pos[:, 0] == a_pos[:, 0]
    for k in (1, 2):
        lt = lt | (eq & (b_pos[:, k] < a_pos[:, k]))
        eq = eq & (b_pos[:, k] == a_pos[:, k])
    return lt | (eq & (b_id < a_id))


def build_edge_tables(vertices: np.ndarray, facets: np.ndarray):
    """Canonical undirected edge table plus per-facet edge references."""
    nf = len(facets)
    nv = len(vertices)
    ia = facets[:, [0, 1, 2]].ravel().astype(np.int64)
    ib = facets[:, [1, 2, 0]].ravel().astype(np.int64)
    swap = _lex_swap(vertices[ia], vertices[ib], ia, ib)
    lo = np.where(swap, ib, ia)
    hi = np.where(swap, ia, ib)
    keys = lo * nv + hi
    uniq, edge_idx = np.unique(keys, return_inverse=True)
    n_edges = len(uniq)

    edges = np.empty((n_edges, 2), dtype=np.int32)
    edges[:, 0] = uniq // nv
    edges[:, 1] = uniq % nv

    facet_edges = edge_idx.reshape(nf, 3).astype(np.int32)
    dirs = np.where(swap, -1, 1).astype(np.int8).reshape(nf, 3)

    counts = np.bincount(edge_idx, minlength=n_edges).astype(np.int32)
    dir_sum = np.bincount(edge_idx, weights=dirs.ravel().astype(np.float64), minlength=n_edges)
    dir_sum = dir_sum.astype(np.int32)

    edge_facets = np.full((n_edges, 2), -1, dtype=np.int32)
    order = np.argsort(edge_idx, kind="stable")
    sorted_eids = edge_idx[order]
    sorted_fids = (order // 3).astype(np.int32)
    first_occ = np.searchsorted(sorted_eids, np.arange(n_edges))
    ranks = np.arange(len(order)) - first_occ[sorted_eids]
    in_range = ranks < 2
    edge_facets[sorted_eids[in_range], ranks[in_range]] = sorted_fids[in_range]

    return edges, edge_facets, facet_edges, dirs, counts, dir_sum


def _freeze(mesh: TriangleMesh) -> TriangleMesh:
    for name in (
        "vertices",
        "facets",
        "normals",
        "edges",
        "edge_facets",
        "facet_edges",
        "facet_edge_dir",
        "edge_facet_count",
        "edge_dir_sum",
    ):
        getattr(mesh, name).flags.writeable = False
    return mesh


def weld_and_index(raw_facets: np.ndarray) -> TriangleMesh:
    """Weld bitwise-identical vertices and build the indexed mesh.

    Zero-area facets (identical or exactly collinear vertices) are dropped and
    counted.  Normals are re-derived from winding; the count of stored normals
    that disagree with the derivation beyond ``NORMAL_MISMATCH_COS`` is kept
    for diagnostics.
    """
    raw_facets = np.asarray(raw_facets, dtype=np.float32).reshape(-1, 12)
    nf_raw = len(raw_facets)
    coords = raw_facets[:, 3:12].reshape(-1, 3)
    bits = coords.view(np.int32)
    uniq_bits, inverse = np.unique(bits, axis=0, return_inverse=True)
    vertices = uniq_bits.view(np.float32).astype(np.float64)
    facets = inverse.reshape(nf_raw, 3).astype(np.int32)

    p0 = vertices[facets[:, 0]]
    p1 = vertices[facets[:, 1]]
    p2 = vertices[facets[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    cross_norm = np.sqrt(np.sum(cross * cross, axis=1))
    distinct = (
        (facets[:, 0] != facets[:, 1])
        & (facets[:, 1] != facets[:, 2])
        & (facets[:, 2] != facets[:, 0])
    )
    keep = distinct & (cross_norm != 0.0)
    degenerate = int(nf_raw - np.count_nonzero(keep))

    facets = facets[keep]
    cross = cross[keep]
    cross_norm = cross_norm[keep]
    normals = cross / cross_norm[:, None]

    stored = raw_facets[keep, 0:3].astype(np.float64)
    stored_norm = np.sqrt(np.sum(stored * stored, axis=1))
    ok = stored_norm > 0.0
    cosine = np.ones(len(facets))
    cosine[ok] = np.sum(stored[ok] * normals[ok], axis=1) / stored_norm[ok]
    mismatches = int(np.count_nonzero(cosine < 1.0 - NORMAL_MISMATCH_COS))

    edges, edge_facets, facet_edges, dirs, counts, dir_sum = build_edge_tables(vertices, facets)
    return _freeze(
        TriangleMesh(
            vertices=vertices,
            facets=facets,
            normals=normals,
            edges=edges,
            edge_facets=edge_facets,
            facet_edges=facet_edges,
            facet_edge_dir=dirs,
            edge_facet_count=counts,
            edge_dir_sum=dir_sum,
            degenerate_count=degenerate,
            normal_mismatch_count=mismatches,
        )
    )


def from_vertices_facets(vertices: np.ndarray, facets: np.ndarray) -> TriangleMesh:
    """Build a mesh from an already-shared vertex table (generator path).

    The table is deduplicated bitwise like :func:`weld_and_index`, zero-area
    facets are dropped, and normals come from winding.
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    facets = np.asarray(facets, dtype=np.int64)
    bits = vertices.view(np.int64)
    uniq_bits, inverse = np.unique(bits, axis=0, return_inverse=True)
    vertices = uniq_bits.view(np.float64)
    facets = inverse[facets].astype(np.int32)

    p0 = vertices[facets[:, 0]]
    p1 = vertices[facets[:, 1]]
    p2 = vertices[facets[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    cross_norm = np.sqrt(np.sum(cross * cross, axis=1))
    distinct = (
        (facets[:, 0] != facets[:, 1])
        & (facets[:, 1] != facets[:, 2])
        & (facets[:, 2] != facets[:, 0])
    )
    keep = distinct & (cross_norm != 0.0)
    degenerate = int(len(facets) - np.count_nonzero(keep))
    facets = facets[keep]
    normals = cross[keep] / cross_norm[keep][:, None]

    edges, edge_facets, facet_edges, dirs, counts, dir_sum = build_edge_tables(vertices, facets)
    return _freeze(
        TriangleMesh(
            vertices=vertices,
            facets=facets,
            normals=normals,
            edges=edges,
            edge_facets=edge_facets,
            facet_edges=facet_edges,
            facet_edge_dir=dirs,
            edge_facet_count=counts,
            edge_dir_sum=dir_sum,
            degenerate_count=degenerate,
            normal_mismatch_count=0,
        )
    )


def validate_manifold(mesh: TriangleMesh) -> ManifoldReport:
    """Check the closed-orientable-2-manifold assumptions.

    Passes iff every edge has exactly 2 adjacent facets and the two facets
    traverse it in opposite directions.
    """
    counts = mesh.edge_facet_count
    boundary = np.flatnonzero(counts < 2)
    overshared = np.flatnonzero(counts > 2)
    two = counts == 2
    misoriented = np.flatnonzero(two & (mesh.edge_dir_sum != 0))
    ok = len(boundary) == 0 and len(overshared) == 0 and len(misoriented) == 0
    return ManifoldReport(
        is_manifold=ok,
        boundary_edges=boundary.tolist(),
        overshared_edges=overshared.tolist(),
        misoriented_edges=misoriented.tolist(),
    )


def require_manifold(mesh: TriangleMesh, force: bool = False) -> ManifoldReport:
    report = validate_manifold(mesh)
    if not report.is_manifold and not force:
        raise NonManifoldError(report.summary(), report=report)
    return report


def load_stl(path) -> TriangleMesh:
    """Read, parse and weld an STL file."""
    with open(path, "rb") as fh:
        data = fh.read()
    return weld_and_index(parse_stl(data))


def serialize_binary_stl(mesh: TriangleMesh, header: bytes = b"") -> bytes:
    """Serialize to binary STL (coordinates truncated to float32)."""
    raw = mesh.to_raw_facets()
    head = header[:BINARY_HEADER_LEN].ljust(BINARY_HEADER_LEN, b"\0")
    records = np.zeros(len(raw), dtype=_RECORD_DTYPE)
    records["data"] = raw
    return head + struct.pack("<I", len(raw)) + records.tobytes()


def save_binary_stl(mesh: TriangleMesh, path, header: bytes = b"") -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_binary_stl(mesh, header))
