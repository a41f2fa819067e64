"""Pure-Python slicing kernel.

Reference implementation of the per-layer hot path: edge/cylinder quadratics,
perimeter walks, relevant-segment extraction and facet radial ranges.  The
compiled kernel in ``_speedups`` mirrors this arithmetic expression by
expression; floating-point outputs of the two backends are bit-identical
(the extension is built with FP contraction disabled).
"""

from __future__ import annotations

import math
from collections import namedtuple

import numpy as np

from .errors import ArcOracleError

# Relative discriminant tolerance: below disc < DISC_TOL * B^2 a root pair
# counts as a grazing double root and produces no crossings.
DISC_TOL = 1e-12
# Barycentric slack for the arc-inside-facet check.
BARY_TOL = 1e-9
# |n_x| below AXIS_PARALLEL_TOL * |n| means the facet plane is parallel to
# the x-axis and the intersection curve degenerates to straight lines.
AXIS_PARALLEL_TOL = 1e-12

PerimeterEntry = namedtuple("PerimeterEntry", ["is_crossing", "position", "t", "ref"])
SegmentHit = namedtuple("SegmentHit", ["a", "b", "long_arc"])


def edge_roots(x0, y0, z0, x1, y1, z1, r):
    """Roots of the edge/cylinder quadratic, filtered to strict 0 < t < 1.

    Returns a tuple of up to two ``(t, x, y, z)`` entries sorted by t.
    Grazing contact (double root within tolerance) and yz-degenerate edges
    produce no entries.
    """
    v = y1 - y0
    w = z1 - z0
    a = v * v + w * w
    if a == 0.0:
        return ()
    b = 2.0 * (y0 * v + z0 * w)
    c = y0 * y0 + z0 * z0 - r * r
    disc = b * b - 4.0 * a * c
    if disc < DISC_TOL * (b * b):
        return ()
    s = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(s, b))
    if q == 0.0:
        return ()
    t1 = q / a
    t2 = c / q
    if t2 < t1:
        t1, t2 = t2, t1
    out = []
    for t in (t1, t2):
        if 0.0 < t < 1.0:
            out.append((t, x0 + t * (x1 - x0), y0 + t * v, z0 + t * w))
    return tuple(out)


def edge_cylinder_intersections(p0, p1, r_s):
    """Transversal crossings of the segment p0->p1 with the cylinder of
    radius ``r_s`` about the x-axis, as ``(t, point)`` pairs sorted by t."""
    x0, y0, z0 = (float(p0[0]), float(p0[1]), float(p0[2]))
    x1, y1, z1 = (float(p1[0]), float(p1[1]), float(p1[2]))
    return [
        (t, np.array([x, y, z]))
        for t, x, y, z in edge_roots(x0, y0, z0, x1, y1, z1, float(r_s))
    ]


def edge_min_distance(p0, p1):
    """Closest approach of the segment p0->p1 to the x-axis.

    Returns ``(t_star, point, distance)``.  ``t_star`` is the unconstrained
    minimizer of d(t) (0.0 for yz-degenerate edges); when it falls outside
    (0, 1) the returned point and distance belong to the nearer endpoint.
    """
    x0, y0, z0 = (float(p0[0]), float(p0[1]), float(p0[2]))
    x1, y1, z1 = (float(p1[0]), float(p1[1]), float(p1[2]))
    v = y1 - y0
    w = z1 - z0
    den = v * v + w * w
    d0 = math.sqrt(y0 * y0 + z0 * z0)
    if den == 0.0:
        return 0.0, np.array([x0, y0, z0]), d0
    t = -(v * y0 + w * z0) / den
    if 0.0 < t < 1.0:
        px = x0 + t * (x1 - x0)
        py = y0 + t * v
        pz = z0 + t * w
        return t, np.array([px, py, pz]), math.sqrt(py * py + pz * pz)
    d1 = math.sqrt(y1 * y1 + z1 * z1)
    if d0 <= d1:
        return t, np.array([x0, y0, z0]), d0
    return t, np.array([x1, y1, z1]), d1


def _min_seg_dist(x0, y0, z0, x1, y1, z1):
    """Scalar min distance of a segment to the x-axis (fused-loop core)."""
    v = y1 - y0
    w = z1 - z0
    den = v * v + w * w
    d0 = math.sqrt(y0 * y0 + z0 * z0)
    if den == 0.0:
        return d0
    t = -(v * y0 + w * z0) / den
    if 0.0 < t < 1.0:
        py = y0 + t * v
        pz = z0 + t * w
        return math.sqrt(py * py + pz * pz)
    d1 = math.sqrt(y1 * y1 + z1 * z1)
    return d0 if d0 <= d1 else d1


def facet_ranges_impl(vertices, facets):
    """Per-facet radial range and axis-crossing flag.

    Returns ``(d_pmin, d_vmax, axis_crossing)`` where d_pmin is the minimum
    over the three edges of the closest approach to the x-axis, d_vmax the
    maximum vertex distance, and axis_crossing marks facets whose
    yz-projection contains the origin.
    """
    verts = vertices.tolist()
    fac = facets.tolist()
    n = len(fac)
    d_pmin = np.empty(n)
    d_vmax = np.empty(n)
    axis_cross = np.zeros(n, dtype=bool)
    for f in range(n):
        i0, i1, i2 = fac[f]
        x0, y0, z0 = verts[i0]
        x1, y1, z1 = verts[i1]
        x2, y2, z2 = verts[i2]
        dv0 = math.sqrt(y0 * y0 + z0 * z0)
        dv1 = math.sqrt(y1 * y1 + z1 * z1)
        dv2 = math.sqrt(y2 * y2 + z2 * z2)
        d_vmax[f] = max(dv0, dv1, dv2)
        e01 = _min_seg_dist(x0, y0, z0, x1, y1, z1)
        e12 = _min_seg_dist(x1, y1, z1, x2, y2, z2)
        e20 = _min_seg_dist(x2, y2, z2, x0, y0, z0)
        d_pmin[f] = min(e01, e12, e20)
        s0 = y0 * z1 - y1 * z0
        s1 = y1 * z2 - y2 * z1
        s2 = y2 * z0 - y0 * z2
        if (s0 >= 0.0 and s1 >= 0.0 and s2 >= 0.0) or (
            s0 <= 0.0 and s1 <= 0.0 and s2 <= 0.0
        ):
            axis_cross[f] = True
    return d_pmin, d_vmax, axis_cross


def facet_perimeter_list(facet_vertices, edge_crossings, edge_dirs=(1, 1, 1)):
    """Ordered cyclic perimeter of a facet: vertices interleaved with edge
    crossings.

    ``edge_crossings[k]`` holds the canonical-edge crossings for traversal
    slot k (V0->V1, V1->V2, V2->V0) as ``(t, point)`` sorted by canonical t;
    ``edge_dirs[k]`` is +1 when the canonical direction matches traversal.
    Crossing entries carry ``ref=(slot, root_index)`` and t re-expressed in
    traversal direction.
    """
    entries = []
    for k in range(3):
        pos = np.asarray(facet_vertices[k], dtype=np.float64)
        entries.append(PerimeterEntry(False, pos, None, k))
        crossings = edge_crossings[k]
        order = range(len(crossings)) if edge_dirs[k] > 0 else range(len(crossings) - 1, -1, -1)
        for root_idx in order:
            t, point = crossings[root_idx]
            t_trav = t if edge_dirs[k] > 0 else 1.0 - t
            entries.append(PerimeterEntry(True, np.asarray(point), t_trav, (k, root_idx)))
    return entries


def _wrap_angle(d):
    if d > math.pi:
        return d - 2.0 * math.pi
    if d <= -math.pi:
        return d + 2.0 * math.pi
    return d


def _barycentric_inside(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    v0x, v0y, v0z = bx - ax, by - ay, bz - az
    v1x, v1y, v1z = cx - ax, cy - ay, cz - az
    v2x, v2y, v2z = px - ax, py - ay, pz - az
    d00 = v0x * v0x + v0y * v0y + v0z * v0z
    d01 = v0x * v1x + v0y * v1y + v0z * v1z
    d11 = v1x * v1x + v1y * v1y + v1z * v1z
    d20 = v2x * v0x + v2y * v0y + v2z * v0z
    d21 = v2x * v1x + v2y * v1y + v2z * v1z
    den = d00 * d11 - d01 * d01
    if den == 0.0:
        return False
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    u = 1.0 - v - w
    return u >= -BARY_TOL and v >= -BARY_TOL and w >= -BARY_TOL


def _arc_midpoint_inside(fv, p, q, r_s):
    """Check that the facet-plane/cylinder arc between p and q passes inside
    the facet.

    Returns ``(inside, long_arc)``: long_arc is set when only the major
    (wrapped-the-long-way) arc lies inside.
    """
    ax, ay, az = fv[0]
    bx, by, bz = fv[1]
    cx, cy, cz = fv[2]
    nx = (by - ay) * (cz - az) - (bz - az) * (cy - ay)
    ny = (bz - az) * (cx - ax) - (bx - ax) * (cz - az)
    nz = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    alpha_p = math.atan2(p[2], p[1])
    alpha_q = math.atan2(q[2], q[1])
    dalpha = _wrap_angle(alpha_q - alpha_p)

    if abs(nx) <= AXIS_PARALLEL_TOL * nn:
        # plane parallel to the axis: the curve branches are straight lines;
        # endpoints must share a branch
        if abs(dalpha) > 1e-9:
            return False, False
        mx = 0.5 * (p[0] + q[0])
        my = 0.5 * (p[1] + q[1])
        mz = 0.5 * (p[2] + q[2])
        return (
            _barycentric_inside(ax, ay, az, bx, by, bz, cx, cy, cz, mx, my, mz),
            False,
        )

    plane_c = nx * ax + ny * ay + nz * az
    for offset, long_arc in ((0.0, False), (math.pi, True)):
        alpha = alpha_p + 0.5 * dalpha + offset
        my = r_s * math.cos(alpha)
        mz = r_s * math.sin(alpha)
        mx = (plane_c - ny * my - nz * mz) / nx
        if _barycentric_inside(ax, ay, az, bx, by, bz, cx, cy, cz, mx, my, mz):
            return True, long_arc
    return False, False


def facet_relevant_segments(facet_vertices, perimeter, r_s, check_arc=True):
    """Extract the relevant crossing pairs from a facet perimeter.

    Walks the cyclic perimeter; each pair of crossings bounding a stretch
    whose midpoints lie at or beyond the cylinder radius (the slicing arc
    between them passes inside the facet) yields one segment.  Raises
    :class:`ArcOracleError` when an emitted pair fails the arc-inside-facet
    check.
    """
    m = len(perimeter)
    cross_idx = [i for i in range(m) if perimeter[i].is_crossing]
    nc = len(cross_idx)
    if nc == 0:
        return []
    if nc % 2 != 0:
        raise ArcOracleError(f"odd crossing count {nc} on a facet perimeter")

    r2 = r_s * r_s
    outside = []
    for i in range(m):
        pa = perimeter[i].position
        pb = perimeter[(i + 1) % m].position
        my = 0.5 * (float(pa[1]) + float(pb[1]))
        mz = 0.5 * (float(pa[2]) + float(pb[2]))
        outside.append(my * my + mz * mz >= r2)

    verts = [e.position for e in perimeter if not e.is_crossing]
    fv = [(float(p[0]), float(p[1]), float(p[2])) for p in verts]

    hits = []
    for j in range(nc):
        i1 = cross_idx[j]
        i2 = cross_idx[(j + 1) % nc]
        if not outside[i1]:
            continue
        ea = perimeter[i1]
        eb = perimeter[i2]
        long_arc = False
        if check_arc:
            pa = (float(ea.position[0]), float(ea.position[1]), float(ea.position[2]))
            pb = (float(eb.position[0]), float(eb.position[1]), float(eb.position[2]))
            inside, long_arc = _arc_midpoint_inside(fv, pa, pb, r_s)
            if not inside:
                raise ArcOracleError(
                    "emitted segment's on-cylinder midpoint lies outside its facet"
                )
        hits.append(SegmentHit(ea, eb, long_arc))
    return hits


def slice_layer_impl(
    vertices,
    edges,
    facets,
    facet_edges,
    facet_edge_dir,
    active,
    r_s,
    check_arcs=True,
):
    """Slice one layer: intersections and relevant segments over the given
    facets.

    Canonical-edge crossings are computed once per edge (memoized for the
    layer) so adjacent facets share bitwise-identical intersection points.

    Returns a dict with the layer point table (edge id, root index, t,
    coordinates), the segment table (facet id + two point-row indices),
    interior-pass candidate facets, and a long-arc counter.
    """
    verts = vertices.tolist()
    edge_list = edges.tolist()
    fac = facets.tolist()
    fedges = facet_edges.tolist()
    fdirs = facet_edge_dir.tolist()
    r = float(r_s)
    r2 = r * r

    memo: dict[int, tuple] = {}
    pt_edge: list[int] = []
    pt_root: list[int] = []
    pt_t: list[float] = []
    pt_xyz: list[tuple] = []
    seg_facet: list[int] = []
    seg_a: list[int] = []
    seg_b: list[int] = []
    interior_candidates: list[int] = []
    long_arc_count = 0

    def edge_rows(e):
        got = memo.get(e)
        if got is None:
            i, j = edge_list[e]
            x0, y0, z0 = verts[i]
            x1, y1, z1 = verts[j]
            roots = edge_roots(x0, y0, z0, x1, y1, z1, r)
            rows = []
            for root_idx, (t, x, y, z) in enumerate(roots):
                rows.append((t, len(pt_edge)))
                pt_edge.append(e)
                pt_root.append(root_idx)
                pt_t.append(t)
                pt_xyz.append((x, y, z))
            got = tuple(rows)
            memo[e] = got
        return got

    for f in active:
        f = int(f)
        i0, i1, i2 = fac[f]
        fv = (verts[i0], verts[i1], verts[i2])
        slot_rows = []
        ncross = 0
        for k in range(3):
            rows = edge_rows(fedges[f][k])
            slot_rows.append(rows)
            ncross += len(rows)

        if ncross == 0:
            x0, y0, z0 = fv[0]
            x1, y1, z1 = fv[1]
            x2, y2, z2 = fv[2]
            dmin2 = min(
                y0 * y0 + z0 * z0, y1 * y1 + z1 * z1, y2 * y2 + z2 * z2
            )
            if dmin2 > r2:
                interior_candidates.append(f)
            continue

        # perimeter: vertex, then slot crossings in traversal order
        entries = []  # (is_crossing, x, y, z, row)
        for k in range(3):
            x, y, z = fv[k]
            entries.append((False, x, y, z, -1))
            rows = slot_rows[k]
            if fdirs[f][k] > 0:
                ordered = rows
            else:
                ordered = rows[::-1]
            for _t, row in ordered:
                px, py, pz = pt_xyz[row]
                entries.append((True, px, py, pz, row))

        m = len(entries)
        cross_idx = [i for i in range(m) if entries[i][0]]
        nc = len(cross_idx)
        if nc % 2 != 0:
            raise ArcOracleError(f"odd crossing count {nc} on facet {f}")

        outside = []
        for i in range(m):
            ea = entries[i]
            eb = entries[(i + 1) % m]
            my = 0.5 * (ea[2] + eb[2])
            mz = 0.5 * (ea[3] + eb[3])
            outside.append(my * my + mz * mz >= r2)

        for j in range(nc):
            i1_ = cross_idx[j]
            i2_ = cross_idx[(j + 1) % nc]
            if not outside[i1_]:
                continue
            ra = entries[i1_][4]
            rb = entries[i2_][4]
            if check_arcs:
                inside, long_arc = _arc_midpoint_inside(
                    fv, pt_xyz[ra], pt_xyz[rb], r
                )
                if not inside:
                    raise ArcOracleError(
                        f"segment on facet {f} failed the arc-inside-facet check"
                    )
                if long_arc:
                    long_arc_count += 1
            seg_facet.append(f)
            seg_a.append(ra)
            seg_b.append(rb)

    return {
        "pt_edge": np.array(pt_edge, dtype=np.int32),
        "pt_root": np.array(pt_root, dtype=np.int8),
        "pt_t": np.array(pt_t, dtype=np.float64),
        "pt_xyz": np.array(pt_xyz, dtype=np.float64).reshape(len(pt_xyz), 3),
        "seg_facet": np.array(seg_facet, dtype=np.int32),
        "seg_a": np.array(seg_a, dtype=np.int32),
        "seg_b": np.array(seg_b, dtype=np.int32),
        "interior_candidates": interior_candidates,
        "long_arc_count": long_arc_count,
    }
