"""Mesh orientation: align a user-chosen axis with +x, and keep slicing radii
clear of vertex distances.

The transform is translate-then-rotate: the axis start point A goes to the
origin, then a z-rotation brings the axis vector into the xz-plane and a
y-rotation drops it onto +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DecollideError, ZeroAxisError
from .mesh import TriangleMesh, build_edge_tables

# Outward nudge applied per decollision attempt, in units of epsilon.
NUDGE_STEP = 2.0
# Nudge attempts; total displacement is bounded by NUDGE_STEP * MAX_NUDGES
# * epsilon = 8 * epsilon.
MAX_NUDGES = 4


@dataclass(frozen=True)
class SkewerAxis:
    """The vector AB through the model's axial void: A at one bore opening,
    B at the opposite one."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=np.float64).reshape(3))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64).reshape(3))

    @property
    def vector(self) -> np.ndarray:
        return self.b - self.a

    @property
    def length(self) -> float:
        return float(np.sqrt(np.sum(self.vector**2)))


@dataclass(frozen=True)
class RigidTransform:
    """Rotation applied after a translation: p -> rotation @ (p + translation).

    ``phi`` and ``theta`` are the z- and y-rotation angles, kept for
    diagnostics.
    """

    rotation: np.ndarray
    translation: np.ndarray
    phi: float = 0.0
    theta: float = 0.0

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        return (points + self.translation) @ self.rotation.T

    def apply_vectors(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.rotation.T


def rotation_about_x(angle: float) -> RigidTransform:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    return RigidTransform(rotation=rot, translation=np.zeros(3))


def compute_skewer_transform(axis: SkewerAxis) -> RigidTransform:
    """Transform mapping A to the origin and B onto the positive x-axis.

    phi = -atan2(v_y, v_x) rotates the axis vector into the xz-plane (with
    atan2(0, 0) defined as 0 for vectors parallel to z); theta = pi/2 -
    acos(v_z / |v|) then rotates it down onto +x.
    """
    v = axis.vector
    norm = axis.length
    if norm == 0.0:
        raise ZeroAxisError("axis endpoints coincide")
    vx, vy, vz = (float(v[0]), float(v[1]), float(v[2]))

    if vx == 0.0 and vy == 0.0:
        phi = 0.0
    else:
        phi = -math.atan2(vy, vx)
    ratio = max(-1.0, min(1.0, vz / norm))
    theta = math.pi / 2.0 - math.acos(ratio)

    cp, sp = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    return RigidTransform(rotation=ry @ rz, translation=-axis.a, phi=phi, theta=theta)


def with_x_offset(transform: RigidTransform, offset: float) -> RigidTransform:
    """Shift the transformed model along +x (post-rotation repositioning)."""
    if offset == 0.0:
        return transform
    # R(p + t) + (dx,0,0) == R(p + t + R^T (dx,0,0))
    extra = transform.rotation.T @ np.array([offset, 0.0, 0.0])
    return replace(transform, translation=transform.translation + extra)


def apply_transform(mesh: TriangleMesh, transform: RigidTransform) -> TriangleMesh:
    """Return the transformed mesh.

    Vertices are moved, normals are rotated (not re-derived), and the edge
    tables are rebuilt so canonical edge orientation stays consistent with
    the new vertex positions.  Adjacency is unchanged by construction.
    """
    vertices = np.ascontiguousarray(transform.apply_points(mesh.vertices))
    normals = np.ascontiguousarray(transform.apply_vectors(mesh.normals))
    edges, edge_facets, facet_edges, dirs, counts, dir_sum = build_edge_tables(
        vertices, mesh.facets
    )
    out = TriangleMesh(
        vertices=vertices,
        facets=mesh.facets,
        normals=normals,
        edges=edges,
        edge_facets=edge_facets,
        facet_edges=facet_edges,
        facet_edge_dir=dirs,
        edge_facet_count=counts,
        edge_dir_sum=dir_sum,
        degenerate_count=mesh.degenerate_count,
        normal_mismatch_count=mesh.normal_mismatch_count,
    )
    for name in ("vertices", "normals", "edges", "edge_facets", "facet_edges", "facet_edge_dir"):
        getattr(out, name).flags.writeable = False
    return out


def decollide_radii(mesh: TriangleMesh, radii, epsilon: float):
    """Nudge slicing radii so no radius sits within epsilon of any vertex's
    axis distance.

    Each colliding radius is pushed outward by ``2 * epsilon`` per attempt,
    at most 4 attempts, so the total displacement never exceeds
    ``8 * epsilon``.  The mesh is never mutated.  Raises
    :class:`DecollideError` when a radius cannot escape the collision bands.
    """
    radii = np.asarray(radii, dtype=np.float64)
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if len(radii) > 1 and not np.all(np.diff(radii) > 0):
        raise ValueError("radii must be strictly increasing")

    dists = np.sort(mesh.axis_distances())

    def collides(r: float) -> bool:
        # any vertex distance strictly inside (r - epsilon, r + epsilon)?
        i = int(np.searchsorted(dists, r - epsilon, side="right"))
        return i < len(dists) and dists[i] < r + epsilon

    out = radii.copy()
    for k, r0 in enumerate(radii):
        r = float(r0)
        nudges = 0
        while collides(r):
            if nudges >= MAX_NUDGES:
                raise DecollideError(
                    f"radius {r0} still within epsilon of a vertex distance after "
                    f"{MAX_NUDGES} outward nudges"
                )
            r = r + NUDGE_STEP * epsilon
            nudges += 1
        out[k] = r

    if len(out) > 1 and not np.all(np.diff(out) > 0):
        raise DecollideError("nudged radii are no longer strictly increasing")
    return out
