"""Conforming triangulations of the unit square and of a disk.

Meshes are plain containers of numpy arrays: ``vertices`` (nv, 2),
``triangles`` (nt, 3) counter-clockwise, ``boundary`` (nv,) bool. They
are treated as immutable once built.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math
import os

import numpy as np

__all__ = [
    "UnitSquare",
    "Disk",
    "TriangleMesh",
    "MeshError",
    "MeshFormatError",
    "unit_square_mesh",
    "disk_mesh",
    "refine",
    "write_mesh",
    "read_mesh",
    "check_mesh",
]


class MeshError(ValueError):
    """A mesh violates one of its structural invariants."""


class MeshFormatError(MeshError):
    """A mesh file could not be parsed."""

    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


@dataclass(frozen=True)
class UnitSquare:
    def area(self):
        return 1.0

    def contains(self, x, y, margin=0.0):
        x, y = np.asarray(x), np.asarray(y)
        return (x > margin) & (x < 1 - margin) & (y > margin) & (y < 1 - margin)


@dataclass(frozen=True)
class Disk:
    center: tuple = (0.5, 0.5)
    radius: float = 0.5

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        cx, cy = self.center
        if not (math.isfinite(cx) and math.isfinite(cy)):
            raise ValueError("disk center must be finite")

    def area(self):
        return math.pi * self.radius**2

    def contains(self, x, y, margin=0.0):
        cx, cy = self.center
        r = np.hypot(np.asarray(x) - cx, np.asarray(y) - cy)
        return r < self.radius - margin


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    shape: object
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray = field(repr=False)

    @property
    def nv(self):
        return len(self.vertices)

    @property
    def nt(self):
        return len(self.triangles)

    @cached_property
    def edges(self):
        """Unique edges as sorted index pairs, in lexicographic order."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def triangle_edges(self):
        """Per-triangle edge ids for local edges (0,1), (1,2), (2,0)."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        key = e[:, 0].astype(np.int64) * self.nv + e[:, 1]
        ekey = self.edges[:, 0].astype(np.int64) * self.nv + self.edges[:, 1]
        return np.searchsorted(ekey, key).reshape(-1, 3)

    @cached_property
    def edge_valence(self):
        """Number of triangles incident to each edge."""
        return np.bincount(self.triangle_edges.ravel(), minlength=len(self.edges))

    @cached_property
    def boundary_edges(self):
        return self.edges[self.edge_valence == 1]

    @cached_property
    def signed_areas(self):
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def edge_lengths(self):
        """(nt, 3) lengths of local edges (0,1), (1,2), (2,0)."""
        p = self.vertices[self.triangles]
        return np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)

    @property
    def h(self):
        """Mesh size: the largest triangle diameter."""
        return float(self.edge_lengths.max())

    def area(self):
        return float(self.signed_areas.sum())

    def inradii(self):
        return 2.0 * self.signed_areas / self.edge_lengths.sum(axis=1)

    def quality_ratio(self):
        """max diameter / min inradius, the quasi-uniformity measure."""
        return self.h / float(self.inradii().min())

    def min_angle(self):
        """Smallest interior angle over all triangles, in degrees."""
        a, b, c = self.edge_lengths.T  # opposite to vertices 2, 0, 1
        cosines = np.stack(
            [
                (a**2 + c**2 - b**2) / (2 * a * c),
                (a**2 + b**2 - c**2) / (2 * a * b),
                (b**2 + c**2 - a**2) / (2 * b * c),
            ]
        )
        return float(np.degrees(np.arccos(np.clip(cosines, -1, 1))).min())

    def __eq__(self, other):
        if not isinstance(other, TriangleMesh):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary, other.boundary)
        )

    __hash__ = None


def check_mesh(mesh, tol=1e-12):
    """Raise ``MeshError`` unless ``mesh`` satisfies the mesh invariants."""
    v, t = mesh.vertices, mesh.triangles
    if v.ndim != 2 or v.shape[1] != 2 or not np.all(np.isfinite(v)):
        raise MeshError("vertices must be a finite (nv, 2) array")
    if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
        raise MeshError("triangles must be a nonempty (nt, 3) array")
    if t.min() < 0 or t.max() >= len(v):
        raise MeshError("triangle references a vertex index out of range")
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
        raise MeshError("triangle with repeated vertex")
    bad = np.flatnonzero(mesh.signed_areas <= 0)
    if len(bad):
        raise MeshError(f"triangle {bad[0]} has non-positive signed area")
    if mesh.edge_valence.max() > 2:
        raise MeshError("edge shared by more than two triangles")
    on_bnd_edge = np.zeros(len(v), dtype=bool)
    on_bnd_edge[mesh.boundary_edges.ravel()] = True
    if not np.array_equal(on_bnd_edge, mesh.boundary):
        raise MeshError("boundary flags disagree with boundary edges")
    if isinstance(mesh.shape, Disk):
        cx, cy = mesh.shape.center
        r = np.hypot(v[mesh.boundary, 0] - cx, v[mesh.boundary, 1] - cy)
        if np.any(np.abs(r - mesh.shape.radius) > tol):
            raise MeshError("disk boundary vertex off the circle")
    return mesh


def _make(shape, vertices, triangles, boundary):
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    boundary = np.ascontiguousarray(boundary, dtype=bool)
    for a in (vertices, triangles, boundary):
        a.setflags(write=False)
    return TriangleMesh(shape, vertices, triangles, boundary)


def unit_square_mesh(n):
    """Uniform n-by-n grid on [0,1]^2, each cell cut lower-left to upper-right."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    s = np.arange(n + 1) / n
    X, Y = np.meshgrid(s, s)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    boundary = ((ii == 0) | (ii == n) | (jj == 0) | (jj == n)).ravel()
    return _make(UnitSquare(), vertices, tris, boundary)


def disk_mesh(center=(0.5, 0.5), radius=0.5, level=0):
    """Hexagon fan inscribed in the circle, red-refined ``level`` times."""
    if int(level) != level or level < 0:
        raise ValueError(f"level must be a nonnegative integer, got {level!r}")
    shape = Disk(tuple(float(c) for c in center), float(radius))
    cx, cy = shape.center
    ang = np.arange(6) * (np.pi / 3)
    vertices = np.vstack([[cx, cy], np.column_stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)])])
    k = np.arange(1, 7)
    tris = np.column_stack([np.zeros(6, dtype=np.int64), k, k % 6 + 1])
    boundary = np.r_[False, np.ones(6, dtype=bool)]
    mesh = _make(shape, vertices, tris, boundary)
    for _ in range(int(level)):
        mesh = refine(mesh)
    return mesh


def refine(mesh):
    """Uniform red refinement; disk boundary midpoints are pushed onto the circle."""
    edges = mesh.edges
    nv = mesh.nv
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    bnd_edge = mesh.edge_valence == 1
    if isinstance(mesh.shape, Disk):
        c = np.asarray(mesh.shape.center)
        d = mid[bnd_edge] - c
        mid[bnd_edge] = c + mesh.shape.radius * d / np.linalg.norm(d, axis=1)[:, None]
    te = mesh.triangle_edges + nv
    a, b, c = mesh.triangles.T
    mab, mbc, mca = te.T
    tris = np.empty((4 * mesh.nt, 3), dtype=np.int64)
    tris[0::4] = np.column_stack([a, mab, mca])
    tris[1::4] = np.column_stack([mab, b, mbc])
    tris[2::4] = np.column_stack([mca, mbc, c])
    tris[3::4] = np.column_stack([mab, mbc, mca])
    boundary = np.r_[mesh.boundary, bnd_edge]
    return _make(mesh.shape, np.vstack([mesh.vertices, mid]), tris, boundary)


def write_mesh(mesh, sink):
    """Write the plain-text mesh format to a path or text stream.

    Coordinates use ``repr`` so they read back bit-exactly.
    """
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            return write_mesh(mesh, fh)
    sink.write(f"{mesh.nv} {mesh.nt}\n")
    for (x, y), b in zip(mesh.vertices.tolist(), mesh.boundary.tolist()):
        sink.write(f"{x!r} {y!r} {int(b)}\n")
    for v0, v1, v2 in mesh.triangles.tolist():
        sink.write(f"{v0} {v1} {v2}\n")


def _infer_shape(vertices, boundary):
    bv = vertices[boundary]
    if len(bv) == 0:
        raise MeshError("mesh has no boundary vertices")
    on_side = (bv == 0.0) | (bv == 1.0)
    if on_side.any(axis=1).all() and vertices.min() >= 0.0 and vertices.max() <= 1.0:
        return UnitSquare()
    lo, hi = bv.min(axis=0), bv.max(axis=0)
    center = tuple(float(c) for c in 0.5 * (lo + hi))
    radius = float(0.5 * (hi - lo).max())
    return Disk(center, radius)


def read_mesh(source, shape=None):
    """Read a mesh written by :func:`write_mesh` and validate it.

    ``shape`` is inferred from the boundary vertices when not given.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return read_mesh(fh, shape)
    lines = source.read().splitlines()
    if not lines:
        raise MeshFormatError("empty file", 1)

    def fields(lineno, count, conv):
        if lineno > len(lines):
            raise MeshFormatError("unexpected end of file", lineno)
        parts = lines[lineno - 1].split()
        if len(parts) != count:
            raise MeshFormatError(f"expected {count} fields, got {len(parts)}", lineno)
        try:
            return [conv(p) for p in parts]
        except ValueError as exc:
            raise MeshFormatError(str(exc), lineno) from None

    nv, nt = fields(1, 2, int)
    if nv < 3 or nt < 1:
        raise MeshFormatError("need nv >= 3 and nt >= 1", 1)
    vertices = np.empty((nv, 2))
    boundary = np.empty(nv, dtype=bool)
    for k in range(nv):
        x, y, flag = fields(2 + k, 3, float)
        if flag not in (0.0, 1.0):
            raise MeshFormatError(f"boundary flag must be 0 or 1, got {flag}", 2 + k)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MeshFormatError("non-finite coordinate", 2 + k)
        vertices[k] = x, y
        boundary[k] = flag == 1.0
    tris = np.empty((nt, 3), dtype=np.int64)
    for k in range(nt):
        lineno = 2 + nv + k
        tri = fields(lineno, 3, int)
        if min(tri) < 0 or max(tri) >= nv:
            raise MeshFormatError(f"vertex index out of range 0..{nv - 1}", lineno)
        tris[k] = tri
    extra = [ln for ln in lines[1 + nv + nt:] if ln.strip()]
    if extra:
        raise MeshFormatError("trailing content", 2 + nv + nt)
    if shape is None:
        shape = _infer_shape(vertices, boundary)
    return check_mesh(_make(shape, vertices, tris, boundary))
