"""Structured triangulations of the unit square and boundary partitions.

Triangle meshes split every cell of a 2^level x 2^level grid along the
bottom-left -> top-right diagonal, so all connectivity is reproducible and
vertex coordinates are dyadic.  The boundary partition runs counterclockwise
starting at the origin; its arclength coordinate s in [0, 4) is the common
currency for every boundary computation.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, MeshError

SIDE_TANGENTS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
SIDE_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
SIDE_STARTS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def arclength_to_point(s):
    """Map ccw arclength s in [0, 4) on the unit-square boundary to (x, y)."""
    s = np.asarray(s, dtype=float) % 4.0
    side = np.minimum(s.astype(int), 3)
    local = s - side
    return SIDE_STARTS[side] + local[..., None] * SIDE_TANGENTS[side]


def point_to_arclength(p, tol=1e-12):
    """Inverse of arclength_to_point for points on the boundary."""
    x, y = float(p[0]), float(p[1])
    if abs(y) <= tol:
        return x % 4.0
    if abs(x - 1.0) <= tol:
        return 1.0 + y
    if abs(y - 1.0) <= tol:
        return 2.0 + (1.0 - x)
    if abs(x) <= tol:
        return 3.0 + (1.0 - y)
    raise MeshError(f"point {p} is not on the unit-square boundary")


class TriangleMesh:
    """Conforming triangulation of [0,1]^2 at refinement level L (h = 2^-L).

    vertices: (nv, 2) float, triangles: (nt, 3) int with ccw orientation.
    """

    def __init__(self, vertices, triangles, level):
        self.vertices = vertices
        self.triangles = triangles
        self.level = level
        self.h = 2.0 ** (-level)
        v = vertices[triangles]
        e01 = v[:, 1] - v[:, 0]
        e02 = v[:, 2] - v[:, 0]
        self.signed_areas = 0.5 * (e01[:, 0] * e02[:, 1] - e01[:, 1] * e02[:, 0])
        if np.any(self.signed_areas <= 0.0):
            raise MeshError("triangle with nonpositive signed area")
        edges = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)
        self.h_K = np.linalg.norm(edges, axis=2).max(axis=1)
        self.centroids = v.mean(axis=1)
        for arr in (self.vertices, self.triangles, self.signed_areas,
                    self.h_K, self.centroids):
            arr.setflags(write=False)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def corners(self, k):
        """(3, 2) vertex coordinates of triangle k."""
        return self.vertices[self.triangles[k]]

    def locate(self, p):
        """Triangle index containing point p (ties broken deterministically)."""
        x, y = float(p[0]), float(p[1])
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            from .exceptions import QueryError
            raise QueryError(f"point {p} outside the unit square")
        n = 2 ** self.level
        i = min(int(x * n), n - 1)
        j = min(int(y * n), n - 1)
        xl = x * n - i
        yl = y * n - j
        upper = yl > xl
        return 2 * (j * n + i) + (1 if upper else 0)


def build_uniform_square_mesh(level):
    """Uniform criss-cross-free triangulation: each grid cell is split along
    the same bottom-left -> top-right diagonal; 2*4^level triangles."""
    if not 1 <= level <= 8:
        raise ConfigurationError(f"level must be in 1..8, got {level}")
    n = 2 ** level
    xs = np.arange(n + 1) / n
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    triangles = np.empty((2 * n * n, 3), dtype=int)
    for j in range(n):
        for i in range(n):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v11 = vid(i + 1, j + 1)
            v01 = vid(i, j + 1)
            cell = j * n + i
            triangles[2 * cell] = (v00, v10, v11)      # lower
            triangles[2 * cell + 1] = (v00, v11, v01)  # upper
    return TriangleMesh(vertices, triangles, level)


@dataclass(frozen=True)
class InteriorFace:
    tri_minus: int
    tri_plus: int
    edge_minus: int   # local edge index (0,1,2) within the minus triangle
    edge_plus: int
    normal: np.ndarray  # unit normal out of the minus side
    h: float
    endpoints: np.ndarray  # (2, 2)


@dataclass(frozen=True)
class BoundaryFace:
    tri: int
    edge: int
    normal: np.ndarray  # outward unit normal of the domain
    h: float
    endpoints: np.ndarray  # (2, 2), ordered ccw along the boundary
    side: int
    s_lo: float
    s_hi: float


class FaceSet:
    """Interior and boundary faces of a TriangleMesh with orientation data.

    The minus side of an interior face is the triangle with the smaller
    index; boundary faces are sorted by their ccw arclength range.
    """

    def __init__(self, interior, boundary):
        self.interior = interior
        self.boundary = boundary

    @property
    def n_interior(self):
        return len(self.interior)

    @property
    def n_boundary(self):
        return len(self.boundary)


_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def extract_faces(mesh):
    """Enumerate the distinct edges of the mesh as interior/boundary faces."""
    owners = {}
    for k in range(mesh.n_triangles):
        tri = mesh.triangles[k]
        for e, (a, b) in enumerate(_LOCAL_EDGES):
            key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
            owners.setdefault(key, []).append((k, e))

    interior = []
    boundary = []
    for key, own in sorted(owners.items()):
        if len(own) > 2:
            raise MeshError(f"edge {key} shared by {len(own)} triangles")
        if len(own) == 2:
            (k0, e0), (k1, e1) = sorted(own)
            tri = mesh.triangles[k0]
            a, b = _LOCAL_EDGES[e0]
            p0 = mesh.vertices[tri[a]]
            p1 = mesh.vertices[tri[b]]
            edge_vec = p1 - p0
            h = float(np.hypot(*edge_vec))
            normal = np.array([edge_vec[1], -edge_vec[0]]) / h
            normal.setflags(write=False)
            interior.append(InteriorFace(k0, k1, e0, e1, normal, h,
                                         np.array([p0, p1])))
        else:
            (k0, e0), = own
            tri = mesh.triangles[k0]
            a, b = _LOCAL_EDGES[e0]
            p0 = mesh.vertices[tri[a]]
            p1 = mesh.vertices[tri[b]]
            edge_vec = p1 - p0
            h = float(np.hypot(*edge_vec))
            normal = np.array([edge_vec[1], -edge_vec[0]]) / h
            normal.setflags(write=False)
            s0 = point_to_arclength(p0)
            s1 = point_to_arclength(p1)
            # ccw ordering along the boundary; wrap at s = 0
            if (s1 - s0) % 4.0 < 2.0:
                lo, hi = s0, s1
                ends = np.array([p0, p1])
            else:
                lo, hi = s1, s0
                ends = np.array([p1, p0])
            if hi < lo:
                hi += 4.0
            side = int(lo)
            boundary.append(BoundaryFace(k0, e0, normal, h, ends, side, lo, hi))
    boundary.sort(key=lambda f: f.s_lo)
    return FaceSet(interior, boundary)


class BoundaryMesh:
    """Quasi-uniform ccw partition of the square boundary.

    Segment k runs from node k to node k+1 (cyclically); nodes carry the
    incoming/outgoing segment pair used by jump extraction.  With
    refine_factor=1 the partition coincides with the trace of the interior
    mesh; larger factors split each trace segment into equal parts.
    """

    def __init__(self, level, refine_factor):
        if refine_factor not in (1, 2, 4):
            raise ConfigurationError(f"refine_factor must be 1, 2 or 4, got {refine_factor}")
        n_side = 2 ** level * refine_factor
        self.level = level
        self.refine_factor = refine_factor
        self.n_segments = 4 * n_side
        h = 1.0 / n_side
        s_lo = np.arange(self.n_segments) * h
        self.s_lo = s_lo
        self.s_hi = s_lo + h
        self.h_T = np.full(self.n_segments, h)
        self.sides = np.minimum(s_lo.astype(int), 3)
        self.starts = arclength_to_point(self.s_lo)
        self.ends = arclength_to_point(self.s_hi % 4.0)
        self.tangents = SIDE_TANGENTS[self.sides]
        self.normals = SIDE_NORMALS[self.sides]
        # node k sits at the start of segment k; incoming segment is k-1
        self.node_points = self.starts
        self.node_s = self.s_lo
        self.n_nodes = self.n_segments
        for arr in (self.s_lo, self.s_hi, self.h_T, self.sides, self.starts,
                    self.ends, self.tangents, self.normals):
            arr.setflags(write=False)

    def node_incident(self, k):
        """(incoming, outgoing) segment indices at node k."""
        return ((k - 1) % self.n_segments, k)

    def locate(self, s):
        """Segment index containing arclength s (right-continuous)."""
        s = float(s) % 4.0
        k = min(int(s / self.h_T[0]), self.n_segments - 1)
        return k


def build_boundary_mesh(mesh, refine_factor=1):
    """Boundary partition inheriting (and optionally refining) the trace of
    the interior mesh on the square boundary."""
    return BoundaryMesh(mesh.level, refine_factor)


@dataclass(frozen=True)
class LocalUniformityReport:
    delta: float
    delta_volume: float
    delta_boundary: float
    delta_max: float
    passed: bool


def check_local_quasi_uniformity(mesh, faces, bmesh, delta_max):
    """Size-ratio bound over touching element pairs: interior h_K/h_K' and
    boundary h_K/h_T (either direction)."""
    delta_vol = 1.0
    for f in faces.interior:
        r = mesh.h_K[f.tri_minus] / mesh.h_K[f.tri_plus]
        delta_vol = max(delta_vol, r, 1.0 / r)
    delta_bnd = 1.0
    for f in faces.boundary:
        hk = mesh.h_K[f.tri]
        overlap = (bmesh.s_hi > f.s_lo - 1e-12) & (bmesh.s_lo < f.s_hi + 1e-12)
        for ht in bmesh.h_T[overlap]:
            r = hk / ht
            delta_bnd = max(delta_bnd, r, 1.0 / r)
    delta = max(delta_vol, delta_bnd)
    return LocalUniformityReport(delta=delta, delta_volume=delta_vol,
                                 delta_boundary=delta_bnd, delta_max=delta_max,
                                 passed=delta <= delta_max)


def dump_mesh(mesh, path):
    """Plain-text dump: VERTICES (x y per line) then TRIANGLES (i j k)."""
    with open(path, "w") as fh:
        fh.write("VERTICES\n")
        for x, y in mesh.vertices:
            fh.write(f"{x!r} {y!r}\n")
        fh.write("TRIANGLES\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
