"""Local bases and degree-of-freedom layouts.

Interior fields are fully discontinuous: scalar broken P1 (3 dofs/triangle,
reference basis {1, xi, eta}) and broken lowest-order Raviart-Thomas
(3 dofs/triangle, basis {(1,0), (0,1), x - x_c} with x_c the centroid).
Boundary fields live on the ccw partition: broken P1 per segment in the
normalized local coordinate, or continuous P1 (nodal hats) for the
conforming variant.  Zero-mean constraints are handled at the system level.
"""
import numpy as np
import scipy.sparse as sp

from .exceptions import MeshError, QueryError

_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))

# reference-triangle mass matrix for the basis {1, xi, eta}
_P1_REF_MASS = np.array([
    [1.0 / 2.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 12.0, 1.0 / 24.0],
    [1.0 / 6.0, 1.0 / 24.0, 1.0 / 12.0],
])


class DgScalarSpace:
    """Broken P1 on a TriangleMesh; dofs of element k are 3k..3k+2."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.ndof = 3 * mesh.n_triangles
        v = mesh.vertices[mesh.triangles]
        self._v0 = v[:, 0]
        jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        self._jac = jac
        self._jac_inv = np.linalg.inv(jac)
        self._det = np.abs(np.linalg.det(jac))

    def reference_coords(self, k, points):
        points = np.asarray(points, dtype=float)
        return (points - self._v0[k]) @ self._jac_inv[k].T

    def eval_basis(self, k, points, tol=1e-12):
        """Values (npts, 3) and constant gradients (3, 2) on triangle k."""
        ref = self.reference_coords(k, np.atleast_2d(points))
        if np.any(ref < -tol) or np.any(ref.sum(axis=1) > 1.0 + tol):
            raise QueryError("point outside the triangle closure")
        vals = np.column_stack([np.ones(len(ref)), ref[:, 0], ref[:, 1]])
        grads = np.vstack([np.zeros(2), self._jac_inv[k]])
        return vals, grads

    def eval_ref(self, ref):
        """Basis values at reference coordinates (no location check)."""
        ref = np.atleast_2d(ref)
        return np.column_stack([np.ones(len(ref)), ref[:, 0], ref[:, 1]])

    def gradients(self, k):
        return np.vstack([np.zeros(2), self._jac_inv[k]])

    def element_mass(self, k):
        return self._det[k] * _P1_REF_MASS

    def edge_trace(self, k, edge):
        """(2, 3) matrix of basis values at the two endpoints of local edge
        `edge`, in the minus-triangle vertex order of that edge."""
        ref_pts = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
        a, b = _LOCAL_EDGES[edge]
        return self.eval_ref(ref_pts[[a, b]])


class BrokenRtSpace:
    """Broken lowest-order Raviart-Thomas; dofs of element k are 3k..3k+2
    for the basis {(1,0), (0,1), x - centroid_k}."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.ndof = 3 * mesh.n_triangles
        self._centroid = mesh.centroids
        self._area = mesh.signed_areas

    def eval_basis(self, k, points):
        """Vector values (npts, 3, 2) and divergences (3,) on triangle k."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = len(points)
        vals = np.zeros((n, 3, 2))
        vals[:, 0, 0] = 1.0
        vals[:, 1, 1] = 1.0
        vals[:, 2, :] = points - self._centroid[k]
        return vals, np.array([0.0, 0.0, 2.0])

    def normal_trace(self, k, edge_midpoint, normal):
        """Constant normal traces of the 3 basis fields on an edge of
        triangle k (constant by the RT structure; evaluated at the
        midpoint)."""
        mid = np.asarray(edge_midpoint, dtype=float)
        return np.array([normal[0], normal[1],
                         (mid - self._centroid[k]) @ normal])

    def element_mass(self, k, rule_pts, rule_wts):
        """Exact 3x3 element mass (the quadrature rule must integrate
        quadratics; barycentric points, weights summing to 1/2)."""
        verts = self.mesh.corners(k)
        pts = rule_pts @ verts
        vals, _ = self.eval_basis(k, pts)
        w = 2.0 * self._area[k] * rule_wts
        return np.einsum("p,pid,pjd->ij", w, vals, vals)

    def moments(self, k):
        """Integrals of the 3 basis fields over triangle k (the centroid
        basis field integrates to zero)."""
        out = np.zeros((3, 2))
        out[0, 0] = self._area[k]
        out[1, 1] = self._area[k]
        return out


class NormalTraceSpace:
    """P0-per-boundary-face normal traces of a BrokenRtSpace, as a sparse
    extraction map from RT coefficients to per-face constants."""

    def __init__(self, rt_space, faces):
        self.faces = faces
        rows, cols, vals = [], [], []
        for i, f in enumerate(faces.boundary):
            if f.tri < 0:
                raise MeshError("boundary face without owning triangle")
            mid = f.endpoints.mean(axis=0)
            tr = rt_space.normal_trace(f.tri, mid, f.normal)
            for j in range(3):
                rows.append(i)
                cols.append(3 * f.tri + j)
                vals.append(tr[j])
        self.matrix = sp.csr_matrix((vals, (rows, cols)),
                                    shape=(faces.n_boundary, rt_space.ndof))

    def apply(self, rt_coeffs):
        return self.matrix @ rt_coeffs


class BoundaryDgSpace:
    """Broken P1 on the boundary partition, basis {1, shat} per segment with
    shat in [0,1] the normalized local arclength; dofs of segment k are
    (2k, 2k+1).  The zero-mean constraint is imposed at the system level."""

    def __init__(self, bmesh):
        self.bmesh = bmesh
        self.ndof = 2 * bmesh.n_segments

    def eval(self, coeffs, s, side=+1):
        """Value at arclength s; at a node, side=+1 gives the outgoing
        (right) limit and side=-1 the incoming (left) limit."""
        bm = self.bmesh
        s = float(s) % 4.0
        k = bm.locate(s)
        shat = (s - bm.s_lo[k]) / bm.h_T[k]
        if side < 0 and shat <= 1e-14:
            k = (k - 1) % bm.n_segments
            shat = 1.0
        return coeffs[2 * k] + coeffs[2 * k + 1] * shat

    def derivative_matrix(self):
        """Sparse map from coefficients to the per-segment constant
        arclength derivative."""
        bm = self.bmesh
        n = bm.n_segments
        rows = np.arange(n)
        cols = 2 * rows + 1
        return sp.csr_matrix((1.0 / bm.h_T, (rows, cols)), shape=(n, self.ndof))

    def jump_matrix(self):
        """Sparse map from coefficients to node jumps, signed as the
        incoming-segment value minus the outgoing-segment value."""
        bm = self.bmesh
        rows, cols, vals = [], [], []
        for p in range(bm.n_nodes):
            k_in, k_out = bm.node_incident(p)
            rows += [p, p, p]
            cols += [2 * k_in, 2 * k_in + 1, 2 * k_out]
            vals += [1.0, 1.0, -1.0]
        return sp.csr_matrix((vals, (rows, cols)), shape=(bm.n_nodes, self.ndof))

    def mean_vector(self):
        """m with m . coeffs = integral of the function over the boundary."""
        bm = self.bmesh
        m = np.zeros(self.ndof)
        m[0::2] = bm.h_T
        m[1::2] = 0.5 * bm.h_T
        return m

    def project(self, fn, n_gauss=8):
        """Per-segment L2 projection of fn(s) (vectorized in arclength)."""
        from .quadrature import gauss_segment
        rule = gauss_segment(n_gauss)
        bm = self.bmesh
        coeffs = np.empty(self.ndof)
        M = np.array([[1.0, 0.5], [0.5, 1.0 / 3.0]])
        for k in range(bm.n_segments):
            svals = bm.s_lo[k] + rule.points * bm.h_T[k]
            fv = fn(svals)
            b = np.array([rule.weights @ fv, (rule.weights * rule.points) @ fv])
            coeffs[2 * k: 2 * k + 2] = np.linalg.solve(M, b)
        return coeffs

    def interpolate(self, fn):
        """Nodal interpolation segment by segment (endpoint values)."""
        bm = self.bmesh
        coeffs = np.empty(self.ndof)
        v_lo = fn(bm.s_lo)
        v_hi = fn(bm.s_hi)
        coeffs[0::2] = v_lo
        coeffs[1::2] = v_hi - v_lo
        return coeffs


class BoundaryConformingSpace:
    """Continuous P1 (nodal hats) on the boundary partition, represented by
    its prolongation into the broken space; dof p is the value at node p."""

    def __init__(self, bmesh):
        self.bmesh = bmesh
        self.broken = BoundaryDgSpace(bmesh)
        self.ndof = bmesh.n_nodes
        n = bmesh.n_segments
        rows, cols, vals = [], [], []
        for k in range(n):
            p, q = k, (k + 1) % n
            rows += [2 * k, 2 * k + 1, 2 * k + 1]
            cols += [p, p, q]
            vals += [1.0, -1.0, 1.0]
        self.prolongation = sp.csr_matrix((vals, (rows, cols)),
                                          shape=(2 * n, self.ndof))

    def eval(self, coeffs, s):
        return self.broken.eval(self.prolongation @ coeffs, s)

    def mean_vector(self):
        return self.prolongation.T @ self.broken.mean_vector()

    def interpolate(self, fn):
        return np.asarray(fn(self.bmesh.node_s), dtype=float)
