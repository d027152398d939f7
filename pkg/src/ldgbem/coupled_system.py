"""Full linear system of the coupled scheme (broken or conforming boundary
space), zero-mean bordering, direct solve and field evaluation.

Unknown layout: [sigma (3 per triangle) | u (3 per triangle) |
psi (2 per segment, or one per node for the conforming variant) | mean
multiplier].  The global operator is
    [ A    B_u    B_psi   0 ]
    [-B_u'  C_uu   C_upsi  0 ]
    [-B_psi' C_upsi' C_psi  m ]
    [ 0     0      m'      0 ]
with the skew pairing realized by reusing the single assembled B blocks.
"""
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConfigurationError, QueryError, SolverError
from .ldg_assembly import FluxParameters, assemble_blocks
from . import fe_spaces
from .mesh import build_uniform_square_mesh, build_boundary_mesh, extract_faces

SCHEMES = ("dg-bem", "conforming-bem")


@dataclass
class SchemeConfig:
    scheme: str = "dg-bem"
    level: int = 2
    refine_factor: int = 1
    flux: FluxParameters = field(default_factory=FluxParameters)
    tolerance: float = 1e-10
    volume_order: int = 5
    check_spd: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if not 1 <= self.level <= 8:
            raise ConfigurationError(f"level must be in 1..8, got {self.level}")
        if not 0.0 < self.tolerance <= 1e-6:
            raise ConfigurationError("solver tolerance must be in (0, 1e-6]")


class BlockSystem:
    """Assembled square system with the zero-mean bordering row/column."""

    def __init__(self, config, mesh, faces, bmesh, spaces, blocks,
                 psi_restriction=None):
        self.config = config
        self.mesh = mesh
        self.faces = faces
        self.bmesh = bmesh
        self.spaces = spaces
        self.blocks = blocks
        self.psi_restriction = psi_restriction

        n_sig = spaces["rt"].ndof
        n_u = spaces["dg"].ndof
        E = psi_restriction
        if E is None:
            B_psi = blocks.B_psi
            C_upsi = blocks.C_upsi
            C_psi = blocks.C_psipsi_penalty + blocks.d_form.matrix
            load_psi = blocks.load_psi
            mean_vec = spaces["boundary"].mean_vector()
        else:
            B_psi = blocks.B_psi @ E
            C_upsi = blocks.C_upsi @ E
            Ed = E.toarray()
            C_psi = Ed.T @ blocks.C_psipsi_penalty @ Ed \
                + Ed.T @ blocks.d_form.curl_part @ Ed
            load_psi = E.T @ blocks.load_psi
            mean_vec = spaces["boundary"].mean_vector()
        n_psi = B_psi.shape[1]
        self.n_sigma, self.n_u, self.n_psi = n_sig, n_u, n_psi
        self.size = n_sig + n_u + n_psi + 1
        self.C_psi = C_psi
        self.B_psi_used = B_psi
        self.C_upsi_used = C_upsi
        self.mean_vector = mean_vec

        m_col = sp.csr_matrix((mean_vec, (np.arange(n_psi), np.zeros(n_psi, dtype=int))),
                              shape=(n_psi, 1))
        matrix = sp.bmat([
            [blocks.A, blocks.B_u, B_psi, None],
            [-blocks.B_u.T, blocks.C_uu, C_upsi, None],
            [-B_psi.T, C_upsi.T, sp.csr_matrix(C_psi), m_col],
            [None, None, m_col.T, None],
        ], format="csc")
        self.matrix = matrix
        self.rhs = np.concatenate([blocks.load_sigma, blocks.load_u,
                                   load_psi, [0.0]])

    def quadratic_parts(self, x):
        """a(sigma, sigma) and c(uhat, uhat) of an unbordered coefficient
        vector x = (sigma, u, psi)."""
        s = x[: self.n_sigma]
        u = x[self.n_sigma: self.n_sigma + self.n_u]
        p = x[self.n_sigma + self.n_u:]
        a_val = float(s @ (self.blocks.A @ s))
        c_val = float(u @ (self.blocks.C_uu @ u)) \
            + 2.0 * float(u @ (self.C_upsi_used @ p)) \
            + float(p @ (self.C_psi @ p))
        return a_val, c_val


def build_system(config, f_fn, g0, g1):
    """Build the coupled linear system for the configured scheme and data."""
    mesh = build_uniform_square_mesh(config.level)
    faces = extract_faces(mesh)
    bmesh = build_boundary_mesh(mesh, config.refine_factor)
    rt = fe_spaces.BrokenRtSpace(mesh)
    dg = fe_spaces.DgScalarSpace(mesh)
    broken = fe_spaces.BoundaryDgSpace(bmesh)
    trace_map = fe_spaces.NormalTraceSpace(rt, faces)
    blocks = assemble_blocks(mesh, faces, bmesh, rt, dg, broken, trace_map,
                             config.flux, f_fn, g0, g1,
                             volume_order=config.volume_order,
                             check_spd=config.check_spd)
    if config.scheme == "conforming-bem":
        conf = fe_spaces.BoundaryConformingSpace(bmesh)
        spaces = {"rt": rt, "dg": dg, "broken": broken, "boundary": conf,
                  "trace_map": trace_map}
        return BlockSystem(config, mesh, faces, bmesh, spaces, blocks,
                           psi_restriction=conf.prolongation)
    spaces = {"rt": rt, "dg": dg, "broken": broken, "boundary": broken,
              "trace_map": trace_map}
    return BlockSystem(config, mesh, faces, bmesh, spaces, blocks)


class DiscreteSolution:
    """Coefficients of a solved coupled system with field evaluators."""

    def __init__(self, system, x, solve_s=0.0):
        self.system = system
        self.config = system.config
        self.mesh = system.mesh
        self.faces = system.faces
        self.bmesh = system.bmesh
        ns, nu, npsi = system.n_sigma, system.n_u, system.n_psi
        self.sigma = x[:ns]
        self.u = x[ns: ns + nu]
        self.psi = x[ns + nu: ns + nu + npsi]
        self.multiplier = float(x[-1])
        self.ndof = ns + nu + npsi
        self.solve_s = solve_s
        self.assembly_s = system.blocks.timings.get("assembly_s", 0.0)
        E = system.psi_restriction
        self.psi_broken = self.psi if E is None else E @ self.psi
        self.psi_is_continuous = E is not None
        self._dg = system.spaces["dg"]
        self._rt = system.spaces["rt"]
        self._broken_space = system.spaces["broken"]
        self.flux_coeffs = system.spaces["trace_map"].matrix @ self.sigma

    # ---- pointwise / elementwise evaluation ------------------------------

    def u_values(self, pts):
        """Broken-P1 values at points given per triangle, shape (nt, np, 2)."""
        dg = self._dg
        ref = np.einsum("tpd,ted->tpe", pts - dg._v0[:, None, :], dg._jac_inv)
        c = self.u.reshape(-1, 3)
        return (c[:, 0, None] + c[:, 1, None] * ref[..., 0]
                + c[:, 2, None] * ref[..., 1])

    def sigma_values(self, pts):
        """Broken-RT values at points given per triangle, shape (nt, np, 2)."""
        c = self.sigma.reshape(-1, 3)
        rel = pts - self.mesh.centroids[:, None, :]
        out = c[:, 2, None, None] * rel
        out[..., 0] += c[:, 0, None]
        out[..., 1] += c[:, 1, None]
        return out

    def u_at(self, point):
        k = self.mesh.locate(point)
        vals, _ = self._dg.eval_basis(k, point)
        return float(vals @ self.u[3 * k: 3 * k + 3])

    def sigma_at(self, point):
        k = self.mesh.locate(point)
        vals, _ = self._rt.eval_basis(k, point)
        return np.einsum("pid,i->d", vals, self.sigma[3 * k: 3 * k + 3])

    def psi_values(self, s, segment=None, side=+1):
        """Boundary trace values; with `segment` given, arclengths are taken
        inside that segment (vectorized), else scalar one-sided evaluation."""
        if segment is None:
            return self._broken_space.eval(self.psi_broken, s, side=side)
        bm = self.bmesh
        shat = (np.asarray(s, dtype=float) - bm.s_lo[segment]) / bm.h_T[segment]
        return (self.psi_broken[2 * segment]
                + self.psi_broken[2 * segment + 1] * shat)

    def psi_derivative(self, segment):
        return self.psi_broken[2 * segment + 1] / self.bmesh.h_T[segment]

    def flux_value(self, face_index):
        """Constant normal flux sigma_h.n on a boundary face."""
        return self.flux_coeffs[face_index]

    def psi_mean(self):
        return float(self.system.mean_vector @ self.psi)

    # ---- jump norms -------------------------------------------------------

    def jump_norms(self, n_gauss=8):
        """(unweighted, alpha-weighted) L2 norms of the full jump of
        (u_h, psi_h) over interior and boundary faces."""
        from .quadrature import gauss_segment
        from .bem_ops import BoundaryFamily, merged_pieces
        params = self.config.flux
        raw = 0.0
        weighted = 0.0
        dg = self._dg
        alpha_i = params.alpha_interior(self.faces)
        for fi, f in enumerate(self.faces.interior):
            tm = dg.edge_trace(f.tri_minus, f.edge_minus)
            tp = dg.edge_trace(f.tri_plus, f.edge_plus)[::-1]  # align orders
            um = tm @ self.u[3 * f.tri_minus: 3 * f.tri_minus + 3]
            up = tp @ self.u[3 * f.tri_plus: 3 * f.tri_plus + 3]
            d = um - up  # endpoint values of the P1 jump
            val = f.h * (d[0]**2 + d[0] * d[1] + d[1]**2) / 3.0
            raw += val
            weighted += alpha_i[fi] * val
        rule = gauss_segment(n_gauss)
        fam_faces = BoundaryFamily.from_boundary_faces(self.faces, 0)
        fam_trace = BoundaryFamily.from_boundary_mesh(self.bmesh, 1)
        lo, hi, pa, pb = merged_pieces(fam_faces, fam_trace)
        alpha_b = params.alpha_boundary(self.faces)
        for m in range(len(lo)):
            face = self.faces.boundary[pa[m]]
            L = hi[m] - lo[m]
            svals = lo[m] + rule.points * L
            ehat = (svals - face.s_lo) / (face.s_hi - face.s_lo)
            tr = dg.edge_trace(face.tri, face.edge)
            uv = ((1.0 - ehat)[:, None] * tr[0][None, :]
                  + ehat[:, None] * tr[1][None, :]) @ \
                self.u[3 * face.tri: 3 * face.tri + 3]
            pv = self.psi_values(svals, segment=pb[m])
            val = (L * rule.weights) @ (uv - pv)**2
            raw += val
            weighted += alpha_b[pa[m]] * val
        return float(np.sqrt(raw)), float(np.sqrt(weighted))


def solve(system):
    """Direct sparse solve with a residual check against the configured
    tolerance; raises SolverError on a singular factorization."""
    t0 = time.perf_counter()
    try:
        x = spla.spsolve(system.matrix, system.rhs)
    except Exception as exc:  # umfpack/superlu signal singularity this way
        raise SolverError(f"factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("factorization produced non-finite values")
    resid = np.linalg.norm(system.matrix @ x - system.rhs)
    scale = np.linalg.norm(system.rhs)
    rel = resid / scale if scale > 0.0 else resid
    if rel > system.config.tolerance:
        raise SolverError(f"relative residual {rel:g} above tolerance")
    return DiscreteSolution(system, x, solve_s=time.perf_counter() - t0)


def evaluate_solution(sol, point=None, arclength=None, side=+1):
    """Field values of a DiscreteSolution: at an interior point returns
    (u_h, sigma_h); at a boundary arclength returns (psi_h, sigma_h.n)."""
    if (point is None) == (arclength is None):
        raise QueryError("pass exactly one of point / arclength")
    if point is not None:
        return sol.u_at(point), sol.sigma_at(point)
    s = float(arclength) % 4.0
    face = None
    for i, f in enumerate(sol.faces.boundary):
        if f.s_lo - 1e-12 <= s <= f.s_hi + 1e-12:
            face = i
            break
    return sol.psi_values(s, side=side), sol.flux_coeffs[face]


def condition_estimate(system):
    """1-norm condition estimate of the bordered matrix via the LU factors."""
    lu = spla.splu(system.matrix.tocsc())
    n = system.size
    op = spla.LinearOperator((n, n), matvec=lu.solve,
                             rmatvec=lambda v: lu.solve(v, trans="T"))
    inv_norm = spla.onenormest(op)
    return float(inv_norm * spla.onenormest(system.matrix))