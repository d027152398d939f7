"""Interior LDG bilinear forms and their couplings to the boundary blocks.

Assembles, in coefficient form,
  a(sigma, tau) = (sigma, tau)_Omega + <tau.n, V sigma.n>
  b(tau, (v, phi)) = -(grad_h v, tau) + <tau.n, (id/2 - K) phi>
                     + <[v], {tau} - [tau] beta>_interior + <[vhat], tau>_bnd
  c((u, psi), (v, phi)) = <alpha [uhat], [vhat]> + d(psi, phi)
with the numerical-trace substitution already folded in; the skew pairing of
the b-blocks in the global operator is realized by reusing one assembled B.
"""
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError
from . import bem_ops
from .quadrature import gauss_segment, gauss_triangle

# exact integrals of P1-trace products over an edge, in endpoint values
_EDGE_MASS = np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])


@dataclass
class FluxParameters:
    """Stabilization parameters: alpha = c_alpha / h_F per face, beta the
    unit normal of the minus side (or zero) per interior face, nu constant
    per boundary node."""
    c_alpha: float = 1.0
    beta_mode: str = "normal"
    nu_value: float = 1.0

    def __post_init__(self):
        if self.c_alpha <= 0.0:
            raise ConfigurationError("alpha scaling must be positive")
        if self.beta_mode not in ("normal", "zero"):
            raise ConfigurationError(f"unknown beta mode {self.beta_mode!r}")
        if self.nu_value <= 0.0:
            raise ConfigurationError("nu must be positive")

    def alpha_interior(self, faces):
        return np.array([self.c_alpha / f.h for f in faces.interior])

    def alpha_boundary(self, faces):
        return np.array([self.c_alpha / f.h for f in faces.boundary])

    def beta(self, faces):
        if self.beta_mode == "zero":
            return np.zeros((faces.n_interior, 2))
        return np.array([f.normal for f in faces.interior])

    def nu(self, bmesh):
        return np.full(bmesh.n_nodes, self.nu_value)


def assemble_a(mesh, rt_space, trace_map, v_flux):
    """RT mass matrix plus the single-layer pairing of the normal traces."""
    rule = gauss_triangle(2)
    rows, cols, vals = [], [], []
    for k in range(mesh.n_triangles):
        M = rt_space.element_mass(k, rule.points, rule.weights)
        for i in range(3):
            for j in range(3):
                rows.append(3 * k + i)
                cols.append(3 * k + j)
                vals.append(M[i, j])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(rt_space.ndof, rt_space.ndof))
    N = trace_map.matrix
    if v_flux.matrix.shape != (N.shape[0], N.shape[0]):
        raise ConfigurationError("single-layer block does not match the trace map")
    A = A + N.T @ sp.csr_matrix(v_flux.matrix) @ N
    return A


def assemble_b(mesh, faces, rt_space, dg_space, trace_map, fam_flux, fam_trace,
               k_matrix, params):
    """B[i, j] = b(tau_i, what_j), split into the u and psi column blocks."""
    beta = params.beta(faces)
    rows, cols, vals = [], [], []

    # volume term: -(grad v, tau)_K ; only the constant RT fields see it
    for k in range(mesh.n_triangles):
        grads = dg_space.gradients(k)          # (3, 2)
        mom = rt_space.moments(k)              # (3, 2)
        loc = -(mom @ grads.T)                 # (tau i, v j)
        for i in range(3):
            for j in range(3):
                rows.append(3 * k + i)
                cols.append(3 * k + j)
                vals.append(loc[i, j])

    # interior faces: <[v], {tau} - [tau] beta>
    for fi, f in enumerate(faces.interior):
        n = f.normal
        nb = float(n @ beta[fi])
        mid = f.endpoints.mean(axis=0)
        tr_m = rt_space.normal_trace(f.tri_minus, mid, n)
        tr_p = rt_space.normal_trace(f.tri_plus, mid, n)
        fac = {f.tri_minus: tr_m * (0.5 - nb), f.tri_plus: tr_p * (0.5 + nb)}
        v_int = {}
        for kt, edge, sign in ((f.tri_minus, f.edge_minus, 1.0),
                               (f.tri_plus, f.edge_plus, -1.0)):
            tr = dg_space.edge_trace(kt, edge)  # (2, 3) endpoint values
            v_int[kt] = sign * f.h * 0.5 * tr.sum(axis=0)
        for kt_tau, fvec in fac.items():
            for kt_v, vvec in v_int.items():
                for i in range(3):
                    for j in range(3):
                        rows.append(3 * kt_tau + i)
                        cols.append(3 * kt_v + j)
                        vals.append(fvec[i] * vvec[j])

    # boundary faces: <v, tau.n>
    for f in faces.boundary:
        mid = f.endpoints.mean(axis=0)
        tr_tau = rt_space.normal_trace(f.tri, mid, f.normal)
        tr_v = dg_space.edge_trace(f.tri, f.edge)
        v_int = f.h * 0.5 * tr_v.sum(axis=0)
        for i in range(3):
            for j in range(3):
                rows.append(3 * f.tri + i)
                cols.append(3 * f.tri + j)
                vals.append(tr_tau[i] * v_int[j])

    B_u = sp.csr_matrix((vals, (rows, cols)), shape=(rt_space.ndof, dg_space.ndof))

    # psi columns: <tau.n, (id/2 - K) phi> - <phi, tau.n>
    m_fx = bem_ops.mass_matrix(fam_flux, fam_trace)
    dense = -0.5 * m_fx - k_matrix.matrix
    B_psi = trace_map.matrix.T @ sp.csr_matrix(dense)
    return B_u, B_psi


def assemble_c(faces, bmesh, dg_space, fam_trace, params):
    """Penalty blocks <alpha [uhat], [vhat]> over all faces; the boundary
    bilinear form d is added to the psi block by the system builder."""
    alpha_i = params.alpha_interior(faces)
    alpha_b = params.alpha_boundary(faces)
    ndof_psi = fam_trace.ndof

    rows, cols, vals = [], [], []
    for fi, f in enumerate(faces.interior):
        a = alpha_i[fi]
        # the two triangles traverse the shared edge in opposite directions;
        # align the plus-side endpoint values with the minus-side order
        tr = {f.tri_minus: (dg_space.edge_trace(f.tri_minus, f.edge_minus), 1.0),
              f.tri_plus: (dg_space.edge_trace(f.tri_plus, f.edge_plus)[::-1], -1.0)}
        for kt_u, (tu, su) in tr.items():
            for kt_v, (tv, sv) in tr.items():
                loc = a * f.h * su * sv * (tu.T @ _EDGE_MASS @ tv)
                for i in range(3):
                    for j in range(3):
                        rows.append(3 * kt_v + i)
                        cols.append(3 * kt_u + j)
                        vals.append(loc[i, j])

    # boundary penalty alpha (u - psi)(v - phi) on merged pieces
    fam_faces = bem_ops.BoundaryFamily.from_boundary_faces(faces, 0)
    lo, hi, pa, pb = bem_ops.merged_pieces(fam_faces, fam_trace)
    rule = gauss_segment(3)
    c_upsi = sp.lil_matrix((dg_space.ndof, ndof_psi))
    c_psipsi = np.zeros((ndof_psi, ndof_psi))
    for mseg in range(len(lo)):
        face = faces.boundary[pa[mseg]]
        a = alpha_b[pa[mseg]]
        L = hi[mseg] - lo[mseg]
        svals = lo[mseg] + rule.points * L
        w = a * L * rule.weights
        ehat = (svals - face.s_lo) / (face.s_hi - face.s_lo)
        tr = dg_space.edge_trace(face.tri, face.edge)
        vu = (1.0 - ehat)[:, None] * tr[0][None, :] + ehat[:, None] * tr[1][None, :]
        that = (svals - fam_trace.s_lo[pb[mseg]]) / fam_trace.lengths[pb[mseg]]
        vp = fam_trace.basis_values(that)          # (2, g)
        ku = 3 * face.tri
        kp = fam_trace.dof(pb[mseg], 0)
        loc_uu = np.einsum("g,gi,gj->ij", w, vu, vu)
        loc_up = -np.einsum("g,gi,jg->ij", w, vu, vp)
        loc_pp = np.einsum("g,ig,jg->ij", w, vp, vp)
        for i in range(3):
            for j in range(3):
                rows.append(ku + i)
                cols.append(ku + j)
                vals.append(loc_uu[i, j])
        c_upsi[ku: ku + 3, kp: kp + 2] += loc_up
        c_psipsi[kp: kp + 2, kp: kp + 2] += loc_pp

    c_uu = sp.csr_matrix((vals, (rows, cols)), shape=(dg_space.ndof, dg_space.ndof))
    return c_uu, c_upsi.tocsr(), c_psipsi


def assemble_volume_load(mesh, dg_space, f_fn, volume_order=5):
    """(f, v)_Omega per broken-P1 dof by elementwise Gauss."""
    rule = gauss_triangle(volume_order)
    verts = mesh.vertices[mesh.triangles]
    pts = np.einsum("pb,tbd->tpd", rule.points, verts)
    fv = f_fn(pts)
    w = 2.0 * mesh.signed_areas[:, None] * rule.weights[None, :]
    vals = np.stack([np.ones_like(rule.points[:, 0]),
                     rule.points[:, 1], rule.points[:, 2]], axis=1)  # {1, xi, eta}
    return np.einsum("tp,pj->tj", w * fv, vals).ravel()


@dataclass
class LdgBlocks:
    """All assembled blocks of the coupled operator on the broken boundary
    family, plus the load; the c-block psi part is split into its penalty
    piece and the boundary form d."""
    A: sp.spmatrix
    B_u: sp.spmatrix
    B_psi: sp.spmatrix
    C_uu: sp.spmatrix
    C_upsi: sp.spmatrix
    C_psipsi_penalty: np.ndarray
    d_form: object
    v_flux: object
    load_sigma: np.ndarray
    load_u: np.ndarray
    load_psi: np.ndarray
    fam_flux: object
    fam_trace: object
    timings: dict = field(default_factory=dict)


def assemble_blocks(mesh, faces, bmesh, rt_space, dg_space, broken_space,
                    trace_map, params, f_fn, g0, g1, volume_order=5,
                    check_spd=False):
    """Assemble every block of the coupled scheme on the broken boundary
    family (the conforming variant restricts them afterwards)."""
    t0 = time.perf_counter()
    fam_flux = bem_ops.BoundaryFamily.from_boundary_faces(faces, 0)
    fam_trace = bem_ops.BoundaryFamily.from_boundary_mesh(bmesh, 1)
    v_flux = bem_ops.single_layer_matrix(fam_flux, fam_flux, check_spd=check_spd)
    k_matrix = bem_ops.double_layer_matrix(fam_flux, fam_trace)
    d_form = bem_ops.assemble_d(broken_space, params.nu(bmesh),
                                check_spd=check_spd)

    A = assemble_a(mesh, rt_space, trace_map, v_flux)
    B_u, B_psi = assemble_b(mesh, faces, rt_space, dg_space, trace_map,
                            fam_flux, fam_trace, k_matrix, params)
    C_uu, C_upsi, C_psipsi_pen = assemble_c(faces, bmesh, dg_space, fam_trace,
                                            params)

    load_u_vol = assemble_volume_load(mesh, dg_space, f_fn, volume_order)
    fl, fu, fp = bem_ops.apply_rhs_boundary_terms(
        fam_flux, broken_space, faces, dg_space,
        params.alpha_boundary(faces), g0, g1, bmesh)
    load_sigma = trace_map.matrix.T @ fl
    load_u = load_u_vol + fu

    return LdgBlocks(A=A, B_u=B_u, B_psi=B_psi, C_uu=C_uu, C_upsi=C_upsi,
                     C_psipsi_penalty=C_psipsi_pen, d_form=d_form,
                     v_flux=v_flux, load_sigma=load_sigma, load_u=load_u,
                     load_psi=fp, fam_flux=fam_flux, fam_trace=fam_trace,
                     timings={"assembly_s": time.perf_counter() - t0})
