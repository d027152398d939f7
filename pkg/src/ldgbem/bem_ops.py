"""Galerkin matrices of the 2D Laplace layer operators on the square boundary.

Densities live in piecewise-polynomial families over ccw arclength pieces
(each piece inside one side).  Single-layer pairings use the closed-form
tables of the quadrature module (collinear / perpendicular sides) or an
analytic-inner + Gauss-outer rule (opposite sides).  Double-layer pairings
use the analytic inner primitive with a corner-graded outer rule; same-side
entries vanish identically because the kernel does.

The adjoint double layer is never assembled: pairings with it are realized by
transposition, which is exact by the definition of the adjoint.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import AssemblyError, ConfigurationError
from .mesh import SIDE_STARTS, SIDE_TANGENTS, SIDE_NORMALS
from .quadrature import (TWO_PI, collinear_log_table, perpendicular_log_table,
                         segment_log_moments, segment_double_layer_moments,
                         graded_rule, gauss_segment)


class BoundaryFamily:
    """Piecewise-polynomial density family on the square boundary.

    Pieces are ccw arclength intervals, each within a single side (corners
    are always breakpoints); dof (p, i) -> p*(degree+1) + i pairs piece p
    with the local monomial shat^i, shat in [0,1].
    """

    def __init__(self, s_lo, s_hi, degree):
        self.s_lo = np.asarray(s_lo, dtype=float)
        self.s_hi = np.asarray(s_hi, dtype=float)
        self.degree = degree
        self.n_pieces = len(self.s_lo)
        self.ndof = self.n_pieces * (degree + 1)
        self.sides = np.minimum(self.s_lo.astype(int), 3)
        if np.any(self.s_hi > self.sides + 1.0 + 1e-12):
            raise AssemblyError("family piece crosses a corner")
        self.lengths = self.s_hi - self.s_lo
        self.starts = (SIDE_STARTS[self.sides]
                       + (self.s_lo - self.sides)[:, None] * SIDE_TANGENTS[self.sides])
        self.tangents = SIDE_TANGENTS[self.sides]
        self.normals = SIDE_NORMALS[self.sides]

    @classmethod
    def from_boundary_faces(cls, faces, degree=0):
        return cls([f.s_lo for f in faces.boundary],
                   [f.s_hi for f in faces.boundary], degree)

    @classmethod
    def from_boundary_mesh(cls, bmesh, degree):
        return cls(bmesh.s_lo, bmesh.s_hi, degree)

    @classmethod
    def refined_from_mesh(cls, bmesh, factor, degree=2):
        lo = np.repeat(bmesh.s_lo, factor)
        step = np.repeat(bmesh.h_T, factor) / factor
        offs = np.tile(np.arange(factor), bmesh.n_segments)
        lo = lo + offs * step
        return cls(lo, lo + step, degree)

    def dof(self, piece, power):
        return piece * (self.degree + 1) + power

    def basis_values(self, shat):
        """(npowers, npts) local monomial values."""
        shat = np.asarray(shat, dtype=float)
        return shat[None, :] ** np.arange(self.degree + 1)[:, None]

    def interpolate(self, fn):
        """Coefficients of the piecewise interpolant of fn(s) at equispaced
        local nodes (degree+1 per piece)."""
        d = self.degree
        nodes = np.linspace(0.0, 1.0, d + 1)
        V = nodes[:, None] ** np.arange(d + 1)[None, :]
        Vinv = np.linalg.inv(V)
        svals = self.s_lo[:, None] + np.outer(self.lengths, nodes)
        fvals = fn(svals.ravel()).reshape(self.n_pieces, d + 1)
        return (fvals @ Vinv.T).ravel()

    def evaluate(self, coeffs, s):
        """Pointwise values at arclengths s (right-continuous at nodes)."""
        s = np.atleast_1d(np.asarray(s, dtype=float)) % 4.0
        idx = np.searchsorted(self.s_lo, s, side="right") - 1
        idx = np.clip(idx, 0, self.n_pieces - 1)
        shat = (s - self.s_lo[idx]) / self.lengths[idx]
        d = self.degree
        c = coeffs.reshape(self.n_pieces, d + 1)[idx]
        return np.einsum("pi,ip->p", c, shat[None, :] ** np.arange(d + 1)[:, None])


def merged_pieces(fam_a, fam_b, tol=1e-12):
    """Common refinement of two families tiling the boundary: returns
    (s_lo, s_hi, piece_a, piece_b) arrays.  Raises AssemblyError when the
    families do not tile the same boundary."""
    for fam in (fam_a, fam_b):
        if abs(fam.lengths.sum() - 4.0) > tol:
            raise AssemblyError("family does not tile the boundary")
    cuts = np.unique(np.concatenate([fam_a.s_lo, fam_a.s_hi, fam_b.s_lo, fam_b.s_hi]))
    cuts = cuts[(cuts >= 0.0) & (cuts <= 4.0 + tol)]
    lo, hi = cuts[:-1], cuts[1:]
    keep = hi - lo > tol
    lo, hi = lo[keep], hi[keep]
    mid = 0.5 * (lo + hi)
    pa = np.searchsorted(fam_a.s_lo, mid, side="right") - 1
    pb = np.searchsorted(fam_b.s_lo, mid, side="right") - 1
    if np.any(mid > fam_a.s_hi[pa] + tol) or np.any(mid > fam_b.s_hi[pb] + tol):
        raise AssemblyError("families have unmergeable partitions")
    return lo, hi, pa, pb


def mass_matrix(fam_a, fam_b, n_gauss=4):
    """Exact L2(boundary) pairing <p_i, q_j> between two tiling families."""
    lo, hi, pa, pb = merged_pieces(fam_a, fam_b)
    rule = gauss_segment(n_gauss)
    M = np.zeros((fam_a.ndof, fam_b.ndof))
    da, db = fam_a.degree, fam_b.degree
    for m in range(len(lo)):
        L = hi[m] - lo[m]
        svals = lo[m] + rule.points * L
        sa = (svals - fam_a.s_lo[pa[m]]) / fam_a.lengths[pa[m]]
        sb = (svals - fam_b.s_lo[pb[m]]) / fam_b.lengths[pb[m]]
        va = fam_a.basis_values(sa)
        vb = fam_b.basis_values(sb)
        blk = np.einsum("g,ig,jg->ij", L * rule.weights, va, vb)
        ia = fam_a.dof(pa[m], 0)
        ib = fam_b.dof(pb[m], 0)
        M[ia: ia + da + 1, ib: ib + db + 1] += blk
    return M


# ---------------------------------------------------------------------------
# single layer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingleLayerMatrix:
    """Dense Galerkin matrix <p_i, V q_j> between two boundary families."""
    matrix: np.ndarray
    min_eigenvalue: float | None


def _corner_s(side_row, side_col):
    """Arclength coordinate (on each side) of the corner where the two
    carrier lines of adjacent sides intersect; the wrap at side 3 / side 0
    puts the corner at s = 4 on side 3 and s = 0 on side 0."""
    if (side_row + 1) % 4 == side_col:
        return side_row + 1.0, float((side_row + 1) % 4)
    if (side_col + 1) % 4 == side_row:
        c_col, c_row = _corner_s(side_col, side_row)
        return c_row, c_col
    raise AssemblyError(f"sides {side_row}, {side_col} are not adjacent")


def single_layer_matrix(fam_rows, fam_cols, n_gauss_opposite=16,
                        check_spd=False):
    """Dense matrix of <p_i, V q_j> with V the single-layer operator of
    E(r) = -ln(r)/(2 pi)."""
    da, db = fam_rows.degree, fam_cols.degree
    M = np.zeros((fam_rows.ndof, fam_cols.ndof))
    M4 = M.reshape(fam_rows.n_pieces, da + 1, fam_cols.n_pieces, db + 1)

    for sa in range(4):
        rows = np.flatnonzero(fam_rows.sides == sa)
        if rows.size == 0:
            continue
        for sb in range(4):
            cols = np.flatnonzero(fam_cols.sides == sb)
            if cols.size == 0:
                continue
            if sa == sb:
                # collinear: common coordinate = arclength centered on the side
                c0 = sa + 0.5
                a = fam_rows.s_lo[rows] - c0
                b = fam_rows.s_hi[rows] - c0
                c = fam_cols.s_lo[cols] - c0
                d = fam_cols.s_hi[cols] - c0
                A, C = np.meshgrid(a, c, indexing="ij")
                B, D = np.meshgrid(b, d, indexing="ij")
                tab = collinear_log_table(A, B, C, D, da, db)
                tab = _to_local(tab, A, B - A, C, D - C, da, db)
            elif (sa - sb) % 2 == 0:
                # opposite sides: smooth kernel, Gauss outside
                tab = _opposite_side_table(fam_rows, rows, fam_cols, cols,
                                           da, db, n_gauss_opposite)
            else:
                c_row, c_col = _corner_s(sa, sb)
                a = fam_rows.s_lo[rows] - c_row
                b = fam_rows.s_hi[rows] - c_row
                c = fam_cols.s_lo[cols] - c_col
                d = fam_cols.s_hi[cols] - c_col
                A, C = np.meshgrid(a, c, indexing="ij")
                B, D = np.meshgrid(b, d, indexing="ij")
                tab = perpendicular_log_table(A, B, C, D, da, db)
                tab = _to_local(tab, A, B - A, C, D - C, da, db)
            M4[np.ix_(rows, range(da + 1), cols, range(db + 1))] = \
                tab.transpose(2, 0, 3, 1)
    M *= -1.0 / TWO_PI
    min_eig = None
    if check_spd:
        min_eig = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())
        if min_eig <= 0.0:
            raise AssemblyError(
                f"single-layer matrix not positive definite (min eig {min_eig:g})")
    return SingleLayerMatrix(matrix=M, min_eigenvalue=min_eig)


def _to_local(tab, pa, qa, pb, qb, da, db):
    """Convert raw monomial tables in the line coordinates into local-basis
    tables; pa, qa, pb, qb broadcast over the pair grid."""
    out = np.zeros_like(tab)
    from math import comb
    for i in range(da + 1):
        for j in range(db + 1):
            acc = 0.0
            for m in range(i + 1):
                cm = comb(i, m) * (-pa) ** (i - m) / qa ** i
                for n in range(j + 1):
                    cn = comb(j, n) * (-pb) ** (j - n) / qb ** j
                    acc = acc + cm * cn * tab[m, n]
            out[i, j] = acc
    return out


def _opposite_side_table(fam_rows, rows, fam_cols, cols, da, db, ng):
    """Raw local-basis tables for parallel sides at distance >= 1 via outer
    Gauss and the analytic inner integral (returns ln-kernel integrals)."""
    gx, gw = np.polynomial.legendre.leggauss(ng)
    gx = 0.5 * (gx + 1.0)
    gw = 0.5 * gw
    nr, nc = rows.size, cols.size
    out = np.empty((da + 1, db + 1, nr, nc))
    starts = fam_cols.starts[cols]
    tangents = fam_cols.tangents[cols]
    lengths = fam_cols.lengths[cols]
    for ii, p in enumerate(rows):
        xs = (fam_rows.starts[p][None, :]
              + (fam_rows.lengths[p] * gx)[:, None] * fam_rows.tangents[p][None, :])
        mom = segment_log_moments(starts[:, None, :], tangents[:, None, :],
                                  lengths[:, None], xs[None, :, :], db)
        # mom: (db+1, nc, ng); convert inner monomials t^n -> that^j
        local = mom / lengths[None, :, None] ** np.arange(db + 1)[:, None, None]
        for i in range(da + 1):
            w = (fam_rows.lengths[p] * gw) * gx ** i
            out[i, :, ii, :] = np.einsum("g,jcg->jc", w, local)
    return out


# ---------------------------------------------------------------------------
# double layer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoubleLayerMatrix:
    """Dense Galerkin matrix <p_i, K q_j>; rows on a flux-type family,
    columns on a trace-type family."""
    matrix: np.ndarray


def _row_outer_rule(fam, piece, n_plain=16):
    """Outer quadrature on one row piece, graded toward square corners the
    piece touches (the inner analytic integral has log endpoint behavior
    there)."""
    lo = fam.s_lo[piece]
    hi = fam.s_hi[piece]
    at_corner_start = abs(lo - round(lo)) < 1e-12
    at_corner_end = abs(hi - round(hi)) < 1e-12
    if not (at_corner_start or at_corner_end):
        gx, gw = np.polynomial.legendre.leggauss(n_plain)
        pts = fam.lengths[piece] * 0.5 * (gx + 1.0)
        wts = fam.lengths[piece] * 0.5 * gw
        return pts, wts
    return graded_rule(fam.lengths[piece], at_corner_start, at_corner_end,
                       n_gauss=12, levels=10, ratio=0.15)


def double_layer_matrix(fam_rows, fam_cols):
    """Dense matrix of <p_i, K q_j> with K phi(x) = int dE/dn(y) phi(y) dS(y).

    Same-side entries vanish identically ((x-y).n(y) = 0 on a line); other
    pairs use the analytic inner primitive and a corner-graded outer rule.
    """
    da, db = fam_rows.degree, fam_cols.degree
    M = np.zeros((fam_rows.ndof, fam_cols.ndof))
    M4 = M.reshape(fam_rows.n_pieces, da + 1, fam_cols.n_pieces, db + 1)
    for p in range(fam_rows.n_pieces):
        cols = np.flatnonzero(fam_cols.sides != fam_rows.sides[p])
        if cols.size == 0:
            continue
        pts, wts = _row_outer_rule(fam_rows, p)
        xs = (fam_rows.starts[p][None, :]
              + pts[:, None] * fam_rows.tangents[p][None, :])
        mom = segment_double_layer_moments(
            fam_cols.starts[cols][:, None, :], fam_cols.tangents[cols][:, None, :],
            fam_cols.normals[cols][:, None, :], fam_cols.lengths[cols][:, None],
            xs[None, :, :], db)
        local = mom / fam_cols.lengths[cols][None, :, None] ** \
            np.arange(db + 1)[:, None, None]
        shat = pts / fam_rows.lengths[p]
        for i in range(da + 1):
            w = wts * shat ** i
            M4[p, i][np.ix_(cols, range(db + 1))] = \
                np.einsum("g,jcg->cj", w, local)
    return DoubleLayerMatrix(matrix=M)


# ---------------------------------------------------------------------------
# node-evaluation operator and the stabilized broken hypersingular form
# ---------------------------------------------------------------------------

def node_potential_matrix(bmesh):
    """Matrix P with P[p, k] = single-layer potential at node p of a unit
    constant density on segment k (well defined, log-integrable)."""
    xs = bmesh.node_points
    mom = segment_log_moments(bmesh.starts[:, None, :], bmesh.tangents[:, None, :],
                              bmesh.h_T[:, None], xs[None, :, :], 0)
    return -mom[0].T / TWO_PI


def assemble_T_node_matrix(space):
    """Values of (V d/ds psi) at every node, as a matrix on the broken
    boundary space coefficients."""
    P = node_potential_matrix(space.bmesh)
    return P @ space.derivative_matrix().toarray()


@dataclass(frozen=True)
class DgHypersingularForm:
    """Stabilized broken hypersingular form: curl-curl single-layer part
    (symmetric), node-coupling part (skew), node-jump penalty (symmetric)."""
    matrix: np.ndarray
    curl_part: np.ndarray
    skew_part: np.ndarray
    penalty_part: np.ndarray
    seg_single_layer: SingleLayerMatrix


def assemble_d(space, nu, check_spd=False):
    """Broken-space bilinear form with matrix D[i, j] = d(psi_j, phi_i):
    the curl-curl single-layer pairing plus the skew node coupling through
    the node-evaluation operator plus the nu-weighted node-jump penalty.

    With jumps signed incoming-minus-outgoing and the scalar node values
    T psi = (V psi')(p), segmentwise integration by parts gives
    <W psi, phi> = <V psi', phi'> - sum_p (T psi)(p) [phi]_p for continuous
    psi, which fixes the orientation of the skew coupling.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.ndim == 0:
        nu = np.full(space.bmesh.n_nodes, float(nu))
    if np.any(nu <= 0.0) or not np.all(np.isfinite(nu)):
        raise ConfigurationError("node penalty weights must be positive")
    fam0 = BoundaryFamily.from_boundary_mesh(space.bmesh, 0)
    Vseg = single_layer_matrix(fam0, fam0, check_spd=check_spd)
    G = space.derivative_matrix().toarray()
    C = G.T @ Vseg.matrix @ G
    Tn = node_potential_matrix(space.bmesh) @ G
    J = space.jump_matrix().toarray()
    JT = J.T @ Tn
    S = JT.T - JT
    P = (J.T * nu) @ J
    return DgHypersingularForm(matrix=C + S + P, curl_part=C, skew_part=S,
                               penalty_part=P, seg_single_layer=Vseg)


@dataclass(frozen=True)
class ConformingHypersingularForm:
    """Symmetric PSD matrix <V psi', phi'> on the continuous boundary space;
    kernel = constants."""
    matrix: np.ndarray
    seg_single_layer: SingleLayerMatrix


def assemble_conforming_W(conf_space, check_spd=False):
    fam0 = BoundaryFamily.from_boundary_mesh(conf_space.bmesh, 0)
    Vseg = single_layer_matrix(fam0, fam0, check_spd=check_spd)
    G = (conf_space.broken.derivative_matrix() @ conf_space.prolongation).toarray()
    W = G.T @ Vseg.matrix @ G
    return ConformingHypersingularForm(matrix=W, seg_single_layer=Vseg)


# ---------------------------------------------------------------------------
# data terms
# ---------------------------------------------------------------------------

def flux_data_vector(fam_flux, g0, g1, bmesh, aux_refine=4, n_gauss=12):
    """<V g1 + g0, tau.n> per flux dof: g0 integrated by Gauss, g1 through a
    piecewise-P2 interpolant on an auxiliary refined partition and the
    analytic single-layer pairing."""
    rule = gauss_segment(n_gauss)
    vec = np.zeros(fam_flux.ndof)
    da = fam_flux.degree
    for p in range(fam_flux.n_pieces):
        svals = fam_flux.s_lo[p] + rule.points * fam_flux.lengths[p]
        gv = g0(svals)
        for i in range(da + 1):
            vec[fam_flux.dof(p, i)] = fam_flux.lengths[p] * \
                ((rule.weights * rule.points ** i) @ gv)
    fam_data = BoundaryFamily.refined_from_mesh(bmesh, aux_refine, degree=2)
    coeffs = fam_data.interpolate(g1)
    Vmat = single_layer_matrix(fam_flux, fam_data).matrix
    return vec + Vmat @ coeffs


def trace_data_vector(space, g1, n_gauss=12):
    """<(id/2 + K') g1, phi> per broken trace dof, computed by duality as
    <g1, (id/2 + K) phi> with exact g1 at the outer quadrature points."""
    fam = BoundaryFamily.from_boundary_mesh(space.bmesh, 1)
    vec = np.zeros(fam.ndof)
    for p in range(fam.n_pieces):
        pts, wts = _row_outer_rule(fam, p, n_plain=n_gauss)
        svals = fam.s_lo[p] + pts
        xs = (fam.starts[p][None, :] + pts[:, None] * fam.tangents[p][None, :])
        gv = g1(svals)
        # identity part: (1/2) <g1, phi> on this piece
        shat = pts / fam.lengths[p]
        for i in range(2):
            vec[fam.dof(p, i)] += 0.5 * ((wts * shat ** i) @ gv)
        # K part: integrate g1(x) * (K phi_j)(x) over the piece for all j
        cols = np.flatnonzero(fam.sides != fam.sides[p])
        if cols.size == 0:
            continue
        mom = segment_double_layer_moments(
            fam.starts[cols][:, None, :], fam.tangents[cols][:, None, :],
            fam.normals[cols][:, None, :], fam.lengths[cols][:, None],
            xs[None, :, :], 1)
        local = mom / fam.lengths[cols][None, :, None] ** \
            np.arange(2)[:, None, None]
        contrib = np.einsum("g,jcg->cj", wts * gv, local)
        for ci, c in enumerate(cols):
            vec[fam.dof(c, 0): fam.dof(c, 0) + 2] += contrib[ci]
    return vec


def single_layer_potential(fam, coeffs, xs):
    """Pointwise single-layer potential of a family density at points xs."""
    mom = segment_log_moments(fam.starts[:, None, :], fam.tangents[:, None, :],
                              fam.lengths[:, None], xs[None, :, :], fam.degree)
    local = mom / fam.lengths[None, :, None] ** np.arange(fam.degree + 1)[:, None, None]
    c = coeffs.reshape(fam.n_pieces, fam.degree + 1)
    return -np.einsum("pi,ipg->g", c, local) / TWO_PI


def double_layer_potential(fam, coeffs, xs):
    """Pointwise double-layer potential of a family density at points xs
    (for xs on the boundary this is the principal value: the flat-panel
    kernel vanishes on the panel through the point)."""
    mom = segment_double_layer_moments(
        fam.starts[:, None, :], fam.tangents[:, None, :],
        fam.normals[:, None, :], fam.lengths[:, None], xs[None, :, :],
        fam.degree)
    local = mom / fam.lengths[None, :, None] ** np.arange(fam.degree + 1)[:, None, None]
    c = coeffs.reshape(fam.n_pieces, fam.degree + 1)
    return np.einsum("pi,ipg->g", c, local)


def calderon_residual_norm(conf_space, fam_flux, psi_node_values, lam_coeffs,
                           n_gauss=8):
    """L2(boundary) norm of the first-Calderon-identity residual
    psi - (id/2 + K) psi + V lam for a continuous piecewise-P1 psi and a
    piecewise-P0 flux lam."""
    from .mesh import arclength_to_point
    bmesh = conf_space.bmesh
    fam_tr = BoundaryFamily.from_boundary_mesh(bmesh, 1)
    broken = conf_space.prolongation @ np.asarray(psi_node_values, dtype=float)
    rule = gauss_segment(n_gauss)
    total = 0.0
    for k in range(bmesh.n_segments):
        svals = bmesh.s_lo[k] + rule.points * bmesh.h_T[k]
        xs = arclength_to_point(svals)
        psi_vals = broken[2 * k] + broken[2 * k + 1] * rule.points
        k_psi = double_layer_potential(fam_tr, broken, xs)
        v_lam = single_layer_potential(fam_flux, lam_coeffs, xs)
        r = 0.5 * psi_vals - k_psi + v_lam
        total += (bmesh.h_T[k] * rule.weights) @ r**2
    return float(np.sqrt(total))


def apply_rhs_boundary_terms(fam_flux, space, faces, dg_space, alpha_boundary,
                             g0, g1, bmesh, aux_refine=4):
    """Boundary load contributions of the coupled scheme:

    returns (flux part <V g1 + g0, tau.n> on the flux family,
             u part <alpha g0, v> on element traces,
             trace part -<alpha g0, phi> + <(id/2 + K') g1, phi> on the
             broken boundary space).
    """
    f_flux = flux_data_vector(fam_flux, g0, g1, bmesh, aux_refine=aux_refine)

    rule = gauss_segment(8)
    f_u = np.zeros(3 * dg_space.mesh.n_triangles)
    fam_trace = BoundaryFamily.from_boundary_mesh(bmesh, 1)
    f_psi = np.zeros(fam_trace.ndof)
    fam_faces = BoundaryFamily.from_boundary_faces(faces, 0)
    lo, hi, pa, pb = merged_pieces(fam_faces, fam_trace)
    for m in range(len(lo)):
        face = faces.boundary[pa[m]]
        L = hi[m] - lo[m]
        svals = lo[m] + rule.points * L
        gv = g0(svals)
        w = L * rule.weights * alpha_boundary[pa[m]]
        # element P1 trace on the face, via the local edge coordinate
        ehat = (svals - face.s_lo) / (face.s_hi - face.s_lo)
        tr = dg_space.edge_trace(face.tri, face.edge)
        vals_u = (1.0 - ehat)[:, None] * tr[0][None, :] + ehat[:, None] * tr[1][None, :]
        f_u[3 * face.tri: 3 * face.tri + 3] += (w * gv) @ vals_u
        that = (svals - fam_trace.s_lo[pb[m]]) / fam_trace.lengths[pb[m]]
        vb = fam_trace.basis_values(that)
        f_psi[fam_trace.dof(pb[m], 0): fam_trace.dof(pb[m], 0) + 2] -= vb @ (w * gv)
    f_psi += trace_data_vector(space, g1)
    return f_flux, f_u, f_psi
