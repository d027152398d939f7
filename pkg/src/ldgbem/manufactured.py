"""Manufactured interior/exterior solution pair, derived data and the error
norms of the convergence study.

Interior: u(x) = sin(10 x1 + 3 x2); exterior: the harmonic function
u_ext(x) = (x1 + x2 - 1) / ((x1 - 1/2)^2 + (x2 - 1/2)^2), which decays like
1/|x| and whose boundary trace has zero mean on the unit square by point
symmetry about the center.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, QueryError
from .mesh import SIDE_NORMALS, arclength_to_point
from .quadrature import gauss_segment, gauss_triangle

_CENTER = np.array([0.5, 0.5])


class ExactSolution:
    """Closed-form fields of the transmission test problem and the data
    (f, g0, g1) they induce."""

    def u(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.sin(10.0 * pts[..., 0] + 3.0 * pts[..., 1])

    def grad_u(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.cos(10.0 * pts[..., 0] + 3.0 * pts[..., 1])
        return np.stack([10.0 * c, 3.0 * c], axis=-1)

    def f(self, pts):
        return 109.0 * self.u(pts)

    def u_ext(self, pts):
        pts = np.asarray(pts, dtype=float)
        rel = pts - _CENTER
        den = np.einsum("...i,...i->...", rel, rel)
        if np.any(den == 0.0):
            raise QueryError("exterior solution evaluated at its singular point")
        return (pts[..., 0] + pts[..., 1] - 1.0) / den

    def grad_u_ext(self, pts):
        pts = np.asarray(pts, dtype=float)
        rel = pts - _CENTER
        den = np.einsum("...i,...i->...", rel, rel)
        if np.any(den == 0.0):
            raise QueryError("exterior solution evaluated at its singular point")
        num = pts[..., 0] + pts[..., 1] - 1.0
        grad_num = np.ones_like(pts)
        return (grad_num * den[..., None] - 2.0 * num[..., None] * rel) / den[..., None] ** 2

    # ---- boundary functions of the ccw arclength -------------------------

    def _normals(self, s):
        side = np.minimum((np.asarray(s, dtype=float) % 4.0).astype(int), 3)
        return SIDE_NORMALS[side]

    def trace_u(self, s):
        return self.u(arclength_to_point(s))

    def psi(self, s):
        """Exterior trace (zero mean on the square boundary by symmetry)."""
        return self.u_ext(arclength_to_point(s))

    def lam(self, s):
        """Exterior normal derivative (the outward normal of the square)."""
        p = arclength_to_point(s)
        return np.einsum("...i,...i->...", self.grad_u_ext(p), self._normals(s))

    def flux(self, s):
        """Interior normal derivative du/dn on the boundary."""
        p = arclength_to_point(s)
        return np.einsum("...i,...i->...", self.grad_u(p), self._normals(s))

    def g0(self, s):
        p = arclength_to_point(s)
        return self.u(p) - self.u_ext(p)

    def g1(self, s):
        return self.flux(s) - self.lam(s)

    def psi_mean(self, n_gauss=16):
        rule = gauss_segment(n_gauss)
        total = 0.0
        for side in range(4):
            total += rule.weights @ self.psi(side + rule.points)
        return total / 4.0

    def psi_zero_mean(self, s):
        return self.psi(s) - self._psi_shift

    def __init__(self):
        self._psi_shift = 0.0
        self._psi_shift = self.psi_mean()


def exact_fields():
    """Construct the manufactured solution pair with derived data."""
    return ExactSolution()


# ---------------------------------------------------------------------------
# error norms
# ---------------------------------------------------------------------------

@dataclass
class ErrorRow:
    """Per-level error norms of a discrete solution."""
    level: int
    h: float
    ndof: int
    e_sigma: float
    e_u: float
    e_jump: float
    e_jump_weighted: float
    e_psi_broken: float
    e_psi_global: float
    e_flux: float
    psi_global_is_fallback: bool = False
    assembly_s: float = 0.0
    solve_s: float = 0.0

    COLUMNS = ("level", "h", "ndof", "e_sigma", "e_u", "e_jump",
               "e_psi_broken", "e_psi_global", "e_flux",
               "assembly_s", "solve_s")


def compute_errors(sol, exact, volume_order=6, boundary_gauss=8):
    """All reported error norms of a DiscreteSolution against the exact
    fields: volume L2 errors by elementwise Gauss, boundary norms segmentwise,
    and the interpolation-type 1/2-norm surrogates of the boundary trace."""
    mesh = sol.mesh
    rule = gauss_triangle(volume_order)
    verts = mesh.vertices[mesh.triangles]
    pts = np.einsum("pb,tbd->tpd", rule.points, verts)
    wts = 2.0 * mesh.signed_areas[:, None] * rule.weights[None, :]

    u_h = sol.u_values(pts)
    sig_h = sol.sigma_values(pts)
    du = u_h - exact.u(pts)
    dsig = sig_h - exact.grad_u(pts)
    e_u = np.sqrt(np.sum(wts * du**2))
    e_sigma = np.sqrt(np.sum(wts * np.einsum("tpd->tp", dsig**2)))

    e_jump, e_jump_weighted = sol.jump_norms(boundary_gauss)

    # boundary trace error in the segmentwise interpolated 1/2-norm
    bm = sol.bmesh
    srule = gauss_segment(boundary_gauss)
    l2_sq = np.empty(bm.n_segments)
    h1_sq = np.empty(bm.n_segments)
    for k in range(bm.n_segments):
        svals = bm.s_lo[k] + srule.points * bm.h_T[k]
        w = bm.h_T[k] * srule.weights
        diff = sol.psi_values(svals, segment=k) - exact.psi_zero_mean(svals)
        ddiff = sol.psi_derivative(k) - _psi_exact_derivative(exact, svals)
        l2_sq[k] = w @ diff**2
        h1_sq[k] = w @ ddiff**2
    l2 = np.sqrt(l2_sq.sum())
    e_psi_broken = np.sqrt(l2_sq.sum() + np.sum(np.sqrt(l2_sq) * np.sqrt(h1_sq)))
    e_psi_global = np.sqrt(l2_sq.sum() + l2 * np.sqrt(h1_sq.sum()))
    fallback = not sol.psi_is_continuous

    # flux identification error on the boundary
    e_flux_sq = 0.0
    for fi, f in enumerate(sol.faces.boundary):
        svals = f.s_lo + srule.points * (f.s_hi - f.s_lo)
        w = (f.s_hi - f.s_lo) * srule.weights
        diff = sol.flux_value(fi) - exact.flux(svals)
        e_flux_sq += w @ diff**2
    e_flux = np.sqrt(e_flux_sq)

    return ErrorRow(level=mesh.level, h=mesh.h, ndof=sol.ndof,
                    e_sigma=float(e_sigma), e_u=float(e_u),
                    e_jump=float(e_jump), e_jump_weighted=float(e_jump_weighted),
                    e_psi_broken=float(e_psi_broken),
                    e_psi_global=float(e_psi_global), e_flux=float(e_flux),
                    psi_global_is_fallback=fallback)


def _psi_exact_derivative(exact, s):
    """Arclength derivative of the exterior trace (tangential derivative)."""
    from .mesh import SIDE_TANGENTS
    p = arclength_to_point(s)
    side = np.minimum((np.asarray(s, dtype=float) % 4.0).astype(int), 3)
    return np.einsum("...i,...i->...", exact.grad_u_ext(p), SIDE_TANGENTS[side])


# ---------------------------------------------------------------------------
# convergence-order fitting
# ---------------------------------------------------------------------------

@dataclass
class EocTable:
    """Least-squares convergence orders over the last fit_window levels and
    pairwise orders between consecutive levels."""
    rows: list
    slopes: dict
    pairwise: dict
    fit_residual: dict
    fit_window: int = 3
    warnings: list = field(default_factory=list)


_ERROR_COLUMNS = ("e_sigma", "e_u", "e_jump", "e_psi_broken", "e_psi_global",
                  "e_flux")


def fit_eoc(rows, fit_window=3):
    """Fit log(e) ~ slope * log(h) over the last fit_window rows per error
    column; also report pairwise orders log(e_i/e_{i+1}) / log(h_i/h_{i+1})."""
    if len(rows) < 3:
        raise ConfigurationError("need at least 3 rows to fit convergence orders")
    rows = sorted(rows, key=lambda r: r.level)
    slopes, pairwise, resid = {}, {}, {}
    warnings = []
    for col in _ERROR_COLUMNS:
        e = np.array([getattr(r, col) for r in rows])
        h = np.array([r.h for r in rows])
        ok = e > 0.0
        if not ok.all():
            warnings.append(f"column {col}: nonpositive errors excluded from fit")
        ht, et = h[ok][-fit_window:], e[ok][-fit_window:]
        if len(et) >= 2:
            A = np.column_stack([np.log(ht), np.ones_like(ht)])
            coef, res, *_ = np.linalg.lstsq(A, np.log(et), rcond=None)
            slopes[col] = float(coef[0])
            resid[col] = float(res[0]) if len(res) else 0.0
        else:
            slopes[col] = float("nan")
            resid[col] = float("nan")
        pw = []
        for i in range(len(rows) - 1):
            e0, e1 = getattr(rows[i], col), getattr(rows[i + 1], col)
            if e0 > 0 and e1 > 0:
                pw.append(float(np.log(e0 / e1) / np.log(rows[i].h / rows[i + 1].h)))
            else:
                pw.append(float("nan"))
        pairwise[col] = pw
    return EocTable(rows=list(rows), slopes=slopes, pairwise=pairwise,
                    fit_residual=resid, fit_window=fit_window,
                    warnings=warnings)
