"""Gauss rules and closed-form integrals of the 2D log kernel on segments.

The fundamental solution used throughout is E(r) = -ln(r) / (2*pi), so the
single-layer pairing of two polynomial densities on straight segments reduces
to double integrals of s^m t^n ln|x(s)-y(t)|.  On the boundary of a square any
two segments are collinear, perpendicular or parallel-disjoint; the first two
classes are evaluated in closed form, the last with an analytic inner integral
and Gauss quadrature outside.  Arbitrary segment pairs fall back to a
geometrically graded composite Gauss rule around shared endpoints, still with
the inner integral analytic.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from .exceptions import ConfigurationError, OracleError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# plain Gauss rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadRule:
    """Quadrature nodes/weights on [0,1] (segments) or in barycentric
    coordinates on the reference triangle (weights sum to the reference
    measure: 1 for the segment, 1/2 for the triangle)."""
    points: np.ndarray
    weights: np.ndarray


def gauss_segment(order):
    """Gauss-Legendre rule with `order` points on [0,1]; exact for
    polynomials of degree <= 2*order - 1."""
    if not 1 <= order <= 20:
        raise ConfigurationError(f"segment rule needs 1 <= order <= 20, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadRule(points=0.5 * (x + 1.0), weights=0.5 * w)


# Symmetric positive-weight triangle rules: ("c", weight) is the centroid,
# ("3", a, weight) the orbit of (1-2a, a, a), ("6", (a, b), weight) the full
# orbit of (a, b, 1-a-b).  Normalized weights sum to 1.
_TRI_RULES = {
    1: [("c", None, 1.0)],
    2: [("3", 1.0 / 6.0, 1.0 / 3.0)],
    4: [
        ("3", 0.445948490915965, 0.223381589678011),
        ("3", 0.091576213509771, 0.109951743655322),
    ],
    5: [
        ("c", None, 0.225),
        ("3", 0.470142064105115, 0.132394152788506),
        ("3", 0.101286507323456, 0.125939180544827),
    ],
    6: [
        ("3", 0.249286745170910, 0.116786275726379),
        ("3", 0.063089014491502, 0.050844906370207),
        ("6", (0.053145049844816, 0.310352451033785), 0.082851075618374),
    ],
    8: [
        ("c", None, 0.144315607677787),
        ("3", 0.459292588292723, 0.095091634413471),
        ("3", 0.170569307751760, 0.103217370534718),
        ("3", 0.050547228317031, 0.032458497623198),
        ("6", (0.263112829634638, 0.008394777409958), 0.027230314174435),
    ],
}


def gauss_triangle(order):
    """Symmetric rule on the reference triangle, exact for polynomials of
    total degree <= order (1..8; the next tabulated degree is used where no
    positive-weight symmetric rule exists)."""
    if order not in range(1, 9):
        raise ConfigurationError(f"unsupported triangle rule order {order}")
    degree = min(d for d in _TRI_RULES if d >= order)
    pts, wts = [], []
    for kind, a, w in _TRI_RULES[degree]:
        if kind == "c":
            orbit = [(1 / 3, 1 / 3, 1 / 3)]
        elif kind == "3":
            c = 1.0 - 2.0 * a
            orbit = [(c, a, a), (a, c, a), (a, a, c)]
        else:
            a, b = a
            c = 1.0 - a - b
            orbit = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    return QuadRule(points=np.asarray(pts), weights=0.5 * np.asarray(wts))


# ---------------------------------------------------------------------------
# guarded elementary functions (prefactors vanish wherever a limit is taken)
# ---------------------------------------------------------------------------

def _log_abs(w):
    aw = np.abs(np.asarray(w, dtype=float))
    pos = aw > 0.0
    return np.where(pos, np.log(np.where(pos, aw, 1.0)), 0.0)


def _log_r2(s, t):
    r2 = s * s + t * t
    pos = r2 > 0.0
    return np.where(pos, np.log(np.where(pos, r2, 1.0)), 0.0)


def _atan_ratio(num, den):
    """arctan(num/den) for num, den >= 0, with the quadrant limits pi/2 on
    den = 0 < num and 0 at num = den = 0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    pos = den > 0.0
    val = np.arctan(np.where(pos, num, 0.0) / np.where(pos, den, 1.0))
    return np.where(pos, val, np.where(num > 0.0, 0.5 * np.pi, 0.0))


# ---------------------------------------------------------------------------
# collinear pairs: closed form over rectangles in the shared line coordinate
# ---------------------------------------------------------------------------

def _antider_s_k_logabs(k, s, t):
    """Antiderivative in s of s^k * ln|s-t|, continuous across s = t."""
    val = (s ** (k + 1) - t ** (k + 1)) / (k + 1) * _log_abs(s - t)
    acc = 0.0
    for j in range(k + 1):
        acc = acc + t ** (k - j) * s ** (j + 1) / (j + 1)
    return val - acc / (k + 1)


def _collinear_primitive(m, n, s, t):
    """R with d2 R / ds dt = s^m t^n ln|s-t|, valid on both sides of s = t."""
    poly = 0.0
    for j in range(n + 1):
        poly = poly + t ** (j + 1) / (j + 1) * s ** (m + n - j + 1) / (m + n - j + 1)
    return (t ** (n + 1) * _antider_s_k_logabs(m, s, t)
            - _antider_s_k_logabs(m + n + 1, s, t) - poly) / (n + 1)


def collinear_log_table(a, b, c, d, deg_s, deg_t):
    """I[m, n] = int_a^b int_c^d s^m t^n ln|s-t| dt ds for two segments on a
    common line (any overlap).  Inputs broadcast; leading output axes are
    (deg_s+1, deg_t+1)."""
    a, b, c, d = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, c, d)))
    out = np.empty((deg_s + 1, deg_t + 1) + a.shape)
    for m in range(deg_s + 1):
        for n in range(deg_t + 1):
            out[m, n] = (_collinear_primitive(m, n, b, d)
                         - _collinear_primitive(m, n, a, d)
                         - _collinear_primitive(m, n, b, c)
                         + _collinear_primitive(m, n, a, c))
    return out


# ---------------------------------------------------------------------------
# perpendicular pairs: closed form in signed distances from the line crossing
# ---------------------------------------------------------------------------

def _perp_primitive(m, n, s, t):
    """Q with d2 Q / ds dt = s^m t^n ln(s^2+t^2), valid for s, t >= 0."""
    L = _log_r2(s, t)
    A = _atan_ratio(t, s)
    B = _atan_ratio(s, t)
    if (m, n) == (0, 0):
        return s**2 * A + s * t * L - 3 * s * t + t**2 * A + 2 * t**2 * B
    if (m, n) == (0, 1):
        return s**3 * L / 6 - s**3 / 9 + s * t**2 * L / 2 - 7 * s * t**2 / 6 + 2 * t**3 * B / 3
    if (m, n) == (0, 2):
        return (-s**4 * A / 6 + s**3 * t / 6 + s * t**3 * L / 3 - 13 * s * t**3 / 18
                + t**4 * A / 6 + 2 * t**4 * B / 3)
    if (m, n) == (1, 0):
        return 2 * s**3 * A / 3 + s**2 * t * L / 2 - 7 * s**2 * t / 6 + t**3 * L / 6
    if (m, n) == (1, 1):
        return s**4 * L / 8 - s**4 / 16 + s**2 * t**2 * L / 4 - 3 * s**2 * t**2 / 8 + t**4 * L / 8
    if (m, n) == (1, 2):
        return (-2 * s**5 * A / 15 + 2 * s**4 * t / 15 + s**2 * t**3 * L / 6
                - 19 * s**2 * t**3 / 90 + t**5 * L / 10)
    if (m, n) == (2, 0):
        return (s**4 * A / 2 + s**3 * t * L / 3 - 13 * s**3 * t / 18 + s * t**3 / 6
                - t**4 * A / 2 - 2 * t**4 * B / 3)
    if (m, n) == (2, 1):
        return (s**5 * L / 10 - s**5 / 25 + s**3 * t**2 * L / 6 - 19 * s**3 * t**2 / 90
                + 2 * s * t**4 / 15 - 2 * t**5 * B / 15)
    if (m, n) == (2, 2):
        return (-s**6 * A / 9 + s**5 * t / 9 + s**3 * t**3 * L / 9 - s**3 * t**3 / 9
                + s * t**5 / 9 - t**6 * A / 9 - 2 * t**6 * B / 9)
    raise ConfigurationError(f"perpendicular table limited to degrees <= 2, got {(m, n)}")


def perpendicular_log_table(a1, b1, a2, b2, deg_s, deg_t):
    """I[m, n] = int int s^m t^n ln|x-y| dt ds over [a1,b1] x [a2,b2], where
    s, t are signed distances from the intersection of the two perpendicular
    carrier lines (|x-y|^2 = s^2 + t^2).  Each interval must not change sign;
    touching the intersection point is allowed."""
    a1, b1, a2, b2 = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                           for x in (a1, b1, a2, b2)))
    if np.any(a1 * b1 < -1e-300) or np.any(a2 * b2 < -1e-300):
        raise ConfigurationError("perpendicular pair must stay on one side of the corner")
    flip_s = b1 <= 0.0
    lo_s = np.where(flip_s, -b1, a1)
    hi_s = np.where(flip_s, -a1, b1)
    flip_t = b2 <= 0.0
    lo_t = np.where(flip_t, -b2, a2)
    hi_t = np.where(flip_t, -a2, b2)
    out = np.empty((deg_s + 1, deg_t + 1) + a1.shape)
    for m in range(deg_s + 1):
        sg_m = np.where(flip_s, (-1.0) ** m, 1.0)
        for n in range(deg_t + 1):
            sg = sg_m * np.where(flip_t, (-1.0) ** n, 1.0)
            out[m, n] = 0.5 * sg * (_perp_primitive(m, n, hi_s, hi_t)
                                    - _perp_primitive(m, n, lo_s, hi_t)
                                    - _perp_primitive(m, n, hi_s, lo_t)
                                    + _perp_primitive(m, n, lo_s, lo_t))
    return out


# ---------------------------------------------------------------------------
# analytic potentials of polynomial densities on one segment
# ---------------------------------------------------------------------------

def _w_log(k, tau, d2):
    """Antiderivative of tau^k * ln(tau^2 + d2) in tau (d2 >= 0)."""
    r2 = tau * tau + d2
    pos = r2 > 0.0
    L = np.where(pos, np.log(np.where(pos, r2, 1.0)), 0.0)
    d = np.sqrt(d2)
    dpos = d > 0.0
    at = np.where(dpos, np.arctan(tau / np.where(dpos, d, 1.0)),
                  0.5 * np.pi * np.sign(tau))
    if k == 0:
        return tau * L - 2.0 * tau + 2.0 * d * at
    if k == 1:
        return 0.5 * r2 * L - 0.5 * tau * tau
    if k == 2:
        return tau**3 / 3.0 * L - 2.0 / 3.0 * (tau**3 / 3.0 - d2 * tau + d2 * d * at)
    raise ConfigurationError(f"potential moments limited to degree <= 2, got {k}")


def segment_log_moments(start, direction, length, x, deg):
    """T[n] = int_0^L t^n ln|x - y(t)| dt with y(t) = start + t*direction.

    Arguments broadcast over leading axes (trailing axis 2 for points); the
    output gains a leading axis of size deg+1.  Valid for x on or off the
    segment; the weak log singularity is integrated exactly.
    """
    start = np.asarray(start, dtype=float)
    direction = np.asarray(direction, dtype=float)
    x = np.asarray(x, dtype=float)
    rel = x - start
    u0 = np.einsum("...i,...i->...", rel, direction)
    d2 = np.maximum(np.einsum("...i,...i->...", rel, rel) - u0 * u0, 0.0)
    t_hi = np.asarray(length, dtype=float) - u0
    t_lo = -u0
    base = [0.5 * (_w_log(k, t_hi, d2) - _w_log(k, t_lo, d2)) for k in range(deg + 1)]
    out = np.empty((deg + 1,) + np.shape(base[0]))
    for n in range(deg + 1):
        acc = 0.0
        for k in range(n + 1):
            acc = acc + comb(n, k) * u0 ** (n - k) * base[k]
        out[n] = acc
    return out


def segment_single_layer_moments(start, direction, length, x, deg):
    """Moments int_0^L t^n E(|x - y(t)|) dt of the single-layer kernel."""
    return -segment_log_moments(start, direction, length, x, deg) / TWO_PI


def segment_double_layer_moments(start, direction, normal, length, x, deg,
                                 tol=1e-13):
    """D[n] = int_0^L t^n  (x-y).n / (2 pi |x-y|^2)  dt.

    Exactly zero when x lies on the carrier line of the segment (the kernel
    vanishes there), which covers the same-side pairs on a polygon.
    """
    start = np.asarray(start, dtype=float)
    direction = np.asarray(direction, dtype=float)
    normal = np.asarray(normal, dtype=float)
    x = np.asarray(x, dtype=float)
    rel = x - start
    u0 = np.einsum("...i,...i->...", rel, direction)
    ds = np.einsum("...i,...i->...", rel, normal)
    t_hi = np.asarray(length, dtype=float) - u0
    t_lo = -u0
    scale = np.maximum(np.asarray(length, dtype=float), 1.0)
    on_line = np.abs(ds) <= tol * scale
    safe = np.where(on_line, 1.0, ds * ds)
    d = np.sqrt(safe)

    def prim(k, tau):
        if k == 0:
            return np.arctan(tau / d) / d
        if k == 1:
            return 0.5 * np.log(tau * tau + safe)
        if k == 2:
            return tau - d * np.arctan(tau / d)
        raise ConfigurationError(f"double-layer moments limited to degree <= 2, got {k}")

    base = [prim(k, t_hi) - prim(k, t_lo) for k in range(deg + 1)]
    out = np.empty((deg + 1,) + np.shape(base[0]))
    for n in range(deg + 1):
        acc = 0.0
        for k in range(n + 1):
            acc = acc + comb(n, k) * u0 ** (n - k) * base[k]
        out[n] = np.where(on_line, 0.0, ds * acc / TWO_PI)
    return out


# ---------------------------------------------------------------------------
# composite outer rules, geometrically graded toward singular endpoints
# ---------------------------------------------------------------------------

def graded_rule(length, grade_start, grade_end, n_gauss=12, levels=10, ratio=0.15):
    """Composite Gauss rule on [0, length], refined toward the flagged
    endpoints; returns (points, weights)."""
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    gx = 0.5 * (gx + 1.0)
    gw = 0.5 * gw

    def edges(lo, hi, toward_lo):
        span = hi - lo
        if toward_lo:
            inner = [lo + span * ratio**k for k in range(levels, 0, -1)]
        else:
            inner = [hi - span * ratio**k for k in range(levels, 0, -1)][::-1]
        return [lo] + inner + [hi]

    if grade_start and grade_end:
        mid = 0.5 * length
        cuts = edges(0.0, mid, True)[:-1] + edges(mid, length, False)
    elif grade_start:
        cuts = edges(0.0, length, True)
    elif grade_end:
        cuts = edges(0.0, length, False)
    else:
        cuts = [0.0, length]
    pts, wts = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        pts.append(lo + (hi - lo) * gx)
        wts.append((hi - lo) * gw)
    return np.concatenate(pts), np.concatenate(wts)


# ---------------------------------------------------------------------------
# generic segment-pair single-layer integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogKernelIntegrals:
    """Galerkin integrals of E(|x-y|) between polynomial densities on two
    segments; values[a, b] pairs density a on the first segment with density
    b on the second."""
    values: np.ndarray
    config: str


def _shift_basis_matrix(p, q, deg):
    """T with shat^i = sum_m T[i, m] s^m for the local coordinate
    shat = (s - p) / q."""
    T = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        for m_ in range(i + 1):
            T[i, m_] = comb(i, m_) * (-p) ** (i - m_) / q ** i
    return T


def _legendre_basis_matrix(deg):
    """Shifted-Legendre polynomials on [0,1] expressed in monomials shat^m."""
    rows = {0: [1.0], 1: [-1.0, 2.0], 2: [1.0, -6.0, 6.0]}
    T = np.zeros((deg + 1, deg + 1))
    for i in range(deg + 1):
        T[i, : i + 1] = rows[i]
    return T


def _pair_geometry(a0, a1, b0, b1, tol=1e-12):
    da = a1 - a0
    db = b1 - b0
    ta = da / np.hypot(*da)
    tb = db / np.hypot(*db)
    cross = ta[0] * tb[1] - ta[1] * tb[0]
    if abs(cross) <= tol:
        off = b0 - a0
        if abs(ta[0] * off[1] - ta[1] * off[0]) <= tol * max(1.0, np.hypot(*off)):
            return "collinear"
        return "generic"
    if abs(float(ta @ tb)) <= tol:
        return "perpendicular"
    return "generic"


def _shared_endpoint(a0, a1, b0, b1, tol=1e-12):
    for p in (a0, a1):
        for q in (b0, b1):
            if np.hypot(*(p - q)) <= tol:
                return p
    return None


def segment_pair_log_integrals(a0, a1, b0, b1, deg_a, deg_b):
    """Monomial Galerkin integrals
    I[i, j] = int_A int_B shat^i that^j ln|x-y| dS(y) dS(x),
    with shat, that the local [0,1] coordinates of the two segments."""
    a0, a1, b0, b1 = (np.asarray(p, dtype=float) for p in (a0, a1, b0, b1))
    la = float(np.hypot(*(a1 - a0)))
    lb = float(np.hypot(*(b1 - b0)))
    if la <= 0.0 or lb <= 0.0:
        raise ConfigurationError("degenerate (zero-length) segment")
    kind = _pair_geometry(a0, a1, b0, b1)

    if kind == "collinear":
        ta = (a1 - a0) / la
        lo = np.minimum.reduce([a0, a1, b0, b1])
        hi = np.maximum.reduce([a0, a1, b0, b1])
        origin = 0.5 * (lo + hi)
        pa = float((a0 - origin) @ ta)
        pb = float((b0 - origin) @ ta)
        qb = float((b1 - b0) @ ta)
        raw = collinear_log_table(pa, pa + la,
                                  min(pb, pb + qb), max(pb, pb + qb),
                                  deg_a, deg_b)
        Ta = _shift_basis_matrix(pa, la, deg_a)
        Tb = _shift_basis_matrix(pb, qb, deg_b)
        return np.einsum("im,jn,mn...->ij...", Ta, Tb, raw)

    if kind == "perpendicular":
        ta = (a1 - a0) / la
        tb = (b1 - b0) / lb
        sa, _ = np.linalg.solve(np.column_stack([ta, -tb]), b0 - a0)
        X = a0 + sa * ta
        pa = float((a0 - X) @ ta)
        pb = float((b0 - X) @ tb)
        if pa * (pa + la) >= -1e-13 and pb * (pb + lb) >= -1e-13:
            raw = perpendicular_log_table(pa, pa + la, pb, pb + lb, deg_a, deg_b)
            Ta = _shift_basis_matrix(pa, la, deg_a)
            Tb = _shift_basis_matrix(pb, lb, deg_b)
            return np.einsum("im,jn,mn...->ij...", Ta, Tb, raw)
        # a segment crossing the corner: handled by the generic path

    shared = _shared_endpoint(a0, a1, b0, b1)
    grade_start = shared is not None and np.hypot(*(a0 - shared)) <= 1e-12
    grade_end = shared is not None and np.hypot(*(a1 - shared)) <= 1e-12
    ta = (a1 - a0) / la
    tb = (b1 - b0) / lb
    pts, wts = graded_rule(la, grade_start, grade_end,
                           n_gauss=16 if shared is None else 12)
    xs = a0[None, :] + pts[:, None] * ta[None, :]
    inner = segment_log_moments(b0, tb, lb, xs, deg_b)  # (deg_b+1, npts)
    shat = pts / la
    out = np.empty((deg_a + 1, deg_b + 1))
    for i in range(deg_a + 1):
        w = wts * shat**i
        for j in range(deg_b + 1):
            out[i, j] = w @ inner[j] / lb**j
    return out


def log_segment_integrals(seg_a, seg_b, deg_a=1, deg_b=1):
    """Single-layer Galerkin integrals between shifted-Legendre densities of
    degree <= deg_a / deg_b on two straight segments.

    values[a, b] = int int E(|x-y|) p_a(x) q_b(y) dS(y) dS(x), plus a
    geometric configuration tag (identical / adjacent / disjoint).
    """
    if deg_a > 2 or deg_b > 2:
        raise ConfigurationError("densities limited to degree <= 2")
    a0, a1 = (np.asarray(p, dtype=float) for p in seg_a)
    b0, b1 = (np.asarray(p, dtype=float) for p in seg_b)
    mono = segment_pair_log_integrals(a0, a1, b0, b1, deg_a, deg_b)
    La = _legendre_basis_matrix(deg_a)
    Lb = _legendre_basis_matrix(deg_b)
    values = -np.einsum("im,jn,mn->ij", La, Lb, mono) / TWO_PI
    same = (np.allclose(a0, b0, atol=1e-14) and np.allclose(a1, b1, atol=1e-14)) or \
           (np.allclose(a0, b1, atol=1e-14) and np.allclose(a1, b0, atol=1e-14))
    if same:
        config = "identical"
    elif _shared_endpoint(a0, a1, b0, b1) is not None:
        config = "adjacent"
    else:
        config = "disjoint"
    return LogKernelIntegrals(values=values, config=config)


# ---------------------------------------------------------------------------
# adaptive reference quadrature (test oracle)
# ---------------------------------------------------------------------------

_G7 = np.polynomial.legendre.leggauss(7)
_G15 = np.polynomial.legendre.leggauss(15)


def _batch_gauss_vec(f, lo, hi, rule):
    """Vectorized Gauss sums: f maps an array of points to (npts, ncomp);
    returns per-interval integrals of shape (nint, ncomp)."""
    x, w = rule
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float)
    vals = vals.reshape(pts.shape + (-1,))
    return half[:, None] * np.einsum("ipc,p->ic", vals, w)


def adaptive_vector_oracle(integrand, a=0.0, b=1.0, tol=1e-10,
                           max_intervals=20000, breakpoints=()):
    """Adaptive-subdivision estimate of int_a^b integrand(s) ds for a
    vector-valued integrand mapping point arrays to (npts, ncomp); the global
    error criterion is the sum over intervals of the worst component."""
    cuts = [float(a)] + sorted(float(c) for c in breakpoints
                               if float(a) < float(c) < float(b)) + [float(b)]
    lo = np.asarray(cuts[:-1])
    hi = np.asarray(cuts[1:])

    def rate(xlo, xhi):
        fine = _batch_gauss_vec(integrand, xlo, xhi, _G15)
        coarse = _batch_gauss_vec(integrand, xlo, xhi, _G7)
        err = np.abs(fine - coarse).max(axis=1)
        err[~np.isfinite(fine).all(axis=1)] = np.inf
        return fine, err

    fine, err = rate(lo, hi)
    for _ in range(300):
        total_err = err.sum()
        if total_err <= tol:
            return fine.sum(axis=0)
        if lo.size >= max_intervals:
            raise OracleError("adaptive quadrature exhausted its interval budget")
        # split every interval holding more than its share of the error
        split = err > max(tol, 0.25 * total_err) / (2.0 * lo.size)
        if not split.any():
            split = err >= err.max()
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_fine, new_err = rate(new_lo, new_hi)
        lo = np.concatenate([lo[~split], new_lo])
        hi = np.concatenate([hi[~split], new_hi])
        fine = np.concatenate([fine[~split], new_fine])
        err = np.concatenate([err[~split], new_err])
    raise OracleError("adaptive quadrature failed to converge")


def adaptive_segment_oracle(integrand, a=0.0, b=1.0, tol=1e-10,
                            max_intervals=20000, breakpoints=()):
    """Adaptive-subdivision estimate of int_a^b integrand(s) ds with global
    absolute error <= tol.

    The integrand must accept numpy arrays and be finite except possibly at
    subinterval endpoints (integrable singularities allowed).  Optional
    interior `breakpoints` seed the initial subdivision, e.g. at a known
    singular point.  Raises OracleError when the subdivision budget is
    exhausted before the error estimate reaches tol.
    """
    def wrapped(pts):
        return np.asarray(integrand(pts), dtype=float).reshape(-1, 1)

    return float(adaptive_vector_oracle(wrapped, a, b, tol, max_intervals,
                                        breakpoints)[0])
