"""Thickness thresholds under which the reduced densities are convex.

Each of the three models has a sufficient convexity condition of the form
h < h0, with h0 computed from reference curvature fields and the coupling
constant C = 2 sup |I^{1/2} L^T I^{-1/2}|_F:

- ``stretch_threshold_full``   trace term with fifth-order blocks
  (models 1 and 3): a Gauss-curvature bound plus the smallest positive root
  of a pointwise cubic in t = h^2,
- ``stretch_threshold_cubic``  cubic-truncation trace term (model 2):
  h0 = 1 / sqrt(sup T), T = K/12 + (|H| + C/4)^2 / 3,
- ``volume_threshold_taylor``  squared-volume Taylor block (model 3 extra):
  principal-minor bounds of a closed-form 3x3 Hessian plus the root of a
  pointwise quadratic in t = h^2.

The cubic/quadratic coefficients here are re-derived from the defining
inequalities (expanding the products and squares directly); the brute-force
scans of those inequalities live alongside as ``scan_*`` oracles, and the
test-suite holds the closed forms to one grid step of the scans.

All thresholds are suprema-based and conservative; they are *sufficient*
bounds, so sampled Hessians may stay positive somewhat above h0.  The
geometric bound h * sup|kappa| < 2 is a hard validity constraint and is
reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .energy import shell_coefficient_table
from .errors import ConfigError

PSD_SLACK = 1e-12

_INF = float("inf")


# ---------------------------------------------------------------------------
# root finding for the pointwise polynomials g(t, x')
# ---------------------------------------------------------------------------

def smallest_positive_root(coeffs):
    """Smallest positive real root of sum_k coeffs[k] t^k, or +inf.

    Degree drops are handled by trimming near-zero leading coefficients
    (plate and cylinder charts zero out entire blocks).  Roots come from the
    companion matrix and are polished with a bracketed solve when the sign
    change survives rounding.
    """
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return _INF
    deg = len(c) - 1
    while deg > 0 and abs(c[deg]) <= 1e-14 * scale:
        deg -= 1
    if deg == 0:
        return _INF
    poly = c[: deg + 1]
    if deg == 1:
        t = -poly[0] / poly[1]
        return float(t) if t > 0 else _INF
    roots = np.roots(poly[::-1])
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(np.abs(roots.real), 1.0)].real
    pos = np.sort(real[real > 0.0])
    if pos.size == 0:
        return _INF
    t_star = float(pos[0])

    def g(t):
        return float(np.polyval(poly[::-1], t))

    lo, hi = 0.9999 * t_star, 1.0001 * t_star
    if g(lo) * g(hi) < 0.0:
        t_star = float(brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16))
    return t_star


def _root_field(c0, c1, c2, c3=None):
    """Pointwise smallest positive roots over the grid; returns (field, argmin)."""
    shape = np.shape(c1)
    c0 = np.broadcast_to(np.asarray(c0, dtype=float), shape)
    out = np.full(shape, _INF)
    it = np.ndindex(*shape)
    for idx in it:
        coeffs = [c0[idx], c1[idx], c2[idx]]
        if c3 is not None:
            coeffs.append(c3[idx])
        out[idx] = smallest_positive_root(coeffs)
    flat = int(np.argmin(out))
    argmin = np.unravel_index(flat, shape)
    return out, argmin


# ---------------------------------------------------------------------------
# model 1 / model 3 trace term
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StretchThresholds:
    """Convexity bound for the full trace density (models 1 and 3)."""

    h1_prime: float     # Gauss-curvature bound sqrt(20 / (3 sup K))
    h1_second: float    # sqrt(t*) from the pointwise cubic
    h1: float           # min of the two
    h2: float           # fifth-order block bound; same condition as h1_prime
    h0: float
    argmin: tuple       # grid index where the cubic root is smallest


def _h_from_sup(value, factor):
    """sqrt(factor / sup) when the supremum is positive, else +inf."""
    return float(np.sqrt(factor / value)) if value > 0.0 else _INF


def stretch_threshold_full(ref):
    H = ref.mean
    K = ref.gauss
    C = ref.curvature_bound
    h1_prime = _h_from_sup(float(K.max()), 20.0 / 3.0)

    absH = np.abs(H)
    absHK = np.abs(H * K)
    # expansion of 4 (c0I - C |c1I|) (c0III) >= (|c0II| + C |c1II|)^2 in
    # t = h^2, valid on t <= h1_prime^2 where c0III and c1II keep their sign
    c0 = np.full(H.shape, 1.0 / 3.0)
    c1 = -(7.0 * K / 90.0 + H * H / 9.0 + C * absH / 9.0 + C * C / 36.0)
    c2 = (K * K / 120.0 - C * absHK / 120.0 + C * absH * K / 60.0
          + C * C * K / 120.0)
    c3 = -(K ** 3 / 1600.0 - C * absHK * K / 800.0 + C * C * K * K / 1600.0)
    roots, argmin = _root_field(c0, c1, c2, c3)
    h1_second = float(np.sqrt(roots.min()))
    h1 = min(h1_prime, h1_second)
    h2 = h1_prime
    return StretchThresholds(h1_prime=h1_prime, h1_second=h1_second,
                             h1=h1, h2=h2, h0=min(h1, h2), argmin=argmin)


# ---------------------------------------------------------------------------
# model 2 trace term
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubicStretchThreshold:
    """Convexity bound for the cubic-truncation trace density (model 2)."""

    t_sup: float        # sup of T = K/12 + (|H| + C/4)^2 / 3
    h0: float
    argmax: tuple


def stretch_threshold_cubic(ref):
    H = ref.mean
    K = ref.gauss
    C = ref.curvature_bound
    T = K / 12.0 + (np.abs(H) + C / 4.0) ** 2 / 3.0
    t_sup = float(T.max())
    flat = int(np.argmax(T))
    argmax = np.unravel_index(flat, T.shape)
    h0 = 1.0 / np.sqrt(t_sup) if t_sup > 0.0 else _INF
    return CubicStretchThreshold(t_sup=t_sup, h0=float(h0), argmax=argmax)


# ---------------------------------------------------------------------------
# model 3 squared-volume Taylor block
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VolumeThresholds:
    """Convexity bound for the squared-volume Taylor density (model 3)."""

    h1: float           # first diagonal entry positive
    h2_prime: float     # leading 2x2 minor positive
    h2_second: float    # trailing 2x2 minor positive
    h2: float
    h3: float           # sqrt(t*) from the determinant quadratic
    h0: float
    argmin: tuple


def volume_threshold_taylor(ref):
    H = ref.mean
    K = ref.gauss
    neg_k = float((-K).max())
    h1 = _h_from_sup(neg_k, 12.0)
    h2_prime = _h_from_sup(neg_k, 16.0 / 3.0)
    h2_second = _h_from_sup(float(K.max()), 20.0 / 3.0)
    h2 = min(h1, h2_prime, h2_second)
    # determinant of the 3x3 Hessian divided by lambda^3 a^3 h^9 / 64:
    # 2/135 + t (K/1800 - H^2/90) - t^2 K^2/2400, t = h^2 (re-derived from
    # the minor products; the K-coefficient comes out 1/1800)
    c0 = np.full(H.shape, 2.0 / 135.0)
    c1 = K / 1800.0 - H * H / 90.0
    c2 = -(K * K) / 2400.0
    roots, argmin = _root_field(c0, c1, c2)
    h3 = float(np.sqrt(roots.min()))
    return VolumeThresholds(h1=h1, h2_prime=h2_prime, h2_second=h2_second,
                            h2=h2, h3=h3, h0=min(h3, h2), argmin=argmin)


def volume_quadratic_hessian(ref, mat, h=None):
    """Closed-form Hessian of the squared-volume quadratic, per grid point.

    Variables are (r, X, Y) = (a_m/a_y0) (1, dH, dK); returns an
    (n1, n2, 3, 3) stack (lam a_y0 / 4) M(h; H, K).
    """
    h = mat.h if h is None else float(h)
    H = ref.mean
    K = ref.gauss
    a = ref.area
    n1, n2 = H.shape
    M = np.zeros((n1, n2, 3, 3))
    M[..., 0, 0] = 2.0 * h + K * h ** 3 / 6.0
    M[..., 1, 1] = 2.0 * h ** 3 / 3.0 + (h ** 5 / 40.0) * (16.0 * H * H - 4.0 * K)
    M[..., 2, 2] = h ** 5 / 40.0
    M[..., 0, 2] = M[..., 2, 0] = h ** 3 / 6.0
    M[..., 1, 2] = M[..., 2, 1] = -H * h ** 5 / 10.0
    return 0.25 * mat.lam * a[..., None, None] * M


# ---------------------------------------------------------------------------
# quadratic-form Hessians of the trace densities, sampled convexity
# ---------------------------------------------------------------------------

def shell_quadratic_hessian(ref, mat, full, h=None):
    """12x12 Hessian of the trace density viewed as a quadratic in (E, G).

    E plays grad m and G plays grad n_m as independent 3x2 matrices;
    the density's fundamental-form slots become E^T E, E^T G, G^T G, so the
    density is an (x'-dependent) quadratic form on R^12 and its Hessian is
    state-independent.  Assembled by polarization of the coefficient table,
    returned as an (n1, n2, 12, 12) stack (flattening order: E rows first,
    then G rows, each row-major 3x2).
    """
    h = mat.h if h is None else float(h)
    table = shell_coefficient_table(ref.mean, ref.gauss, h, full)
    kernels = {0: ref.kernel0, 1: ref.kernel1, 2: ref.kernel2}
    n1, n2 = ref.mean.shape

    # quadratic form Q(E, G) = sum_p [ cI <E^T E, W_p> + cII <E^T G, W_p>
    #                                  + cIII <G^T G, W_p> ]  (times mu/2)
    # Hessian blocks: d2/dE2 [i a, j b] = 2 cI W[a, b] delta_ij, etc.
    hess = np.zeros((n1, n2, 12, 12))
    eye3 = np.eye(3)
    for (p, form), coef in ((k, v) for k, v in table.items()
                            if isinstance(k, tuple)):
        W = kernels[p]
        sym = 0.5 * (W + np.swapaxes(W, -1, -2))
        coef_f = np.broadcast_to(np.asarray(coef, dtype=float), (n1, n2))
        block = np.einsum("...,ij,...ab->...iajb", coef_f, eye3, sym)
        block = block.reshape(n1, n2, 6, 6)
        if form == "I":
            hess[..., :6, :6] += 2.0 * block
        elif form == "III":
            hess[..., 6:, 6:] += 2.0 * block
        else:
            hess[..., :6, 6:] += block
            hess[..., 6:, :6] += np.swapaxes(block, -1, -2)
    return 0.5 * mat.mu * hess


def sample_convexity(ref, mat, which, h=None, n_samples=1000, seed=0):
    """Minimum Hessian eigenvalue and Rayleigh-quotient sample, with scale.

    ``which`` picks the density: "full" or "cubic" for the trace quadratics
    (12 variables), "volume" for the squared-volume quadratic (3 variables).
    Returns (min_eigenvalue, min_rayleigh, scale) where scale is the largest
    Hessian magnitude encountered; PSD within slack means
    min_eigenvalue >= -1e-12 * scale.
    """
    if which == "full":
        hess = shell_quadratic_hessian(ref, mat, full=True, h=h)
    elif which == "cubic":
        hess = shell_quadratic_hessian(ref, mat, full=False, h=h)
    elif which == "volume":
        hess = volume_quadratic_hessian(ref, mat, h=h)
    else:
        raise ConfigError("unknown convexity form %r" % (which,))
    eigs = np.linalg.eigvalsh(hess)
    min_eig = float(eigs.min())
    scale = float(np.abs(eigs).max())

    rng = np.random.default_rng(seed)
    dim = hess.shape[-1]
    flat = hess.reshape(-1, dim, dim)
    idx = rng.integers(0, flat.shape[0], size=n_samples)
    vecs = rng.standard_normal((n_samples, dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    quad = np.einsum("ni,nij,nj->n", vecs, flat[idx], vecs)
    return min_eig, float(quad.min()), scale


# ---------------------------------------------------------------------------
# brute-force inequality scans (oracles for the closed forms)
# ---------------------------------------------------------------------------

def scan_stretch_full(ref, h_values):
    """First h in h_values violating the trace-term product inequality.

    Checks, at every grid point,

        h^3/12 - h^5 K / 80 >= 0   and
        4 (h - h^3 K/12 + h^5 K^2/80 - C h^5 |H K|/40)(h^3/12 - h^5 K/80)
            >= (h^3 |H|/3 + C |h^3/6 - h^5 K/40|)^2 ,

    returning +inf when every h passes.
    """
    H = ref.mean
    K = ref.gauss
    C = ref.curvature_bound
    absH = np.abs(H)
    for h in np.asarray(h_values, dtype=float):
        third = h ** 3
        fifth = h ** 5
        lead = third / 12.0 - fifth * K / 80.0
        if np.any(lead < 0.0):
            return float(h)
        left = 4.0 * (h - third * K / 12.0 + fifth * K * K / 80.0
                      - C * fifth * np.abs(H * K) / 40.0) * lead
        right = (third * absH / 3.0
                 + C * np.abs(third / 6.0 - fifth * K / 40.0)) ** 2
        if np.any(left < right):
            return float(h)
    return _INF


def scan_stretch_cubic(ref, h_values):
    """First h violating the cubic-truncation discriminant inequality

        (h^3/3)(h - h^3 K/12) >= (h^3 |H|/3 + h^3 C/12)^2 .
    """
    H = ref.mean
    K = ref.gauss
    C = ref.curvature_bound
    for h in np.asarray(h_values, dtype=float):
        third = h ** 3
        left = (third / 3.0) * (h - third * K / 12.0)
        right = (third * np.abs(H) / 3.0 + third * C / 12.0) ** 2
        if np.any(left < right):
            return float(h)
    return _INF


def scan_volume_det(ref, h_values):
    """First h violating the squared-volume Hessian determinant condition

        (2h + K h^3/6)(h^8/60 - K h^10/400)
            - (h^6/36)(2 h^3/3 + (h^5/40)(16 H^2 - 4K)) >= 0 .
    """
    H = ref.mean
    K = ref.gauss
    for h in np.asarray(h_values, dtype=float):
        det = ((2.0 * h + K * h ** 3 / 6.0)
               * (h ** 8 / 60.0 - K * h ** 10 / 400.0)
               - (h ** 6 / 36.0) * (2.0 * h ** 3 / 3.0
                                    + (h ** 5 / 40.0) * (16.0 * H * H - 4.0 * K)))
        if np.any(det < 0.0):
            return float(h)
    return _INF


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibilityReport:
    """Geometric and per-model convexity bounds plus verdicts for one h."""

    h: float
    h_geom: float                   # 2 / sup max|kappa_i|
    stretch_full: StretchThresholds
    stretch_cubic: CubicStretchThreshold
    volume: VolumeThresholds
    model_h0: dict                  # model number -> convexity bound
    h_max: dict                     # model number -> min(geom, safety * h0)
    verdicts: dict                  # model number -> bool (h admissible)
    safety: float

    def ok(self, model):
        return self.verdicts[model]

    def rows(self):
        """CSV-ready (quantity, value) rows in a fixed order."""
        out = [("h", self.h), ("h_geom", self.h_geom),
               ("stretch_full.h1_prime", self.stretch_full.h1_prime),
               ("stretch_full.h1_second", self.stretch_full.h1_second),
               ("stretch_full.h1", self.stretch_full.h1),
               ("stretch_full.h2", self.stretch_full.h2),
               ("stretch_full.h0", self.stretch_full.h0),
               ("stretch_cubic.h0", self.stretch_cubic.h0),
               ("volume.h1", self.volume.h1),
               ("volume.h2_prime", self.volume.h2_prime),
               ("volume.h2_second", self.volume.h2_second),
               ("volume.h2", self.volume.h2),
               ("volume.h3", self.volume.h3),
               ("volume.h0", self.volume.h0)]
        for model in (1, 2, 3):
            out.append(("model%d.h0" % model, self.model_h0[model]))
            out.append(("model%d.h_max" % model, self.h_max[model]))
            out.append(("model%d.ok" % model, self.verdicts[model]))
        return out


def admissibility_report(ref, h=None, safety=1.0):
    """Assemble every threshold and verdict for the reference surface."""
    h = ref.h if h is None else float(h)
    if not (safety > 0.0):
        raise ConfigError("safety factor must be positive, got %g" % safety)
    h_geom = 2.0 / ref.kappa_sup if ref.kappa_sup > 0.0 else _INF
    full = stretch_threshold_full(ref)
    cubic = stretch_threshold_cubic(ref)
    vol = volume_threshold_taylor(ref)
    model_h0 = {1: full.h0, 2: cubic.h0, 3: min(full.h0, vol.h0)}
    h_max = {m: min(h_geom, safety * h0) for m, h0 in model_h0.items()}
    verdicts = {m: bool(h < h_max[m]) for m in model_h0}
    return AdmissibilityReport(h=h, h_geom=h_geom, stretch_full=full,
                               stretch_cubic=cubic, volume=vol,
                               model_h0=model_h0, h_max=h_max,
                               verdicts=verdicts, safety=float(safety))
