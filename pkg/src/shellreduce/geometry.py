"""Parametrized midsurfaces and their pointwise differential geometry.

A chart is a map y : omega in R^2 -> R^3 given either by analytic closures
(value and first/second derivatives) or by nodal positions on a tensor grid
with finite-difference derivatives.  From the five derivative fields
``d1 y, d2 y, d11 y, d12 y, d22 y`` everything else follows pointwise:

- unit normal       n = d1 x d2 / |d1 x d2|,  area factor a = |d1 x d2|
- first form        I = (grad y)^T grad y
- second form       II = -(grad y)^T grad n
- third form        III = (grad n)^T grad n
- shape operator    L = I^{-1} II,  mean H = tr(L)/2,  Gauss K = det(L)

``grad n`` is produced by the chain rule through the normalization (never by
differencing a stored normal field), so n . dn = 0 and n . d_alpha y = 0 hold
to round-off and the identity III = II^T I^{-1} II is exact in both analytic
and finite-difference modes.

The pipeline in :func:`surface_bundle` is written against a scalar-field
algebra (``+ - * /``, ``sqrt``) satisfied by plain numpy arrays *and* by
:class:`~shellreduce.dual.Dual` numbers, so the same code path serves
evaluation and forward-mode differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual
from .errors import ConfigError, CurvatureInconsistent, DegenerateChart
from .grids import Grid
from .stencils import GridDerivatives

EPS_RANK = 1e-12

SLOT_NAMES = ("d1", "d2", "d11", "d12", "d22")


# ---------------------------------------------------------------------------
# scalar-field algebra helpers (numpy arrays or Duals)
# ---------------------------------------------------------------------------

def components(vec):
    """Split a vector field into its three scalar components.

    Accepts a stacked ndarray (..., 3) or an already-split sequence of three
    scalar fields (the dual-number path).
    """
    if isinstance(vec, np.ndarray):
        return vec[..., 0], vec[..., 1], vec[..., 2]
    x, y, z = vec
    return x, y, z


def cross(u, v):
    ux, uy, uz = u
    vx, vy, vz = v
    return (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)


def dot3(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def surface_bundle(slots):
    """Pointwise surface quantities from the five derivative fields.

    Parameters
    ----------
    slots : dict
        Keys ``d1, d2, d11, d12, d22``; each value a vector field (stacked
        ``(..., 3)`` array or triple of scalar fields).

    Returns
    -------
    dict of scalar fields with keys
        ``a, nx, ny, nz, I11, I12, I22, II11, II12, II21, II22,
        III11, III12, III22, L11, L12, L21, L22, H, K``
        plus the passthrough tangent/normal-derivative components
        ``d1, d2, dn1, dn2`` (each a component triple).
    """
    d1 = components(slots["d1"])
    d2 = components(slots["d2"])
    d11 = components(slots["d11"])
    d12 = components(slots["d12"])
    d22 = components(slots["d22"])

    c = cross(d1, d2)
    a = dual.sqrt(dot3(c, c))
    inv_a = 1.0 / a
    n = (c[0] * inv_a, c[1] * inv_a, c[2] * inv_a)

    # derivatives of the (unnormalized) cross field, then of the unit normal
    c1 = tuple(p + q for p, q in zip(cross(d11, d2), cross(d1, d12)))
    c2 = tuple(p + q for p, q in zip(cross(d12, d2), cross(d1, d22)))
    nc1 = dot3(n, c1)
    nc2 = dot3(n, c2)
    dn1 = tuple((c1[k] - n[k] * nc1) * inv_a for k in range(3))
    dn2 = tuple((c2[k] - n[k] * nc2) * inv_a for k in range(3))

    i11 = dot3(d1, d1)
    i12 = dot3(d1, d2)
    i22 = dot3(d2, d2)

    ii11 = -dot3(d1, dn1)
    ii12 = -dot3(d1, dn2)
    ii21 = -dot3(d2, dn1)
    ii22 = -dot3(d2, dn2)

    iii11 = dot3(dn1, dn1)
    iii12 = dot3(dn1, dn2)
    iii22 = dot3(dn2, dn2)

    det_i = i11 * i22 - i12 * i12
    inv_det = 1.0 / det_i
    # L = I^{-1} II with I^{-1} = [[i22, -i12], [-i12, i11]] / det
    l11 = (i22 * ii11 - i12 * ii21) * inv_det
    l12 = (i22 * ii12 - i12 * ii22) * inv_det
    l21 = (i11 * ii21 - i12 * ii11) * inv_det
    l22 = (i11 * ii22 - i12 * ii12) * inv_det

    h = 0.5 * (l11 + l22)
    k = l11 * l22 - l12 * l21

    return {
        "a": a,
        "nx": n[0], "ny": n[1], "nz": n[2],
        "I11": i11, "I12": i12, "I22": i22,
        "II11": ii11, "II12": ii12, "II21": ii21, "II22": ii22,
        "III11": iii11, "III12": iii12, "III22": iii22,
        "L11": l11, "L12": l12, "L21": l21, "L22": l22,
        "H": h, "K": k,
        "d1": d1, "d2": d2, "dn1": dn1, "dn2": dn2,
    }


def lift_hat(mat2):
    """Embed a 2x2 block into 3x3 with a unit (3,3) entry."""
    mat2 = np.asarray(mat2, dtype=float)
    out = np.zeros(mat2.shape[:-2] + (3, 3))
    out[..., :2, :2] = mat2
    out[..., 2, 2] = 1.0
    return out


def lift_flat(mat2):
    """Embed a 2x2 block into 3x3 with a zero (3,3) entry."""
    mat2 = np.asarray(mat2, dtype=float)
    out = np.zeros(mat2.shape[:-2] + (3, 3))
    out[..., :2, :2] = mat2
    return out


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------

class SurfaceChart:
    """A parametrized surface patch.

    Analytic mode wraps closures ``position(X1, X2) -> (..., 3)`` and the
    five derivative closures.  Nodal mode stores grid positions and
    differentiates them with finite-difference stencils when asked.
    """

    def __init__(self, name, domain, maps=None, params=None):
        self.name = name
        self.domain = tuple((float(lo), float(hi)) for (lo, hi) in domain)
        self.maps = maps
        self.params = dict(params or {})
        self._nodal = None  # (grid, positions)

    @classmethod
    def from_grid(cls, name, grid, positions, params=None):
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (grid.n1, grid.n2, 3):
            raise ConfigError(
                "nodal chart positions must have shape (n1, n2, 3), got %s"
                % (positions.shape,)
            )
        chart = cls(name, grid.domain, maps=None, params=params)
        chart._nodal = (grid, positions)
        return chart

    @property
    def is_nodal(self):
        return self._nodal is not None

    def position(self, X1, X2):
        if self.maps is None:
            raise ConfigError("nodal chart has no analytic position closure")
        return self.maps["value"](X1, X2)

    def positions_on(self, grid):
        if self.is_nodal:
            own, pos = self._nodal
            if own.key() != grid.key():
                raise ConfigError("nodal chart queried on a different grid")
            return pos
        X1, X2 = grid.mesh()
        return self.position(X1, X2)

    def derivative_fields(self, grid, order=4):
        """The five stacked derivative fields on the grid, keys SLOT_NAMES."""
        if self.is_nodal:
            own, pos = self._nodal
            if own.key() != grid.key():
                raise ConfigError("nodal chart queried on a different grid")
            ops = GridDerivatives(grid.n1, grid.n2, grid.dx1, grid.dx2, order)
            return ops.all_slots(pos)
        X1, X2 = grid.mesh()
        return {name: self.maps[name](X1, X2) for name in SLOT_NAMES}


def _stack3(*comps):
    return np.stack([np.broadcast_arrays(*comps)[k] for k in range(3)], axis=-1)


def _graph_maps(fz):
    """Chart maps for a graph (x1, x2, f(x1, x2)) given f and derivatives.

    ``fz`` maps (X1, X2) -> dict with f, f1, f2, f11, f12, f22.
    """

    def value(X1, X2):
        d = fz(X1, X2)
        return _stack3(X1, X2, d["f"])

    def d1(X1, X2):
        d = fz(X1, X2)
        one = np.ones_like(d["f1"])
        return _stack3(one, 0.0 * one, d["f1"])

    def d2(X1, X2):
        d = fz(X1, X2)
        one = np.ones_like(d["f2"])
        return _stack3(0.0 * one, one, d["f2"])

    def make_second(key):
        def second(X1, X2):
            d = fz(X1, X2)
            zero = np.zeros_like(d[key])
            return _stack3(zero, zero, d[key])
        return second

    return {
        "value": value,
        "d1": d1,
        "d2": d2,
        "d11": make_second("f11"),
        "d12": make_second("f12"),
        "d22": make_second("f22"),
    }


def make_chart(kind, **params):
    """Chart catalog.

    kind = "plate"            : (x1, x2, 0) on [0, length1] x [0, length2]
    kind = "sphere-cap"       : graph of sqrt(R^2 - x1^2 - x2^2) over the
                                square inscribed in the cap of half-angle
                                ``extent`` (outward normal; H = -1/R,
                                K = 1/R^2)
    kind = "cylinder-patch"   : (R cos t, R sin t, s) with t in
                                [-arc/2, arc/2], s in [0, height] (outward
                                normal; H = -1/(2R), K = 0)
    kind = "graph"            : polynomial and/or sine-bump height field
                                over [0, length1] x [0, length2]
    """
    if kind == "plate":
        L1 = float(params.pop("length1", 1.0))
        L2 = float(params.pop("length2", 1.0))
        _reject_extra(kind, params)

        def fz(X1, X2):
            z = np.zeros(np.broadcast(X1, X2).shape)
            return {"f": z, "f1": z, "f2": z, "f11": z, "f12": z, "f22": z}

        return SurfaceChart(
            "plate", ((0.0, L1), (0.0, L2)), _graph_maps(fz),
            {"kind": kind, "length1": L1, "length2": L2},
        )

    if kind == "sphere-cap":
        R = float(params.pop("radius", 1.0))
        extent = float(params.pop("extent", 0.6))
        _reject_extra(kind, params)
        if not (0 < extent < np.pi / 2):
            raise ConfigError("sphere-cap extent must lie in (0, pi/2)")
        half = R * np.sin(extent) / np.sqrt(2.0)

        def fz(X1, X2):
            z2 = R * R - X1 ** 2 - X2 ** 2
            z = np.sqrt(z2)
            z3 = z * z2
            return {
                "f": z,
                "f1": -X1 / z,
                "f2": -X2 / z,
                "f11": -(R * R - X2 ** 2) / z3,
                "f12": -(X1 * X2) / z3,
                "f22": -(R * R - X1 ** 2) / z3,
            }

        return SurfaceChart(
            "sphere-cap", ((-half, half), (-half, half)), _graph_maps(fz),
            {"kind": kind, "radius": R, "extent": extent},
        )

    if kind == "cylinder-patch":
        R = float(params.pop("radius", 1.0))
        height = float(params.pop("height", 1.0))
        arc = float(params.pop("arc", 1.0))
        _reject_extra(kind, params)

        def value(T, S):
            return _stack3(R * np.cos(T), R * np.sin(T), S)

        def d1(T, S):
            return _stack3(-R * np.sin(T), R * np.cos(T), 0.0 * S)

        def d2(T, S):
            zero = np.zeros(np.broadcast(T, S).shape)
            return _stack3(zero, zero, zero + 1.0)

        def d11(T, S):
            return _stack3(-R * np.cos(T), -R * np.sin(T), 0.0 * S)

        def zero_map(T, S):
            zero = np.zeros(np.broadcast(T, S).shape)
            return _stack3(zero, zero, zero)

        maps = {"value": value, "d1": d1, "d2": d2,
                "d11": d11, "d12": zero_map, "d22": zero_map}
        return SurfaceChart(
            "cylinder-patch", ((-arc / 2.0, arc / 2.0), (0.0, height)), maps,
            {"kind": kind, "radius": R, "height": height, "arc": arc},
        )

    if kind == "graph":
        L1 = float(params.pop("length1", 1.0))
        L2 = float(params.pop("length2", 1.0))
        poly = dict(params.pop("poly", {}))
        bump = params.pop("bump", None)
        _reject_extra(kind, params)
        poly = {(int(p), int(q)): float(c) for (p, q), c in poly.items()}
        if bump is not None:
            amp, k1, k2 = float(bump[0]), int(bump[1]), int(bump[2])
        else:
            amp, k1, k2 = 0.0, 1, 1
        w1 = np.pi * k1 / L1
        w2 = np.pi * k2 / L2

        def fz(X1, X2):
            shape = np.broadcast(X1, X2).shape
            f = np.zeros(shape)
            f1 = np.zeros(shape)
            f2 = np.zeros(shape)
            f11 = np.zeros(shape)
            f12 = np.zeros(shape)
            f22 = np.zeros(shape)
            for (p, q), c in poly.items():
                f += c * X1 ** p * X2 ** q
                if p >= 1:
                    f1 += c * p * X1 ** (p - 1) * X2 ** q
                if q >= 1:
                    f2 += c * q * X1 ** p * X2 ** (q - 1)
                if p >= 2:
                    f11 += c * p * (p - 1) * X1 ** (p - 2) * X2 ** q
                if p >= 1 and q >= 1:
                    f12 += c * p * q * X1 ** (p - 1) * X2 ** (q - 1)
                if q >= 2:
                    f22 += c * q * (q - 1) * X1 ** p * X2 ** (q - 2)
            if amp != 0.0:
                s1, c1 = np.sin(w1 * X1), np.cos(w1 * X1)
                s2, c2 = np.sin(w2 * X2), np.cos(w2 * X2)
                f += amp * s1 * s2
                f1 += amp * w1 * c1 * s2
                f2 += amp * w2 * s1 * c2
                f11 -= amp * w1 * w1 * s1 * s2
                f12 += amp * w1 * w2 * c1 * c2
                f22 -= amp * w2 * w2 * s1 * s2
            return {"f": f, "f1": f1, "f2": f2,
                    "f11": f11, "f12": f12, "f22": f22}

        return SurfaceChart(
            "graph", ((0.0, L1), (0.0, L2)), _graph_maps(fz),
            {"kind": kind, "length1": L1, "length2": L2,
             "poly": poly, "bump": bump},
        )

    raise ConfigError("unknown chart kind %r" % (kind,))


def _reject_extra(kind, params):
    if params:
        raise ConfigError("unknown parameters for chart %r: %s"
                          % (kind, sorted(params)))


# ---------------------------------------------------------------------------
# analytic displacement family (for manufactured deformed states)
# ---------------------------------------------------------------------------

class TrigDisplacement:
    """Sum of separable sine bumps with fixed direction vectors.

    Each term is ``vec * sin(pi k1 u) * sin(pi k2 v)`` in normalized domain
    coordinates (u, v) in [0, 1]^2, so the displacement and its tangential
    derivatives vanish nowhere in general but the displacement itself is
    zero on the domain boundary.  Analytic first and second derivatives are
    available, which keeps manufactured deformed charts exact.
    """

    def __init__(self, domain, terms):
        (self.a1, b1), (self.a2, b2) = domain
        self.s1 = 1.0 / (b1 - self.a1)
        self.s2 = 1.0 / (b2 - self.a2)
        self.terms = [(np.asarray(v, dtype=float), int(k1), int(k2))
                      for (v, k1, k2) in terms]

    @classmethod
    def standard(cls, domain, amplitude):
        """The fixed three-bump family used by the reduction-order checks."""
        a = float(amplitude)
        return cls(domain, [
            ((0.0, 0.0, a), 1, 1),
            ((0.5 * a, 0.0, 0.0), 2, 1),
            ((0.0, 0.5 * a, 0.0), 1, 2),
        ])

    def _uv(self, X1, X2):
        return (X1 - self.a1) * self.s1, (X2 - self.a2) * self.s2

    def _accumulate(self, X1, X2, fu, fv):
        u, v = self._uv(X1, X2)
        shape = np.broadcast(X1, X2).shape
        out = np.zeros(shape + (3,))
        for vec, k1, k2 in self.terms:
            w1 = np.pi * k1
            w2 = np.pi * k2
            out += fu(w1, u)[..., None] * fv(w2, v)[..., None] * vec
        return out

    def value(self, X1, X2):
        return self._accumulate(X1, X2,
                                lambda w, t: np.sin(w * t),
                                lambda w, t: np.sin(w * t))

    def d1(self, X1, X2):
        return self.s1 * self._accumulate(X1, X2,
                                          lambda w, t: w * np.cos(w * t),
                                          lambda w, t: np.sin(w * t))

    def d2(self, X1, X2):
        return self.s2 * self._accumulate(X1, X2,
                                          lambda w, t: np.sin(w * t),
                                          lambda w, t: w * np.cos(w * t))

    def d11(self, X1, X2):
        return self.s1 ** 2 * self._accumulate(
            X1, X2,
            lambda w, t: -w * w * np.sin(w * t),
            lambda w, t: np.sin(w * t))

    def d12(self, X1, X2):
        return self.s1 * self.s2 * self._accumulate(
            X1, X2,
            lambda w, t: w * np.cos(w * t),
            lambda w, t: w * np.cos(w * t))

    def d22(self, X1, X2):
        return self.s2 ** 2 * self._accumulate(
            X1, X2,
            lambda w, t: np.sin(w * t),
            lambda w, t: -w * w * np.sin(w * t))


def displace_chart(base, displacement, label=None):
    """Analytic chart ``base + displacement`` (both with exact derivatives)."""
    if base.is_nodal:
        raise ConfigError("displace_chart needs an analytic base chart")
    maps = {}
    for key in ("value",) + SLOT_NAMES:
        base_map = base.maps[key]
        disp_map = getattr(displacement, key if key != "value" else "value")
        maps[key] = _sum_maps(base_map, disp_map)
    return SurfaceChart(label or (base.name + "+displacement"),
                        base.domain, maps, base.params)


def _sum_maps(f, g):
    def h(X1, X2):
        return f(X1, X2) + g(X1, X2)
    return h


# ---------------------------------------------------------------------------
# fundamental data (numpy path, rank and curvature checks)
# ---------------------------------------------------------------------------

@dataclass
class FundamentalData:
    """Per-node differential geometry of a chart on a grid."""

    grid: Grid
    order: int
    grad: np.ndarray      # (n1, n2, 3, 2)
    normal: np.ndarray    # (n1, n2, 3)
    grad_n: np.ndarray    # (n1, n2, 3, 2)
    area: np.ndarray      # (n1, n2)
    first: np.ndarray     # (n1, n2, 2, 2)
    second: np.ndarray    # (n1, n2, 2, 2)
    third: np.ndarray     # (n1, n2, 2, 2)
    shape_op: np.ndarray  # (n1, n2, 2, 2)
    mean: np.ndarray      # (n1, n2)
    gauss: np.ndarray     # (n1, n2)
    kappa1: np.ndarray    # (n1, n2)
    kappa2: np.ndarray    # (n1, n2)


def _pack22(b, k11, k12, k21, k22):
    out = np.empty(b[k11].shape + (2, 2))
    out[..., 0, 0] = b[k11]
    out[..., 0, 1] = b[k12]
    out[..., 1, 0] = b[k21]
    out[..., 1, 1] = b[k22]
    return out


def check_rank(bundle, slots):
    """Raise DegenerateChart where |d1 x d2| drops below round-off scale."""
    d1 = slots["d1"]
    d2 = slots["d2"]
    scale2 = np.maximum(np.sum(d1 * d1, axis=-1), np.sum(d2 * d2, axis=-1))
    bad = bundle["a"] <= EPS_RANK * scale2
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), bad.shape)
        raise DegenerateChart(idx, bundle["a"][idx], scale2[idx])


def principal_curvatures(mean, gauss):
    """kappa = H +- sqrt(H^2 - K) with a round-off clamp on the discriminant."""
    disc = mean * mean - gauss
    tol = 1e-12 * np.maximum(1.0, np.maximum(mean * mean, np.abs(gauss)))
    if np.any(disc < -tol):
        idx = np.unravel_index(np.argmin(disc + tol), disc.shape)
        raise CurvatureInconsistent(
            "H^2 - K = %.3e < 0 beyond round-off at node %s"
            % (disc[idx], (int(idx[0]), int(idx[1])))
        )
    root = np.sqrt(np.maximum(disc, 0.0))
    return mean + root, mean - root


def fundamental_data(chart, grid, order=4):
    """Fundamental forms and curvatures of a chart on a grid (numpy path)."""
    slots = chart.derivative_fields(grid, order)
    bundle = surface_bundle(slots)
    check_rank(bundle, slots)

    n1n2 = (grid.n1, grid.n2)
    grad = np.stack([slots["d1"], slots["d2"]], axis=-1)
    normal = np.stack([bundle["nx"], bundle["ny"], bundle["nz"]], axis=-1)
    grad_n = np.stack(
        [np.stack(bundle["dn1"], axis=-1), np.stack(bundle["dn2"], axis=-1)],
        axis=-1,
    )
    first = _pack22(bundle, "I11", "I12", "I12", "I22")
    second = _pack22(bundle, "II11", "II12", "II21", "II22")
    third = _pack22(bundle, "III11", "III12", "III12", "III22")
    shape_op = _pack22(bundle, "L11", "L12", "L21", "L22")
    kappa1, kappa2 = principal_curvatures(bundle["H"], bundle["K"])

    assert grad.shape == n1n2 + (3, 2)
    return FundamentalData(
        grid=grid, order=order, grad=grad, normal=normal, grad_n=grad_n,
        area=bundle["a"], first=first, second=second, third=third,
        shape_op=shape_op, mean=bundle["H"], gauss=bundle["K"],
        kappa1=kappa1, kappa2=kappa2,
    )
