"""Through-thickness load reduction and the external load potential.

A three-dimensional load description (body force over the slab, tractions
on the two faces, tractions on the lateral boundary strip) collapses onto
the midsurface as

    force/area      f = int f~ dx3 + t~(+) + t~(-)
    moment/area     c = int x3 f~ dx3 + (h/2)(t~(+) - t~(-))
    force/length    t = int t~ dx3              (per traction edge)
    moment/length   d = int x3 t~ dx3

and the reduced potential, linear in the displacement v = m - y0 and in the
normal deviation n_m - n_{y0} jointly, is

    L(m, n_m) = int_w <f, v> dx' + int_w <c, n_m - n_0> dx'
              + int_{edges} (<t, v> + <d, n_m - n_0>) ds .

x3-profiles are polynomials with vector coefficients (constant vectors or
per-node fields), integrated by Gauss-Legendre, which is exact for them.
Boundary integrals default to the reference-surface arclength measure
ds = |d_tau y0| dtau; the parameter measure (plain dtau) is a switch,
recorded in the resultants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual
from .errors import ConfigError
from .grids import EDGES, area_weights, edge_index, edge_weights

BOUNDARY_MEASURES = ("surface", "parameter")


def _vector_profile(profile, name):
    """Normalize {power: 3-vector or (n1,n2,3) field} load profiles."""
    if profile is None:
        return {}
    out = {}
    for key, vec in profile.items():
        power = int(key)
        if power < 0:
            raise ConfigError("%s: negative x3 power %d" % (name, power))
        arr = np.asarray(vec, dtype=float)
        if arr.shape[-1] != 3:
            raise ConfigError(
                "%s: coefficient for power %d must end in 3 components, got shape %s"
                % (name, power, arr.shape))
        out[power] = arr
    return out


def _vector_or_none(vec, name):
    if vec is None:
        return None
    arr = np.asarray(vec, dtype=float)
    if arr.shape[-1] != 3:
        raise ConfigError("%s must end in 3 components, got shape %s"
                          % (name, arr.shape))
    return arr


@dataclass(frozen=True)
class LoadSpec:
    """Three-dimensional load description awaiting thickness reduction.

    body / lateral values are x3-polynomial profiles ``{power: vector}``;
    face_plus / face_minus are tractions on the x3 = +h/2 and -h/2 faces.
    ``gamma_t`` lists the traction edges of the parameter rectangle; the
    complement is the clamped part and must be non-empty.
    """

    body: dict = field(default_factory=dict)
    face_plus: object = None
    face_minus: object = None
    lateral: dict = field(default_factory=dict)
    gamma_t: tuple = ()
    boundary_measure: str = "surface"

    def __post_init__(self):
        object.__setattr__(self, "body", _vector_profile(self.body, "body"))
        object.__setattr__(self, "face_plus",
                           _vector_or_none(self.face_plus, "face_plus"))
        object.__setattr__(self, "face_minus",
                           _vector_or_none(self.face_minus, "face_minus"))
        lateral = {}
        for edge, profile in (self.lateral or {}).items():
            if edge not in EDGES:
                raise ConfigError("unknown edge %r (need one of %s)"
                                  % (edge, ", ".join(EDGES)))
            lateral[edge] = _vector_profile(profile, "lateral[%s]" % edge)
        object.__setattr__(self, "lateral", lateral)
        gamma_t = tuple(self.gamma_t)
        for edge in gamma_t:
            if edge not in EDGES:
                raise ConfigError("unknown traction edge %r" % (edge,))
        if len(set(EDGES) - set(gamma_t)) == 0:
            raise ConfigError("the clamped boundary part must be non-empty")
        object.__setattr__(self, "gamma_t", gamma_t)
        if self.boundary_measure not in BOUNDARY_MEASURES:
            raise ConfigError("boundary_measure must be one of %s"
                              % (BOUNDARY_MEASURES,))
        for edge in self.lateral:
            if edge not in gamma_t:
                raise ConfigError(
                    "lateral traction on %r but that edge is not in gamma_t"
                    % (edge,))


@dataclass(frozen=True)
class LoadResultants:
    """Midsurface force/moment densities produced by reduce_loads."""

    h: float
    force_area: object          # 3-vector or (n1, n2, 3) field, or None
    moment_area: object
    force_edge: dict            # edge -> 3-vector / field
    moment_edge: dict
    gamma_t: tuple
    boundary_measure: str


def thickness_moments(profile, h, rule):
    """(zeroth, first) x3-moments of a polynomial vector profile."""
    kind, count = rule
    if kind != "gauss":
        raise ConfigError("load reduction uses Gauss-Legendre thickness "
                          "quadrature, got %r" % (kind,))
    nodes, weights = np.polynomial.legendre.leggauss(int(count))
    nodes = 0.5 * h * nodes
    weights = 0.5 * h * weights
    zeroth = None
    first = None
    for power, coef in profile.items():
        m0 = float(np.sum(weights * nodes ** power))
        m1 = float(np.sum(weights * nodes ** (power + 1)))
        zeroth = coef * m0 if zeroth is None else zeroth + coef * m0
        first = coef * m1 if first is None else first + coef * m1
    return zeroth, first


def reduce_loads(spec, h, rule=("gauss", 8)):
    """Collapse a LoadSpec onto the midsurface for thickness ``h``."""
    if h <= 0:
        raise ConfigError("thickness must be positive, h = %g" % h)
    force_area, moment_area = thickness_moments(spec.body, h, rule)
    if spec.face_plus is not None:
        force_area = (spec.face_plus if force_area is None
                      else force_area + spec.face_plus)
        bump = (0.5 * h) * spec.face_plus
        moment_area = bump if moment_area is None else moment_area + bump
    if spec.face_minus is not None:
        force_area = (spec.face_minus if force_area is None
                      else force_area + spec.face_minus)
        bump = (-0.5 * h) * spec.face_minus
        moment_area = bump if moment_area is None else moment_area + bump
    force_edge = {}
    moment_edge = {}
    for edge, profile in spec.lateral.items():
        f, m = thickness_moments(profile, h, rule)
        if f is not None:
            force_edge[edge] = f
        if m is not None:
            moment_edge[edge] = m
    return LoadResultants(h=float(h), force_area=force_area,
                          moment_area=moment_area, force_edge=force_edge,
                          moment_edge=moment_edge, gamma_t=spec.gamma_t,
                          boundary_measure=spec.boundary_measure)


def edge_arclength(ref, edge):
    """|d_tau y0| along an edge's running coordinate, as a full-grid field."""
    axis, _ = edge_index(edge, ref.grid.n1, ref.grid.n2)
    run = 1 if axis == 0 else 0   # frozen axis 0 => runs along x2
    tangent = ref.fd.grad[..., run]
    return np.sqrt(np.sum(tangent * tangent, axis=-1))


def _edge_measure(ref, edge, measure):
    w = edge_weights(ref.grid, edge)
    if measure == "surface":
        return w * edge_arclength(ref, edge)
    return w


def _component(arr, k, shape):
    """k-th vector component broadcast to the grid shape."""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        return np.broadcast_to(arr[k], shape)
    return arr[..., k]


def _vec_component(obj, k):
    """Component k of a vector field given as (n1,n2,3) or a 3-triple."""
    if isinstance(obj, (list, tuple)):
        return obj[k]
    return obj[..., k]


def load_potential(res, ref, positions, normals):
    """Evaluate L(m, n_m) for deformed positions m and normals n_m.

    ``positions``/``normals`` are either (n1, n2, 3) arrays or triples of
    per-component grid fields; the triple form admits Dual components, and
    the potential is assembled with scalar arithmetic so sensitivities flow
    through.
    """
    shape = (ref.grid.n1, ref.grid.n2)
    w_area = area_weights(ref.grid)
    acc = 0.0
    for k in range(3):
        v_k = _vec_component(positions, k) - ref.positions[..., k]
        dn_k = _vec_component(normals, k) - ref.normal[..., k]
        if res.force_area is not None:
            acc = acc + dual.total(v_k * _component(res.force_area, k, shape),
                                   w_area)
        if res.moment_area is not None:
            acc = acc + dual.total(dn_k * _component(res.moment_area, k, shape),
                                   w_area)
        for edge in res.gamma_t:
            w_edge = None
            if edge in res.force_edge:
                w_edge = _edge_measure(ref, edge, res.boundary_measure)
                acc = acc + dual.total(
                    v_k * _component(res.force_edge[edge], k, shape), w_edge)
            if edge in res.moment_edge:
                if w_edge is None:
                    w_edge = _edge_measure(ref, edge, res.boundary_measure)
                acc = acc + dual.total(
                    dn_k * _component(res.moment_edge[edge], k, shape), w_edge)
    return acc


def uniform_transverse(pressure, direction=(0.0, 0.0, 1.0)):
    """Face-pressure LoadSpec: net force/area = pressure * direction.

    Splits the load evenly between the two faces so the first moment
    vanishes (a pure push with no distributed couple).
    """
    vec = 0.5 * float(pressure) * np.asarray(direction, dtype=float)
    return LoadSpec(face_plus=vec, face_minus=vec)
