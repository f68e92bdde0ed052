"""Quasi-Newton minimization of the reduced energies over nodal midsurfaces.

The unknown is the grid of deformed nodal positions; its five derivative
fields come from the same finite-difference stencils the geometry pipeline
uses, so the discrete energy is the exact objective being differentiated
(discretize-then-optimize).  Positions on the clamped edges are pinned to
the reference values; the normal condition on those edges enters as a
quadratic penalty because the normal is a nonlinear function of positions
and cannot be eliminated node-wise.

Gradients are exact to round-off: the density is evaluated once with dual
numbers seeded in the fifteen slot components (five derivative slots times
three Cartesian components), and the per-point sensitivities are pushed
back through the transposed stencils.  A central finite-difference fallback
exists for cross-checking.

The iteration is limited-memory BFGS with a two-phase backtracking line
search: first the step is shrunk until every node keeps a_m and both face
factors above a safety floor (the logarithmic term then guards the
interior), then an Armijo test enforces decrease, so the energy trace is
nonincreasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admissibility import admissibility_report
from .energy import (MODELS, constant_density, energy_density_fields,
                     orientation_violations, require_orientation)
from .errors import (ConfigError, InadmissibleInitialState,
                     InadmissibleThickness, StepCollapsed)
from .geometry import SLOT_NAMES, surface_bundle
from .grids import EDGES, area_weights, edge_mask
from .loads import _edge_measure
from .stencils import GridDerivatives
from . import dual

EPS_FEAS = 1e-8
STEP_MIN = 1e-14
CURVATURE_FLOOR = 1e-12


@dataclass
class SolverConfig:
    model: int = 1
    constants: str = "oracle"
    max_iter: int = 200
    gtol_rel: float = 1e-6
    gtol_abs: float = 1e-11
    memory: int = 10
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    penalty_beta: float = 0.0
    grad_mode: str = "ad"
    fd_step: float = 1e-6
    precondition: bool = True

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError("model must be one of %s" % (MODELS,))
        if self.gtol_rel <= 0 or self.gtol_abs <= 0:
            raise ConfigError("gradient tolerances must be positive")
        if not (0.0 < self.armijo_c1 < 1.0):
            raise ConfigError("Armijo constant must lie in (0, 1)")
        if not (0.0 < self.backtrack < 1.0):
            raise ConfigError("backtracking factor must lie in (0, 1)")
        if self.max_iter < 0 or self.memory < 1:
            raise ConfigError("max_iter must be >= 0 and memory >= 1")
        if self.grad_mode not in ("ad", "fd"):
            raise ConfigError("grad_mode must be 'ad' or 'fd'")
        if self.penalty_beta < 0:
            raise ConfigError("penalty weight must be >= 0")
        if self.fd_step <= 0:
            raise ConfigError("finite-difference step must be positive")


@dataclass
class DiscreteDeformation:
    """Nodal positions plus the free/fixed partition of the grid."""

    positions: np.ndarray    # (n1, n2, 3)
    free: np.ndarray         # (n1, n2) bool, True where the node is a DOF
    clamped_edges: tuple

    @classmethod
    def from_reference(cls, ref, clamped_edges, positions=None):
        for name in clamped_edges:
            if name not in EDGES:
                raise ConfigError("unknown clamped edge %r" % (name,))
        n1, n2 = ref.grid.n1, ref.grid.n2
        free = np.ones((n1, n2), dtype=bool)
        for name in clamped_edges:
            free &= ~edge_mask(name, n1, n2)
        if positions is None:
            positions = ref.positions.copy()
        else:
            positions = np.array(positions, dtype=float)
            if positions.shape != (n1, n2, 3):
                raise ConfigError(
                    "initial positions must have shape (%d, %d, 3), got %s"
                    % (n1, n2, positions.shape))
            positions[~free] = ref.positions[~free]
        return cls(positions=positions, free=free,
                   clamped_edges=tuple(clamped_edges))


class ShellObjective:
    """Total discrete energy (internal - loads + clamp penalty) and its
    exact nodal gradient."""

    def __init__(self, ref, mat, model, constants="oracle", loads=None,
                 clamped_edges=(), penalty_beta=0.0):
        self.ref = ref
        self.mat = mat
        self.model = model
        self.constants = constants
        self.loads = loads
        self.penalty_beta = float(penalty_beta)
        grid = ref.grid
        self.ops = GridDerivatives(grid.n1, grid.n2, grid.dx1, grid.dx2,
                                   ref.order)
        self.w2d = area_weights(grid) * ref.area
        self.constant_total = float(
            np.sum(self.w2d * constant_density(ref, mat, constants)))

        # clamp penalty measure: arclength-weighted union of the clamped edges
        pen = np.zeros((grid.n1, grid.n2))
        for name in clamped_edges:
            pen += _edge_measure(ref, name, "surface")
        self.penalty_weights = pen

        # split the load potential into the part linear in positions (a fixed
        # nodal covector) and the normal-moment coefficient field
        self.direct_load_grad = None   # (n1, n2, 3)
        self.moment_coef = None        # (n1, n2, 3)
        if loads is not None:
            w_area = area_weights(grid)
            direct = np.zeros((grid.n1, grid.n2, 3))
            moment = np.zeros((grid.n1, grid.n2, 3))
            if loads.force_area is not None:
                direct += w_area[..., None] * np.broadcast_to(
                    np.asarray(loads.force_area, dtype=float), direct.shape)
            if loads.moment_area is not None:
                moment += w_area[..., None] * np.broadcast_to(
                    np.asarray(loads.moment_area, dtype=float), moment.shape)
            for name in loads.gamma_t:
                measure = None
                if name in loads.force_edge:
                    measure = _edge_measure(ref, name, loads.boundary_measure)
                    direct += measure[..., None] * np.broadcast_to(
                        np.asarray(loads.force_edge[name], dtype=float),
                        direct.shape)
                if name in loads.moment_edge:
                    if measure is None:
                        measure = _edge_measure(ref, name,
                                                loads.boundary_measure)
                    moment += measure[..., None] * np.broadcast_to(
                        np.asarray(loads.moment_edge[name], dtype=float),
                        moment.shape)
            if np.any(direct):
                self.direct_load_grad = direct
            if np.any(moment):
                self.moment_coef = moment

    # -- plain evaluation ---------------------------------------------------

    def _bundle(self, positions):
        return surface_bundle(self.ops.all_slots(positions))

    def feasible(self, positions):
        """V^h membership with the line-search safety floor."""
        bundle = self._bundle(positions)
        return orientation_violations(bundle, self.ref, self.mat.h,
                                      eps=EPS_FEAS) is None

    def value(self, positions, bundle=None):
        if bundle is None:
            bundle = self._bundle(positions)
        require_orientation(bundle, self.ref, self.mat.h)
        dens = energy_density_fields(bundle, self.ref, self.mat, self.model,
                                     self.constants)
        total = float(np.sum(self.w2d * (dens["shell"] + dens["curv_log"]
                                         + dens["curv_det2"])))
        total += self.constant_total
        normal_val = (bundle["nx"], bundle["ny"], bundle["nz"])
        total -= self._load_value(positions, normal_val)
        total += self._penalty_value(normal_val)
        return total

    def _load_value(self, positions, normal):
        acc = 0.0
        for k in range(3):
            if self.direct_load_grad is not None:
                acc += float(np.sum(self.direct_load_grad[..., k]
                                    * (positions[..., k]
                                       - self.ref.positions[..., k])))
            if self.moment_coef is not None:
                dn = dual.value(normal[k]) - self.ref.normal[..., k]
                acc += float(np.sum(self.moment_coef[..., k] * dn))
        return acc

    def _penalty_value(self, normal):
        if self.penalty_beta == 0.0:
            return 0.0
        acc = 0.0
        for k in range(3):
            dn = dual.value(normal[k]) - self.ref.normal[..., k]
            acc += float(np.sum(self.penalty_weights * dn * dn))
        return self.penalty_beta * acc

    # -- gradient -----------------------------------------------------------

    def value_and_grad(self, positions, mode="ad", fd_step=1e-6):
        if mode == "ad":
            return self._value_and_grad_ad(positions)
        if mode == "fd":
            return self.value(positions), self.grad_fd(positions, fd_step)
        raise ConfigError("gradient mode must be 'ad' or 'fd'")

    def _value_and_grad_ad(self, positions):
        slots = self.ops.all_slots(positions)
        nseed = 3 * len(SLOT_NAMES)
        seeded = {}
        for si, name in enumerate(SLOT_NAMES):
            comps = []
            for c in range(3):
                val = slots[name][..., c]
                dot = np.zeros(val.shape + (nseed,))
                dot[..., 3 * si + c] = 1.0
                comps.append(dual.Dual(val, dot))
            seeded[name] = tuple(comps)
        bundle = surface_bundle(seeded)
        require_orientation(bundle, self.ref, self.mat.h)

        dens = energy_density_fields(bundle, self.ref, self.mat, self.model,
                                     self.constants)
        density = dens["shell"] + dens["curv_log"] + dens["curv_det2"]
        obj_val = self.w2d * density.val
        obj_dot = self.w2d[..., None] * density.dot

        normal = (bundle["nx"], bundle["ny"], bundle["nz"])
        for k in range(3):
            n_k = normal[k]
            dn = n_k.val - self.ref.normal[..., k]
            if self.moment_coef is not None:
                mc = self.moment_coef[..., k]
                obj_val = obj_val - mc * dn
                obj_dot = obj_dot - mc[..., None] * n_k.dot
            if self.penalty_beta > 0.0:
                pw = self.penalty_beta * self.penalty_weights
                obj_val = obj_val + pw * dn * dn
                obj_dot = obj_dot + (2.0 * pw * dn)[..., None] * n_k.dot

        total = float(np.sum(obj_val)) + self.constant_total
        grad = np.zeros_like(positions)
        for si, name in enumerate(SLOT_NAMES):
            grad += self.ops.scatter(name,
                                     obj_dot[..., 3 * si:3 * si + 3])
        if self.direct_load_grad is not None:
            for k in range(3):
                total -= float(np.sum(
                    self.direct_load_grad[..., k]
                    * (positions[..., k] - self.ref.positions[..., k])))
            grad -= self.direct_load_grad
        return total, grad

    def metric_diagonal(self):
        """Per-node curvature scale for the initial quasi-Newton metric.

        The stiffest couplings of the discrete energy follow the squared
        stencil rows: first-derivative slots carry the membrane weight
        ~ (2 mu + lam) h, second-derivative slots the bending weight
        ~ (2 mu + lam) h^3/12.  Each slot operator is a tensor product of
        1-D matrices, so diag(op^T W op) costs a couple of einsums.  This
        is a scale model rather than the true Hessian diagonal; the secant
        pairs correct the remaining O(1) factors, but seeding the metric
        with the right stencil-induced anisotropy cuts the iteration count
        by an order of magnitude on fine grids.
        """
        w = self.w2d
        d1, d2 = self.ops.d1, self.ops.d2
        d11, d22 = self.ops.d11, self.ops.d22
        first = (np.einsum("xi,xj->ij", d1 ** 2, w)
                 + np.einsum("ix,xj->ij", w, d2 ** 2))
        second = (np.einsum("xi,xj->ij", d11 ** 2, w)
                  + 2.0 * np.einsum("xy,xi,yj->ij", w, d1 ** 2, d2 ** 2)
                  + np.einsum("ix,xj->ij", w, d22 ** 2))
        stiff = 2.0 * self.mat.mu + self.mat.lam
        h = self.mat.h
        out = stiff * (h * first + (h ** 3 / 12.0) * second)
        return np.maximum(out, 1e-8 * float(out.max()))

    def grad_fd(self, positions, step_scale=1e-6):
        """Central finite differences over every nodal component."""
        scale = max(1.0, float(np.max(np.abs(positions))))
        t = step_scale * scale
        grad = np.zeros_like(positions)
        work = positions.copy()
        n1, n2, _ = positions.shape
        for i in range(n1):
            for j in range(n2):
                for k in range(3):
                    keep = work[i, j, k]
                    work[i, j, k] = keep + t
                    up = self.value(work)
                    work[i, j, k] = keep - t
                    down = self.value(work)
                    work[i, j, k] = keep
                    grad[i, j, k] = (up - down) / (2.0 * t)
        return grad


@dataclass
class MinimizeResult:
    positions: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str
    trace: list                 # rows (iter, energy, grad_norm, step)
    clamped_edges: tuple


def project_admissible(objective, positions, direction, iteration,
                       step=1.0, backtrack=0.5):
    """Largest backtracked step keeping every node strictly oriented."""
    while step >= STEP_MIN:
        if objective.feasible(positions + step * direction):
            return step
        step *= backtrack
    raise StepCollapsed("feasibility", step, iteration)


def _two_loop(g, pairs, dinv=None):
    """Two-loop recursion; the initial metric is gamma * diag(dinv)."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if dinv is not None:
        q *= dinv
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / (np.dot(y, dinv * y) if dinv is not None
                             else np.dot(y, y))
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def minimize(ref, mat, config, loads=None, clamped_edges=None, initial=None,
             force=False, safety=1.0, callback=None):
    """Minimize the selected model's energy over the free nodal positions.

    ``clamped_edges`` defaults to the complement of the load's traction
    edges (all four edges without loads).  ``force=True`` skips the
    thickness gate; the admissibility report is evaluated either way.
    """
    if clamped_edges is None:
        if loads is not None:
            clamped_edges = tuple(e for e in EDGES if e not in loads.gamma_t)
        else:
            clamped_edges = EDGES
    report = admissibility_report(ref, h=mat.h, safety=safety)
    if not report.ok(config.model) and not force:
        raise InadmissibleThickness(
            "h = %g is not below the model-%d ceiling %g "
            "(geometric %g, convexity %g); pass force to run anyway"
            % (mat.h, config.model, report.h_max[config.model],
               report.h_geom, report.model_h0[config.model]))

    deform = DiscreteDeformation.from_reference(ref, clamped_edges, initial)
    objective = ShellObjective(ref, mat, config.model, config.constants,
                               loads=loads, clamped_edges=clamped_edges,
                               penalty_beta=config.penalty_beta)
    if not objective.feasible(deform.positions):
        raise InadmissibleInitialState(
            "initial deformation violates the orientation constraints")

    free = deform.free
    positions = deform.positions

    def pack(field3):
        return field3[free].ravel()

    def unpack(vec):
        out = positions.copy()
        out[free] = vec.reshape(-1, 3)
        return out

    def eval_vg(pos):
        value, grad = objective.value_and_grad(pos, mode=config.grad_mode,
                                               fd_step=config.fd_step)
        return value, pack(grad)

    _, g = eval_vg(positions)
    # record the plain-evaluation energy so every trace row (this one and
    # the accepted line-search values) comes from the same summation path
    energy = objective.value(positions)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    tol = max(config.gtol_abs, config.gtol_rel * gnorm)
    trace = [(0, energy, gnorm, 0.0)]
    if callback is not None:
        callback(0, positions)

    if gnorm <= tol or g.size == 0:
        return MinimizeResult(positions=positions, energy=energy,
                              grad_norm=gnorm, iterations=0, converged=True,
                              message="stationary at start", trace=trace,
                              clamped_edges=tuple(clamped_edges))

    x = pack(positions)
    dinv = None
    if config.precondition:
        diag = objective.metric_diagonal()
        dinv = 1.0 / np.repeat(diag[free][:, None], 3, axis=1).ravel()
    pairs = []
    converged = False
    message = "iteration limit reached"
    it = 0
    for it in range(1, config.max_iter + 1):
        d = -_two_loop(g, pairs, dinv)
        slope = float(np.dot(g, d))
        if slope >= -1e-14 * np.linalg.norm(g) * np.linalg.norm(d):
            pairs = []
            d = -(dinv * g if dinv is not None else g)
            slope = float(np.dot(g, d))

        # fused feasibility + Armijo backtracking: each trial reuses one
        # geometry pass for both the orientation floor and the energy
        step = 1.0
        stopped = None
        while True:
            trial = x + step * d
            trial_pos = unpack(trial)
            trial_bundle = objective._bundle(trial_pos)
            feasible = orientation_violations(
                trial_bundle, ref, mat.h, eps=EPS_FEAS) is None
            if feasible:
                trial_energy = objective.value(trial_pos,
                                               bundle=trial_bundle)
                if trial_energy <= energy + config.armijo_c1 * step * slope:
                    break
            step *= config.backtrack
            if step < STEP_MIN:
                stopped = StepCollapsed(
                    "line-search" if feasible else "feasibility", step, it)
                break
        if stopped is not None:
            message = str(stopped)
            it -= 1
            break

        # the accepted line-search energy is the one recorded: the AD pass
        # re-sums the same terms in a different order, and that round-off
        # would show up as spurious 1e-15-size upticks in the trace
        _, new_g = eval_vg(unpack(trial))
        s = trial - x
        yv = new_g - g
        sy = float(np.dot(s, yv))
        if sy > CURVATURE_FLOOR * np.linalg.norm(s) * np.linalg.norm(yv):
            pairs.append((s, yv, 1.0 / sy))
            if len(pairs) > config.memory:
                pairs.pop(0)
        else:
            pairs = []

        x, g, energy = trial, new_g, trial_energy
        gnorm = float(np.max(np.abs(g)))
        trace.append((it, energy, gnorm, step))
        if callback is not None:
            callback(it, unpack(x))
        if gnorm <= tol:
            converged = True
            message = "gradient tolerance reached"
            break

    return MinimizeResult(positions=unpack(x), energy=energy, grad_norm=gnorm,
                          iterations=it, converged=converged, message=message,
                          trace=trace, clamped_edges=tuple(clamped_edges))
