import numpy as np
import pytest

from shellreduce.energy import MaterialParams
from shellreduce.errors import (ConfigError, InadmissibleInitialState,
                                InadmissibleThickness, StepCollapsed)
from shellreduce.geometry import make_chart
from shellreduce.grids import Grid, edge_mask
from shellreduce.loads import LoadSpec, reduce_loads, uniform_transverse
from shellreduce.minimizer import (DiscreteDeformation, MinimizeResult,
                                   ShellObjective, SolverConfig, minimize,
                                   project_admissible)
from shellreduce.reference import build_reference

RNG = np.random.default_rng(2718)


def _setup(kind="plate", h=0.1, n=9, **params):
    chart = make_chart(kind, **params)
    grid = Grid.uniform(chart.domain, n, n)
    ref = build_reference(chart, grid, h)
    mat = MaterialParams(mu=1.0, lam=1.0, h=h)
    return ref, mat


def _smooth_field(grid, modes=2, seed=None):
    """Random boundary-zero field built from low sine modes (FD-friendly)."""
    rng = np.random.default_rng(seed)
    (a1, b1), (a2, b2) = grid.domain
    U = (grid.x1[:, None] - a1) / (b1 - a1)
    V = (grid.x2[None, :] - a2) / (b2 - a2)
    out = np.zeros((grid.n1, grid.n2, 3))
    for k in range(1, modes + 1):
        for l in range(1, modes + 1):
            coefs = rng.normal(size=3)
            shape = np.sin(np.pi * k * U) * np.sin(np.pi * l * V)
            out += shape[..., None] * coefs
    return out


def _random_feasible_state(objective, ref, amplitude=0.05, seed=None):
    """Reference positions plus a smooth bump, halved until admissible."""
    bump = _smooth_field(ref.grid, seed=seed)
    bump /= max(1.0, np.abs(bump).max())
    amp = amplitude
    for _ in range(40):
        pos = ref.positions + amp * bump
        if objective.feasible(pos):
            return pos
        amp *= 0.5
    raise AssertionError("could not find a feasible perturbation")


# ---------------------------------------------------------------------------
# objective mechanics
# ---------------------------------------------------------------------------

def test_internal_energy_is_translation_invariant():
    ref, mat = _setup("sphere-cap", h=0.05, radius=1.0, extent=0.6)
    objective = ShellObjective(ref, mat, model=1)
    pos = _random_feasible_state(objective, ref, seed=0)
    base = objective.value(pos)
    shifted = objective.value(pos + np.array([0.4, -0.2, 0.9]))
    assert abs(shifted - base) < 1e-10 * max(1.0, abs(base))


def test_metric_diagonal_is_positive():
    ref, mat = _setup()
    objective = ShellObjective(ref, mat, model=1)
    diag = objective.metric_diagonal()
    assert diag.shape == (ref.grid.n1, ref.grid.n2)
    assert diag.min() > 0.0


@pytest.mark.parametrize("kind,params", [
    ("plate", {}),
    ("sphere-cap", dict(radius=1.0, extent=0.6)),
    ("cylinder-patch", dict(radius=1.0, height=1.0, arc=1.0)),
])
def test_seeded_gradient_matches_finite_differences(kind, params):
    ref, mat = _setup(kind, h=0.05, **params)
    loads = reduce_loads(uniform_transverse(0.001), mat.h)
    objective = ShellObjective(ref, mat, model=1, loads=loads,
                               clamped_edges=("left",), penalty_beta=0.1)
    for seed in (1, 2):
        pos = _random_feasible_state(objective, ref, seed=seed)
        value, grad = objective.value_and_grad(pos, mode="ad")
        assert abs(value - objective.value(pos)) < 1e-12 * max(1.0, abs(value))
        fd = objective.grad_fd(pos, step_scale=1e-6)
        scale = np.abs(fd).max()
        assert np.abs(grad - fd).max() < 1e-6 * scale, (kind, seed)
        # secant probe along a smooth direction
        d = _smooth_field(ref.grid, seed=seed + 100)
        d /= np.abs(d).max()
        t = 1e-5
        secant = (objective.value(pos + t * d)
                  - objective.value(pos - t * d)) / (2.0 * t)
        slope = float(np.sum(grad * d))
        assert abs(secant - slope) < 1e-5 * max(1.0, abs(slope))


def test_gradient_mode_dispatch_and_validation():
    ref, mat = _setup()
    objective = ShellObjective(ref, mat, model=1)
    pos = ref.positions
    v_ad, g_ad = objective.value_and_grad(pos, mode="ad")
    v_fd, g_fd = objective.value_and_grad(pos, mode="fd", fd_step=1e-6)
    assert abs(v_ad - v_fd) < 1e-14
    assert np.abs(g_ad - g_fd).max() < 1e-6
    with pytest.raises(ConfigError):
        objective.value_and_grad(pos, mode="exact")


# ---------------------------------------------------------------------------
# feasibility projection and the deformation container
# ---------------------------------------------------------------------------

def test_project_admissible_backs_off_and_collapses():
    ref, mat = _setup()
    objective = ShellObjective(ref, mat, model=1)
    # a fold-inducing direction: full step is infeasible, a short one fine
    direction = np.zeros_like(ref.positions)
    direction[4, 4, 2] = 1.0
    step = project_admissible(objective, ref.positions, direction, 1)
    assert step < 1.0
    assert objective.feasible(ref.positions + step * direction)
    # starting from an infeasible point, no step ever helps
    folded = ref.positions.copy()
    folded[4, 4, 2] = 1.0
    with pytest.raises(StepCollapsed):
        project_admissible(objective, folded, np.zeros_like(folded), 3)


def test_discrete_deformation_pins_clamped_nodes():
    ref, _ = _setup()
    perturbed = ref.positions + 0.01 * RNG.normal(size=ref.positions.shape)
    deform = DiscreteDeformation.from_reference(ref, ("left", "top"),
                                                positions=perturbed)
    n1, n2 = ref.grid.n1, ref.grid.n2
    pinned = edge_mask("left", n1, n2) | edge_mask("top", n1, n2)
    assert np.array_equal(deform.positions[pinned], ref.positions[pinned])
    assert np.array_equal(deform.positions[~pinned], perturbed[~pinned])
    assert not deform.free[pinned].any()
    with pytest.raises(ConfigError):
        DiscreteDeformation.from_reference(ref, ("west",))
    with pytest.raises(ConfigError):
        DiscreteDeformation.from_reference(ref, (), positions=np.zeros((3, 3)))


def test_solver_config_validation():
    for bad in (dict(model=7), dict(gtol_rel=0.0), dict(gtol_abs=-1.0),
                dict(armijo_c1=1.5), dict(backtrack=1.0), dict(memory=0),
                dict(max_iter=-1), dict(grad_mode="adjoint"),
                dict(penalty_beta=-2.0), dict(fd_step=0.0)):
        with pytest.raises(ConfigError):
            SolverConfig(**bad)


# ---------------------------------------------------------------------------
# the minimizer
# ---------------------------------------------------------------------------

def test_unloaded_natural_state_is_stationary_at_start():
    ref, mat = _setup()
    result = minimize(ref, mat, SolverConfig(model=1))
    assert isinstance(result, MinimizeResult)
    assert result.converged and result.iterations == 0
    assert result.message == "stationary at start"
    assert len(result.trace) == 1
    assert abs(result.energy) < 1e-12


def test_loaded_plate_descends_monotonically_with_feasible_iterates():
    ref, mat = _setup()
    loads = reduce_loads(uniform_transverse(0.002), mat.h)
    seen = []
    objective = ShellObjective(ref, mat, model=1, loads=loads,
                               clamped_edges=("left", "right", "bottom",
                                              "top"))
    result = minimize(ref, mat, SolverConfig(model=1, max_iter=400,
                                             gtol_abs=1e-9),
                      loads=loads,
                      callback=lambda it, pos: seen.append(pos.copy()))
    assert result.converged
    assert result.energy < 0.0        # work done by the load
    energies = [row[1] for row in result.trace]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert len(seen) == result.iterations + 1
    for pos in seen[:: max(1, len(seen) // 10)]:
        assert objective.feasible(pos)
    # clamped boundary never moves
    boundary = ~DiscreteDeformation.from_reference(ref, result.clamped_edges).free
    assert np.array_equal(result.positions[boundary], ref.positions[boundary])
    # small load: deflection stays below the thickness
    assert np.abs(result.positions - ref.positions).max() < mat.h


def test_minimizer_final_state_is_mirror_symmetric_and_load_equivariant():
    # the plate, its clamped boundary, and the transverse load are invariant
    # under the in-plane mirror x1 -> L - x1, so the discrete minimizer must
    # be too; flipping the load's sign mirrors the solution through the
    # midplane.  Both hold to solver precision on a small grid driven to a
    # tight gradient tolerance.
    ref, mat = _setup()
    config = SolverConfig(model=1, max_iter=3000, gtol_abs=1e-9)
    plus = minimize(ref, mat, config,
                    loads=reduce_loads(uniform_transverse(0.002), mat.h))
    minus = minimize(ref, mat, config,
                     loads=reduce_loads(uniform_transverse(-0.002), mat.h))
    p = plus.positions
    assert np.abs(p[::-1, :, 0] - (1.0 - p[:, :, 0])).max() < 1e-6
    assert np.abs(p[::-1, :, 1] - p[:, :, 1]).max() < 1e-6
    assert np.abs(p[::-1, :, 2] - p[:, :, 2]).max() < 1e-6
    m = minus.positions
    assert np.abs(m[..., 2] + p[..., 2]).max() < 1e-6
    assert np.abs(m[..., :2] - p[..., :2]).max() < 1e-6


def test_penalty_weight_pulls_boundary_normals_back():
    # all edges clamped in position; increasing the normal-deviation penalty
    # must monotonically reduce the boundary tilt integral
    ref, mat = _setup()
    loads = reduce_loads(uniform_transverse(0.004), mat.h)
    devs = []
    for beta in (0.0, 1e1, 1e3):
        result = minimize(ref, mat,
                          SolverConfig(model=1, max_iter=800, gtol_abs=1e-9,
                                       penalty_beta=beta),
                          loads=loads)
        objective = ShellObjective(ref, mat, model=1)
        bundle = objective._bundle(result.positions)
        dn2 = sum((bundle["n" + c] - ref.normal[..., k]) ** 2
                  for k, c in enumerate("xyz"))
        boundary = np.zeros((ref.grid.n1, ref.grid.n2), dtype=bool)
        for name in ("left", "right", "bottom", "top"):
            boundary |= edge_mask(name, ref.grid.n1, ref.grid.n2)
        devs.append(float(dn2[boundary].sum()))
    assert devs[1] < devs[0]
    assert devs[2] < devs[1]


def test_thickness_gate_and_force_override():
    ref, mat = _setup("sphere-cap", h=0.8, radius=1.0, extent=0.6)
    with pytest.raises(InadmissibleThickness):
        minimize(ref, mat, SolverConfig(model=1))
    result = minimize(ref, mat, SolverConfig(model=1, max_iter=3), force=True)
    assert isinstance(result, MinimizeResult)
    assert np.isfinite(result.energy)


def test_folded_initial_state_is_rejected():
    ref, mat = _setup()
    initial = ref.positions.copy()
    initial[4, 4, 2] = 0.8
    with pytest.raises(InadmissibleInitialState):
        minimize(ref, mat, SolverConfig(model=1), initial=initial)


def test_fd_solver_smoke():
    ref, mat = _setup()
    loads = reduce_loads(uniform_transverse(0.002), mat.h)
    result = minimize(ref, mat,
                      SolverConfig(model=1, grad_mode="fd", max_iter=3),
                      loads=loads)
    energies = [row[1] for row in result.trace]
    assert energies[-1] < energies[0]
