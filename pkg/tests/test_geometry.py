import numpy as np
import pytest

from shellreduce.errors import ConfigError, DegenerateChart
from shellreduce.geometry import (SLOT_NAMES, SurfaceChart, TrigDisplacement,
                                  displace_chart, fundamental_data, make_chart,
                                  surface_bundle)
from shellreduce.grids import Grid


def _chart_grid(kind, n=17, **params):
    chart = make_chart(kind, **params)
    return chart, Grid.uniform(chart.domain, n, n)


def test_sphere_cap_curvatures_and_outward_normal():
    R = 1.3
    chart, grid = _chart_grid("sphere-cap", radius=R, extent=0.6)
    fd = fundamental_data(chart, grid, 4)
    assert np.abs(fd.mean + 1.0 / R).max() < 1e-12
    assert np.abs(fd.gauss - 1.0 / R ** 2).max() < 1e-12
    # outward normal of a sphere centered at the origin is the unit position
    pos = chart.positions_on(grid)
    assert np.abs(fd.normal - pos / R).max() < 1e-12
    # umbilic points: H^2 - K sits at round-off, so kappa carries its sqrt
    assert np.abs(fd.kappa1 + 1.0 / R).max() < 1e-7
    assert np.abs(fd.kappa2 + 1.0 / R).max() < 1e-7


def test_cylinder_patch_curvatures():
    R = 0.8
    chart, grid = _chart_grid("cylinder-patch", radius=R, height=1.0, arc=1.2)
    fd = fundamental_data(chart, grid, 4)
    assert np.abs(fd.mean + 0.5 / R).max() < 1e-12
    assert np.abs(fd.gauss).max() < 1e-12
    T, _ = grid.mesh()
    radial = np.stack([np.cos(T), np.sin(T), np.zeros_like(T)], axis=-1)
    assert np.abs(fd.normal - radial).max() < 1e-12


def test_plate_is_flat():
    chart, grid = _chart_grid("plate")
    fd = fundamental_data(chart, grid, 4)
    assert np.abs(fd.mean).max() == 0.0
    assert np.abs(fd.gauss).max() == 0.0
    assert np.abs(fd.second).max() == 0.0


def test_fundamental_forms_satisfy_cayley_hamilton():
    # III - 2 H II + K I = 0 holds for any surface; a strong joint check of
    # the three forms, the shape operator, and the curvature scalars
    for kind, params in (("sphere-cap", dict(radius=1.0, extent=0.6)),
                         ("cylinder-patch", dict(radius=1.0, height=1.0, arc=1.0)),
                         ("graph", dict(poly={(2, 0): 0.3, (1, 2): -0.2},
                                        bump=(0.1, 2, 1)))):
        chart, grid = _chart_grid(kind, **params)
        fd = fundamental_data(chart, grid, 4)
        resid = (fd.third - 2.0 * fd.mean[..., None, None] * fd.second
                 + fd.gauss[..., None, None] * fd.first)
        assert np.abs(resid).max() < 1e-11, kind
        # and the third form factors through the first two
        inv_first = np.linalg.inv(fd.first)
        recon = np.einsum("...ji,...jk,...kl->...il", fd.second, inv_first,
                          fd.second)
        scale = max(np.abs(fd.third).max(), 1e-30)
        assert np.abs(recon - fd.third).max() < 1e-10 * scale, kind


def test_shape_operator_consistency():
    chart, grid = _chart_grid("graph", poly={(2, 0): 0.4, (0, 3): 0.15})
    fd = fundamental_data(chart, grid, 4)
    # L = I^{-1} II reproduces H = tr L / 2 and K = det L
    tr = fd.shape_op[..., 0, 0] + fd.shape_op[..., 1, 1]
    det = (fd.shape_op[..., 0, 0] * fd.shape_op[..., 1, 1]
           - fd.shape_op[..., 0, 1] * fd.shape_op[..., 1, 0])
    assert np.abs(0.5 * tr - fd.mean).max() < 1e-12
    assert np.abs(det - fd.gauss).max() < 1e-12
    recon = np.einsum("...ij,...jk->...ik", fd.first, fd.shape_op)
    assert np.abs(recon - fd.second).max() < 1e-11


def test_bundle_accepts_stacked_arrays_and_component_triples():
    chart, grid = _chart_grid("sphere-cap", radius=1.0, extent=0.5, n=9)
    slots = chart.derivative_fields(grid, 4)
    b_stacked = surface_bundle(slots)
    triples = {k: tuple(v[..., c] for c in range(3)) for k, v in slots.items()}
    b_triple = surface_bundle(triples)
    for key in ("a", "H", "K", "I11", "II12", "III22", "nx", "nz"):
        assert np.allclose(b_stacked[key], b_triple[key], atol=1e-14), key


def test_nodal_chart_curvatures_converge_at_fourth_order():
    analytic = make_chart("sphere-cap", radius=1.0, extent=0.6)
    errs = []
    for n in (17, 33):
        grid = Grid.uniform(analytic.domain, n, n)
        nodal = SurfaceChart.from_grid("sampled", grid,
                                       analytic.positions_on(grid))
        fd = fundamental_data(nodal, grid, 4)
        errs.append(np.abs(fd.mean + 1.0).max())
    assert errs[1] < errs[0] / 10.0   # ~16x for clean fourth order


def test_nodal_chart_rejects_foreign_grid_and_bad_shape():
    grid = Grid.uniform(((0.0, 1.0), (0.0, 1.0)), 9, 9)
    other = Grid.uniform(((0.0, 1.0), (0.0, 1.0)), 11, 11)
    pos = np.zeros((9, 9, 3))
    pos[..., 0], pos[..., 1] = grid.mesh()
    chart = SurfaceChart.from_grid("flat", grid, pos)
    with pytest.raises(ConfigError):
        chart.positions_on(other)
    with pytest.raises(ConfigError):
        SurfaceChart.from_grid("bad", grid, np.zeros((9, 9, 2)))


def test_degenerate_chart_is_reported():
    grid = Grid.uniform(((0.0, 1.0), (0.0, 1.0)), 9, 9)
    pos = np.zeros((9, 9, 3))  # rank-zero map: d1 x d2 == 0 everywhere
    chart = SurfaceChart.from_grid("collapsed", grid, pos)
    with np.errstate(divide="ignore", invalid="ignore"):
        with pytest.raises(DegenerateChart):
            fundamental_data(chart, grid, 4)


def test_make_chart_validates_kind_and_parameters():
    with pytest.raises(ConfigError):
        make_chart("torus")
    with pytest.raises(ConfigError):
        make_chart("plate", radius=1.0)
    with pytest.raises(ConfigError):
        make_chart("sphere-cap", extent=2.0)


def test_displaced_chart_derivatives_are_consistent():
    # analytic derivative maps of base + displacement must agree with
    # finite differences of the summed position map
    base = make_chart("sphere-cap", radius=1.0, extent=0.5)
    disp = TrigDisplacement.standard(base.domain, 0.03)
    chart = displace_chart(base, disp)
    grid = Grid.uniform(chart.domain, 9, 9)
    X1, X2 = grid.mesh()
    t = 1e-6
    d1_fd = (chart.position(X1 + t, X2) - chart.position(X1 - t, X2)) / (2 * t)
    d2_fd = (chart.position(X1, X2 + t) - chart.position(X1, X2 - t)) / (2 * t)
    slots = chart.derivative_fields(grid, 4)
    assert np.abs(slots["d1"] - d1_fd).max() < 1e-8
    assert np.abs(slots["d2"] - d2_fd).max() < 1e-8
    t = 1e-4  # wider step: the mixed difference divides round-off by 4 t^2
    d12_fd = (chart.position(X1 + t, X2 + t) - chart.position(X1 + t, X2 - t)
              - chart.position(X1 - t, X2 + t) + chart.position(X1 - t, X2 - t)) \
        / (4 * t * t)
    assert np.abs(slots["d12"] - d12_fd).max() < 1e-6


def test_trig_displacement_vanishes_on_the_domain_boundary():
    domain = ((-0.4, 0.4), (0.1, 1.1))
    disp = TrigDisplacement.standard(domain, 0.07)
    edge = np.linspace(domain[1][0], domain[1][1], 13)
    for x1 in domain[0]:
        assert np.abs(disp.value(np.full_like(edge, x1), edge)).max() < 1e-15
    edge = np.linspace(domain[0][0], domain[0][1], 13)
    for x2 in domain[1]:
        assert np.abs(disp.value(edge, np.full_like(edge, x2))).max() < 1e-15


def test_graph_chart_matches_direct_polynomial_evaluation():
    poly = {(2, 1): 0.25, (0, 2): -0.4, (3, 0): 0.1}
    chart, grid = _chart_grid("graph", poly=poly, n=9)
    X1, X2 = grid.mesh()
    z = sum(c * X1 ** p * X2 ** q for (p, q), c in poly.items())
    pos = chart.positions_on(grid)
    assert np.abs(pos[..., 2] - z).max() < 1e-14
    assert np.abs(pos[..., 0] - X1).max() == 0.0
