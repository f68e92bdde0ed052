import numpy as np
import pytest

from shellreduce.errors import ConfigError
from shellreduce.geometry import make_chart
from shellreduce.grids import Grid
from shellreduce.reference import (build_reference, check_thickness, contract,
                                   f0, f1, f2, face_factors, load_reference,
                                   save_reference, spd_sqrt_2x2)

RNG = np.random.default_rng(20240517)


def _ref(kind, h=0.05, n=11, **params):
    chart = make_chart(kind, **params)
    grid = Grid.uniform(chart.domain, n, n)
    return build_reference(chart, grid, h)


def test_spd_sqrt_round_trips_random_spd_fields():
    for _ in range(30):
        g = RNG.normal(size=(4, 5, 2, 2))
        spd = np.einsum("...ij,...kj->...ik", g, g) + 0.3 * np.eye(2)
        root, inv_root = spd_sqrt_2x2(spd)
        assert np.abs(np.einsum("...ij,...jk->...ik", root, root)
                      - spd).max() < 1e-12
        assert np.abs(np.einsum("...ij,...jk->...ik", root, inv_root)
                      - np.eye(2)).max() < 1e-12
        # symmetric branch of the square root
        assert np.abs(root - np.swapaxes(root, -1, -2)).max() < 1e-13


def test_spd_sqrt_rejects_indefinite_input():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # det < 0
    with pytest.raises(ConfigError):
        spd_sqrt_2x2(bad)


def test_face_factors_are_thickness_jacobian_at_faces():
    H = RNG.normal(size=7)
    K = RNG.normal(size=7)
    h = 0.23

    def b(x3):
        return 1.0 - 2.0 * H * x3 + K * x3 * x3

    a_plus, a_minus = face_factors(H, K, h)
    assert np.abs(a_plus - b(+h / 2)).max() < 1e-15
    assert np.abs(a_minus - b(-h / 2)).max() < 1e-15


def test_sphere_kernels_collapse_to_multiples_of_the_first():
    # on an umbilic surface L = -Id/R, so the first- and second-order
    # curvature kernels are exact scalar multiples of inv(I)
    R = 1.4
    ref = _ref("sphere-cap", radius=R, extent=0.6)
    H = ref.mean[..., None, None]
    K = ref.gauss[..., None, None]
    assert np.abs(ref.kernel1 - 2.0 * H * ref.kernel0).max() < 1e-12
    assert np.abs(ref.kernel2 - K * ref.kernel0).max() < 1e-12


def test_kernel_contractions_match_einsum_and_dict_paths():
    ref = _ref("cylinder-patch", radius=1.0, height=1.0, arc=1.0, n=9)
    Q = RNG.normal(size=ref.kernel0.shape)
    qdict = {"11": Q[..., 0, 0], "12": Q[..., 0, 1],
             "21": Q[..., 1, 0], "22": Q[..., 1, 1]}
    for f, kernel in ((f0, ref.kernel0), (f1, ref.kernel1), (f2, ref.kernel2)):
        direct = np.einsum("...ij,...ij->...", Q, kernel)
        assert np.abs(f(ref, Q) - direct).max() < 1e-14
        assert np.abs(f(ref, qdict) - direct).max() < 1e-14
        assert np.abs(contract(qdict, kernel) - direct).max() < 1e-14


def test_second_kernel_is_positive_on_gram_arguments():
    # contracting the quadratic kernel with any Gram matrix E^T E gives
    # |I^{-1/2} L E^T|_F^2 >= 0; the factored form is the convexity engine
    ref = _ref("graph", poly={(2, 0): 0.4, (1, 2): -0.3}, n=9)
    for _ in range(25):
        E = RNG.normal(size=(3, 2))
        gram = E.T @ E
        vals = f2(ref, np.broadcast_to(gram, ref.kernel2.shape))
        assert vals.min() > -1e-15


def test_curvature_bound_on_sphere_and_cylinder():
    R = 1.25
    ref = _ref("sphere-cap", radius=R, extent=0.6)
    # |I^{1/2} L^T I^{-1/2}|_F = |L|_F = sqrt(2)/R for L = -Id/R
    assert abs(ref.curvature_bound - 2.0 * np.sqrt(2.0) / R) < 1e-12
    ref = _ref("cylinder-patch", radius=R, height=1.0, arc=1.0)
    # single curved direction: |L|_F = 1/R
    assert abs(ref.curvature_bound - 2.0 / R) < 1e-12
    assert abs(ref.kappa_sup - 1.0 / R) < 1e-12


def test_check_thickness_verdicts():
    thin = _ref("sphere-cap", radius=1.0, extent=0.6, h=0.05)
    margin, ok = check_thickness(thin)
    assert ok and abs(margin - 0.05) < 1e-8
    thick = _ref("sphere-cap", radius=1.0, extent=0.6, h=2.5)
    margin, ok = check_thickness(thick)
    assert not ok and margin > 2.0
    # a passing margin guarantees positive face factors ...
    assert thin.a_plus.min() > 0.0 and thin.a_minus.min() > 0.0
    # ... a failing one means b(x3) = 1 - 2 H x3 + K x3^2 dips to zero
    # somewhere through the thickness (possibly in the interior, not at a
    # face: on the unit sphere with h = 2.5 both faces stay positive)
    x3s = np.clip(thick.mean / thick.gauss, -thick.h / 2, thick.h / 2)
    b_min = 1.0 - 2.0 * thick.mean * x3s + thick.gauss * x3s ** 2
    assert b_min.min() <= 1e-12
    assert min(thick.a_plus.min(), thick.a_minus.min()) > 0.0


def test_build_reference_rejects_nonpositive_thickness():
    chart = make_chart("plate")
    grid = Grid.uniform(chart.domain, 9, 9)
    with pytest.raises(ConfigError):
        build_reference(chart, grid, 0.0)
    with pytest.raises(ConfigError):
        build_reference(chart, grid, -0.1)


def test_reference_cache_round_trip(tmp_path):
    ref = _ref("sphere-cap", radius=1.0, extent=0.5, h=0.07, n=9)
    path = tmp_path / "ref.npz"
    save_reference(ref, path)
    back = load_reference(path)
    assert back.chart_name == ref.chart_name
    assert back.h == ref.h and back.order == ref.order
    for name in ("kernel0", "kernel1", "kernel2", "a_plus", "a_minus",
                 "inv_first", "sqrt_first", "positions"):
        a, b = getattr(ref, name), getattr(back, name)
        assert np.array_equal(a, b), name
    assert back.curvature_bound == ref.curvature_bound
    assert np.array_equal(back.grid.x1, ref.grid.x1)


def test_reference_cache_identity_validation(tmp_path):
    ref = _ref("plate", h=0.1, n=9)
    path = tmp_path / "ref.npz"
    save_reference(ref, path)
    load_reference(path, expect={"chart_name": "plate", "h": 0.1})
    with pytest.raises(ConfigError):
        load_reference(path, expect={"h": 0.2})
    with pytest.raises(ConfigError):
        load_reference(path, expect={"chart_name": "sphere-cap"})
    with pytest.raises(ConfigError):
        load_reference(path, expect={"shape": [11, 11]})
