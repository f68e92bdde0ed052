"""Brute-force 3-D verification oracle for the reduced models.

The reduced energies claim to equal (up to a known thickness order) the
through-thickness integral of the parent 3-D stored energy

    W(F) = mu/2 (|F|^2 - 2 log det F - 3)
         + lam/4 ((det F)^2 - 2 log det F - 1)

evaluated on the normal-extension ansatz

    Phi(x', x3)   = m(x') + x3 n_m(x'),
    Theta(x', x3) = y0(x') + x3 n_y0(x'),
    F = grad Phi (grad Theta)^{-1}.

This module assembles F without any thickness expansion (closed-form
inverse of grad Theta with an optional np.linalg.solve cross-check) and
integrates W over the slab with Gauss-Legendre or composite-Simpson rules
through the thickness and the tensor Simpson rule over the surface.  It also
exposes the closed-form thickness-moment/coefficient tables the reduced
densities are built from, so tests can pin them against independent
re-derivations.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .energy import MaterialParams, deformed_state, total_energy
from .errors import ConfigError, NonPositiveDeterminant
from .geometry import lift_flat
from .grids import area_weights
from .reference import build_reference

EYE3 = np.eye(3)


def stored_energy(F, mu, lam):
    """Pointwise 3-D stored energy of deformation gradients F (..., 3, 3)."""
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        idx = np.unravel_index(np.argmin(det), det.shape)
        raise NonPositiveDeterminant(det[idx], tuple(int(k) for k in idx))
    log_det = np.log(det)
    frob2 = np.einsum("...ij,...ij->...", F, F)
    return (0.5 * mu * (frob2 - 2.0 * log_det - 3.0)
            + 0.25 * lam * (det * det - 2.0 * log_det - 1.0))


def thickness_rule(kind="gauss", count=16, h=1.0):
    """Quadrature nodes/weights on [-h/2, h/2]; weights sum to h."""
    if kind == "gauss":
        x, w = np.polynomial.legendre.leggauss(int(count))
        return 0.5 * h * x, 0.5 * h * w
    if kind == "simpson":
        n = int(count)
        if n < 3 or n % 2 == 0:
            raise ConfigError("simpson thickness rule needs odd count >= 3")
        x = np.linspace(-0.5 * h, 0.5 * h, n)
        dx = x[1] - x[0]
        w = np.ones(n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return x, w * (dx / 3.0)
    raise ConfigError("unknown thickness rule %r" % (kind,))


# ---------------------------------------------------------------------------
# ansatz frames
# ---------------------------------------------------------------------------

def _frame(grad, normal):
    """[d1 | d2 | n] as (..., 3, 3)."""
    return np.concatenate([grad, normal[..., None]], axis=-1)


def thickness_jacobian(mean, gauss, x3):
    """b(x3) = 1 - 2 H x3 + K x3^2 (pointwise det ratio through thickness)."""
    return 1.0 - 2.0 * mean * x3 + gauss * x3 * x3


def ansatz_point(ref, state, x3, check=False):
    """Deformation-gradient data of the ansatz at offset x3.

    Returns a dict with grad_theta, inv_grad_theta, grad_phi, F, det_F and
    the reference thickness Jacobian b.  ``check=True`` verifies the
    closed-form inverse and the solve-assembled F against each other to
    1e-10 relative and raises ConfigError on disagreement.
    """
    x3 = float(x3)
    fd = ref.fd
    grad_theta = _frame(fd.grad + x3 * fd.grad_n, fd.normal)

    b = thickness_jacobian(fd.mean, fd.gauss, x3)
    frame0_inv = np.linalg.inv(_frame(fd.grad, fd.normal))
    correction = (
        EYE3
        + x3 * (lift_flat(fd.shape_op) - 2.0 * fd.mean[..., None, None] * EYE3)
    )
    correction[..., 2, 2] += x3 * x3 * fd.gauss
    inv_grad_theta = np.einsum(
        "...ij,...jk->...ik", correction, frame0_inv
    ) / b[..., None, None]

    grad_phi = _frame(state.grad + x3 * state.grad_n, state.normal)
    F = np.einsum("...ij,...jk->...ik", grad_phi, inv_grad_theta)
    det_F = np.linalg.det(F)

    if check:
        resid = np.einsum("...ij,...jk->...ik", grad_theta, inv_grad_theta)
        err_inv = np.abs(resid - EYE3).max()
        F_solve = np.swapaxes(
            np.linalg.solve(np.swapaxes(grad_theta, -1, -2),
                            np.swapaxes(grad_phi, -1, -2)),
            -1, -2,
        )
        scale = max(float(np.abs(F).max()), 1.0)
        err_f = np.abs(F - F_solve).max() / scale
        if err_inv > 1e-10 or err_f > 1e-10:
            raise ConfigError(
                "ansatz cross-check failed at x3=%g: inverse residual %.3e, "
                "assembly mismatch %.3e" % (x3, err_inv, err_f))

    return {
        "grad_theta": grad_theta,
        "inv_grad_theta": inv_grad_theta,
        "grad_phi": grad_phi,
        "F": F,
        "det_F": det_F,
        "b": b,
    }


def integrate_3d(state, ref, mat, rule=("gauss", 16), check=False):
    """Slab integral of the parent stored energy over the ansatz.

    integral = sum_x3 w(x3) sum_nodes W2d a_y0 b_y0(x3) W(F(x', x3)).
    """
    kind, count = rule
    nodes, weights = thickness_rule(kind, count, mat.h)
    w2d = area_weights(ref.grid) * ref.area
    total = 0.0
    for x3, w in zip(nodes, weights):
        point = ansatz_point(ref, state, x3, check=check)
        density = stored_energy(point["F"], mat.mu, mat.lam)
        total += w * float(np.sum(w2d * point["b"] * density))
    return total


def simpson_point_products(state, ref):
    """det F at the three-point rule nodes, scaled back to volume factors.

    At x3 in {-h/2, 0, +h/2} the ansatz satisfies
    a_y0 b_y0(x3) det F(x3) = a_m b_m(x3), so the products must reproduce
    a_m A_m^-, a_m, a_m A_m^+ exactly.  Returns (via_det, direct) dicts for
    keys "minus", "mid", "plus".
    """
    h = ref.h
    via = {}
    for key, x3 in (("minus", -0.5 * h), ("mid", 0.0), ("plus", 0.5 * h)):
        point = ansatz_point(ref, state, x3)
        via[key] = point["det_F"] * ref.area * point["b"]
    direct = {
        "minus": state.area * state.a_minus,
        "mid": state.area,
        "plus": state.area * state.a_plus,
    }
    return via, direct


# ---------------------------------------------------------------------------
# printed coefficient tables (closed-form thickness quantities)
# ---------------------------------------------------------------------------

def trace_moment_coefficients(mean, gauss, h):
    """Truncated thickness moments alpha_p = int x3^p / b(x3) dx3.

    Closed forms through fifth order (error O(h^7)):
        alpha_0 = h + h^3/12 (4H^2 - K) + h^5/80 (16H^4 - 12H^2 K + K^2)
        alpha_1 = h^3/12 (2H) + h^5/80 (8H^3 - 4HK)
        alpha_2 = h^3/12 + h^5/80 (4H^2 - K)
        alpha_3 = h^5/80 (2H)
        alpha_4 = h^5/80
    """
    mean = np.asarray(mean, dtype=float)
    gauss = np.asarray(gauss, dtype=float)
    h3 = h ** 3 / 12.0
    h5 = h ** 5 / 80.0
    h2 = mean * mean
    return {
        0: h + h3 * (4.0 * h2 - gauss)
           + h5 * (16.0 * h2 * h2 - 12.0 * h2 * gauss + gauss * gauss),
        1: h3 * 2.0 * mean + h5 * (8.0 * h2 * mean - 4.0 * mean * gauss),
        2: h3 + h5 * (4.0 * h2 - gauss),
        3: h5 * 2.0 * mean,
        4: h5,
    }


def det_square_series(mean, gauss, d_mean, d_gauss):
    """x3-polynomial coefficients of (b_m(x3)/b_y0(x3))^2 - 1 through x3^4.

    All arguments are reference curvatures (mean, gauss) and curvature
    offsets of the deformed state.  Returns {1: c1, ..., 4: c4} with
    (b_m/b)^2 = 1 + c1 x3 + c2 x3^2 + c3 x3^3 + c4 x3^4 + O(x3^5).
    """
    H, K = np.asarray(mean, dtype=float), np.asarray(gauss, dtype=float)
    dH, dK = np.asarray(d_mean, dtype=float), np.asarray(d_gauss, dtype=float)
    c1 = -4.0 * dH
    c2 = -8.0 * H * dH + 4.0 * dH * dH + 2.0 * dK
    c3 = (-16.0 * H * H * dH + 16.0 * H * dH * dH + 4.0 * K * dH
          + 4.0 * H * dK - 4.0 * dH * dK)
    c4 = (-32.0 * H ** 3 * dH + 48.0 * H * H * dH * dH + 8.0 * H * H * dK
          + 16.0 * H * K * dH - 16.0 * H * dH * dK - 8.0 * K * dH * dH
          - 2.0 * K * dK + dK * dK)
    return {1: c1, 2: c2, 3: c3, 4: c4}


def det_square_bracket(mean, gauss, d_mean, d_gauss, h):
    """int (b_m/b)^2 b dx3 through fifth order (error O(h^7)).

    = h + h^3/12 (K + 4 dH^2 + 2 dK)
        + h^5/80 (16 H^2 dH^2 - 8 H dH dK - 4 K dH^2 + dK^2).
    """
    H, K = np.asarray(mean, dtype=float), np.asarray(gauss, dtype=float)
    dH, dK = np.asarray(d_mean, dtype=float), np.asarray(d_gauss, dtype=float)
    h3 = h ** 3 / 12.0
    h5 = h ** 5 / 80.0
    return (h + h3 * (K + 4.0 * dH * dH + 2.0 * dK)
            + h5 * (16.0 * H * H * dH * dH - 8.0 * H * dH * dK
                    - 4.0 * K * dH * dH + dK * dK))


def log_det_bracket(mean, gauss, log_area_ratio, d_mean, d_gauss, h):
    """int log(det F) b dx3 through fifth order (error O(h^7)).

    With r = log(a_m / a_y0):
    = h r + h^3/12 (K r + dK - 2 dH^2)
        + h^5/80 ( -4 dH^4 - 32/3 H dH^3 + (2K - 8H^2) dH^2
                   + 4 H dH dK + 4 dH^2 dK - dK^2 / 2 ).
    """
    H, K = np.asarray(mean, dtype=float), np.asarray(gauss, dtype=float)
    dH, dK = np.asarray(d_mean, dtype=float), np.asarray(d_gauss, dtype=float)
    r = np.asarray(log_area_ratio, dtype=float)
    h3 = h ** 3 / 12.0
    h5 = h ** 5 / 80.0
    block5 = (-4.0 * dH ** 4 - (32.0 / 3.0) * H * dH ** 3
              + (2.0 * K - 8.0 * H * H) * dH * dH
              + 4.0 * H * dH * dK + 4.0 * dH * dH * dK - 0.5 * dK * dK)
    return h * r + h3 * (K * r + dK - 2.0 * dH * dH) + h5 * block5


# ---------------------------------------------------------------------------
# reduced-vs-3D comparison engine
# ---------------------------------------------------------------------------

def compare_reduced_3d(chart, deformed_chart, grid, mu, lam, h_values,
                       models=(1, 2, 3), constants="oracle", order=4,
                       rule=("gauss", 16), threads=None):
    """Reduced energies against the slab integral over a thickness sweep.

    Returns {"rows": [(h, model, reduced, full3d, abs_err), ...],
             "orders": {model: fitted slope of log|err| vs log h}}.
    The sweep is mapped over a thread pool (numpy releases the GIL in the
    heavy kernels); results are collected in submission order so the output
    is deterministic.
    """
    h_values = [float(h) for h in h_values]
    models = tuple(models)

    def one(h):
        ref = build_reference(chart, grid, h, order)
        mat = MaterialParams(mu=mu, lam=lam, h=h)
        state = deformed_state(deformed_chart, grid, h, order)
        full3d = integrate_3d(state, ref, mat, rule=rule)
        per_model = {}
        for model in models:
            reduced = total_energy(state, ref, mat, model, constants).internal
            per_model[model] = (reduced, full3d, abs(reduced - full3d))
        return per_model

    if threads is None:
        threads = min(len(h_values), os.cpu_count() or 1)
    if threads > 1 and len(h_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, h_values))
    else:
        results = [one(h) for h in h_values]

    rows = []
    for h, per_model in zip(h_values, results):
        for model in models:
            reduced, full3d, err = per_model[model]
            rows.append((h, model, reduced, full3d, err))

    orders = {}
    log_h = np.log(np.asarray(h_values))
    for model in models:
        errs = np.asarray([per[model][2] for per in results])
        if np.all(errs > 0.0) and len(h_values) >= 2:
            orders[model] = float(np.polyfit(log_h, np.log(errs), 1)[0])
        else:
            orders[model] = float("inf")
    return {"rows": rows, "orders": orders}
