"""One-dimensional finite-difference operators on uniform grids.

Weights come from Fornberg's recursion, which returns the exact
interpolatory differentiation weights for an arbitrary node set.  Interior
rows use centered windows of the requested order; rows too close to the
boundary fall back to one-sided windows wide enough to keep the same formal
order.
"""

from __future__ import annotations

import numpy as np

from .errors import GridTooSmall


def fornberg_weights(z, x, m):
    """Differentiation weights at point ``z`` for nodes ``x``.

    Returns an array ``w`` of shape ``(len(x), m + 1)`` where ``w[:, k]``
    are the weights of the ``k``-th derivative at ``z``:
    ``f^(k)(z) ~= sum_j w[j, k] f(x[j])``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[i, k] = c1 * (k * w[i - 1, k - 1] - c5 * w[i - 1, k]) / c2
                w[i, 0] = -c1 * c5 * w[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                w[j, k] = (c4 * w[j, k] - k * w[j, k - 1]) / c3
            w[j, 0] = c4 * w[j, 0] / c3
        c1 = c2
    return w


def _window(i, n, npts):
    """Index range of the stencil window for row i, clipped to the grid."""
    half = npts // 2
    lo = i - half
    if npts % 2 == 0:
        lo = i - (half - 1)
    lo = max(0, min(lo, n - npts))
    return lo, lo + npts


def derivative_matrix(n, spacing, deriv, order=4):
    """Dense ``(n, n)`` differentiation matrix of the given derivative.

    Parameters
    ----------
    n : int
        Number of grid nodes.
    spacing : float
        Uniform node spacing.
    deriv : int
        Derivative order, 1 or 2.
    order : int
        Formal accuracy order, 2 or 4 (boundary rows keep the same order
        through wider one-sided windows).
    """
    if deriv not in (1, 2):
        raise ValueError("deriv must be 1 or 2")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    # interior: centered window with order+1 points (the centered second
    # derivative gains one order from symmetry); boundary: order+deriv points.
    npts_int = order + 1
    npts_bnd = order + deriv
    npts_min = max(npts_int, npts_bnd)
    if n < npts_min:
        raise GridTooSmall(
            "need at least %d nodes per direction for deriv=%d order=%d, got %d"
            % (npts_min, deriv, order, n)
        )
    mat = np.zeros((n, n))
    half = npts_int // 2
    for i in range(n):
        if half <= i <= n - 1 - half:
            lo, hi = i - half, i + half + 1
        else:
            lo, hi = _window(i, n, npts_bnd)
        nodes = np.arange(lo, hi, dtype=float) * spacing
        w = fornberg_weights(i * spacing, nodes, deriv)
        mat[i, lo:hi] = w[:, deriv]
    return mat


class GridDerivatives:
    """Pre-built differentiation matrices for a tensor grid.

    Applies first and second derivative operators along either axis of
    fields shaped ``(n1, n2)`` or ``(n1, n2, c)``, and exposes the
    transposed applications the gradient assembly needs.
    """

    def __init__(self, n1, n2, dx1, dx2, order=4):
        self.order = int(order)
        self.d1 = derivative_matrix(n1, dx1, 1, order)
        self.d2 = derivative_matrix(n2, dx2, 1, order)
        self.d11 = derivative_matrix(n1, dx1, 2, order)
        self.d22 = derivative_matrix(n2, dx2, 2, order)

    # forward applications ------------------------------------------------
    def along1(self, f, second=False):
        op = self.d11 if second else self.d1
        return np.einsum("ik,k...->i...", op, f)

    def along2(self, f, second=False):
        op = self.d22 if second else self.d2
        return np.einsum("jk,ik...->ij...", op, f)

    def all_slots(self, f):
        """The five derivative fields of ``f``: d1, d2, d11, d12, d22."""
        g1 = self.along1(f)
        return {
            "d1": g1,
            "d2": self.along2(f),
            "d11": self.along1(f, second=True),
            "d12": self.along2(g1),
            "d22": self.along2(f, second=True),
        }

    # transposed applications (scatter for gradients) ----------------------
    def scatter(self, slot, sigma):
        """Adjoint of the slot operator applied to a weight field.

        If ``F_slot = op(f)`` is linear, the gradient contribution of a
        functional ``sum(sigma * F_slot)`` with respect to nodal ``f`` is
        ``op^T sigma``; this returns that field.
        """
        if slot == "d1":
            return np.einsum("ki,k...->i...", self.d1, sigma)
        if slot == "d2":
            return np.einsum("kj,ik...->ij...", self.d2, sigma)
        if slot == "d11":
            return np.einsum("ki,k...->i...", self.d11, sigma)
        if slot == "d22":
            return np.einsum("kj,ik...->ij...", self.d22, sigma)
        if slot == "d12":
            # d12 = along2(along1(f))  =>  adjoint = d1^T sigma d2
            tmp = np.einsum("kj,ik...->ij...", self.d2, sigma)
            return np.einsum("ki,k...->i...", self.d1, tmp)
        raise KeyError(slot)


SLOTS = ("d1", "d2", "d11", "d12", "d22")
