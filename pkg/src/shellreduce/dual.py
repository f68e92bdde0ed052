"""Forward-mode dual numbers over numpy arrays.

A :class:`Dual` carries a value array of shape ``S`` and a tangent stack of
shape ``S + (k,)`` holding directional derivatives along ``k`` independent
seed directions.  Arithmetic propagates the product, quotient and chain
rules, which covers everything the energy kernels need (``+ - * /``, integer
powers, ``sqrt``, ``log``).

The energy pipeline evaluates densities on whole grids at once, so ``S`` is
typically ``(n1, n2)`` and ``k`` counts the independent derivative slots the
density depends on (15 for the shell densities: five derivative fields times
three components).  Plain numpy arrays pass through :func:`sqrt` and
:func:`log` untouched, so a single code path serves both numeric evaluation
and differentiation.
"""

from __future__ import annotations

import numpy as np


def _tangent_shape(other):
    """Broadcast helper: align a plain factor with a tangent stack."""
    if isinstance(other, np.ndarray):
        return other[..., None]
    return other


class Dual:
    __slots__ = ("val", "dot")

    # make ndarray + Dual dispatch to Dual.__radd__ instead of numpy
    # broadcasting over an object scalar
    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(self, val, dot):
        self.val = val
        self.dot = dot

    @property
    def ndirs(self):
        return self.dot.shape[-1]

    # ------------------------------------------------------------------
    # ring operations
    # ------------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot)

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.dot * _tangent_shape(other.val)
                + other.dot * _tangent_shape(self.val),
            )
        return Dual(self.val * other, self.dot * _tangent_shape(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            val = self.val * inv
            return Dual(
                val,
                (self.dot - other.dot * _tangent_shape(val))
                * _tangent_shape(inv),
            )
        inv = 1.0 / other
        return Dual(self.val * inv, self.dot * _tangent_shape(inv))

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        val = other * inv
        return Dual(val, -self.dot * _tangent_shape(val * inv))

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, np.integer)):
            raise TypeError("Dual supports integer powers only")
        if exponent == 0:
            return Dual(np.ones_like(self.val), np.zeros_like(self.dot))
        val = self.val ** exponent
        return Dual(
            val,
            self.dot * _tangent_shape(float(exponent) * self.val ** (exponent - 1)),
        )

    def __repr__(self):  # pragma: no cover - debugging aid
        return "Dual(val=%r, ndirs=%d)" % (self.val, self.ndirs)


def sqrt(x):
    """Square root for plain arrays and Duals alike."""
    if isinstance(x, Dual):
        val = np.sqrt(x.val)
        return Dual(val, x.dot * _tangent_shape(0.5 / val))
    return np.sqrt(x)


def log(x):
    """Natural logarithm for plain arrays and Duals alike."""
    if isinstance(x, Dual):
        return Dual(np.log(x.val), x.dot * _tangent_shape(1.0 / x.val))
    return np.log(x)


def value(x):
    """Strip the tangent part (identity on plain arrays)."""
    return x.val if isinstance(x, Dual) else x


def total(x, weights=None):
    """Sum a scalar field over all of its grid axes, optionally weighted.

    For a Dual the tangent stack keeps its trailing direction axis, so the
    result is a Dual scalar whose dot is the weighted sum of per-point dots.
    """
    if weights is not None:
        x = x * weights
    if isinstance(x, Dual):
        axes = tuple(range(np.ndim(x.val)))
        return Dual(np.sum(x.val), np.sum(x.dot, axis=axes))
    return np.sum(x)


def seed(fields):
    """Turn ``k`` same-shaped arrays into Duals with identity seeding.

    ``fields[i]`` becomes a Dual whose tangent stack is the ``i``-th
    coordinate direction, so downstream arithmetic accumulates the Jacobian
    of any scalar result with respect to the ``k`` inputs.
    """
    fields = [np.asarray(f, dtype=float) for f in fields]
    k = len(fields)
    shape = fields[0].shape
    out = []
    for i, f in enumerate(fields):
        dot = np.zeros(shape + (k,))
        dot[..., i] = 1.0
        out.append(Dual(f, dot))
    return out
