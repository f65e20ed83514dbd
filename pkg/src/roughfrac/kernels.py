"""Closed-form building blocks for weakly singular power-kernel quadrature.

Everything downstream (Marchaud derivatives, Riesz potentials, occupation
integrals) reduces, for piecewise-linear data, to integrals of a linear
function against a pure power kernel.  These helpers evaluate those cell
integrals exactly, so the only discretization error anywhere is the
piecewise-linear representation of the data itself.
"""

from __future__ import annotations

import numpy as np

_TINY = 1e-300


def linear_against_power(c, m, u1, u2, expo):
    """Exact ``int_{u1}^{u2} (c + m*u) * u**expo du`` for expo not in {-1, -2}.

    All arguments broadcast.  Requires 0 <= u1 <= u2 and expo + 2 > 0 is NOT
    required; the caller must ensure each power integral converges
    (expo != -1 for the m part, expo + 1 != -1 ... handled by the two cases
    below).  Used with expo = -alpha - 1 and expo = -alpha for alpha in (0,1).
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    p1 = expo + 1.0
    p2 = expo + 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a1 = np.maximum(u1, 0.0)
        ic = (np.power(u2, p1) - np.power(a1, p1)) / p1
        im = (np.power(u2, p2) - np.power(a1, p2)) / p2
    return c * ic + m * im


def product_integrate_left_power(t, u, a, expo):
    """Exact ``int_{t0}^{tn} uhat(r) * (r - a)**expo dr`` with uhat pw-linear.

    ``u`` holds node values of the integrand's smooth factor on the grid
    ``t`` and is interpolated linearly.  ``expo`` in (-1, 0) makes the kernel
    integrable at r = a even when t[0] == a.  Shape of ``u`` may be (n+1,) or
    (n+1, k); integration runs along axis 0.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    v1 = t[:-1] - a
    v2 = t[1:] - a
    dt = t[1:] - t[:-1]
    slope = (u[1:] - u[:-1]) / dt.reshape((-1,) + (1,) * (u.ndim - 1))
    # u(r) = c + slope*(r - a) on each cell
    c = u[:-1] - slope * v1.reshape((-1,) + (1,) * (u.ndim - 1))
    p1 = expo + 1.0
    p2 = expo + 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        iv = ((np.power(v2, p1) - np.power(np.maximum(v1, 0.0), p1)) / p1)
        im = ((np.power(v2, p2) - np.power(np.maximum(v1, 0.0), p2)) / p2)
    shape = (-1,) + (1,) * (u.ndim - 1)
    return np.sum(c * iv.reshape(shape) + slope * im.reshape(shape), axis=0)


def abs_power_antiderivative(v, s):
    """F(v) = sign(v) |v|^(1-s) / (1-s), the antiderivative of |v|^(-s)."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.abs(v) ** (1.0 - s) / (1.0 - s)


def abs_power_antiderivative2(v, s):
    """G(v) = |v|^(2-s) / ((1-s)(2-s)), antiderivative of sign(v)|v|^(1-s)/(1-s)."""
    v = np.asarray(v, dtype=float)
    return np.abs(v) ** (2.0 - s) / ((1.0 - s) * (2.0 - s))


def segment_abs_power_integral(v0, v1, dt, s):
    """Exact ``int_segment |x(t)|^(-s) dt`` for x linear from v0 to v1 over dt.

    Vectorized; returns +inf on segments that sit identically at zero.
    Transversal zero crossings are integrable for s < 1 and handled by the
    odd antiderivative.
    """
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    dt = np.asarray(dt, dtype=float)
    delta = v1 - v0
    flat = np.abs(delta) < _TINY * np.maximum(1.0, np.abs(v0))
    out = np.empty(np.broadcast(v0, v1, dt).shape, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        gen = dt * (abs_power_antiderivative(v1, s) - abs_power_antiderivative(v0, s)) / delta
        const = dt * np.abs(v0) ** (-s)
    out[...] = np.where(flat, const, gen)
    out[flat & (np.abs(np.broadcast_to(v0, out.shape)) < _TINY)] = np.inf
    return out


_np_trapz = getattr(np, "trapezoid", None) or np.trapz


def trapezoid(y, x):
    """Trapezoid rule along axis 0 (thin wrapper, keeps call sites uniform)."""
    return _np_trapz(y, x, axis=0)
