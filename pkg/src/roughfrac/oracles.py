"""Independent Riemann-sum oracles with refinement ladders.

These deliberately share no code with the fractional pairings they check:
left-point and tensor-compensated sums over coarsened grids, with a
Richardson extrapolation from the observed convergence order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lift import MultiplicativeFunctional
from .paths import SampledPath


@dataclass(frozen=True)
class OracleResult:
    kind: str
    grid_sizes: list
    values: list
    extrapolated: float
    observed_order: float
    fit_residual: float
    meta: dict = field(default_factory=dict)


def _ladder_strides(n: int, rungs: int):
    strides = []
    s = 1
    for _ in range(rungs):
        if n % s != 0:
            break
        strides.append(s)
        s *= 2
    return list(reversed(strides))        # coarse to fine


def _extrapolate(kind, sizes, vals):
    vals = np.asarray(vals, dtype=float)
    if len(vals) < 3:
        return OracleResult(kind, sizes, vals.tolist(),
                            float(vals[-1]), np.nan, np.nan)
    diffs = np.abs(np.diff(vals))
    orders = []
    for i in range(len(diffs) - 1):
        if diffs[i + 1] > 0 and diffs[i] > 0:
            orders.append(np.log2(diffs[i] / diffs[i + 1]))
    p = float(np.median(orders)) if orders else 1.0
    p_clamped = min(max(p, 0.25), 4.0)
    extrap = vals[-1] + (vals[-1] - vals[-2]) / (2.0 ** p_clamped - 1.0)
    resid = float(np.std(orders)) if len(orders) > 1 else np.nan
    return OracleResult(kind, sizes, vals.tolist(), float(extrap), p, resid)


def riemann_stieltjes_oracle(X: SampledPath, Y: SampledPath, phi=None,
                             rungs: int = 4) -> OracleResult:
    """Left-point sums sum phi(X(t_k)) (Y(t_k+1) - Y(t_k)) across a ladder
    of coarsenings, Richardson-extrapolated."""
    n = X.n_segments
    strides = _ladder_strides(n, rungs)
    sizes, vals = [], []
    for s in strides:
        Xs = X.values[::s]
        Ys = Y.values[::s]
        left = phi.values(Xs[:-1]) if phi is not None else Xs[:-1]
        vals.append(float(np.sum(left * np.diff(Ys, axis=0))))
        sizes.append(n // s)
    return _extrapolate("riemann_stieltjes", sizes, vals)


def midpoint_compensated_oracle(mf: MultiplicativeFunctional, phi,
                                rungs: int = 4) -> OracleResult:
    """Tensor-compensated left-point sums

        sum_k [ phi(X(t_k)) Y_{k,k+1} + sum_ij d_i phi_j(X(t_k)) T(t_k, t_k+1) ]

    which realize the geometric (midpoint-consistent) rough integral on the
    ladder; the tensor entries come straight from the functional, so this
    route never touches the fractional pairings.
    """
    X, Y = mf.X, mf.Y
    n = X.n_segments
    strides = _ladder_strides(n, rungs)
    sizes, vals = [], []
    for s in strides:
        idx = np.arange(0, n + 1, s)
        Xs = X.values[idx]
        Ys = Y.values[idx]
        first = float(np.sum(phi.values(Xs[:-1]) * np.diff(Ys, axis=0)))
        grads = phi.partials(Xs[:-1])                  # (k, m, d)
        T = mf.tensor_nodes(idx[:-1], idx[1:])         # (k, m, d)
        second = float(np.sum(grads * T))
        vals.append(first + second)
        sizes.append(n // s)
    return _extrapolate("midpoint_compensated", sizes, vals)
