"""BV functions, Radon measures, and the coefficient classes fed to integrals.

One dimension gets an exact calculus (atoms + piecewise-constant density).
In higher dimension a coefficient is specified by evaluable partials plus
user-supplied dominating gradient measures; the integrals only ever consume
those measures through Riesz potentials and domination checks, so no full
multi-dimensional BV machinery is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

JUMP_LEFT = "left_limit"
JUMP_RIGHT = "right_limit"
JUMP_MID = "midpoint"


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadonMeasure:
    """Nonnegative measure on R^m: atoms (points, weights >= 0) plus an
    optional piecewise-constant density on boxes.

    atom_points : (k, m) array;  atom_weights : (k,) array
    boxes : list of (lo, hi, value) with lo, hi arrays of length m, value >= 0
    """

    m: int
    atom_points: np.ndarray = None
    atom_weights: np.ndarray = None
    boxes: tuple = ()

    def __post_init__(self):
        pts = np.zeros((0, self.m)) if self.atom_points is None else \
            np.atleast_2d(np.asarray(self.atom_points, dtype=float))
        wts = np.zeros(0) if self.atom_weights is None else \
            np.atleast_1d(np.asarray(self.atom_weights, dtype=float))
        if pts.shape != (len(wts), self.m):
            raise ValueError("atom points/weights shape mismatch")
        if np.any(wts < 0):
            raise ValueError("atom weights must be >= 0")
        boxes = []
        for lo, hi, val in self.boxes:
            lo = np.atleast_1d(np.asarray(lo, dtype=float))
            hi = np.atleast_1d(np.asarray(hi, dtype=float))
            if val < 0:
                raise ValueError("density values must be >= 0")
            if np.any(hi <= lo):
                raise ValueError("box must have positive extent")
            boxes.append((lo, hi, float(val)))
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "atom_points", pts)
        object.__setattr__(self, "atom_weights", wts)
        object.__setattr__(self, "boxes", tuple(boxes))

    @property
    def total_mass(self) -> float:
        mass = float(self.atom_weights.sum())
        for lo, hi, val in self.boxes:
            mass += val * float(np.prod(hi - lo))
        return mass

    def scaled(self, c: float) -> "RadonMeasure":
        return RadonMeasure(self.m, self.atom_points, c * self.atom_weights,
                            tuple((lo, hi, c * v) for lo, hi, v in self.boxes))

    def __add__(self, other: "RadonMeasure") -> "RadonMeasure":
        if other.m != self.m:
            raise ValueError("dimension mismatch")
        return RadonMeasure(
            self.m,
            np.vstack([self.atom_points, other.atom_points]),
            np.concatenate([self.atom_weights, other.atom_weights]),
            self.boxes + other.boxes)


def atom_measure(points, weights, m: int | None = None) -> RadonMeasure:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 1 and np.ndim(points) == 1 and len(np.atleast_1d(weights)) > 1:
        pts = np.asarray(points, dtype=float)[:, None]
    m = pts.shape[1] if m is None else m
    return RadonMeasure(m, pts, np.atleast_1d(weights))


def dirac(z, weight=1.0) -> RadonMeasure:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return RadonMeasure(len(z), z[None, :], [weight])


def lebesgue_1d(lo: float, hi: float, density: float = 1.0) -> RadonMeasure:
    return RadonMeasure(1, boxes=((np.array([lo]), np.array([hi]), density),))


# ---------------------------------------------------------------------------
# 1d BV functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BV1D:
    """f(x) = base_value + sum of jumps left of x + integral of the density.

    atoms: list of (location, signed jump); density: piecewise-constant
    signed density given by breakpoints (len k+1) and values (len k).
    """

    atoms: tuple = ()
    density_breaks: np.ndarray = None
    density_values: np.ndarray = None
    base_value: float = 0.0
    jump_convention: str = JUMP_MID

    def __post_init__(self):
        atoms = tuple(sorted((float(x), float(w)) for x, w in self.atoms))
        br = np.zeros(0) if self.density_breaks is None else \
            np.asarray(self.density_breaks, dtype=float)
        dv = np.zeros(0) if self.density_values is None else \
            np.asarray(self.density_values, dtype=float)
        if br.size and (dv.size != br.size - 1 or np.any(np.diff(br) <= 0)):
            raise ValueError("density breaks/values inconsistent")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "density_breaks", br)
        object.__setattr__(self, "density_values", dv)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.base_value)
        for loc, w in self.atoms:
            if self.jump_convention == JUMP_LEFT:
                out = out + w * (x > loc)
            elif self.jump_convention == JUMP_RIGHT:
                out = out + w * (x >= loc)
            else:
                out = out + w * ((x > loc) + 0.5 * (x == loc))
        br, dv = self.density_breaks, self.density_values
        for i in range(dv.size):
            lo, hi = br[i], br[i + 1]
            out = out + dv[i] * np.clip(x - lo, 0.0, hi - lo)
        return out

    @property
    def total_variation(self) -> float:
        tv = sum(abs(w) for _, w in self.atoms)
        if self.density_values.size:
            tv += float(np.sum(np.abs(self.density_values) * np.diff(self.density_breaks)))
        return tv


def gradient_measure(f: BV1D) -> RadonMeasure:
    """Total variation measure ||Df|| = sum |w_k| delta_{x_k} + |density| dx."""
    pts = np.array([[x] for x, _ in f.atoms]) if f.atoms else None
    wts = np.array([abs(w) for _, w in f.atoms]) if f.atoms else None
    boxes = tuple((np.array([f.density_breaks[i]]),
                   np.array([f.density_breaks[i + 1]]),
                   abs(float(f.density_values[i])))
                  for i in range(f.density_values.size)
                  if f.density_values[i] != 0.0)
    return RadonMeasure(1, pts, wts, boxes)


# ---------------------------------------------------------------------------
# coefficients phi: R^m -> R^d
# ---------------------------------------------------------------------------

class Coefficient:
    """Common interface: vectorized values and first-order partials.

    values(x): x (npts, m) -> (npts, d)
    partials(x): x (npts, m) -> (npts, m, d)
    """

    m = 1
    d = 1
    is_bv = False

    def values(self, x):
        raise NotImplementedError

    def partials(self, x):
        raise NotImplementedError


class SmoothCoefficient(Coefficient):
    """Differentiable coefficient with lambda-Hoelder first partials."""

    def __init__(self, f, df, m=1, d=1, lam=1.0, lip=None, partial_holder=None,
                 name="smooth", antiderivative=None):
        self._f = f
        self._df = df
        self.antiderivative = antiderivative
        self.m = m
        self.d = d
        self.lam = float(lam)
        self.lip = np.atleast_1d(np.asarray(lip if lip is not None else np.ones(d), dtype=float))
        ph = partial_holder if partial_holder is not None else np.ones((m, d))
        self.partial_holder = np.asarray(ph, dtype=float)
        self.name = name

    def values(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self._f(x), dtype=float)
        return out.reshape(x.shape[0], self.d)

    def partials(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self._df(x), dtype=float)
        return out.reshape(x.shape[0], self.m, self.d)


class BVCoefficient(Coefficient):
    """Lipschitz coefficient whose first partials are BV.

    partial evaluation follows the jump convention; gradient measures
    ||D d_i phi_j|| are carried explicitly (for m = 1 derived from the BV1D
    partials, for m > 1 supplied by the caller as dominating measures).
    """

    is_bv = True

    def __init__(self, f, df, grad_measures, m=1, d=1, lip=None,
                 jump_convention=JUMP_MID, name="bv", antiderivative=None):
        self._f = f
        self._df = df
        self.antiderivative = antiderivative
        self.m = m
        self.d = d
        self.lip = np.atleast_1d(np.asarray(lip if lip is not None else np.ones(d), dtype=float))
        gm = np.empty((m, d), dtype=object)
        for i in range(m):
            for j in range(d):
                gm[i, j] = grad_measures[i][j]
        self.grad_measures = gm
        self.jump_convention = jump_convention
        self.name = name

    def values(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self._f(x), dtype=float).reshape(x.shape[0], self.d)

    def partials(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self._df(x, self.jump_convention), dtype=float).reshape(
            x.shape[0], self.m, self.d)


def _sign_with_convention(u, convention):
    s = np.sign(u)
    if convention == JUMP_LEFT:
        return np.where(u == 0, -1.0, s)
    if convention == JUMP_RIGHT:
        return np.where(u == 0, 1.0, s)
    return s


def _step_with_convention(u, convention):
    # indicator of u > 0 with a convention value at 0
    at0 = {JUMP_LEFT: 0.0, JUMP_RIGHT: 1.0, JUMP_MID: 0.5}[convention]
    return np.where(u > 0, 1.0, np.where(u < 0, 0.0, at0))


def coefficient_library(name: str, params=None, jump_convention=JUMP_MID):
    """Named scalar coefficients used throughout the tests and demos.

    abs, ramp, clip(a,b), piecewise_linear(knots, slopes), sign,
    smooth(f, df, lam, ...), identity, square.
    """
    params = params or {}
    if name == "abs":
        return BVCoefficient(
            f=lambda x: np.abs(x[:, 0:1]),
            df=lambda x, conv: _sign_with_convention(x[:, 0:1], conv),
            grad_measures=[[dirac(0.0, 2.0)]],
            lip=[1.0], jump_convention=jump_convention, name="abs",
            antiderivative=lambda x: x * np.abs(x) / 2.0)
    if name == "ramp":
        return BVCoefficient(
            f=lambda x: np.maximum(x[:, 0:1], 0.0),
            df=lambda x, conv: _step_with_convention(x[:, 0:1], conv),
            grad_measures=[[dirac(0.0, 1.0)]],
            lip=[1.0], jump_convention=jump_convention, name="ramp",
            antiderivative=lambda x: np.where(x > 0, x * x / 2.0, 0.0))
    if name == "clip":
        lo, hi = float(params["lo"]), float(params["hi"])
        return BVCoefficient(
            f=lambda x: np.clip(x[:, 0:1], lo, hi),
            df=lambda x, conv: (_step_with_convention(x[:, 0:1] - lo, conv)
                                - _step_with_convention(x[:, 0:1] - hi, conv)),
            grad_measures=[[atom_measure(np.array([[lo], [hi]]), [1.0, 1.0])]],
            lip=[1.0], jump_convention=jump_convention, name="clip",
            antiderivative=lambda x: (0.5 * np.clip(x, lo, hi) ** 2
                                      + lo * (np.minimum(x, lo) - lo)
                                      + hi * (np.maximum(x, hi) - hi)))
    if name == "piecewise_linear":
        knots = np.asarray(params["knots"], dtype=float)
        slopes = np.asarray(params["slopes"], dtype=float)
        if len(slopes) != len(knots) + 1:
            raise ValueError("need len(slopes) == len(knots) + 1")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be sorted strictly increasing")
        # anchor phi(knots[0]) = 0; integrate slopes
        node_vals = np.concatenate([[0.0], np.cumsum(slopes[1:-1] * np.diff(knots))])

        def f(x):
            u = x[:, 0]
            out = np.interp(u, knots, node_vals)
            out = np.where(u < knots[0], node_vals[0] + slopes[0] * (u - knots[0]), out)
            out = np.where(u > knots[-1], node_vals[-1] + slopes[-1] * (u - knots[-1]), out)
            return out[:, None]

        def df(x, conv):
            u = x[:, 0]
            idx = np.searchsorted(knots, u, side="right")
            out = slopes[idx].astype(float)
            for k, knot in enumerate(knots):
                at = u == knot
                if not np.any(at):
                    continue
                if conv == JUMP_LEFT:
                    out[at] = slopes[k]
                elif conv == JUMP_MID:
                    out[at] = 0.5 * (slopes[k] + slopes[k + 1])
            return out[:, None]

        jumps = np.abs(np.diff(slopes))
        keep = jumps > 0
        gm = atom_measure(knots[keep][:, None], jumps[keep]) if np.any(keep) \
            else RadonMeasure(1)
        anti = _pw_linear_antiderivative(knots, node_vals, slopes)
        return BVCoefficient(f=f, df=df, grad_measures=[[gm]],
                             lip=[float(np.max(np.abs(slopes)))],
                             jump_convention=jump_convention,
                             name="piecewise_linear", antiderivative=anti)
    if name == "sign":
        # BV coefficient itself (not its derivative): used as a composition test
        return BVCoefficient(
            f=lambda x: _sign_with_convention(x[:, 0:1], jump_convention),
            df=lambda x, conv: np.zeros_like(x[:, 0:1]),
            grad_measures=[[RadonMeasure(1)]],
            lip=[np.inf], jump_convention=jump_convention, name="sign",
            antiderivative=np.abs)
    if name == "identity":
        return SmoothCoefficient(lambda x: x[:, 0:1], lambda x: np.ones_like(x[:, 0:1]),
                                 lam=1.0, lip=[1.0], partial_holder=[[0.0]],
                                 name="identity", antiderivative=lambda x: x * x / 2.0)
    if name == "square":
        return SmoothCoefficient(lambda x: x[:, 0:1] ** 2,
                                 lambda x: 2.0 * x[:, 0:1],
                                 lam=1.0, lip=[np.inf], partial_holder=[[2.0]],
                                 name="square", antiderivative=lambda x: x ** 3 / 3.0)
    if name == "smooth":
        return SmoothCoefficient(params["f"], params["df"],
                                 m=params.get("m", 1), d=params.get("d", 1),
                                 lam=params.get("lam", 1.0),
                                 lip=params.get("lip"),
                                 partial_holder=params.get("partial_holder"),
                                 name=params.get("name", "smooth"))
    raise ValueError(f"unknown coefficient {name!r}")


def _pw_linear_antiderivative(knots, node_vals, slopes):
    """Exact antiderivative of a piecewise-linear function, anchored at knots[0]."""
    knots = np.asarray(knots, dtype=float)
    node_vals = np.asarray(node_vals, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    dk = np.diff(knots)
    psi = np.concatenate([[0.0], np.cumsum(node_vals[:-1] * dk
                                           + 0.5 * slopes[1:-1] * dk ** 2)])

    def anti(x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, len(knots) - 1)
        u = x - knots[idx]
        out = psi[idx] + node_vals[idx] * u + 0.5 * slopes[idx + 1] * u ** 2
        below = x < knots[0]
        if np.any(below):
            ub = x - knots[0]
            out = np.where(below, node_vals[0] * ub + 0.5 * slopes[0] * ub ** 2, out)
        return out

    return anti


def check_domination(grad: RadonMeasure, mu: RadonMeasure):
    """True iff grad <= mu in the atoms + box-density representation.

    Every atom of grad needs an atom of mu at the same point with at least
    the same weight; the density of grad must not exceed the density of mu
    anywhere (checked on the box arrangement).  Returns (ok, witness_point).
    """
    if grad.m != mu.m:
        raise ValueError("dimension mismatch")
    for pt, w in zip(grad.atom_points, grad.atom_weights):
        cover = 0.0
        for qt, v in zip(mu.atom_points, mu.atom_weights):
            if np.allclose(pt, qt):
                cover += v
        if w > cover + 1e-12:
            return False, pt.copy()
    for lo, hi, val in grad.boxes:
        if val == 0.0:
            continue
        # sample the box corners and center against mu's density
        probes = [0.5 * (lo + hi), lo + 1e-9 * (hi - lo), hi - 1e-9 * (hi - lo)]
        for x in probes:
            mu_den = 0.0
            for mlo, mhi, mval in mu.boxes:
                if np.all(x >= mlo) and np.all(x <= mhi):
                    mu_den += mval
            if val > mu_den + 1e-12:
                return False, x.copy()
    return True, None


# ---------------------------------------------------------------------------
# plain-text spec files:  name=..., params=..., atoms=x:w;..., density=lo,hi:v;...
# ---------------------------------------------------------------------------

def parse_measure_spec(text: str) -> RadonMeasure:
    fields = _parse_kv(text)
    pts, wts, boxes = [], [], []
    if fields.get("atoms"):
        for item in fields["atoms"].split(";"):
            if not item.strip():
                continue
            x, w = item.split(":")
            pt = [float(c) for c in x.split(",")]
            pts.append(pt)
            wts.append(float(w))
    if fields.get("density"):
        for item in fields["density"].split(";"):
            if not item.strip():
                continue
            box, v = item.split(":")
            coords = [float(c) for c in box.split(",")]
            m = len(coords) // 2
            boxes.append((np.array(coords[:m]), np.array(coords[m:]), float(v)))
    m = len(pts[0]) if pts else (len(boxes[0][0]) if boxes else 1)
    return RadonMeasure(m, np.array(pts) if pts else None,
                        np.array(wts) if wts else None, tuple(boxes))


def parse_coefficient_spec(text: str):
    fields = _parse_kv(text)
    name = fields.get("name")
    if name is None:
        raise ValueError("coefficient spec needs a name= line")
    params = {}
    if fields.get("params"):
        for item in fields["params"].split(";"):
            if not item.strip():
                continue
            k, v = item.split("=")
            try:
                params[k.strip()] = float(v)
            except ValueError:
                params[k.strip()] = v.strip()
    if name == "clip":
        params = {"lo": params.get("lo", -1.0), "hi": params.get("hi", 1.0)}
    if name == "piecewise_linear":
        params = {"knots": [float(c) for c in str(fields["knots"]).split(";")],
                  "slopes": [float(c) for c in str(fields["slopes"]).split(";")]}
    conv = fields.get("jump_convention", JUMP_MID)
    return coefficient_library(name, params, jump_convention=conv)


def _parse_kv(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, _, v = line.partition("=")
        out[k.strip()] = v.strip()
    return out
