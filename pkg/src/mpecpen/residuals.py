"""Complementarity residuals, penalty values, and their directional calculus.

Residual kinds:

* ``min``      -- natural residual ||min(y, w)||, kinked at component ties;
* ``product``  -- y'w, smooth but signed (only a residual on y, w >= 0);
* ``kkt``      -- stationarity norm plus violation sums for the one-level
  system: ||F(x,y) - lambda|| + sum [-y_i]_+ + sum [-lambda_i]_+
  + sum |lambda_i y_i|.

The ``kkt`` kind has a squared-stationarity variant

    r(z) = ||F(x,y) - lambda||^2 + sum lambda_i y_i,

a polynomial in z, which is the form differentiated for the square-root
penalty and the default landscape the solver runs on.  On the search box
(y, lambda >= 0) both variants vanish exactly on the feasible set.

The directional machinery reports the one-sided growth of a residual
along a ray, r(z + t d) = r0 + slope*t + curve*t^2 + o(t^2), with the
convention that ``curve`` is only tracked (and only needed) when the ray
starts on the zero set with zero slope; that is the case that decides
whether a fractional-power penalty has a finite directional derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AtKink, DimensionMismatch
from .model import KktPoint, MpecProblem, eval_F

KIND_MIN = "min"
KIND_PRODUCT = "product"
KIND_KKT = "kkt"
NORM_L1 = "l1"
NORM_L2 = "l2"

#: Below this residual the square-root penalty gradient is unreliable:
#: 1/sqrt(r) amplifies rounding noise.
KINK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ResidualSpec:
    """Which residual to use, in which norm, with which penalty exponent.

    ``squared_stationarity`` selects the polynomial variant of the kkt
    residual (squared stationarity block, raw complementarity products);
    it only affects kind ``kkt``.
    """

    kind: str = KIND_KKT
    norm: str = NORM_L2
    gamma: float = 0.5
    squared_stationarity: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_MIN, KIND_PRODUCT, KIND_KKT):
            raise ValueError(f"unknown residual kind {self.kind!r}")
        if self.norm not in (NORM_L1, NORM_L2):
            raise ValueError(f"unknown norm {self.norm!r}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")


def _norm(v: np.ndarray, norm: str) -> float:
    if norm == NORM_L1:
        return float(np.sum(np.abs(v)))
    if norm == NORM_L2:
        return float(np.linalg.norm(v))
    raise ValueError(f"unknown norm {norm!r}")


def min_residual(y, w, norm: str = NORM_L2) -> float:
    """Norm of the componentwise min(y, w); zero exactly at complementary
    pairs with both parts nonnegative."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if y.shape != w.shape:
        raise DimensionMismatch(f"y has shape {y.shape}, w has shape {w.shape}")
    return _norm(np.minimum(y, w), norm)


def product_residual(y, w) -> float:
    """The inner product y'w.  Nonnegative only when y >= 0 and w >= 0;
    the caller owns the sign convention."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if y.shape != w.shape:
        raise DimensionMismatch(f"y has shape {y.shape}, w has shape {w.shape}")
    return float(y @ w)


def kkt_residual(problem: MpecProblem, z: KktPoint, spec: ResidualSpec | None = None) -> float:
    """Stationarity norm plus primal/dual violation and complementarity sums.

    Zero exactly when (x, y, lambda) is feasible for the one-level
    reformulation.  The complementarity term is |lambda_i y_i|, which is
    sign-safe for infeasible iterates with negative components.
    """
    spec = spec or ResidualSpec()
    z.check_dims(problem)
    s = eval_F(problem, z.x, z.y) - z.lam
    stat = _norm(s, spec.norm)
    primal = float(np.sum(np.maximum(-z.y, 0.0)))
    dual = float(np.sum(np.maximum(-z.lam, 0.0)))
    comp = float(np.sum(np.abs(z.lam * z.y)))
    return stat + primal + dual + comp


def kkt_residual_squared(problem: MpecProblem, z: KktPoint) -> float:
    """Polynomial variant: ||F(x,y) - lambda||^2 + sum lambda_i y_i.

    A valid residual on the search box (where y, lambda >= 0); it can go
    negative at points with negative components, so penalty evaluation
    clamps at zero.
    """
    z.check_dims(problem)
    s = eval_F(problem, z.x, z.y) - z.lam
    return float(s @ s + z.lam @ z.y)


def residual_value(problem: MpecProblem, z: KktPoint, spec: ResidualSpec) -> float:
    """Dispatch on spec.kind (and the stationarity variant for kkt)."""
    if spec.kind == KIND_MIN:
        w = eval_F(problem, z.x, z.y)
        return min_residual(z.y, w, spec.norm)
    if spec.kind == KIND_PRODUCT:
        w = eval_F(problem, z.x, z.y)
        return product_residual(z.y, w)
    if spec.squared_stationarity:
        return kkt_residual_squared(problem, z)
    return kkt_residual(problem, z, spec)


def penalized_objective(problem: MpecProblem, z: KktPoint, alpha: float,
                        spec: ResidualSpec) -> float:
    """f(x, y) + alpha * max(r(z), 0)^gamma with r selected by ``spec.kind``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    r = max(residual_value(problem, z, spec), 0.0)
    return problem.f_value(z.x, z.y) + alpha * r ** spec.gamma


def min_dirderiv(u: float, v: float, du: float, dv: float) -> float:
    """Directional derivative of (u, v) -> min(u, v) along (du, dv).

    Three cases: the active branch's rate away from ties, and the smaller
    rate at a tie (a perturbation follows whichever branch drops faster).
    """
    if u < v:
        return du
    if u > v:
        return dv
    return min(du, dv)


# -- one-sided growth expansions -----------------------------------------

def _abs_pieces(value: float, rate: float, accel: float = 0.0) -> tuple[float, float, float]:
    # expansion of |value + rate*t + accel*t^2| for t -> 0+
    if value > 0.0:
        return value, rate, accel
    if value < 0.0:
        return -value, -rate, -accel
    if rate != 0.0:
        return 0.0, abs(rate), math.copysign(accel, rate)
    return 0.0, 0.0, abs(accel)


def _pos_pieces(value: float, rate: float) -> tuple[float, float]:
    # expansion of [value + rate*t]_+ for t -> 0+ (affine argument)
    if value > 0.0:
        return value, rate
    if value < 0.0:
        return 0.0, 0.0
    return 0.0, max(rate, 0.0)


def residual_expansion(problem: MpecProblem, z: KktPoint, d: np.ndarray,
                       spec: ResidualSpec) -> tuple[float, float, float]:
    """One-sided growth (r0, slope, curve) of the residual along z + t d.

    ``slope`` is the one-sided directional derivative of the residual.
    ``curve`` is the quadratic growth coefficient, exact whenever r0 = 0
    and slope = 0 (the only case the penalty calculus needs it).
    """
    z.check_dims(problem)
    n, m = problem.n, problem.m
    d = np.asarray(d, dtype=float)
    if d.size != n + 2 * m:
        raise DimensionMismatch(f"direction must have length {n + 2 * m}")
    dx, dy, dl = d[:n], d[n:n + m], d[n + m:]

    if spec.kind == KIND_MIN:
        w = eval_F(problem, z.x, z.y)
        dw = problem.M @ dy + problem.qmap.Q @ dx
        vals = np.minimum(z.y, w)
        rates = np.array([min_dirderiv(z.y[i], w[i], dy[i], dw[i]) for i in range(m)])
        if spec.norm == NORM_L1:
            r0 = slope = curve = 0.0
            for i in range(m):
                v, s, c = _abs_pieces(vals[i], rates[i])
                r0, slope, curve = r0 + v, slope + s, curve + c
            return r0, slope, curve
        r0 = float(np.linalg.norm(vals))
        if r0 > 0.0:
            return r0, float(vals @ rates) / r0, 0.0
        return 0.0, float(np.linalg.norm(rates)), 0.0

    if spec.kind == KIND_PRODUCT:
        w = eval_F(problem, z.x, z.y)
        dw = problem.M @ dy + problem.qmap.Q @ dx
        p0 = float(z.y @ w)
        p1 = float(dy @ w + z.y @ dw)
        p2 = float(dy @ dw)
        # clamp at zero, matching the penalty evaluation
        if p0 > 0.0:
            return p0, p1, p2
        if p0 < 0.0:
            return 0.0, 0.0, 0.0
        if p1 > 0.0:
            return 0.0, p1, p2
        if p1 < 0.0:
            return 0.0, 0.0, 0.0
        return 0.0, 0.0, max(p2, 0.0)

    # kkt kinds
    s0 = eval_F(problem, z.x, z.y) - z.lam
    s1 = problem.M @ dy + problem.qmap.Q @ dx - dl

    if spec.squared_stationarity:
        r0 = float(s0 @ s0 + z.lam @ z.y)
        slope = float(2.0 * s0 @ s1 + z.lam @ dy + z.y @ dl)
        curve = float(s1 @ s1 + dl @ dy)
        if r0 < 0.0:
            # off-box point where the raw product went negative; the
            # clamped residual is locally zero
            return 0.0, 0.0, 0.0
        return r0, slope, curve

    r0 = slope = curve = 0.0
    if spec.norm == NORM_L1:
        for i in range(m):
            v, sl, cu = _abs_pieces(s0[i], s1[i])
            r0, slope, curve = r0 + v, slope + sl, curve + cu
    else:
        stat0 = float(np.linalg.norm(s0))
        if stat0 > 0.0:
            r0 += stat0
            slope += float(s0 @ s1) / stat0
        else:
            slope += float(np.linalg.norm(s1))
    for i in range(m):
        v, sl = _pos_pieces(-z.y[i], -dy[i])
        r0, slope = r0 + v, slope + sl
        v, sl = _pos_pieces(-z.lam[i], -dl[i])
        r0, slope = r0 + v, slope + sl
        p0 = z.lam[i] * z.y[i]
        p1 = z.lam[i] * dy[i] + z.y[i] * dl[i]
        p2 = dl[i] * dy[i]
        v, sl, cu = _abs_pieces(p0, p1, p2)
        r0, slope, curve = r0 + v, slope + sl, curve + cu
    return r0, slope, curve


def power_slope(r0: float, slope: float, curve: float, gamma: float,
                kink_tolerance: float = KINK_TOLERANCE) -> float:
    """One-sided directional derivative of t -> r(t)^gamma at t = 0+,
    given the growth expansion of r.  Returns +inf where a fractional
    power has a vertical tangent (never a descent direction)."""
    if r0 > kink_tolerance:
        return gamma * r0 ** (gamma - 1.0) * slope
    # on (or numerically at) the zero set
    if gamma == 1.0:
        return slope
    if slope > kink_tolerance:
        return math.inf
    if slope < -kink_tolerance:
        # residuals are nonnegative, so a genuinely negative slope at the
        # zero set cannot occur; treat defensively as flat
        return 0.0
    if gamma > 0.5:
        return 0.0
    if gamma == 0.5:
        return math.sqrt(max(curve, 0.0))
    return math.inf if curve > 0.0 else 0.0


def penalized_dirderiv(problem: MpecProblem, z: KktPoint, d: np.ndarray,
                       alpha: float, spec: ResidualSpec) -> float:
    """One-sided directional derivative of f + alpha * r^gamma along d."""
    gx, gy = problem.f_grad(z.x, z.y)
    n, m = problem.n, problem.m
    d = np.asarray(d, dtype=float)
    fdot = float(gx @ d[:n] + gy @ d[n:n + m])
    r0, slope, curve = residual_expansion(problem, z, d, spec)
    pslope = power_slope(r0, slope, curve, spec.gamma)
    if math.isinf(pslope):
        return math.inf
    return fdot + alpha * pslope


def grad_penalized_sqrt(problem: MpecProblem, z: KktPoint, alpha: float,
                        kink_tolerance: float = KINK_TOLERANCE) -> np.ndarray:
    """Gradient of f + alpha * sqrt(r) for the squared-stationarity
    residual r(z) = ||F(x,y) - lambda||^2 + sum lambda_i y_i, at points
    with r(z) above the kink tolerance.

    grad = grad f + (alpha / (2 sqrt(r))) * grad r, with
        d r/dx      = 2 Q'(F - lambda)
        d r/dy      = 2 M'(F - lambda) + lambda
        d r/dlambda = -2 (F - lambda) + y
    """
    z.check_dims(problem)
    r = kkt_residual_squared(problem, z)
    if r <= kink_tolerance:
        raise AtKink(f"residual {r:.3e} is at or below the kink tolerance "
                     f"{kink_tolerance:.1e}; use directional derivatives")
    s = eval_F(problem, z.x, z.y) - z.lam
    gx, gy = problem.f_grad(z.x, z.y)
    scale = alpha / (2.0 * math.sqrt(r))
    grad_x = gx + scale * (2.0 * problem.qmap.Q.T @ s)
    grad_y = gy + scale * (2.0 * problem.M.T @ s + z.lam)
    grad_l = scale * (-2.0 * s + z.y)
    return np.concatenate([grad_x, grad_y, grad_l])
