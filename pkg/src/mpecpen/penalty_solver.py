"""Penalty continuation over a compact box.

The inner solver is projected compass search with step halving: scan the
signed coordinate directions in fixed order, take the first strict
improvement, halve the step when a full sweep fails.  That handles the
kinks of fractional-power penalties.  Coordinate polling alone provably
stalls on the feasible manifold (there, every single-coordinate move
raises the penalty faster than it lowers the objective), so the poll set
is augmented with tangent completions: for each signed step in an upper
variable, the lower variables are completed through the stationarity
system restricted to the current activity pattern, which keeps the
residual flat to first order and lets the search ride the manifold.
When the exponent is 1/2 and the iterate sits off the kink, a
projected-gradient pass with backtracking refines the compass result;
all phases only ever accept strict descent, so the penalized objective
is non-increasing along the iterates.

The outer loop raises the penalty parameter geometrically until either
the residual meets the feasibility tolerance (a feasible minimizer), or
the residual stagnates at a point that is first-order stationary for the
penalized problem (an infeasible penalty-local minimizer, which exact
penalties do admit), or the round budget runs out.

Everything runs on a small landscape interface (objective, residual,
growth expansion, box), so the same loop drives both LCP-MPEC problems
and custom one-dimensional constructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import AtKink
from .model import KktPoint, MpecProblem, eval_F
from . import residuals as res
from .residuals import KINK_TOLERANCE, ResidualSpec

CLASS_FEASIBLE = "FeasibleMinimizer"
CLASS_INFEASIBLE = "InfeasiblePenaltyStationary"
CLASS_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class PenaltyConfig:
    """Knobs of the continuation loop.  ``gamma`` overrides the exponent
    carried by ``residual``; ``alpha_fixed`` freezes the penalty weight
    (the growth factor is then ignored)."""

    alpha0: float = 1.0
    growth: float = 10.0
    eps_feas: float = 1e-8
    eps_stat: float = 1e-6
    max_outer: int = 12
    max_inner: int = 5000
    gamma: float = 0.5
    residual: ResidualSpec = field(default_factory=lambda: ResidualSpec(
        kind=res.KIND_KKT, norm=res.NORM_L2, gamma=0.5, squared_stationarity=True))
    seed: int = 0
    alpha_fixed: bool = False
    inner_tol: float = 1e-9
    residual_decrease: float = 0.5

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if self.growth <= 1 and not self.alpha_fixed:
            raise ValueError("growth must exceed 1")
        if self.eps_feas <= 0 or self.eps_stat <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")

    def effective_spec(self) -> ResidualSpec:
        return replace(self.residual, gamma=self.gamma)


@dataclass
class SolveReport:
    """Outcome of one continuation run."""

    final_point: KktPoint
    alpha_history: list[float]
    residual_history: list[float]
    objective_history: list[float]
    penalized_history: list[float]
    classification: str
    stationarity_measure: float
    gamma: float
    residual_kind: str
    stationarity_variant: str

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    @property
    def final_objective(self) -> float:
        return self.objective_history[-1]

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "final_point": {
                "x": self.final_point.x.tolist(),
                "y": self.final_point.y.tolist(),
                "lambda": self.final_point.lam.tolist(),
            },
            "final_objective": self.final_objective,
            "final_residual": self.final_residual,
            "stationarity_measure": self.stationarity_measure,
            "alpha_history": self.alpha_history,
            "residual_history": self.residual_history,
            "objective_history": self.objective_history,
            "penalized_history": self.penalized_history,
            "gamma": self.gamma,
            "residual_kind": self.residual_kind,
            "stationarity_variant": self.stationarity_variant,
        }


@dataclass(frozen=True)
class Landscape:
    """What the solver needs to know about one penalized problem."""

    lower: np.ndarray
    upper: np.ndarray
    objective: Callable[[np.ndarray], float]
    residual: Callable[[np.ndarray], float]
    #: one-sided growth (r0, slope, curve) of the residual along z + t d
    expansion: Callable[[np.ndarray, np.ndarray], tuple[float, float, float]]
    #: directional derivative of the smooth objective part
    objective_slope: Callable[[np.ndarray, np.ndarray], float]
    #: gradient of objective + alpha*sqrt(residual), None when unavailable
    sqrt_grad: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    #: maps a raw iterate to a KktPoint for reporting
    as_point: Optional[Callable[[np.ndarray], KktPoint]] = None
    #: extra poll directions that follow the feasible manifold, or None
    tangent_polls: Optional[Callable[[np.ndarray], list[np.ndarray]]] = None

    @property
    def dim(self) -> int:
        return self.lower.size

    def penalized(self, z: np.ndarray, alpha: float, gamma: float) -> float:
        return self.objective(z) + alpha * max(self.residual(z), 0.0) ** gamma


def landscape_from_problem(problem: MpecProblem, spec: ResidualSpec) -> Landscape:
    n, m = problem.n, problem.m

    def objective(z):
        return problem.f_value(z[:n], z[n:n + m])

    def residual(z):
        return res.residual_value(problem, problem.split(z), spec)

    def expansion(z, d):
        return res.residual_expansion(problem, problem.split(z), d, spec)

    def objective_slope(z, d):
        gx, gy = problem.f_grad(z[:n], z[n:n + m])
        return float(gx @ d[:n] + gy @ d[n:n + m])

    sqrt_grad = None
    if spec.kind == res.KIND_KKT and spec.squared_stationarity:
        def sqrt_grad(z, alpha):
            return res.grad_penalized_sqrt(problem, problem.split(z), alpha)

    M, Q = problem.M, problem.qmap.Q

    def tangent_polls(z):
        # For a signed unit step dx in one upper coordinate, complete
        # (dy, dlambda) so the stationarity block stays zero under an
        # activity pattern of y: active rows keep their multiplier
        # (dl_i = 0) and solve M_AA dy_A = -(Q dx)_A; inactive rows keep
        # dy_i = 0 and move the multiplier with the slack.  Pairs with
        # both members near zero are degenerate corners of the solution
        # path, where either branch may continue it, so both patterns
        # are polled.
        y = z[n:n + m]
        lam = z[n + m:]
        base = y > 1e-9
        degen = (~base) & (lam <= 1e-9)
        patterns = [np.flatnonzero(base)]
        if np.any(degen):
            patterns.append(np.flatnonzero(base | degen))
        dirs: list[np.ndarray] = []
        for act in patterns:
            inact = np.setdiff1d(np.arange(m), act, assume_unique=True)
            for j in range(n):
                for sign in (1.0, -1.0):
                    dx = np.zeros(n)
                    dx[j] = sign
                    rhs = -(Q @ dx)
                    dy = np.zeros(m)
                    if act.size:
                        sub = M[np.ix_(act, act)]
                        try:
                            dy[act] = np.linalg.solve(sub, rhs[act])
                        except np.linalg.LinAlgError:
                            continue
                        if not np.all(np.isfinite(dy)):
                            continue
                    dl = np.zeros(m)
                    slack_rate = M @ dy + Q @ dx
                    dl[inact] = slack_rate[inact]
                    d = np.concatenate([dx, dy, dl])
                    scale = float(np.max(np.abs(d)))
                    if scale > 1.0:
                        d /= scale
                    dirs.append(d)
        return dirs

    return Landscape(lower=problem.z_lower, upper=problem.z_upper,
                     objective=objective, residual=residual,
                     expansion=expansion, objective_slope=objective_slope,
                     sqrt_grad=sqrt_grad,
                     as_point=lambda z: problem.split(z),
                     tangent_polls=tangent_polls)


def q5_toy_landscape() -> Landscape:
    """One-dimensional construction with an infeasible penalty-local
    minimizer: minimize t over [-1, 4] subject to r(t) = 0 where
    r(t) = min(t^2, (t-3)^2 + 1).  The feasible set is {0}, yet
    t + 2 r(t) has a strict local minimizer at t = 2.75 with r > 1."""
    lower = np.array([-1.0])
    upper = np.array([4.0])

    def branches(t):
        return t * t, (t - 3.0) ** 2 + 1.0

    def residual(z):
        a, b = branches(float(z[0]))
        return min(a, b)

    def objective(z):
        return float(z[0])

    def objective_slope(z, d):
        return float(d[0])

    def expansion(z, d):
        t, dt = float(z[0]), float(d[0])
        a, b = branches(t)
        da, db = 2.0 * t * dt, 2.0 * (t - 3.0) * dt
        slope = res.min_dirderiv(a, b, da, db)
        # both branches have unit quadratic coefficient in t
        return min(a, b), slope, dt * dt

    return Landscape(lower=lower, upper=upper, objective=objective,
                     residual=residual, expansion=expansion,
                     objective_slope=objective_slope, sqrt_grad=None,
                     as_point=lambda z: KktPoint(z, np.zeros(0), np.zeros(0)))


# -- inner solver ---------------------------------------------------------

def _compass(land: Landscape, alpha: float, gamma: float, z0: np.ndarray,
             budget: int, tol: float,
             callback: Optional[Callable[[np.ndarray, float], None]] = None
             ) -> tuple[np.ndarray, float, int]:
    z = np.clip(z0, land.lower, land.upper)
    phi = land.penalized(z, alpha, gamma)
    if callback:
        callback(z, phi)
    evals = 0
    widths = land.upper - land.lower
    step = 0.25 * float(np.max(widths)) if np.max(widths) > 0 else 0.0
    eye = np.eye(land.dim)
    while step >= tol and evals < budget:
        polls: list[np.ndarray] = []
        for j in range(land.dim):
            polls.append(eye[j])
            polls.append(-eye[j])
        if land.tangent_polls is not None:
            polls.extend(land.tangent_polls(z))
        improved = False
        for d in polls:
            trial = np.clip(z + step * d, land.lower, land.upper)
            if np.array_equal(trial, z):
                continue
            if evals >= budget:
                return z, phi, evals
            phi_t = land.penalized(trial, alpha, gamma)
            evals += 1
            if phi_t < phi:
                z, phi = trial, phi_t
                if callback:
                    callback(z, phi)
                improved = True
                break
        if not improved:
            step *= 0.5
    return z, phi, evals


def _gradient_refine(land: Landscape, alpha: float, z: np.ndarray, phi: float,
                     budget: int, tol: float,
                     callback: Optional[Callable[[np.ndarray, float], None]] = None
                     ) -> tuple[np.ndarray, float, int]:
    # projected gradient with backtracking on objective + alpha*sqrt(r);
    # bails out as soon as the iterate reaches the kink region
    evals = 0
    step = 1.0
    for _ in range(200):
        if evals >= budget:
            break
        try:
            g = land.sqrt_grad(z, alpha)
        except AtKink:
            break
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-14:
            break
        accepted = False
        while step >= 1e-16 and evals < budget:
            trial = np.clip(z - step * g, land.lower, land.upper)
            phi_t = land.penalized(trial, alpha, 0.5)
            evals += 1
            if phi_t < phi - 1e-16:
                z, phi = trial, phi_t
                if callback:
                    callback(z, phi)
                accepted = True
                step *= 2.0
                break
            step *= 0.5
        if not accepted:
            break
        if step * gnorm < tol:
            break
    return z, phi, evals


def minimize_landscape(land: Landscape, alpha: float, gamma: float,
                       z0: np.ndarray, budget: int, tol: float,
                       callback=None) -> np.ndarray:
    z, phi, used = _compass(land, alpha, gamma, z0, budget, tol, callback)
    if gamma == 0.5 and land.sqrt_grad is not None and budget > used:
        if land.residual(z) > KINK_TOLERANCE:
            z, phi, used2 = _gradient_refine(land, alpha, z, phi,
                                             budget - used, tol, callback)
            # compass polish after the smooth pass, in case the gradient
            # walked into a kinked valley
            if budget > used + used2:
                z, phi, _ = _compass(land, alpha, gamma, z, budget - used - used2,
                                     tol, callback)
    return z


def inner_minimize(problem: MpecProblem, alpha: float, spec: ResidualSpec,
                   z0: KktPoint, budget: int, tol: float = 1e-9,
                   callback=None) -> KktPoint:
    """Approximately minimize f + alpha*r^gamma over the box from z0.

    Always returns the best point found; with a zero budget that is z0
    projected onto the box.
    """
    z0.check_dims(problem)
    land = landscape_from_problem(problem, spec)
    z = minimize_landscape(land, alpha, spec.gamma, z0.to_z(), budget, tol,
                           callback)
    return problem.split(z)


# -- stationarity ---------------------------------------------------------

def stationarity_measure(land: Landscape, z: np.ndarray, alpha: float,
                         gamma: float, boundary_tol: float = 0.0) -> float:
    """Most negative box-feasible signed-coordinate directional derivative
    of the penalized objective, clamped at zero."""
    worst = 0.0
    d = np.zeros(land.dim)
    for j in range(land.dim):
        for sign in (1.0, -1.0):
            if sign > 0 and z[j] >= land.upper[j] - boundary_tol:
                continue
            if sign < 0 and z[j] <= land.lower[j] + boundary_tol:
                continue
            d[j] = sign
            r0, slope, curve = land.expansion(z, d)
            ps = res.power_slope(r0, slope, curve, gamma)
            ddi = math.inf if math.isinf(ps) else land.objective_slope(z, d) + alpha * ps
            d[j] = 0.0
            if ddi < worst:
                worst = ddi
    return -worst if worst < 0.0 else 0.0


def check_stationarity(problem: MpecProblem, z: KktPoint, alpha: float,
                       spec: ResidualSpec) -> float:
    """Coordinatewise first-order stationarity of f + alpha*r^gamma at z;
    zero means no signed coordinate direction descends."""
    z.check_dims(problem)
    land = landscape_from_problem(problem, spec)
    return stationarity_measure(land, z.to_z(), alpha, spec.gamma)


# -- outer loop -----------------------------------------------------------

def default_start(problem: MpecProblem) -> KktPoint:
    """Box-midpoint upper variables, zero lower variables, multiplier
    warm-started at the positive part of the slack."""
    x = 0.5 * (problem.x_box[:, 0] + problem.x_box[:, 1])
    y = np.zeros(problem.m)
    lam = np.clip(eval_F(problem, x, y), 0.0, problem.multiplier_bound)
    return KktPoint(x, y, lam)


def run_continuation(land: Landscape, config: PenaltyConfig,
                     z0: np.ndarray) -> SolveReport:
    gamma = config.gamma
    alpha = config.alpha0
    z = np.clip(np.asarray(z0, dtype=float), land.lower, land.upper)
    alphas: list[float] = []
    rs: list[float] = []
    fs: list[float] = []
    phis: list[float] = []
    classification = CLASS_LIMIT
    prev_r = None
    for _ in range(config.max_outer):
        z = minimize_landscape(land, alpha, gamma, z, config.max_inner,
                               config.inner_tol)
        r = land.residual(z)
        alphas.append(alpha)
        rs.append(r)
        fs.append(land.objective(z))
        phis.append(land.penalized(z, alpha, gamma))
        if r <= config.eps_feas:
            classification = CLASS_FEASIBLE
            break
        if prev_r is not None and r > config.residual_decrease * prev_r:
            stat = stationarity_measure(land, z, alpha, gamma)
            if stat <= config.eps_stat:
                classification = CLASS_INFEASIBLE
                break
        prev_r = r
        if not config.alpha_fixed:
            alpha *= config.growth
    stat = stationarity_measure(land, z, alphas[-1], gamma)
    spec = config.effective_spec()
    point = land.as_point(z) if land.as_point else KktPoint(z, np.zeros(0), np.zeros(0))
    return SolveReport(final_point=point, alpha_history=alphas,
                       residual_history=rs, objective_history=fs,
                       penalized_history=phis, classification=classification,
                       stationarity_measure=stat, gamma=gamma,
                       residual_kind=spec.kind,
                       stationarity_variant="squared" if spec.squared_stationarity else "norm")


def penalty_continuation(problem: MpecProblem, config: PenaltyConfig,
                         z0: KktPoint | None = None) -> SolveReport:
    """Outer penalty loop on an MPEC; see the module docstring for the
    stopping logic."""
    land = landscape_from_problem(problem, config.effective_spec())
    start = z0 if z0 is not None else default_start(problem)
    start.check_dims(problem)
    return run_continuation(land, config, start.to_z())


def classify_result(report: SolveReport, eps_feas: float,
                    eps_stat: float = 1e-6) -> str:
    """Re-derive the outcome class from a finished report."""
    if report.final_residual <= eps_feas:
        return CLASS_FEASIBLE
    if report.stationarity_measure <= eps_stat:
        return CLASS_INFEASIBLE
    return CLASS_LIMIT


def random_starts(land_or_problem, count: int, seed: int = 0) -> list[np.ndarray]:
    """Uniform starting points in the search box, deterministic per seed."""
    if isinstance(land_or_problem, MpecProblem):
        lower, upper = land_or_problem.z_lower, land_or_problem.z_upper
    else:
        lower, upper = land_or_problem.lower, land_or_problem.upper
    rng = np.random.default_rng(seed)
    return [lower + rng.random(lower.size) * (upper - lower) for _ in range(count)]
