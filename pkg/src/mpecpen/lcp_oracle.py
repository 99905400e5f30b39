"""Ground truth for desk-scale LCPs by complementary-basis enumeration.

For order m the enumeration visits all 2^m index sets I, solves
M_II y_I = -q_I with the remaining components pinned at zero, and keeps
every candidate passing the feasibility and complementarity checks.
Exhaustive and exact at small m, which is the whole point: these answers
calibrate the penalty machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, EmptySolutionSet, NonUniqueSolution, TooLarge
from .model import AffineParamMap, LcpInstance, _as_vector

FEAS_TOL = 1e-10
DEDUP_TOL = 1e-9
MAX_ORDER = 20


@dataclass
class SolutionSet:
    """All isolated solutions of one LCP found by enumeration."""

    points: list[np.ndarray] = field(default_factory=list)
    empty_flag: bool = True
    bases_explored: int = 0
    singular_bases: int = 0


def _passes_checks(y: np.ndarray, w: np.ndarray) -> bool:
    return (np.all(y >= -FEAS_TOL) and np.all(w >= -FEAS_TOL)
            and abs(float(y @ w)) <= FEAS_TOL)


def solve_lcp_enumerate(lcp: LcpInstance) -> SolutionSet:
    """Enumerate all complementary bases; singular bases are skipped and
    counted, never treated as errors."""
    m = lcp.order
    if m > MAX_ORDER:
        raise TooLarge(f"enumeration limited to order {MAX_ORDER}, got {m}")
    M, q = lcp.M, lcp.q
    found: list[np.ndarray] = []
    singular = 0
    explored = 0
    for size in range(m + 1):
        for idx in combinations(range(m), size):
            explored += 1
            y = np.zeros(m)
            if idx:
                ii = np.array(idx)
                sub = M[np.ix_(ii, ii)]
                try:
                    y_i = np.linalg.solve(sub, -q[ii])
                except np.linalg.LinAlgError:
                    singular += 1
                    continue
                if not np.all(np.isfinite(y_i)) or \
                        np.max(np.abs(sub @ y_i + q[ii])) > 1e-8 * max(1.0, np.max(np.abs(q[ii]))):
                    singular += 1
                    continue
                y[ii] = y_i
            w = M @ y + q
            if _passes_checks(y, w):
                if all(np.linalg.norm(y - p) > DEDUP_TOL for p in found):
                    found.append(y)
    found.sort(key=lambda p: tuple(p))
    return SolutionSet(points=found, empty_flag=not found,
                       bases_explored=explored, singular_bases=singular)


def distance_to_solution_set(z, sols: SolutionSet) -> float:
    """Euclidean distance from z to the nearest listed solution."""
    if sols.empty_flag or not sols.points:
        raise EmptySolutionSet("solution set is empty; distance is +inf")
    z = _as_vector(z, "z", size=sols.points[0].size)
    return min(float(np.linalg.norm(z - p)) for p in sols.points)


def parametric_solution_path(M, qmap: AffineParamMap, x_grid) -> list[tuple[np.ndarray, SolutionSet]]:
    """Enumerated solution sets along a grid of parameter values."""
    grid = [np.atleast_1d(np.asarray(x, dtype=float)) for x in x_grid]
    if not grid:
        raise ValueError("x_grid must be nonempty")
    M = np.asarray(M, dtype=float)
    return [(x, solve_lcp_enumerate(LcpInstance(M, qmap(x)))) for x in grid]


def is_P_matrix(M) -> bool:
    """True iff every principal minor of M is strictly positive."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got shape {M.shape}")
    m = M.shape[0]
    if m > MAX_ORDER:
        raise TooLarge(f"principal-minor test limited to order {MAX_ORDER}, got {m}")
    for size in range(1, m + 1):
        for idx in combinations(range(m), size):
            ii = np.array(idx)
            if np.linalg.det(M[np.ix_(ii, ii)]) <= 0.0:
                return False
    return True


def estimate_lipschitz_modulus(path: list[tuple[np.ndarray, SolutionSet]]) -> float:
    """Max slope ||y(x1) - y(x2)|| / ||x1 - x2|| over all grid pairs of a
    single-valued solution path.  Zero for fewer than two distinct points."""
    points = []
    for x, sols in path:
        if sols.empty_flag or len(sols.points) != 1:
            raise NonUniqueSolution(
                f"path is not single-valued at x = {np.asarray(x).tolist()}")
        points.append((np.atleast_1d(np.asarray(x, dtype=float)), sols.points[0]))
    best = 0.0
    for i in range(len(points)):
        xi, yi = points[i]
        for j in range(i + 1, len(points)):
            xj, yj = points[j]
            dx = float(np.linalg.norm(xi - xj))
            if dx == 0.0:
                continue
            best = max(best, float(np.linalg.norm(yi - yj)) / dx)
    return best
