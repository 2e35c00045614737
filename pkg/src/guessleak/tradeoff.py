"""Assembly and solution of the vertex-support LP and the trade-off sweep.

The optimal release mechanism under a guessing-leakage budget can be searched
over mixtures supported on the rank-partition vertex set: the objective is
linear in the mixture weights once columns are pinned to vertices, the
mixture must reproduce the curator marginal, and the budget becomes a single
linear inequality on the weighted guessing values.  ``sweep_curve`` solves
that LP over a grid of budgets and estimates the kinks of the resulting
concave piecewise-linear curve by bisection on slopes.

Alternative utility objectives plug in as per-vertex coefficient functions;
besides the f-information family this module ships the guessing gain of the
useful variable (``guessing_gain_objective``).  Squared-error or error
probability utilities would slot into the same hook but are not implemented.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import simplex
from .divergence import FGenerator, batch_divergence
from .errors import AbsoluteContinuityError, SolverError, ValidationError
from .geometry import VertexSet, enumerate_vertices
from .probability import (
    JointSystem,
    Mechanism,
    _hg,
    full_disclosure_leakage,
    full_disclosure_leakage_multiplicative,
)

TOL_LP = 1e-8

ObjectiveFn = Callable[[JointSystem, VertexSet], np.ndarray]
Objective = Union[FGenerator, ObjectiveFn]


def guessing_gain_objective(system: JointSystem, vertices: VertexSet) -> np.ndarray:
    """Per-vertex coefficients for the guessing gain of the useful variable.

    With weights summing to one, the weighted sum of
    H_G(p_Y) - H_G(P_{Y|W} q_i) is exactly the guessing leakage toward Y, so
    maximizing it maximizes GL(Y -> U).  The per-column term is convex in the
    column, which is what vertex support requires.
    """
    hgy = _hg(system.p_Y.p)
    conds = system.P_YgW.matrix @ vertices.points.T
    return np.array([hgy - _hg(conds[:, i]) for i in range(len(vertices))])


def _objective_coefficients(system: JointSystem, vertices: VertexSet, objective: Objective) -> np.ndarray:
    if isinstance(objective, FGenerator):
        conds = (system.P_YgW.matrix @ vertices.points.T).T
        return batch_divergence(objective, conds, system.p_Y)
    return np.asarray(objective(system, vertices), dtype=np.float64)


def _objective_name(objective: Objective) -> str:
    return objective.name if isinstance(objective, FGenerator) else getattr(objective, "__name__", "custom")


def budget_domain(system: JointSystem, mode: str = "gl") -> tuple[float, float]:
    """Admissible budget interval: [0, GL(X->W)] or [1, GL_m(X->W)]."""
    if mode == "gl":
        return 0.0, full_disclosure_leakage(system)
    if mode == "glm":
        return 1.0, full_disclosure_leakage_multiplicative(system)
    raise ValidationError(f"unknown constraint mode {mode!r}; expected 'gl' or 'glm'")


@dataclass(frozen=True, eq=False)
class LPInstance:
    """One budget's LP: weights over vertices reproducing p_W.

    The sum-to-one constraint is implied by the mixture equalities and is not
    stated.  ``threshold`` is the lower bound on the weighted guessing values
    (H_G(X) - eps additively, H_G(X)/eps multiplicatively).
    """

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    g: np.ndarray
    threshold: float
    epsilon: float
    mode: str
    objective_name: str

    @property
    def n_vertices(self) -> int:
        return self.c.size


def assemble_lp(
    system: JointSystem,
    vertices: VertexSet,
    gen: Objective,
    epsilon: float,
    mode: str = "gl",
) -> LPInstance:
    """Build the LP for one leakage budget.

    Raises ``ValidationError`` when the budget is outside the admissible
    interval and ``AbsoluteContinuityError`` when some vertex induces a
    conditional outside the support of p_Y under an unbounded generator.
    """
    if vertices.dim != system.n_W:
        raise ValidationError(f"vertex dim {vertices.dim} != |W|={system.n_W}")
    lo, hi = budget_domain(system, mode)
    if not (lo - 1e-9 <= epsilon <= hi + 1e-9):
        raise ValidationError(f"budget {epsilon!r} outside [{lo!r}, {hi!r}] for mode {mode}")
    epsilon = min(max(epsilon, lo), hi)
    c = _objective_coefficients(system, vertices, gen)
    if not np.all(np.isfinite(c)):
        raise AbsoluteContinuityError(
            "infinite objective coefficient: a vertex conditional escapes the support of p_Y"
        )
    hgx = _hg(system.p_X.p)
    threshold = hgx - epsilon if mode == "gl" else hgx / epsilon
    return LPInstance(
        c=c,
        A_eq=vertices.points.T.copy(),
        b_eq=system.p_W.p.copy(),
        g=vertices.guess_values.copy(),
        threshold=threshold,
        epsilon=epsilon,
        mode=mode,
        objective_name=_objective_name(gen),
    )


def solve_lp(lp: LPInstance) -> tuple[float, np.ndarray, np.ndarray]:
    """Solve one assembled LP.

    Returns
    -------
    (value, weights, duals)
        Optimal value, a basic weight vector over the vertices (at most
        |W|+1 nonzero), and the duals of the |W| mixture equalities followed
        by the guessing inequality.
    """
    n_w, k = lp.A_eq.shape
    A = np.zeros((n_w + 1, k + 1))
    A[:n_w, :k] = lp.A_eq
    A[n_w, :k] = lp.g
    A[n_w, k] = -1.0  # surplus on the guessing inequality
    b = np.concatenate([lp.b_eq, [lp.threshold]])
    c = np.concatenate([lp.c, [0.0]])
    sol = simplex.maximize(c, A, b)
    gap = abs(sol.value - float(sol.duals @ b))
    if gap > TOL_LP:
        cond = float(np.linalg.cond(A[:, sol.basis])) if sol.basis.size == n_w + 1 else float("nan")
        raise SolverError(f"primal-dual gap {gap:.3e} exceeds {TOL_LP:.0e} (basis condition {cond:.3e})")
    weights = np.clip(sol.x[:k], 0.0, None)
    return sol.value, weights, sol.duals


def extract_mechanism(weights: np.ndarray, vertices: VertexSet, tol: float = 1e-12) -> Mechanism:
    """Turn a basic LP solution into a release mechanism.

    Support columns are sorted lexicographically; no further canonicalization
    is applied when the LP has several optima.
    """
    weights = np.asarray(weights, dtype=np.float64)
    support = [i for i in range(len(vertices)) if weights[i] > tol]
    if not support:
        raise ValidationError("empty support: weights are all zero")
    support.sort(key=lambda i: tuple(vertices.points[i]))
    probs = weights[support]
    cols = vertices.points[support].T
    return Mechanism(probs, cols)


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """Sampled trade-off curve with per-budget optimal mechanisms."""

    objective_name: str
    mode: str
    epsilons: np.ndarray
    values: np.ndarray
    mechanisms: tuple
    breakpoints: np.ndarray
    domain: tuple[float, float]

    def check(self, tol: float = TOL_LP) -> None:
        """Assert monotonicity and concavity up to the LP tolerance."""
        e, v = self.epsilons, self.values
        for i in range(len(e) - 1):
            if v[i + 1] < v[i] - tol:
                raise SolverError(f"curve not monotone at eps={e[i + 1]!r}: {v[i + 1]!r} < {v[i]!r}")
        for i in range(1, len(e) - 1):
            span = e[i + 1] - e[i - 1]
            if span <= 0:
                continue
            lam = (e[i] - e[i - 1]) / span
            chord = (1 - lam) * v[i - 1] + lam * v[i + 1]
            if v[i] < chord - tol:
                raise SolverError(f"curve not concave at eps={e[i]!r}: {v[i]!r} < chord {chord!r}")


def _grid_points(grid, lo: float, hi: float) -> np.ndarray:
    if isinstance(grid, (int, np.integer)):
        if grid < 1:
            raise ValidationError("grid size must be positive")
        pts = np.linspace(lo, hi, int(grid)) if hi > lo else np.array([lo])
    else:
        pts = np.asarray(list(grid), dtype=np.float64)
        clipped = np.clip(pts, lo, hi)
        if np.any(clipped != pts):
            warnings.warn(f"budget values clamped into [{lo!r}, {hi!r}]", stacklevel=3)
        pts = clipped
    pts = np.unique(np.concatenate([pts, [lo, hi]]))
    return pts


def _locate_kinks(
    solve_at: Callable[[float], float],
    a: float,
    fa: float,
    c: float,
    fc: float,
    tau_slope: float,
    tol_eps: float,
    budget: list[int],
) -> list[float]:
    """All slope changes inside a bracket, localized by recursive bisection.

    Concavity makes the chord slope monotone, so a bracket whose halves share
    a chord slope is a straight piece and is dropped.  A kink sitting exactly
    on a midpoint leaves both halves straight; the midpoint itself is the
    breakpoint then.
    """
    if c - a <= tol_eps or budget[0] <= 0:
        return [0.5 * (a + c)]
    m = 0.5 * (a + c)
    budget[0] -= 1
    fm = solve_at(m)
    s1 = (fm - fa) / (m - a)
    s2 = (fc - fm) / (c - m)
    if abs(s1 - s2) <= 0.25 * tau_slope:
        return []
    found = _locate_kinks(solve_at, a, fa, m, fm, tau_slope, tol_eps, budget)
    found += _locate_kinks(solve_at, m, fm, c, fc, tau_slope, tol_eps, budget)
    return found if found else [m]


def sweep_curve(
    system: JointSystem,
    gen: Objective,
    grid: Union[int, Sequence[float]] = 36,
    *,
    mode: str = "gl",
    vertices: Optional[VertexSet] = None,
    max_support: Optional[int] = None,
    detect_breakpoints: bool = True,
    tau_slope: float = 1e-6,
) -> TradeoffCurve:
    """Sample the optimal trade-off over a budget grid.

    ``grid`` is either a point count (uniform over the admissible interval)
    or an explicit list of budgets, which is clamped into the interval with a
    warning.  The interval endpoints are always included.  Slope changes
    larger than ``tau_slope`` between consecutive segments trigger a
    bisection refinement whose extra solves localize the breakpoint but do
    not enter the sample list.
    """
    if vertices is None:
        vertices = enumerate_vertices(system.P_XgW, max_support)
    lo, hi = budget_domain(system, mode)
    eps = _grid_points(grid, lo, hi)
    base = assemble_lp(system, vertices, gen, eps[0], mode)

    def solve_at(e: float) -> tuple[float, np.ndarray]:
        hgx = _hg(system.p_X.p)
        thr = hgx - e if mode == "gl" else hgx / e
        inst = dataclasses.replace(base, epsilon=e, threshold=thr)
        value, weights, _ = solve_lp(inst)
        return value, weights

    values = np.empty(eps.size)
    mechanisms = []
    for i, e in enumerate(eps):
        value, weights = solve_at(float(e))
        values[i] = value
        mechanisms.append(extract_mechanism(weights, vertices))

    breakpoints: list[float] = []
    if detect_breakpoints and eps.size >= 3:
        slopes = np.diff(values) / np.diff(eps)
        flagged = [i for i in range(len(slopes) - 1) if abs(slopes[i] - slopes[i + 1]) > tau_slope]
        # merge overlapping [e_i, e_{i+2}] brackets before refining
        brackets: list[list[int]] = []
        for i in flagged:
            if brackets and i <= brackets[-1][1]:
                brackets[-1][1] = i + 2
            else:
                brackets.append([i, i + 2])
        tol_eps = max(1e-9, 1e-6 * (hi - lo))
        budget = [200]
        for left, right in brackets:
            found = _locate_kinks(
                lambda e: solve_at(e)[0],
                float(eps[left]),
                float(values[left]),
                float(eps[right]),
                float(values[right]),
                tau_slope,
                tol_eps,
                budget,
            )
            for bp in found:
                if not breakpoints or bp - breakpoints[-1] > 10 * tol_eps:
                    breakpoints.append(bp)

    curve = TradeoffCurve(
        objective_name=_objective_name(gen),
        mode=mode,
        epsilons=eps,
        values=values,
        mechanisms=tuple(mechanisms),
        breakpoints=np.array(breakpoints),
        domain=(lo, hi),
    )
    curve.check()
    return curve
