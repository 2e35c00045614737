"""Dense revised simplex with Bland's rule and an explicit Phase 1.

Solves  max c.x  s.t.  A x = b, x >= 0  at desk scale (a handful of rows,
up to a few hundred columns).  The basis system is re-solved from scratch
every iteration, which is cheap at these sizes and avoids drift.  Bland's
smallest-index rule is used for both the entering and the leaving variable,
so the method cannot cycle.  The returned solution is basic, which callers
rely on for support-size bounds, and comes with the duals of the final basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, SolverError

_TOL = 1e-9


@dataclass
class SimplexSolution:
    value: float
    x: np.ndarray
    duals: np.ndarray
    basis: np.ndarray
    iterations: int


def _iterate(A: np.ndarray, b: np.ndarray, c: np.ndarray, basis: list[int],
             max_iter: int, tol: float) -> int:
    """Run simplex pivots in place on ``basis``; returns iteration count."""
    m, n = A.shape
    for it in range(max_iter):
        B = A[:, basis]
        try:
            x_b = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular basis {basis}: {exc}") from exc
        reduced = c - y @ A
        entering = -1
        for j in range(n):
            if j not in basis and reduced[j] > tol:
                entering = j
                break
        if entering < 0:
            return it
        d = np.linalg.solve(B, A[:, entering])
        ratios = []
        for i in range(m):
            if d[i] > tol:
                ratios.append((max(x_b[i], 0.0) / d[i], i))
        if not ratios:
            raise SolverError("objective unbounded above; the feasible set should be compact")
        theta = min(r for r, _ in ratios)
        # Bland: among minimum-ratio rows, leave the basic variable with the
        # smallest index
        leave_row = min((basis[i] for r, i in ratios if r <= theta + tol), default=None)
        leave_row = next(i for r, i in ratios if basis[i] == leave_row)
        basis[leave_row] = entering
    raise SolverError(f"simplex did not converge within {max_iter} iterations")


def maximize(c, A, b, *, tol: float = _TOL, max_iter: int | None = None) -> SimplexSolution:
    """Maximize c.x subject to A x = b, x >= 0.

    Raises
    ------
    InfeasibleError
        When Phase 1 cannot zero out the artificial variables.
    SolverError
        On unbounded objectives, singular bases, or iteration blowup.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).copy()
    c = np.asarray(c, dtype=np.float64)
    if A.ndim != 2 or b.shape != (A.shape[0],) or c.shape != (A.shape[1],):
        raise SolverError(f"inconsistent LP shapes: A{A.shape}, b{b.shape}, c{c.shape}")
    m, n = A.shape
    if max_iter is None:
        max_iter = max(2000, 50 * (n + m))

    signs = np.where(b < 0.0, -1.0, 1.0)
    A1 = np.hstack([A * signs[:, None], np.eye(m)])
    b1 = b * signs
    c1 = np.concatenate([np.zeros(n), -np.ones(m)])
    basis = list(range(n, n + m))
    iters = _iterate(A1, b1, c1, basis, max_iter, tol)

    x1 = np.zeros(n + m)
    x1[basis] = np.linalg.solve(A1[:, basis], b1)
    infeas = float(x1[n:].sum())
    if infeas > max(tol, 1e-7 * (1.0 + float(np.abs(b).sum()))):
        raise InfeasibleError(f"phase 1 residual {infeas:.3e}; the instance has no feasible point")

    # Drive leftover artificials out of the basis; rows where that is
    # impossible are linearly dependent and get dropped.
    keep_rows = list(range(m))
    for pos in range(m):
        if basis[pos] < n:
            continue
        B = A1[:, basis]
        row = np.linalg.solve(B, A1[:, :n])[pos]
        pivot = next((j for j in range(n) if j not in basis and abs(row[j]) > 1e-7), None)
        if pivot is not None:
            basis[pos] = pivot
        else:
            keep_rows[pos] = -1

    rows = [i for i in keep_rows if i >= 0]
    positions = [pos for pos in range(m) if keep_rows[pos] >= 0]
    A2 = A1[np.ix_(rows, range(n))]
    b2 = b1[rows]
    basis2 = [basis[pos] for pos in positions]
    iters += _iterate(A2, b2, c, basis2, max_iter, tol)

    x = np.zeros(n)
    B = A2[:, basis2]
    x_b = np.linalg.solve(B, b2)
    x[basis2] = np.where(np.abs(x_b) < tol, np.maximum(x_b, 0.0), x_b)
    y_r = np.linalg.solve(B.T, c[basis2])
    duals = np.zeros(m)
    for y_val, i in zip(y_r, rows):
        duals[i] = y_val * signs[i]
    value = float(c @ x)
    return SimplexSolution(value, x, duals, np.array(sorted(basis2)), iters)
