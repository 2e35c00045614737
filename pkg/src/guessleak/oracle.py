"""Brute-force verification oracles.

Nothing here is clever on purpose: the grid search enumerates every
conditional p_{U|W} whose columns live on the simplex lattice with
denominator m, the guesser simulations draw i.i.d. samples and count
queries, and the strategy check minimizes over all bijections.  These are
the independent references that every analytically computed quantity is
tested against.

The lattice enumeration is a plain product over columns.  Per mechanism only
table lookups remain: each output's contribution to the utility and to the
weighted guessing value depends on the column numerators through one row of
a precomputed table over [0..m]^|W|, so a numba kernel scans billions of
mechanisms per minute on one core.  Enumeration order is fixed and ties
keep the first maximizer, making results reproducible bit for bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .divergence import FGenerator, batch_divergence
from .errors import BudgetExceededError, ValidationError
from .probability import JointSystem, Mechanism, ProbVector, _hg, rank_vector

FEAS_TOL = 1e-12

_TABLE_CAP = 1 << 24


@dataclass(frozen=True)
class GridSearchConfig:
    """Lattice resolution and safety limits for the mechanism grid search.

    ``resolution`` is the lattice denominator m; every column of p_{U|W} is
    drawn from {0, 1/m, ..., 1}^|U| summing to 1, so deterministic mappings
    and the identity are always on the grid.  ``max_outputs`` defaults to
    |W|+1, the support size that suffices for optimal mechanisms.  ``budget``
    caps the number of enumerated mechanisms.
    """

    resolution: int = 20
    max_outputs: Optional[int] = None
    budget: int = 6_000_000_000

    def __post_init__(self):
        if self.resolution < 2:
            raise ValidationError("grid resolution must be at least 2")
        if self.max_outputs is not None and self.max_outputs < 1:
            raise ValidationError("max_outputs must be positive")


def lattice_columns(m: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to m."""
    out = np.array(
        [
            comp
            for comp in _compositions(m, parts)
        ],
        dtype=np.int64,
    )
    return out.reshape(-1, parts)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for v in range(total + 1):
        for rest in _compositions(total - v, parts - 1):
            yield (v,) + rest


def _row_tables(system: JointSystem, gens: Sequence[FGenerator], m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-output contribution tables over all numerator tuples in [0..m]^|W|.

    Entry (a_1..a_W) describes one output u whose conditional column numerators
    are a_w for input w: the output mass is sum_w (a_w/m) p_W(w), and the
    tables hold mass * divergence-to-p_Y per generator and mass * guessing
    value of the induced X posterior.
    """
    n_w = system.n_W
    r = m + 1
    size = r**n_w
    if size > _TABLE_CAP:
        raise BudgetExceededError(f"lookup table of {size} rows exceeds the cap {_TABLE_CAP}")
    digits = np.indices((r,) * n_w).reshape(n_w, size).T  # row j = digits of j, w=0 most significant
    masses = digits * (system.p_W.p / m)[None, :]
    mu = masses.sum(axis=1)
    posts = np.zeros_like(masses)
    pos = mu > 0.0
    posts[pos] = masses[pos] / mu[pos, None]

    x_conds = posts @ system.P_XgW.matrix.T
    weightsvec = np.arange(1, system.n_X + 1, dtype=np.float64)
    hg_rows = np.sort(x_conds, axis=1)[:, ::-1] @ weightsvec
    t_guess = np.where(pos, mu * hg_rows, 0.0)

    y_conds = posts @ system.P_YgW.matrix.T
    t_util = np.zeros((len(gens), size))
    for gi, gen in enumerate(gens):
        div = batch_divergence(gen, y_conds, system.p_Y)
        t_util[gi] = np.where(pos, mu * div, 0.0)
    if not np.all(np.isfinite(t_util)):
        raise ValidationError("infinite utility in grid tables: p_Y support violated")
    return np.ascontiguousarray(t_util), np.ascontiguousarray(t_guess)


@njit(cache=True)
def _scan2(comps, t_util, t_guess, r, thresholds, feas_tol):  # pragma: no cover - jitted
    n_cols, n_u = comps.shape
    n_g = t_util.shape[0]
    n_e = thresholds.size
    best = np.full((n_g, n_e), -1.0)
    best_idx = np.full((n_g, n_e, 2), -1, dtype=np.int64)
    thr_min = thresholds[0]
    for e in range(n_e):
        if thresholds[e] < thr_min:
            thr_min = thresholds[e]
    su = np.empty((n_g, n_u, r))
    sg = np.empty((n_u, r))
    for i in range(n_cols):
        for u in range(n_u):
            base = comps[i, u] * r
            for a in range(r):
                sg[u, a] = t_guess[base + a]
            for gi in range(n_g):
                for a in range(r):
                    su[gi, u, a] = t_util[gi, base + a]
        for j in range(n_cols):
            g = 0.0
            for u in range(n_u):
                g += sg[u, comps[j, u]]
            if g < thr_min - feas_tol:
                continue
            for gi in range(n_g):
                util = 0.0
                for u in range(n_u):
                    util += su[gi, u, comps[j, u]]
                for e in range(n_e):
                    if g >= thresholds[e] - feas_tol and util > best[gi, e]:
                        best[gi, e] = util
                        best_idx[gi, e, 0] = i
                        best_idx[gi, e, 1] = j
    return best, best_idx


@njit(cache=True)
def _scan3(comps, t_util, t_guess, r, thresholds, feas_tol):  # pragma: no cover - jitted
    n_cols, n_u = comps.shape
    n_g = t_util.shape[0]
    n_e = thresholds.size
    best = np.full((n_g, n_e), -1.0)
    best_idx = np.full((n_g, n_e, 3), -1, dtype=np.int64)
    thr_min = thresholds[0]
    for e in range(n_e):
        if thresholds[e] < thr_min:
            thr_min = thresholds[e]
    r2 = r * r
    su = np.empty((n_g, n_u, r))
    sg = np.empty((n_u, r))
    for i in range(n_cols):
        for j in range(n_cols):
            for u in range(n_u):
                base = comps[i, u] * r2 + comps[j, u] * r
                for a in range(r):
                    sg[u, a] = t_guess[base + a]
                for gi in range(n_g):
                    for a in range(r):
                        su[gi, u, a] = t_util[gi, base + a]
            for k in range(n_cols):
                g = 0.0
                for u in range(n_u):
                    g += sg[u, comps[k, u]]
                if g < thr_min - feas_tol:
                    continue
                for gi in range(n_g):
                    util = 0.0
                    for u in range(n_u):
                        util += su[gi, u, comps[k, u]]
                    for e in range(n_e):
                        if g >= thresholds[e] - feas_tol and util > best[gi, e]:
                            best[gi, e] = util
                            best_idx[gi, e, 0] = i
                            best_idx[gi, e, 1] = j
                            best_idx[gi, e, 2] = k
    return best, best_idx


def _scan_generic(comps, t_util, t_guess, r, thresholds, feas_tol, n_w):
    """Chunked numpy fallback for |W| outside {2, 3}; small budgets only."""
    n_cols = comps.shape[0]
    n_g = t_util.shape[0]
    n_e = thresholds.size
    total = n_cols**n_w
    best = np.full((n_g, n_e), -1.0)
    best_idx = np.full((n_g, n_e, n_w), -1, dtype=np.int64)
    radix = np.array([r ** (n_w - 1 - w) for w in range(n_w)], dtype=np.int64)
    chunk = 1 << 16
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        choices = np.stack(np.unravel_index(flat, (n_cols,) * n_w), axis=1)
        idx = np.zeros((flat.size, comps.shape[1]), dtype=np.int64)
        for w in range(n_w):
            idx += comps[choices[:, w]] * radix[w]
        g = t_guess[idx].sum(axis=1)
        for gi in range(n_g):
            util = t_util[gi][idx].sum(axis=1)
            for e in range(n_e):
                feas = g >= thresholds[e] - feas_tol
                if np.any(feas):
                    masked = np.where(feas, util, -1.0)
                    loc = int(np.argmax(masked))
                    if masked[loc] > best[gi, e]:
                        best[gi, e] = masked[loc]
                        best_idx[gi, e] = choices[loc]
    return best, best_idx


def grid_search_many(
    system: JointSystem,
    gens: Sequence[FGenerator],
    epsilons: Sequence[float],
    cfg: GridSearchConfig = GridSearchConfig(),
) -> tuple[np.ndarray, list]:
    """Best feasible lattice mechanism per (generator, budget) in one pass.

    Returns the (n_gens, n_eps) array of best utilities and the matching
    mechanisms (None where even the constant mechanism is infeasible, which
    cannot happen for budgets >= 0).
    """
    m = cfg.resolution
    n_w = system.n_W
    n_u = cfg.max_outputs if cfg.max_outputs is not None else n_w + 1
    comps = lattice_columns(m, n_u)
    total = comps.shape[0] ** n_w
    if total > cfg.budget:
        raise BudgetExceededError(
            f"{total} lattice mechanisms exceed the budget {cfg.budget}; "
            "lower the resolution or raise the budget"
        )
    t_util, t_guess = _row_tables(system, gens, m)
    hgx = _hg(system.p_X.p)
    thresholds = np.array([hgx - e for e in epsilons], dtype=np.float64)
    r = m + 1
    if n_w == 2:
        best, best_idx = _scan2(comps, t_util, t_guess, r, thresholds, FEAS_TOL)
    elif n_w == 3:
        best, best_idx = _scan3(comps, t_util, t_guess, r, thresholds, FEAS_TOL)
    else:
        if total > min(cfg.budget, 10**7):
            raise BudgetExceededError(
                f"generic scan limited to 1e7 mechanisms, got {total} (|W|={n_w})"
            )
        best, best_idx = _scan_generic(comps, t_util, t_guess, r, thresholds, FEAS_TOL, n_w)

    mechanisms = []
    for gi in range(len(gens)):
        row = []
        for e in range(len(epsilons)):
            if best[gi, e] < 0.0:
                row.append(None)
                continue
            cols = comps[best_idx[gi, e]]  # (n_w, n_u) numerators
            p_ugw = cols.T.astype(np.float64) / m
            row.append(Mechanism.from_conditional(p_ugw, system.p_W))
        mechanisms.append(row)
    return best, mechanisms


def grid_search_tradeoff(
    system: JointSystem,
    gen: FGenerator,
    epsilon: float,
    cfg: GridSearchConfig = GridSearchConfig(),
) -> tuple[float, Mechanism]:
    """Best feasible (leakage <= epsilon) utility over all lattice mechanisms."""
    best, mechs = grid_search_many(system, [gen], [epsilon], cfg)
    return float(best[0, 0]), mechs[0][0]


def simulate_guesser(p: ProbVector, trials: int, rng_seed: int) -> float:
    """Empirical mean query count of the descending-probability guesser."""
    if trials < 1:
        raise ValidationError("trials must be positive")
    rng = np.random.default_rng(rng_seed)
    ranks = rank_vector(p).ranks
    samples = rng.choice(p.dim, size=trials, p=p.p)
    counts = np.bincount(samples, minlength=p.dim)
    return math.fsum(float(counts[i]) * float(ranks[i]) for i in range(p.dim)) / trials


def simulate_informed_guesser(
    system: JointSystem, mechanism: Mechanism, trials: int, rng_seed: int
) -> float:
    """Empirical mean query count when the adversary re-ranks per output.

    Draws (U, W, X) through the mechanism and channels; the adversary observes
    u, sorts outcomes by the posterior of X given u, and guesses in that
    order.  Converges to H_G(X|U).
    """
    if trials < 1:
        raise ValidationError("trials must be positive")
    rng = np.random.default_rng(rng_seed)
    n_u, n_w, n_x = mechanism.n_outputs, system.n_W, system.n_X

    post_ranks = np.stack(
        [rank_vector(system.P_XgW.push(mechanism.columns[:, u])).ranks for u in range(n_u)]
    )

    cum_u = np.cumsum(mechanism.probs)
    u = np.minimum(np.searchsorted(cum_u, rng.random(trials), side="right"), n_u - 1)
    cum_w = np.cumsum(mechanism.columns.T, axis=1)
    w = np.minimum((cum_w[u] <= rng.random(trials)[:, None]).sum(axis=1), n_w - 1)
    cum_x = np.cumsum(system.P_XgW.matrix.T, axis=1)
    x = np.minimum((cum_x[w] <= rng.random(trials)[:, None]).sum(axis=1), n_x - 1)

    counts = np.bincount(u * n_x + x, minlength=n_u * n_x).reshape(n_u, n_x)
    return math.fsum(
        float(counts[i, j]) * float(post_ranks[i, j]) for i in range(n_u) for j in range(n_x)
    ) / trials


def exhaustive_strategy_check(p: ProbVector) -> float:
    """Minimum expected query count over every guessing bijection.

    Must coincide with the guessing entropy; limited to dimension 7 because
    the search is over n! strategies.
    """
    n = p.dim
    if n > 7:
        raise ValidationError(f"exhaustive strategy check limited to dimension 7, got {n}")
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.float64)
    return float(np.min(perms @ p.p))
