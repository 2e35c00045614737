"""Rank partitions of the simplex and their preimage polytopes.

The simplex over the sensitive alphabet splits into n! regions sharing a
guess order.  Pulling each region back through the curator channel P_{X|W}
gives a convex polytope inside the W-simplex (possibly empty), cut out by the
simplex facets plus one ordering halfspace per consecutive rank pair.  The
trade-off LP only needs the union of the extreme points of those polytopes;
this module enumerates them by exhaustive active-set search, exactly over
rationals when requested.

The method is exponential in the alphabet sizes, which is acceptable at desk
scale; a configurable cap on |W| guards against accidents.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import CapExceededError, ValidationError
from .probability import Channel, ProbVector, RankVector, rank_vector

DEFAULT_DIM_CAP = 8

# Halfspace satisfaction and vertex dedup tolerances.  Vertices shared by
# adjacent partitions must collapse to a single entry, hence TOL_DEDUP is
# looser than TOL_GEO.
TOL_GEO = 1e-9
TOL_DEDUP = 1e-8

_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class RankPartitionSpec:
    """One guess-order region pulled back to the W-simplex.

    ``normals`` holds one row per ordering halfspace (normal . p >= offset);
    halfspaces whose normal vanishes because of tied channel rows are dropped,
    so a fully degenerate channel yields the whole simplex.
    """

    rank: RankVector
    normals: np.ndarray
    offsets: np.ndarray

    def contains(self, point, tol: float = TOL_GEO) -> bool:
        p = point.p if isinstance(point, ProbVector) else np.asarray(point, dtype=np.float64)
        if self.normals.shape[0] == 0:
            return True
        return bool(np.all(self.normals @ p >= self.offsets - tol))


def build_partitions(P_XgW: Channel) -> list[RankPartitionSpec]:
    """All |X|! rank-partition preimages of a channel (some may be empty)."""
    rows = P_XgW.matrix            # v_i = rows[i], the i-th output's likelihood profile
    n_x, n_w = rows.shape
    specs = []
    for perm in itertools.permutations(range(n_x)):
        # perm[k] is the outcome guessed at position k+1
        ranks = np.empty(n_x, dtype=np.int64)
        for pos, outcome in enumerate(perm):
            ranks[outcome] = pos + 1
        normals = []
        for k in range(n_x - 1):
            a = rows[perm[k]] - rows[perm[k + 1]]
            if np.any(a != 0.0):
                normals.append(a)
        normals = np.array(normals, dtype=np.float64).reshape(len(normals), n_w)
        specs.append(RankPartitionSpec(RankVector(ranks), normals, np.zeros(len(normals))))
    return specs


def locate_partition(P_XgW: Channel, p_W_point) -> RankVector:
    """Rank vector of the posterior induced by a point of the W-simplex."""
    return rank_vector(P_XgW.push(p_W_point))


@dataclass(frozen=True, eq=False)
class VertexSet:
    """Deduplicated extreme points of all rank-partition preimages.

    Points are sorted lexicographically by coordinates so enumeration output
    is reproducible.  Per vertex: the tie-broken rank vector of its induced
    posterior, the guessing value (rank dotted with posterior), and the rank
    keys of every partition the vertex was emitted from.  ``exact_points``
    carries Fraction coordinates when enumeration ran in rational mode.
    """

    points: np.ndarray
    ranks: tuple
    guess_values: np.ndarray
    partition_ranks: tuple
    exact_points: Optional[tuple] = None
    exact_guess_values: Optional[tuple] = None

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self) -> str:
        mode = "exact" if self.exact_points is not None else "float"
        return f"VertexSet({len(self)} points over dim {self.dim}, {mode})"


def _cap_check(n_w: int, max_support: Optional[int]) -> None:
    cap = DEFAULT_DIM_CAP if max_support is None else max_support
    if n_w > cap:
        raise CapExceededError(
            f"|W|={n_w} exceeds the enumeration cap {cap}; "
            "raise it explicitly if you accept the exponential cost"
        )


def enumerate_vertices(P_XgW: Channel, max_support: Optional[int] = None) -> VertexSet:
    """Enumerate the extreme points of every rank-partition preimage.

    Active-set search: a vertex is the unique solution of |W|-1 linearly
    independent constraints chosen among the ordering halfspaces (at
    equality) and the simplex facets, together with the sum-to-one equality,
    that also satisfies every remaining constraint of its partition.
    """
    n_w = P_XgW.n_in
    _cap_check(n_w, max_support)
    partitions = build_partitions(P_XgW)
    facets = np.eye(n_w)
    ones = np.ones((1, n_w))
    rhs = np.zeros(n_w)
    rhs[-1] = 1.0

    candidates: list[tuple[np.ndarray, tuple]] = []
    for spec in partitions:
        constraints = np.vstack([spec.normals, facets]) if spec.normals.size else facets
        n_rows = constraints.shape[0]
        for combo in itertools.combinations(range(n_rows), n_w - 1):
            m = np.vstack([constraints[list(combo)], ones])
            try:
                if np.linalg.cond(m) > _COND_LIMIT:
                    continue
                p = np.linalg.solve(m, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.min(p) < -TOL_GEO:
                continue
            if spec.normals.size and np.min(spec.normals @ p) < -TOL_GEO:
                continue
            p = np.clip(p, 0.0, None)
            p /= p.sum()
            candidates.append((p, spec.rank.key()))

    reps: list[np.ndarray] = []
    rank_sets: list[set] = []
    for p, rkey in candidates:
        for i, rep in enumerate(reps):
            if np.max(np.abs(rep - p)) <= TOL_DEDUP:
                rank_sets[i].add(rkey)
                break
        else:
            reps.append(p)
            rank_sets.append({rkey})

    order = sorted(range(len(reps)), key=lambda i: tuple(reps[i]))
    points = np.array([reps[i] for i in order]).reshape(len(order), n_w)
    ranks = []
    guesses = []
    for i in order:
        post = P_XgW.push(reps[i])
        r = rank_vector(post)
        ranks.append(r)
        guesses.append(float(r.ranks.astype(np.float64) @ post))
    partition_ranks = tuple(tuple(sorted(rank_sets[i])) for i in order)
    points.setflags(write=False)
    return VertexSet(points, tuple(ranks), np.array(guesses), partition_ranks)


# ---------------------------------------------------------------------------
# Exact-rational mode


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> Optional[list[Fraction]]:
    """Gaussian elimination over Fractions; None when the system is singular."""
    n = len(matrix)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = a[col][col]
        a[col] = [v / inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def _rank_order_exact(values: Sequence[Fraction]) -> list[int]:
    """Tie-rule ranks (1-based) for a sequence of exactly comparable masses."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    ranks = [0] * len(values)
    for pos, idx in enumerate(order):
        ranks[idx] = pos + 1
    return ranks


def enumerate_vertices_exact(
    columns: Sequence[Sequence[Fraction]], max_support: Optional[int] = None
) -> VertexSet:
    """Rational-arithmetic twin of :func:`enumerate_vertices`.

    ``columns[w]`` is the conditional over X given input w, as Fractions.
    Dedup is exact equality, eliminating tolerance sensitivity in regression
    snapshots.
    """
    n_w = len(columns)
    _cap_check(n_w, max_support)
    n_x = len(columns[0])
    for col in columns:
        if len(col) != n_x:
            raise ValidationError("exact columns must share a dimension")
        if any(v < 0 for v in col) or sum(col) != 1:
            raise ValidationError("exact columns must be probability vectors")
    rows = [[columns[w][i] for w in range(n_w)] for i in range(n_x)]

    zero = Fraction(0)
    one = Fraction(1)
    facets = [[one if j == w else zero for j in range(n_w)] for w in range(n_w)]
    found: dict[tuple, set] = {}
    for perm in itertools.permutations(range(n_x)):
        normals = []
        for k in range(n_x - 1):
            a = [rows[perm[k]][w] - rows[perm[k + 1]][w] for w in range(n_w)]
            if any(v != 0 for v in a):
                normals.append(a)
        constraints = normals + facets
        rhs = [zero] * (n_w - 1) + [one]
        for combo in itertools.combinations(range(len(constraints)), n_w - 1):
            m = [constraints[i] for i in combo] + [[one] * n_w]
            p = _solve_exact(m, rhs)
            if p is None:
                continue
            if any(v < 0 for v in p):
                continue
            if any(sum(a[w] * p[w] for w in range(n_w)) < 0 for a in normals):
                continue
            key = tuple(p)
            ranks = np.empty(n_x, dtype=np.int64)
            for pos, outcome in enumerate(perm):
                ranks[outcome] = pos + 1
            found.setdefault(key, set()).add(tuple(int(v) for v in ranks))

    keys = sorted(found)
    points = np.array([[float(v) for v in key] for key in keys]).reshape(len(keys), n_w)
    ranks_out = []
    guesses_exact = []
    for key in keys:
        post = [sum(rows[i][w] * key[w] for w in range(n_w)) for i in range(n_x)]
        r = _rank_order_exact(post)
        ranks_out.append(RankVector(r))
        guesses_exact.append(sum(Fraction(r[i]) * post[i] for i in range(n_x)))
    partition_ranks = tuple(tuple(sorted(found[key])) for key in keys)
    points.setflags(write=False)
    return VertexSet(
        points,
        tuple(ranks_out),
        np.array([float(g) for g in guesses_exact]),
        partition_ranks,
        exact_points=tuple(keys),
        exact_guess_values=tuple(guesses_exact),
    )


# ---------------------------------------------------------------------------
# Certification


def certify_extreme_point(point, spec: RankPartitionSpec, tol: float = 1e-7) -> bool:
    """Check a point cannot be a midpoint of two distinct feasible points.

    Any feasible segment through the point must keep its active constraints
    tight, so it is extreme iff the active normals together with the
    sum-to-one row have full column rank.  When they do not, an explicit
    midpoint decomposition along a nullspace direction confirms failure.
    """
    p = point.p if isinstance(point, ProbVector) else np.asarray(point, dtype=np.float64)
    n = p.size
    active = [np.eye(n)[j] for j in range(n) if p[j] <= tol]
    for a, off in zip(spec.normals, spec.offsets):
        if abs(float(a @ p) - off) <= tol:
            active.append(a)
    m = np.vstack([np.ones((1, n))] + [a.reshape(1, n) for a in active])
    if np.linalg.matrix_rank(m, tol=1e-9) == n:
        return True
    # nullspace direction -> explicit feasible midpoint decomposition; step
    # length chosen from the slack of the inactive constraints
    _, _, vt = np.linalg.svd(m)
    d = vt[-1]
    consumption = [(float(p[j]), abs(float(d[j]))) for j in range(n) if p[j] > tol]
    for a, off in zip(spec.normals, spec.offsets):
        if abs(float(a @ p) - off) > tol:
            consumption.append((float(a @ p - off), abs(float(a @ d))))
    lam = 0.5 * min((s / r for s, r in consumption if r > 1e-12), default=1e-3)
    for q in (p + lam * d, p - lam * d):
        if np.min(q) < -TOL_GEO or (spec.normals.size and np.min(spec.normals @ q - spec.offsets) < -TOL_GEO):
            return True  # no feasible witness; treat as extreme
    return False
