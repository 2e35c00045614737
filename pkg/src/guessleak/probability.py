"""Distribution types and guessing-entropy measures.

The types here are thin immutable wrappers around numpy arrays: points on a
finite probability simplex, column-stochastic channels, the
(p_W, P_{X|W}, P_{Y|W}) triple describing an observation system, and mixture
mechanisms.  All operations are pure functions, safe for concurrent use.

A sequential guesser that asks "is it this outcome?" in descending order of
probability needs ``rank[x]`` queries to hit outcome ``x``; its expected query
count is the guessing entropy.  Guessing leakage is the drop in that expected
count caused by observing a released variable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import MixtureConsistencyError, ValidationError

# Validation tolerance for probability sums and mixture consistency; inputs
# whose sum is off by more than TOL_NORM are rejected instead of renormalized.
TOL_SUM = 1e-9
TOL_NORM = 1e-6


def _as_prob_array(entries, what: str) -> np.ndarray:
    """Validate and renormalize a nonnegative vector summing to ~1."""
    p = np.asarray(entries, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ValidationError(f"{what}: expected a nonempty 1-d vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError(f"{what}: entries must be finite")
    if np.any(p < -TOL_SUM):
        raise ValidationError(f"{what}: negative entry {p.min()!r}")
    p = np.where(p < 0.0, 0.0, p)
    total = float(p.sum())
    if abs(total - 1.0) > TOL_NORM:
        raise ValidationError(f"{what}: entries sum to {total!r}, not 1")
    if total != 1.0:
        p = p / total
    p.setflags(write=False)
    return p


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A point on the probability simplex.

    Entries are validated to be nonnegative and to sum to 1 within
    ``TOL_NORM`` (then renormalized exactly).  Zero-probability outcomes are
    kept in the support so dimensions stay stable across conditionals.
    """

    p: np.ndarray

    def __init__(self, entries):
        object.__setattr__(self, "p", _as_prob_array(entries, "probability vector"))

    @property
    def dim(self) -> int:
        return self.p.size

    def __len__(self) -> int:
        return self.p.size

    def __getitem__(self, i):
        return self.p[i]

    def __repr__(self) -> str:
        return f"ProbVector({self.p.tolist()!r})"

    @staticmethod
    def uniform(n: int) -> "ProbVector":
        return ProbVector(np.full(n, 1.0 / n))

    @staticmethod
    def point_mass(i: int, n: int) -> "ProbVector":
        e = np.zeros(n)
        e[i] = 1.0
        return ProbVector(e)


@dataclass(frozen=True, eq=False)
class RankVector:
    """Guess positions per outcome: ``ranks[i]`` is when outcome i is tried.

    A permutation of 1..n.  ``order()`` gives the inverse view: the outcome
    tried at each position.
    """

    ranks: np.ndarray

    def __init__(self, ranks):
        r = np.asarray(ranks, dtype=np.int64)
        n = r.size
        if sorted(r.tolist()) != list(range(1, n + 1)):
            raise ValidationError(f"rank vector must be a permutation of 1..{n}, got {r.tolist()}")
        r.setflags(write=False)
        object.__setattr__(self, "ranks", r)

    def order(self) -> np.ndarray:
        """Outcome indices in guess order (position k holds the k-th guess)."""
        return np.argsort(self.ranks, kind="stable")

    def key(self) -> tuple:
        return tuple(int(v) for v in self.ranks)

    def __len__(self) -> int:
        return self.ranks.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RankVector):
            return NotImplemented
        return self.ranks.shape == other.ranks.shape and bool(np.all(self.ranks == other.ranks))

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"RankVector({self.ranks.tolist()!r})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Column-stochastic matrix; column j is the conditional given input j."""

    matrix: np.ndarray

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValidationError(f"channel: expected a 2-d matrix, got shape {m.shape}")
        cols = np.stack([_as_prob_array(m[:, j], f"channel column {j}") for j in range(m.shape[1])], axis=1)
        cols.setflags(write=False)
        object.__setattr__(self, "matrix", cols)

    @property
    def n_out(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_in(self) -> int:
        return self.matrix.shape[1]

    def column(self, j: int) -> ProbVector:
        return ProbVector(self.matrix[:, j])

    def push(self, p: "ProbVector | np.ndarray") -> np.ndarray:
        """Output distribution induced by input distribution p."""
        arr = p.p if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)
        if arr.size != self.n_in:
            raise ValidationError(f"channel push: input dim {arr.size} != {self.n_in}")
        return self.matrix @ arr

    @staticmethod
    def identity(n: int) -> "Channel":
        return Channel(np.eye(n))

    def __repr__(self) -> str:
        return f"Channel({self.matrix.shape[0]}x{self.matrix.shape[1]})"


@dataclass(frozen=True, eq=False)
class JointSystem:
    """Observation system given by the curator marginal and two channels.

    ``p_W`` is what the curator sees, ``P_XgW`` maps it to the sensitive
    variable, ``P_YgW`` to the useful one.  This triple is all the trade-off
    objective and constraint depend on; a loader that marginalizes a full
    joint table into this form lives in the I/O module.
    """

    p_W: ProbVector
    P_XgW: Channel
    P_YgW: Channel

    def __post_init__(self):
        if self.P_XgW.n_in != self.p_W.dim or self.P_YgW.n_in != self.p_W.dim:
            raise ValidationError(
                "system dimensions inconsistent: "
                f"|W|={self.p_W.dim}, P_XgW has {self.P_XgW.n_in} inputs, "
                f"P_YgW has {self.P_YgW.n_in} inputs"
            )

    @property
    def n_W(self) -> int:
        return self.p_W.dim

    @property
    def n_X(self) -> int:
        return self.P_XgW.n_out

    @property
    def n_Y(self) -> int:
        return self.P_YgW.n_out

    @cached_property
    def p_X(self) -> ProbVector:
        return ProbVector(self.P_XgW.push(self.p_W))

    @cached_property
    def p_Y(self) -> ProbVector:
        return ProbVector(self.P_YgW.push(self.p_W))


@dataclass(frozen=True, eq=False)
class Mechanism:
    """A release mechanism as a mixture decomposition of the curator marginal.

    Stored as output probabilities ``probs[i]`` and posterior columns
    ``columns[:, i]`` over W; the implied curator marginal is
    ``columns @ probs`` and must match the system it is used with.
    """

    probs: np.ndarray
    columns: np.ndarray

    def __init__(self, probs, columns):
        w = _as_prob_array(probs, "mechanism output weights")
        cols = np.asarray(columns, dtype=np.float64)
        if cols.ndim != 2 or cols.shape[1] != w.size:
            raise ValidationError(
                f"mechanism: expected {w.size} posterior columns, got shape {cols.shape}"
            )
        cols = np.stack(
            [_as_prob_array(cols[:, i], f"mechanism column {i}") for i in range(cols.shape[1])],
            axis=1,
        )
        cols.setflags(write=False)
        object.__setattr__(self, "probs", w)
        object.__setattr__(self, "columns", cols)

    @property
    def n_outputs(self) -> int:
        return self.probs.size

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def weights(self) -> tuple:
        """The (p(u_i), posterior column) pairs."""
        return tuple((float(self.probs[i]), ProbVector(self.columns[:, i])) for i in range(self.n_outputs))

    def mixture(self) -> np.ndarray:
        """The curator marginal implied by this mechanism."""
        return self.columns @ self.probs

    @staticmethod
    def from_pairs(pairs: Iterable[tuple]) -> "Mechanism":
        pairs = list(pairs)
        probs = [w for w, _ in pairs]
        cols = np.stack(
            [c.p if isinstance(c, ProbVector) else np.asarray(c, dtype=np.float64) for _, c in pairs],
            axis=1,
        )
        return Mechanism(probs, cols)

    @staticmethod
    def from_conditional(p_UgW, p_W: "ProbVector | np.ndarray") -> "Mechanism":
        """Build the mixture view of a conditional p_{U|W}.

        Outputs with zero induced probability are dropped (their posterior is
        undefined and they never occur).
        """
        k = p_UgW.matrix if isinstance(p_UgW, Channel) else np.asarray(p_UgW, dtype=np.float64)
        w = p_W.p if isinstance(p_W, ProbVector) else np.asarray(p_W, dtype=np.float64)
        if k.ndim != 2 or k.shape[1] != w.size:
            raise ValidationError(f"conditional shape {k.shape} incompatible with |W|={w.size}")
        joint = k * w[None, :]          # (n_U, n_W)
        p_u = joint.sum(axis=1)
        keep = p_u > 0.0
        cols = (joint[keep, :] / p_u[keep, None]).T
        return Mechanism(p_u[keep], cols)

    @staticmethod
    def identity(system: "JointSystem") -> "Mechanism":
        """Full disclosure: U = W (outputs with p_W(w)=0 dropped)."""
        return Mechanism.from_conditional(np.eye(system.n_W), system.p_W)

    @staticmethod
    def constant(system: "JointSystem") -> "Mechanism":
        """No disclosure: a single output whose posterior is the prior."""
        return Mechanism(np.ones(1), system.p_W.p[:, None])

    def __repr__(self) -> str:
        return f"Mechanism({self.n_outputs} outputs over dim {self.dim})"


# ---------------------------------------------------------------------------
# Operations


def rank_vector(p: "ProbVector | np.ndarray") -> RankVector:
    """Rank outcomes by descending probability, ties broken by index order.

    The tie rule (equal masses ranked by smaller index first) makes this a
    total deterministic function; vertex enumeration and zero-leakage checks
    rely on that.
    """
    arr = p.p if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)
    order = np.argsort(-arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.int64)
    ranks[order] = np.arange(1, arr.size + 1)
    return RankVector(ranks)


def _hg(arr: np.ndarray) -> float:
    """Guessing entropy of a raw nonnegative-normalized array (no tie logic)."""
    s = np.sort(arr)[::-1]
    return float(s @ np.arange(1, arr.size + 1, dtype=np.float64))


def guessing_entropy(p: "ProbVector | np.ndarray") -> float:
    """Expected number of sequential guesses under the optimal strategy.

    Equals the rank vector dotted with the distribution; lies in
    [1, (n+1)/2], attained at a point mass and the uniform respectively.
    """
    arr = p.p if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)
    return _hg(arr)


def guessing_entropy_capped(p: "ProbVector | np.ndarray") -> float:
    """Alternative convention min(E[guesses], n-1); never used internally."""
    arr = p.p if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)
    return min(_hg(arr), float(arr.size - 1))


def conditional_guessing_entropy(posteriors: Sequence[tuple]) -> float:
    """Weight-averaged guessing entropy of a family of posteriors.

    Parameters
    ----------
    posteriors : sequence of (weight, distribution) pairs
        Weights must form a probability vector; distributions must share a
        dimension.

    Returns
    -------
    float
        sum_u p(u) * H_G(p_{X|u}); never above the entropy of the mixture.
    """
    pairs = [(float(w), q.p if isinstance(q, ProbVector) else np.asarray(q, dtype=np.float64))
             for w, q in posteriors]
    if not pairs:
        raise ValidationError("conditional guessing entropy needs at least one posterior")
    dim = pairs[0][1].size
    for _, q in pairs:
        if q.size != dim:
            raise ValidationError(f"posterior dimension mismatch: {q.size} != {dim}")
    _as_prob_array([w for w, _ in pairs], "posterior weights")
    return float(sum(w * _hg(q) for w, q in pairs if w > 0.0))


def _check_mixture(system: JointSystem, mechanism: Mechanism) -> None:
    if mechanism.dim != system.n_W:
        raise ValidationError(f"mechanism dim {mechanism.dim} != |W|={system.n_W}")
    gap = float(np.max(np.abs(mechanism.mixture() - system.p_W.p)))
    if gap > TOL_SUM:
        raise MixtureConsistencyError(
            f"mechanism mixture misses p_W by {gap:.3e} (tolerance {TOL_SUM:.0e})"
        )


def posterior_given_output(system: JointSystem, mechanism: Mechanism, i: int) -> np.ndarray:
    """Distribution of the sensitive variable after seeing output i."""
    return system.P_XgW.push(mechanism.columns[:, i])


def _leakage_sum(probs: np.ndarray, posteriors: np.ndarray, mix: np.ndarray) -> float:
    """sum_u p(u) (r_mix - r_u) . post_u, the cancellation-free leakage form.

    Each term prices posterior u with the mixture's guess order instead of its
    own optimal one, so it is nonnegative and exactly 0.0 whenever the two
    orders coincide; the total equals H_G(mix) - sum p(u) H_G(post_u).
    """
    r_mix = rank_vector(mix).ranks.astype(np.float64)
    total = 0.0
    for i in range(probs.size):
        if probs[i] <= 0.0:
            continue
        post = posteriors[:, i]
        diff = r_mix - rank_vector(post).ranks.astype(np.float64)
        if np.any(diff != 0.0):
            total += float(probs[i]) * max(float(diff @ post), 0.0)
    return total


def guessing_leakage(system: JointSystem, mechanism: Mechanism) -> float:
    """Average drop in guessing cost caused by observing the released output.

    H_G(X) - H_G(X|U) where the posterior of X given output u is the image of
    the mechanism's posterior column under P_{X|W}.  Nonnegative; zero exactly
    when all the posteriors admit one common optimal guess order.
    """
    _check_mixture(system, mechanism)
    posteriors = system.P_XgW.matrix @ mechanism.columns
    mix = posteriors @ mechanism.probs
    return _leakage_sum(mechanism.probs, posteriors, mix)


def multiplicative_guessing_leakage(system: JointSystem, mechanism: Mechanism) -> float:
    """Ratio form H_G(X)/H_G(X|U); lies in [1, (|X|+1)/2]."""
    _check_mixture(system, mechanism)
    hgx = _hg(system.p_X.p)
    hgxu = sum(
        float(mechanism.probs[i]) * _hg(system.P_XgW.push(mechanism.columns[:, i]))
        for i in range(mechanism.n_outputs)
        if mechanism.probs[i] > 0.0
    )
    ratio = hgx / hgxu
    return max(1.0, ratio)


def full_disclosure_leakage(system: JointSystem) -> float:
    """GL(X -> W): the leakage of releasing the curator observation itself."""
    return _leakage_sum(system.p_W.p, system.P_XgW.matrix, system.p_X.p)


def full_disclosure_leakage_multiplicative(system: JointSystem) -> float:
    """GL_m(X -> W) = H_G(X) / H_G(X|W)."""
    hgx = _hg(system.p_X.p)
    hgxw = sum(
        float(system.p_W.p[w]) * _hg(system.P_XgW.matrix[:, w])
        for w in range(system.n_W)
        if system.p_W.p[w] > 0.0
    )
    return max(1.0, hgx / hgxw)


def conditional_guessing_entropy_given_w(system: JointSystem) -> float:
    """H_G(X|W): guessing cost when the curator observation is known."""
    return sum(
        float(system.p_W.p[w]) * _hg(system.P_XgW.matrix[:, w])
        for w in range(system.n_W)
        if system.p_W.p[w] > 0.0
    )


def is_leakage_free(system: JointSystem, mechanism: Mechanism, tol: float = 1e-12) -> bool:
    """Whether the mechanism's posteriors share a common optimal guess order.

    Equivalent to zero guessing leakage: the mixture's rank vector must price
    every posterior optimally (r* . p_{X|u} = H_G(p_{X|u}) for all u).
    """
    _check_mixture(system, mechanism)
    posteriors = system.P_XgW.matrix @ mechanism.columns
    mix = posteriors @ mechanism.probs
    r_star = rank_vector(mix).ranks.astype(np.float64)
    for i in range(mechanism.n_outputs):
        if mechanism.probs[i] <= 0.0:
            continue
        post = posteriors[:, i]
        if float(r_star @ post) - _hg(post) > tol:
            return False
    return True
