"""f-divergences and f-information functionals used as utility measures.

Built-in generators: KL (reported in bits), Pearson chi-squared, and total
variation normalized to [0, 1].  Infinite divergences propagate as a
distinguished ``math.inf`` value, never as an exception; consumers that
cannot tolerate infinity (the LP assembler) reject it explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .probability import Channel, JointSystem, Mechanism, ProbVector, TOL_SUM, _check_mixture


@dataclass(frozen=True)
class FGenerator:
    """A convex generator f with f(1) = 0 plus its boundary limits.

    ``f_at_zero`` is lim_{t->0+} f(t) and covers cells where p vanishes but q
    does not.  ``tail_per_unit_mass`` is lim_{q->0+} q*f(p/q)/p, the cost per
    unit of p-mass placed where q vanishes (infinite for KL and chi-squared,
    1/2 for total variation).
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f_at_zero: float
    tail_per_unit_mass: float


def _f_kl(t: np.ndarray) -> np.ndarray:
    return t * np.log2(t)


def _f_chi2(t: np.ndarray) -> np.ndarray:
    return (t - 1.0) ** 2


def _f_tv(t: np.ndarray) -> np.ndarray:
    return np.abs(t - 1.0) / 2.0


KL = FGenerator("kl", _f_kl, 0.0, math.inf)
CHI2 = FGenerator("chi2", _f_chi2, 1.0, math.inf)
TV = FGenerator("tv", _f_tv, 0.5, 0.5)

GENERATORS = {g.name: g for g in (KL, CHI2, TV)}


def get_generator(name: str) -> FGenerator:
    try:
        return GENERATORS[name]
    except KeyError:
        raise ValidationError(f"unknown f-generator {name!r}; known: {sorted(GENERATORS)}") from None


def _as_array(p) -> np.ndarray:
    return p.p if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)


def f_divergence(gen: FGenerator, p, q) -> float:
    """D_f(p || q) = sum_x q(x) f(p(x)/q(x)) with the 0 f(0/0) = 0 convention.

    Returns ``math.inf`` when p has mass where q has none and the generator's
    tail is infinite.
    """
    pa, qa = _as_array(p), _as_array(q)
    if pa.shape != qa.shape:
        raise ValidationError(f"divergence dimension mismatch: {pa.shape} vs {qa.shape}")
    interior = (qa > 0.0) & (pa > 0.0)
    total = float(qa[interior] @ gen.f(pa[interior] / qa[interior])) if np.any(interior) else 0.0
    zero_p = (qa > 0.0) & (pa == 0.0)
    if np.any(zero_p):
        total += gen.f_at_zero * float(qa[zero_p].sum())
    escaped = float(pa[qa == 0.0].sum())
    if escaped > 0.0:
        total += gen.tail_per_unit_mass * escaped
    return total


def batch_divergence(gen: FGenerator, rows: np.ndarray, q) -> np.ndarray:
    """D_f(row || q) for every row of a (N, n) array of distributions."""
    qa = _as_array(q)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != qa.size:
        raise ValidationError(f"batch divergence: shape {rows.shape} vs dim {qa.size}")
    out = np.zeros(rows.shape[0])
    pos = qa > 0.0
    if np.any(pos):
        qpos = qa[pos]
        ratio = rows[:, pos] / qpos[None, :]
        vals = np.zeros_like(ratio)
        inner = ratio > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[inner] = gen.f(ratio[inner])
        vals[~inner] = gen.f_at_zero
        out += vals @ qpos
    escaped = rows[:, ~pos].sum(axis=1)
    hit = escaped > 0.0
    if np.any(hit):
        out[hit] += gen.tail_per_unit_mass * escaped[hit]
    return out


def f_information(gen: FGenerator, p_joint_rows: Channel, p_row_marginal, p_col_marginal) -> float:
    """D_f between a joint and the product of its marginals.

    The joint is given by a channel whose column c is the row-variable
    conditional given column outcome c, weighted by the column marginal.  For
    the KL generator this is mutual information in bits.
    """
    p_rows = _as_array(p_row_marginal)
    p_cols = _as_array(p_col_marginal)
    m = p_joint_rows.matrix
    if m.shape != (p_rows.size, p_cols.size):
        raise ValidationError(
            f"f_information: channel shape {m.shape} vs marginals ({p_rows.size}, {p_cols.size})"
        )
    gap = float(np.max(np.abs(m @ p_cols - p_rows)))
    if gap > TOL_SUM:
        raise ValidationError(f"row marginal inconsistent with channel by {gap:.3e}")
    total = 0.0
    for c in range(p_cols.size):
        if p_cols[c] > 0.0:
            total += float(p_cols[c]) * f_divergence(gen, m[:, c], p_rows)
    return total


def utility_of_mechanism(gen: FGenerator, system: JointSystem, mechanism: Mechanism) -> float:
    """f-information between the useful variable and the released output.

    Computed as sum_u p(u) D_f(P_{Y|W} p_{W|u} || p_Y), the mixture form of
    I_f(Y; U) for the induced joint.
    """
    _check_mixture(system, mechanism)
    p_y = system.p_Y.p
    total = 0.0
    for i in range(mechanism.n_outputs):
        if mechanism.probs[i] > 0.0:
            cond = system.P_YgW.push(mechanism.columns[:, i])
            total += float(mechanism.probs[i]) * f_divergence(gen, cond, p_y)
    return total


def shannon_entropy_bits(p) -> float:
    """-sum p log2 p; convenience for tests and reports."""
    pa = _as_array(p)
    pos = pa[pa > 0.0]
    return float(-(pos @ np.log2(pos)))
