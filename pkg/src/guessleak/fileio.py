"""File formats: system descriptions in JSON, curves and mechanisms in CSV.

A system file carries either the triple (``p_W``, ``P_X_given_W``,
``P_Y_given_W``, channels given as arrays of columns) or a full joint table
``joint_XYW`` indexed [x][y][w], which is marginalized into the triple.
Numeric tokens may be JSON numbers, fraction strings like ``"2/3"``, or
decimal strings; every token is also retained as an exact rational so that
vertex enumeration can run in exact arithmetic on request.

All numbers are serialized with 17 significant digits, which round-trips
IEEE doubles exactly; identical inputs therefore produce byte-identical
files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import VertexSet
from .probability import Channel, JointSystem, ProbVector, TOL_NORM
from .tradeoff import TradeoffCurve


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# System files


@dataclass(frozen=True)
class ExactSystem:
    """Rational twin of a JointSystem, normalized exactly."""

    p_W: tuple
    x_columns: tuple  # x_columns[w] is the conditional over X given w
    y_columns: tuple


@dataclass(frozen=True)
class LoadedSystem:
    system: JointSystem
    exact: ExactSystem
    labels: Optional[dict]
    path: str


def _to_fraction(token) -> Fraction:
    if isinstance(token, Fraction):
        return token
    if isinstance(token, bool):
        raise ParseError(f"boolean {token!r} is not a number")
    if isinstance(token, int):
        return Fraction(token)
    if isinstance(token, str):
        try:
            return Fraction(token)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot read {token!r} as a rational number") from exc
    raise ParseError(f"cannot read {token!r} as a number")


def _fraction_vector(raw, what: str) -> list[Fraction]:
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{what}: expected a nonempty array")
    return [_to_fraction(v) for v in raw]


def _normalize_exact(vec: Sequence[Fraction], what: str) -> list[Fraction]:
    if any(v < 0 for v in vec):
        raise ValidationError(f"{what}: negative entry")
    total = sum(vec)
    if float(abs(total - 1)) > TOL_NORM or total == 0:
        raise ValidationError(f"{what}: entries sum to {float(total)!r}, not 1")
    return [v / total for v in vec]


def _parse_triple(doc: dict) -> ExactSystem:
    p_w = _normalize_exact(_fraction_vector(doc["p_W"], "p_W"), "p_W")
    raw_x = doc["P_X_given_W"]
    raw_y = doc["P_Y_given_W"]
    for name, raw in (("P_X_given_W", raw_x), ("P_Y_given_W", raw_y)):
        if not isinstance(raw, list) or len(raw) != len(p_w):
            raise ParseError(f"{name}: expected {len(p_w)} columns")
    x_cols = [_normalize_exact(_fraction_vector(col, f"P_X_given_W[{w}]"), f"P_X_given_W[{w}]")
              for w, col in enumerate(raw_x)]
    y_cols = [_normalize_exact(_fraction_vector(col, f"P_Y_given_W[{w}]"), f"P_Y_given_W[{w}]")
              for w, col in enumerate(raw_y)]
    for name, cols in (("P_X_given_W", x_cols), ("P_Y_given_W", y_cols)):
        dims = {len(c) for c in cols}
        if len(dims) != 1:
            raise ParseError(f"{name}: ragged columns {sorted(dims)}")
    return ExactSystem(tuple(p_w), tuple(map(tuple, x_cols)), tuple(map(tuple, y_cols)))


def _parse_joint(doc: dict) -> ExactSystem:
    raw = doc["joint_XYW"]
    if not isinstance(raw, list) or not raw:
        raise ParseError("joint_XYW: expected a 3-d array [x][y][w]")
    n_x = len(raw)
    try:
        n_y = len(raw[0])
        n_w = len(raw[0][0])
        joint = [
            [[_to_fraction(raw[x][y][w]) for w in range(n_w)] for y in range(n_y)]
            for x in range(n_x)
        ]
    except (TypeError, IndexError, KeyError) as exc:
        raise ParseError(f"joint_XYW: not a rectangular 3-d array: {exc}") from exc
    flat = [joint[x][y][w] for x in range(n_x) for y in range(n_y) for w in range(n_w)]
    if any(v < 0 for v in flat):
        raise ValidationError("joint_XYW: negative entry")
    total = sum(flat)
    if float(abs(total - 1)) > TOL_NORM or total == 0:
        raise ValidationError(f"joint_XYW: entries sum to {float(total)!r}, not 1")
    joint = [[[v / total for v in row] for row in plane] for plane in joint]

    p_w = [sum(joint[x][y][w] for x in range(n_x) for y in range(n_y)) for w in range(n_w)]
    uniform_x = Fraction(1, n_x)
    uniform_y = Fraction(1, n_y)
    x_cols, y_cols = [], []
    for w in range(n_w):
        if p_w[w] == 0:
            # unreachable curator outcome: keep dimensions with a flat column
            x_cols.append(tuple([uniform_x] * n_x))
            y_cols.append(tuple([uniform_y] * n_y))
            continue
        x_cols.append(tuple(sum(joint[x][y][w] for y in range(n_y)) / p_w[w] for x in range(n_x)))
        y_cols.append(tuple(sum(joint[x][y][w] for x in range(n_x)) / p_w[w] for y in range(n_y)))
    return ExactSystem(tuple(p_w), tuple(x_cols), tuple(y_cols))


def load_system(path: str) -> LoadedSystem:
    """Parse and validate a system file.

    Raises ``ParseError`` for malformed documents and ``ValidationError``
    when the numbers violate probability contracts.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(
                fh,
                parse_float=lambda s: Fraction(s),
                parse_int=lambda s: Fraction(int(s)),
                parse_constant=lambda s: (_ for _ in ()).throw(ParseError(f"non-finite literal {s!r}")),
            )
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")

    if "joint_XYW" in doc:
        exact = _parse_joint(doc)
    elif {"p_W", "P_X_given_W", "P_Y_given_W"} <= doc.keys():
        exact = _parse_triple(doc)
    else:
        raise ParseError(
            f"{path}: expected keys p_W/P_X_given_W/P_Y_given_W or joint_XYW, got {sorted(doc)}"
        )

    labels = doc.get("labels")
    if labels is not None and not isinstance(labels, dict):
        raise ParseError(f"{path}: labels must be an object")

    system = JointSystem(
        ProbVector([float(v) for v in exact.p_W]),
        Channel([[float(exact.x_columns[w][x]) for w in range(len(exact.p_W))]
                 for x in range(len(exact.x_columns[0]))]),
        Channel([[float(exact.y_columns[w][y]) for w in range(len(exact.p_W))]
                 for y in range(len(exact.y_columns[0]))]),
    )
    return LoadedSystem(system, exact, labels, path)


def write_system(path: str, system: JointSystem, labels: Optional[dict] = None) -> None:
    doc = {
        "p_W": [_fmt(v) for v in system.p_W.p],
        "P_X_given_W": [[_fmt(v) for v in system.P_XgW.matrix[:, w]] for w in range(system.n_W)],
        "P_Y_given_W": [[_fmt(v) for v in system.P_YgW.matrix[:, w]] for w in range(system.n_W)],
    }
    if labels:
        doc["labels"] = labels
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Vertex cache files


def write_vertices(path: str, vset: VertexSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(vertices_document(vset))


def vertices_document(vset: VertexSet) -> str:
    entries = []
    for i in range(len(vset)):
        entry = {
            "point": [_fmt(v) for v in vset.points[i]],
            "rank": [int(v) for v in vset.ranks[i].ranks],
            "guess_value": _fmt(vset.guess_values[i]),
            "partitions": [list(r) for r in vset.partition_ranks[i]],
        }
        if vset.exact_points is not None:
            entry["point_exact"] = [str(v) for v in vset.exact_points[i]]
            entry["guess_value_exact"] = str(vset.exact_guess_values[i])
        entries.append(entry)
    doc = {"dim": vset.dim, "exact": vset.exact_points is not None, "vertices": entries}
    return json.dumps(doc, indent=2) + "\n"


def read_vertices(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Curve files


def write_curves(path: str, curves: Sequence[TradeoffCurve]) -> None:
    """Delimited table: budget column, then value and breakpoint flag per curve.

    All curves must share the budget grid (one sweep per generator over the
    same grid).  The flag marks grid points nearest to a detected breakpoint.
    """
    if not curves:
        raise ValidationError("no curves to write")
    eps = curves[0].epsilons
    for c in curves[1:]:
        if c.epsilons.shape != eps.shape or not bool((c.epsilons == eps).all()):
            raise ValidationError("curves disagree on the budget grid")
    half = 0.5 * float(max(np.diff(eps).max(), 1e-15)) if eps.size > 1 else 0.0
    header = ["epsilon"]
    for c in curves:
        header += [c.objective_name, f"{c.objective_name}_breakpoint"]
    lines = [",".join(header)]
    for i, e in enumerate(eps):
        row = [_fmt(e)]
        for c in curves:
            near = any(abs(b - e) <= half for b in c.breakpoints)
            row += [_fmt(c.values[i]), "1" if near else "0"]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_mechanisms(path: str, curves: Sequence[TradeoffCurve]) -> None:
    """Companion table: per curve and budget, the achieving mixture rows."""
    if not curves:
        raise ValidationError("no curves to write")
    dim = curves[0].mechanisms[0].dim
    header = ["objective", "mode", "epsilon", "output", "p_u"] + [f"w_{j}" for j in range(dim)]
    lines = [",".join(header)]
    for c in curves:
        for e, mech in zip(c.epsilons, c.mechanisms):
            for i in range(mech.n_outputs):
                row = [c.objective_name, c.mode, _fmt(e), str(i), _fmt(mech.probs[i])]
                row += [_fmt(v) for v in mech.columns[:, i]]
                lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve(path: str) -> dict:
    """Parse a curve file back into named float columns."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise ParseError(f"{path}: empty curve file")
    header, body = rows[0], rows[1:]
    return {name: [float(r[i]) for r in body] for i, name in enumerate(header)}
