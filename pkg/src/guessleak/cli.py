"""Command line surface.

Four subcommands over system files: ``entropy`` (scalar measures),
``vertices`` (enumerate and cache the LP support points), ``tradeoff``
(sweep the optimal utility over leakage budgets and emit curve files) and
``verify`` (run the brute-force oracles against the analytic pipeline).

Exit codes: 0 success, 2 parse error, 3 validation error, 4 cap or budget
exceeded, 5 verification breach, 1 anything unexpected.  The cap on |W| can
be overridden with the environment variable ``GUESSLEAK_MAX_W``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import fileio, oracle, tradeoff
from .divergence import GENERATORS, get_generator, utility_of_mechanism
from .errors import (
    BudgetExceededError,
    CapExceededError,
    EXIT_BREACH,
    EXIT_CAP,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    GuessleakError,
    ParseError,
    ValidationError,
    VerificationError,
)
from .geometry import DEFAULT_DIM_CAP, build_partitions, certify_extreme_point, enumerate_vertices, enumerate_vertices_exact
from .probability import (
    Mechanism,
    _hg,
    conditional_guessing_entropy_given_w,
    full_disclosure_leakage,
    full_disclosure_leakage_multiplicative,
    guessing_leakage,
    rank_vector,
)


def _dim_cap() -> int:
    raw = os.environ.get("GUESSLEAK_MAX_W")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValidationError(f"GUESSLEAK_MAX_W={raw!r} is not an integer") from exc
    if cap < 1:
        raise ValidationError(f"GUESSLEAK_MAX_W={cap} must be positive")
    return cap


def cmd_entropy(args, out) -> None:
    loaded = fileio.load_system(args.input)
    sys_ = loaded.system
    hgx = _hg(sys_.p_X.p)
    hgxw = conditional_guessing_entropy_given_w(sys_)
    out.write(f"|W| = {sys_.n_W}, |X| = {sys_.n_X}, |Y| = {sys_.n_Y}\n")
    out.write(f"H_G(X) = {hgx!r}\n")
    out.write(f"H_G(X|W) = {hgxw!r}\n")
    out.write(f"GL(X->W) = {full_disclosure_leakage(sys_)!r}\n")
    out.write(f"GL_m(X->W) = {full_disclosure_leakage_multiplicative(sys_)!r}\n")
    out.write(f"rank(p_X) = {rank_vector(sys_.p_X).ranks.tolist()}\n")


def cmd_vertices(args, out) -> None:
    loaded = fileio.load_system(args.input)
    cap = _dim_cap()
    if args.exact:
        vset = enumerate_vertices_exact(loaded.exact.x_columns, max_support=cap)
    else:
        vset = enumerate_vertices(loaded.system.P_XgW, max_support=cap)
    out.write(f"vertices: {len(vset)} ({'exact' if args.exact else 'float'} mode)\n")
    if args.cache:
        fileio.write_vertices(args.cache, vset)
        out.write(f"written: {args.cache}\n")
    else:
        out.write(fileio.vertices_document(vset))


def cmd_tradeoff(args, out) -> None:
    loaded = fileio.load_system(args.input)
    sys_ = loaded.system
    gens = [get_generator(name) for name in (args.f or list(GENERATORS))]
    cap = _dim_cap()
    vset = enumerate_vertices(sys_.P_XgW, max_support=cap)
    if args.eps is not None:
        try:
            grid = [float(tok) for tok in args.eps.split(",") if tok.strip()]
        except ValueError as exc:
            raise ValidationError(f"--eps {args.eps!r}: {exc}") from exc
    else:
        grid = args.grid
    curves = [
        tradeoff.sweep_curve(sys_, gen, grid, mode=args.mode, vertices=vset)
        for gen in gens
    ]
    fileio.write_curves(args.out, curves)
    mech_path = args.out + ".mechanisms.csv"
    fileio.write_mechanisms(mech_path, curves)
    lo, hi = curves[0].domain
    out.write(f"budget domain: [{lo!r}, {hi!r}] mode={args.mode}\n")
    for c in curves:
        bps = [repr(float(b)) for b in c.breakpoints]
        out.write(
            f"{c.objective_name}: t({lo!r}) = {float(c.values[0])!r}, "
            f"t({hi!r}) = {float(c.values[-1])!r}, breakpoints = [{', '.join(bps)}]\n"
        )
    out.write(f"written: {args.out}, {mech_path}\n")


def _sigma_prior(system) -> float:
    p = system.p_X.p
    r = rank_vector(system.p_X).ranks.astype(np.float64)
    second = float((r**2) @ p)
    return math.sqrt(max(second - _hg(p) ** 2, 0.0))


def _sigma_informed(system) -> float:
    second = 0.0
    for w in range(system.n_W):
        pw = float(system.p_W.p[w])
        if pw == 0.0:
            continue
        post = system.P_XgW.matrix[:, w]
        r = rank_vector(post).ranks.astype(np.float64)
        second += pw * float((r**2) @ post)
    return math.sqrt(max(second - conditional_guessing_entropy_given_w(system) ** 2, 0.0))


def cmd_verify(args, out) -> None:
    loaded = fileio.load_system(args.input)
    sys_ = loaded.system
    cap = _dim_cap()
    m = args.grid_res
    trials = args.trials
    failures = 0

    def report(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        out.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
        if not ok:
            failures += 1

    hgx = _hg(sys_.p_X.p)
    hgxw = conditional_guessing_entropy_given_w(sys_)
    n = sys_.n_X
    report(
        "guessing-entropy-range",
        1.0 - 1e-12 <= hgx <= (n + 1) / 2 + 1e-12,
        f"H_G(X) = {hgx!r} in [1, {(n + 1) / 2}]",
    )
    if n <= 7:
        ex = oracle.exhaustive_strategy_check(sys_.p_X)
        report("exhaustive-strategy", abs(ex - hgx) <= 1e-12, f"min over strategies {ex!r} vs {hgx!r}")

    emp = oracle.simulate_guesser(sys_.p_X, trials, args.seed)
    band = 3.0 * _sigma_prior(sys_) / math.sqrt(trials)
    report("mc-guesser", abs(emp - hgx) <= band, f"|{emp!r} - {hgx!r}| <= {band!r}")

    emp_c = oracle.simulate_informed_guesser(sys_, Mechanism.identity(sys_), trials, args.seed + 1)
    band_c = 3.0 * _sigma_informed(sys_) / math.sqrt(trials)
    report("mc-informed-guesser", abs(emp_c - hgxw) <= band_c, f"|{emp_c!r} - {hgxw!r}| <= {band_c!r}")

    vset = enumerate_vertices(sys_.P_XgW, max_support=cap)
    specs = {spec.rank.key(): spec for spec in build_partitions(sys_.P_XgW)}
    bad = 0
    for i in range(len(vset)):
        if not any(certify_extreme_point(vset.points[i], specs[k]) for k in vset.partition_ranks[i]):
            bad += 1
    report("vertex-certificates", bad == 0, f"{len(vset)} vertices, {bad} fail the midpoint test")

    gl_max = full_disclosure_leakage(sys_)
    eps_list = [0.0, gl_max / 2.0, gl_max]
    gen_names = list(GENERATORS) if sys_.n_W <= 2 else ["tv"]
    gens = [get_generator(g) for g in gen_names]
    delta = 2e-2 * max(1.0, 20.0 / m)
    cfg = oracle.GridSearchConfig(resolution=m)
    grid_best, _ = oracle.grid_search_many(sys_, gens, eps_list, cfg)
    for gi, gen in enumerate(gens):
        for ei, eps in enumerate(eps_list):
            lp = tradeoff.assemble_lp(sys_, vset, gen, eps)
            value, weights, _ = tradeoff.solve_lp(lp)
            g_val = float(grid_best[gi, ei])
            report(
                f"lp-vs-grid-{gen.name}-eps{ei}",
                g_val <= value + tradeoff.TOL_LP and g_val >= value - delta,
                f"grid {g_val!r} vs lp {value!r} (budget {eps!r}, m={m})",
            )
            mech = tradeoff.extract_mechanism(weights, vset)
            gl_ach = guessing_leakage(sys_, mech)
            util_ach = utility_of_mechanism(gen, sys_, mech)
            report(
                f"reevaluation-{gen.name}-eps{ei}",
                gl_ach <= eps + tradeoff.TOL_LP and abs(util_ach - value) <= tradeoff.TOL_LP,
                f"mechanism: leakage {gl_ach!r} <= {eps!r}, utility {util_ach!r} vs {value!r}",
            )

    out.write(f"checks failed: {failures}\n")
    if failures:
        raise VerificationError(f"{failures} verification checks failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guessleak",
        description="Guessing leakage measures and exact utility-privacy trade-off curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_entropy = sub.add_parser("entropy", help="print the scalar guessing measures of a system")
    p_entropy.add_argument("--input", required=True, help="system file (JSON)")

    p_vertices = sub.add_parser("vertices", help="enumerate rank-partition preimage vertices")
    p_vertices.add_argument("--input", required=True)
    p_vertices.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    p_vertices.add_argument("--cache", help="write the vertex set to this path")

    p_curve = sub.add_parser("tradeoff", help="sweep the optimal utility over leakage budgets")
    p_curve.add_argument("--input", required=True)
    p_curve.add_argument("--f", action="append", choices=sorted(GENERATORS),
                         help="utility generator, repeatable (default: all)")
    p_curve.add_argument("--grid", type=int, default=36, help="uniform budget grid size")
    p_curve.add_argument("--eps", help="comma-separated explicit budget list")
    p_curve.add_argument("--mode", choices=["gl", "glm"], default="gl",
                         help="additive or multiplicative leakage constraint")
    p_curve.add_argument("--out", required=True, help="curve CSV path")

    p_verify = sub.add_parser("verify", help="run brute-force oracles against the pipeline")
    p_verify.add_argument("--input", required=True)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--grid-res", type=int, default=20, dest="grid_res")
    p_verify.add_argument("--trials", type=int, default=1_000_000)
    return parser


_COMMANDS = {
    "entropy": cmd_entropy,
    "vertices": cmd_vertices,
    "tradeoff": cmd_tradeoff,
    "verify": cmd_verify,
}


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args, out)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CapExceededError, BudgetExceededError) as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except VerificationError as exc:
        print(f"verification breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except GuessleakError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
