"""Command-line interface.

Exit status: 0 on success, 1 on usage or input errors, 2 when a size
guard, solver or internal consistency check fails. Random instances use
numpy's PCG64 generator seeded by ``--seed``.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from perfectmap.errors import (
    GUARD_ENV,
    GuardError,
    InvariantViolation,
    PerfectMapError,
    SolverError,
)
from perfectmap.experiment import ExperimentConfig, header_comments, rows_to_csv, run_experiment, summarize
from perfectmap.message_passing import DEFAULT_TOL, FACTOR_SETS, mp_solve
from perfectmap.model import DEFAULT_EPSILON, parse_model, rescale_potentials
from perfectmap.nmrf import build_nmrf, decode_assignment, nmrf_objective, serialize_nmrf
from perfectmap.oracle import exhaustive_map, exhaustive_mwss
from perfectmap.perfection import BERGE_FAMILIES, FAMILIES, gen_family, is_berge, parse_ug, serialize_ug
from perfectmap.pruning import merge_twins, postprocess_assignment, prune
from perfectmap.relaxation import FEASIBILITY_TOL, INTEGRALITY_TOL, build_lp, solve_lp, solve_nmrf_lp


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    return f"{x:.12g}"


def _bits(bits) -> str:
    return " ".join(str(int(b)) for b in bits)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _kind(text: str) -> str:
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            head = s.split()[0]
            if head in ("GM", "UG"):
                return head
            break
    raise UsageError("input is neither GM nor UG text")


def _load_instance(path: str, epsilon: float):
    """('GM', nmrf) for model files or ('UG', (graph, weights)) for graph files."""
    text = _read(path)
    if _kind(text) == "GM":
        return "GM", build_nmrf(rescale_potentials(parse_model(text), epsilon))
    g, w = parse_ug(text)
    if w is None:
        w = np.ones(g.n)
    return "UG", (g, w)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_list(kind, allowed=None):
    def parse(text):
        try:
            items = [kind(t) for t in text.split(",") if t]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        if allowed is not None:
            for it in items:
                if it not in allowed:
                    raise argparse.ArgumentTypeError(f"unknown value {it!r}; choose from {', '.join(allowed)}")
        return tuple(items)

    return parse


# --- subcommands --------------------------------------------------------------


def cmd_convert(args) -> None:
    model = rescale_potentials(parse_model(_read(args.model)), args.epsilon)
    _emit(serialize_nmrf(build_nmrf(model)), args.out)


def cmd_check_perfect(args) -> None:
    g, _ = parse_ug(_read(args.graph))
    res = is_berge(g)
    if res:
        print("berge")
    else:
        print(f"not-berge {res.side} " + " ".join(str(v) for v in res.witness))


def cmd_solve_lp(args) -> None:
    kind, inst = _load_instance(args.file, args.epsilon)
    if kind == "GM":
        res = solve_nmrf_lp(prune(inst) if args.prune else inst, args.int_tol, args.feas_tol)
        sol = res.lp
    else:
        g, w = inst
        if args.prune:
            g, w, _ = merge_twins(g, w)
        sol = solve_lp(build_lp(g, w), args.int_tol, args.feas_tol)
        res = None
    print(f"objective {_num(sol.objective)}")
    print(f"integral {'true' if sol.integral else 'false'}")
    print("x " + " ".join(_num(v) for v in sol.x))
    if not sol.integral:
        print("fractional " + " ".join(str(j) for j in sol.fractional_coordinates(args.int_tol)))
    elif res is not None:
        print("assignment " + " ".join(str(v) for v in res.assignment))
        print(f"score {_num(res.score)}")


def cmd_solve_mp(args) -> None:
    kind, inst = _load_instance(args.file, args.epsilon)
    opts = dict(tol=args.tol, max_iters=args.max_iters, neg_large=args.neg_large, factors=args.factors)
    if kind == "UG":
        g, w = inst
        if args.prune:
            pg, pw, groups = merge_twins(g, w)
            res = mp_solve(pg, pw, **opts)
            bits = np.zeros(g.n, dtype=np.int8)
            for i, members in enumerate(groups):
                bits[members] = res.bits[i]
            objective = res.objective
        else:
            res = mp_solve(g, w, **opts)
            bits, objective = res.bits, res.objective
        assignment = None
    else:
        nmrf = inst
        if args.prune:
            pr = prune(nmrf)
            res = mp_solve(pr.graph, pr.weights, **opts)
            if math.isfinite(res.objective):
                bits = postprocess_assignment(pr, res.bits)
            else:
                bits = None
        else:
            res = mp_solve(nmrf.graph, nmrf.weights, **opts)
            bits = res.bits
        objective = -math.inf if bits is None else nmrf_objective(nmrf, bits)
        assignment = None
        if bits is not None and math.isfinite(objective):
            try:
                assignment = decode_assignment(nmrf, bits)
            except ValueError:
                assignment = None
    print(f"objective {_num(objective)}")
    print(f"converged {'true' if res.converged else 'false'}")
    print(f"iterations {res.iterations}")
    print("bits " + ("none" if bits is None else _bits(bits)))
    if kind == "GM":
        print("assignment " + ("none" if assignment is None else " ".join(str(v) for v in assignment)))


def cmd_solve_exact(args) -> None:
    text = _read(args.file)
    if _kind(text) == "GM":
        model = rescale_potentials(parse_model(text), args.epsilon)
        res = exhaustive_map(model)
        print(f"value {_num(res.value)}")
        print("assignment " + " ".join(str(v) for v in res.argmax))
    else:
        g, w = parse_ug(text)
        res = exhaustive_mwss(g, np.ones(g.n) if w is None else w)
        print(f"value {_num(res.value)}")
        print("bits " + _bits(res.argmax))


def cmd_gen_graph(args) -> None:
    rng = np.random.default_rng(args.seed)
    g = gen_family(args.family, args.size, args.p, rng)
    weights = rng.random(g.n) + args.epsilon if args.weighted else None
    _emit(serialize_ug(g, weights), args.out)


def cmd_experiment(args) -> None:
    cfg = ExperimentConfig(
        families=args.family,
        sizes=args.size,
        instances=args.instances,
        seed=args.seed,
        p=args.p,
        epsilon=args.epsilon,
        tol=args.tol,
        max_iters=args.max_iters,
        prune=args.prune,
        factors=args.factors,
        out=args.out,
    )
    rows = run_experiment(cfg)
    text = rows_to_csv(rows, header_comments(cfg))
    _emit(text, args.out)
    if args.out:
        for fam, s in summarize(rows).items():
            print(f"{fam}: rows {s['rows']} berge {s['berge']:.2f} "
                  f"lp_integral {s['lp_integral']:.2f} mp_exact {s['mp_exact']:.2f}")


# --- parser -------------------------------------------------------------------


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _probability(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("probability must lie in [0, 1]")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="perfectmap",
        description="MAP inference through nand Markov random fields.",
        epilog=f"Size guards can be lifted with {GUARD_ENV}=1 (may be very slow).",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    eps = dict(type=_positive_float, default=DEFAULT_EPSILON, help="rescaling offset (default 1e-6)")

    p = sub.add_parser("convert", help="write the NMRF of a GM file as weighted UG text")
    p.add_argument("model")
    p.add_argument("--epsilon", **eps)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("check-perfect", help="Berge test of a UG graph")
    p.add_argument("graph")
    p.set_defaults(func=cmd_check_perfect)

    p = sub.add_parser("solve-lp", help="packing LP of a GM file's NMRF or of a weighted UG graph")
    p.add_argument("file")
    p.add_argument("--epsilon", **eps)
    p.add_argument("--prune", action="store_true", help="simplify the graph first")
    p.add_argument("--int-tol", type=_positive_float, default=INTEGRALITY_TOL)
    p.add_argument("--feas-tol", type=_positive_float, default=FEASIBILITY_TOL)
    p.set_defaults(func=cmd_solve_lp)

    p = sub.add_parser("solve-mp", help="convergent message passing")
    p.add_argument("file")
    p.add_argument("--epsilon", **eps)
    p.add_argument("--prune", action="store_true")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", type=_positive_int, default=None)
    p.add_argument("--neg-large", type=float, default=None, help="edge factors only")
    p.add_argument("--factors", choices=FACTOR_SETS, default="cliques")
    p.set_defaults(func=cmd_solve_mp)

    p = sub.add_parser("solve-exact", help="exhaustive MAP (GM) or maximum-weight stable set (UG)")
    p.add_argument("file")
    p.add_argument("--epsilon", **eps)
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("gen-graph", help="seeded random graph from a family")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--size", type=_positive_int, required=True)
    p.add_argument("--p", type=_probability, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weighted", action="store_true", help="add uniform(0,1)+epsilon weights")
    p.add_argument("--epsilon", **eps)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("experiment", help="exact versus LP versus message passing, as CSV")
    p.add_argument("--family", type=_csv_list(str, FAMILIES), default=BERGE_FAMILIES + ("random",))
    p.add_argument("--size", type=_csv_list(int), default=None,
                   help="comma-separated sizes (default: per-family)")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=_probability, default=0.5)
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", type=_positive_int, default=None)
    p.add_argument("--epsilon", **eps)
    p.add_argument("--prune", action="store_true", help="fuse twin vertices before LP and MP")
    p.add_argument("--factors", choices=FACTOR_SETS, default="cliques")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    try:
        args.func(args)
    except (GuardError, SolverError, InvariantViolation) as exc:
        print(f"perfectmap: error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, PerfectMapError, ValueError) as exc:
        print(f"perfectmap: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
