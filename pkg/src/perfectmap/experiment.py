"""Exact-versus-approximate MAP experiment over seeded graph families.

Each instance is a random graph from one family with vertex weights drawn
uniformly from [0, 1] and shifted by epsilon. Every instance is run
through the Berge test, the exact stable-set oracle, the packing LP and
message passing, and reported as one CSV row.
"""

from __future__ import annotations

import io
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from perfectmap.errors import GuardError, InvariantViolation, ModelError, SolverError
from perfectmap.message_passing import DEFAULT_TOL, FACTOR_SETS, mp_solve
from perfectmap.model import DEFAULT_EPSILON
from perfectmap.oracle import exhaustive_mwss
from perfectmap.perfection import FAMILIES, gen_family, is_berge
from perfectmap.pruning import merge_twins
from perfectmap.relaxation import INTEGRALITY_TOL, build_lp, solve_lp

CSV_COLUMNS = (
    "family", "seed", "n_nodes", "n_edges", "berge", "exact", "lp",
    "lp_integral", "mp", "mp_converged", "mp_iters", "status",
)
BOUND_TOL = 1e-6

# Vertex counts for the bipartite families and the random family; the two
# line-graph families take the vertex count of the underlying bipartite graph,
# whose edge count (at most 4 * 4) is then the instance size.
DEFAULT_SIZES = {
    "bipartite": (12,),
    "complement_bipartite": (12,),
    "line_of_bipartite": (8,),
    "complement_line_of_bipartite": (8,),
    "random": (10,),
}
DEFAULT_INSTANCES = 50


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple[str, ...]
    sizes: tuple[int, ...] | None = None
    instances: int = DEFAULT_INSTANCES
    seed: int = 0
    p: float = 0.5
    epsilon: float = DEFAULT_EPSILON
    tol: float = DEFAULT_TOL
    max_iters: int | None = None
    prune: bool = False
    factors: str = "cliques"
    out: str | None = None

    def __post_init__(self):
        if self.instances < 1:
            raise ModelError("instances >= 1 required")
        if not self.families:
            raise ModelError("at least one family is required")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ModelError(f"unknown family {fam!r}; choose from {', '.join(FAMILIES)}")
        if self.sizes is not None and any(s < 1 for s in self.sizes):
            raise ModelError("sizes must be positive")
        if not self.epsilon > 0:
            raise ModelError("epsilon must be positive")
        if self.factors not in FACTOR_SETS:
            raise ModelError(f"unknown factor set {self.factors!r}")

    def sizes_for(self, family: str) -> tuple[int, ...]:
        return self.sizes if self.sizes is not None else DEFAULT_SIZES[family]


@dataclass(frozen=True)
class ExperimentRow:
    family: str
    seed: int
    n_nodes: int
    n_edges: int
    berge: bool | None = None
    exact: float | None = None
    lp: float | None = None
    lp_integral: bool | None = None
    mp: float | None = None
    mp_converged: bool | None = None
    mp_iters: int | None = None
    status: str = "ok"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def run_instance(cfg: ExperimentConfig, family: str, size: int, seed: int) -> ExperimentRow:
    rng = np.random.default_rng(seed)
    g = gen_family(family, size, cfg.p, rng)
    w = rng.random(g.n) + cfg.epsilon
    fields = {}
    try:
        fields["berge"] = bool(is_berge(g))
        fields["exact"] = exhaustive_mwss(g, w).value
        if cfg.prune:
            sg, sw, _ = merge_twins(g, w)
        else:
            sg, sw = g, w
        sol = solve_lp(build_lp(sg, sw))
        fields["lp"], fields["lp_integral"] = sol.objective, sol.integral
        mp = mp_solve(sg, sw, tol=cfg.tol, max_iters=cfg.max_iters, factors=cfg.factors)
        fields["mp"], fields["mp_converged"], fields["mp_iters"] = mp.objective, mp.converged, mp.iterations
    except (GuardError, SolverError) as exc:
        kind = "guard" if isinstance(exc, GuardError) else "solver"
        return ExperimentRow(family, seed, g.n, g.n_edges, status=f"{kind}: {exc}", **fields)

    if fields["berge"] and not fields["lp_integral"]:
        raise InvariantViolation(f"{family} seed {seed}: Berge graph with a fractional packing LP")
    if fields["exact"] > fields["lp"] + BOUND_TOL:
        raise InvariantViolation(f"{family} seed {seed}: exact value above the LP bound")
    return ExperimentRow(family, seed, g.n, g.n_edges, **fields)


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """All rows in (family, size, instance) order; instance i uses seed ``cfg.seed + i``."""
    rows = []
    for family in cfg.families:
        for size in cfg.sizes_for(family):
            for i in range(cfg.instances):
                rows.append(run_instance(cfg, family, size, cfg.seed + i))
    return rows


def header_comments(cfg: ExperimentConfig) -> list[str]:
    sizes = {fam: list(cfg.sizes_for(fam)) for fam in cfg.families}
    max_iters = "10*n*edges" if cfg.max_iters is None else cfg.max_iters
    return [
        f"weights uniform(0,1) + epsilon, epsilon={cfg.epsilon!r}",
        f"seed={cfg.seed} instance_seed=seed+index p={cfg.p!r} instances={cfg.instances}",
        f"sizes={sizes}",
        f"tol={cfg.tol!r} max_iters={max_iters} prune={cfg.prune} factors={cfg.factors}"
        f" integrality_tol={INTEGRALITY_TOL!r}",
    ]


def rows_to_csv(rows: Sequence[ExperimentRow], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        cells = [_fmt(getattr(row, col)) for col in CSV_COLUMNS]
        # status may carry free text; keep the CSV one field per column
        cells[-1] = cells[-1].replace(",", ";").replace("\n", " ")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_experiment(cfg: ExperimentConfig) -> str:
    """Run ``cfg`` and return the CSV text; also written to ``cfg.out`` when set."""
    text = rows_to_csv(run_experiment(cfg), header_comments(cfg))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def summarize(rows: Sequence[ExperimentRow], tol: float = 1e-5) -> dict[str, dict[str, float]]:
    """Per-family fractions: Berge, integral LP, and converged MP within ``tol`` of exact."""
    out: dict[str, dict[str, float]] = {}
    for fam in dict.fromkeys(r.family for r in rows):
        sub = [r for r in rows if r.family == fam and r.status == "ok"]
        k = max(len(sub), 1)
        out[fam] = {
            "rows": len(sub),
            "berge": sum(bool(r.berge) for r in sub) / k,
            "lp_integral": sum(bool(r.lp_integral) for r in sub) / k,
            "mp_exact": sum(
                bool(r.mp_converged) and math.isfinite(r.mp) and abs(r.mp - r.exact) <= tol
                for r in sub
            ) / k,
        }
    return out

