"""MAP inference through nand Markov random fields.

A discrete graphical model is converted into a binary nand Markov random
field whose MAP estimate is a maximum-weight stable set. When the NMRF
graph is perfect, the set-packing LP over its maximal cliques is integral
and message passing can recover the MAP estimate.
"""

from perfectmap.errors import (
    DecodeError,
    FormatError,
    GuardError,
    InvariantViolation,
    ModelError,
    PerfectMapError,
    SolverError,
)
from perfectmap.message_passing import mp_solve
from perfectmap.model import (
    DEFAULT_EPSILON,
    Factor,
    GraphicalModel,
    model_log_score,
    parse_model,
    rescale_potentials,
    serialize_model,
)
from perfectmap.nmrf import Nmrf, build_nmrf, decode_assignment, encode_assignment, nmrf_objective
from perfectmap.oracle import exhaustive_map, exhaustive_matching, exhaustive_mwss
from perfectmap.perfection import UndirectedGraph, find_odd_hole, gen_family, is_berge
from perfectmap.pruning import prune
from perfectmap.relaxation import build_lp, solve_lp, solve_nmrf_lp

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EPSILON", "DecodeError", "Factor", "FormatError", "GraphicalModel", "GuardError",
    "InvariantViolation", "ModelError", "Nmrf", "PerfectMapError", "SolverError", "UndirectedGraph",
    "build_lp", "build_nmrf", "decode_assignment", "encode_assignment", "exhaustive_map",
    "exhaustive_matching", "exhaustive_mwss", "find_odd_hole", "gen_family", "is_berge",
    "model_log_score", "mp_solve", "nmrf_objective", "parse_model", "prune", "rescale_potentials",
    "serialize_model", "solve_lp", "solve_nmrf_lp",
]
