"""Discrete graphical models: representation, GM text format, rescaling.

A model is a list of variable cardinalities plus positive potential tables
over variable scopes. Tables are flat and ordered so that the lowest-index
variable of the scope varies fastest (Fortran order over the scope axes).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from perfectmap.errors import FormatError, ModelError

DEFAULT_EPSILON = 1e-6

Assignment = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Factor:
    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=np.float64).ravel()
        table.setflags(write=False)
        object.__setattr__(self, "scope", tuple(int(v) for v in self.scope))
        object.__setattr__(self, "table", table)

    def __eq__(self, other):
        if not isinstance(other, Factor):
            return NotImplemented
        return self.scope == other.scope and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.scope, self.table.tobytes()))

    @property
    def log_table(self) -> np.ndarray:
        return np.log(self.table)

    def shaped(self, cards: Sequence[int]) -> np.ndarray:
        """Table reshaped to one axis per scope variable, in scope order."""
        return self.table.reshape([cards[v] for v in self.scope], order="F")


@dataclass(frozen=True, eq=False)
class GraphicalModel:
    """Positive factorization over discrete variables.

    ``epsilon`` is set by :func:`rescale_potentials` and records the offset
    that was applied, so downstream code can identify minimal configurations.
    """

    cardinalities: tuple[int, ...]
    factors: tuple[Factor, ...]
    epsilon: float | None = field(default=None)

    def __post_init__(self):
        cards = tuple(int(c) for c in self.cardinalities)
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "factors", tuple(self.factors))
        _validate(cards, self.factors)

    def __eq__(self, other):
        if not isinstance(other, GraphicalModel):
            return NotImplemented
        return (
            self.cardinalities == other.cardinalities
            and self.factors == other.factors
            and self.epsilon == other.epsilon
        )

    def __hash__(self):
        return hash((self.cardinalities, self.factors, self.epsilon))

    @property
    def n_vars(self) -> int:
        return len(self.cardinalities)

    @property
    def scopes(self) -> list[tuple[int, ...]]:
        return [f.scope for f in self.factors]

    @property
    def state_space_size(self) -> int:
        return math.prod(self.cardinalities)

    @property
    def is_rescaled(self) -> bool:
        return all(np.all(f.table > 1.0) for f in self.factors)


def _validate(cards: tuple[int, ...], factors: Sequence[Factor]) -> None:
    if len(cards) < 1:
        raise ModelError("a model needs at least one variable")
    if any(c < 1 for c in cards):
        raise ModelError(f"cardinalities must be >= 1, got {cards}")
    seen = set()
    for f in factors:
        if any(v < 0 or v >= len(cards) for v in f.scope):
            raise ModelError(f"scope {f.scope} out of range for {len(cards)} variables")
        if any(a >= b for a, b in zip(f.scope, f.scope[1:])):
            raise ModelError(f"scope {f.scope} is not strictly increasing")
        if f.scope in seen:
            raise ModelError(f"duplicate scope {f.scope}")
        seen.add(f.scope)
        expected = math.prod(cards[v] for v in f.scope)
        if f.table.size != expected:
            raise ModelError(
                f"wrong table length for scope {f.scope}: {f.table.size} != {expected}"
            )
        if not np.all(np.isfinite(f.table)) or np.any(f.table <= 0):
            raise ModelError(f"table for scope {f.scope} has nonpositive or non-finite entries")


def merge_duplicate_scopes(factors: Iterable[Factor]) -> list[Factor]:
    """Combine factors with identical scopes by entrywise product.

    Output keeps the order of first occurrence.
    """
    merged: dict[tuple[int, ...], np.ndarray] = {}
    for f in factors:
        if f.scope in merged:
            merged[f.scope] = merged[f.scope] * f.table
        else:
            merged[f.scope] = np.array(f.table)
    return [Factor(scope, table) for scope, table in merged.items()]


def validate_assignment(m: GraphicalModel, a: Sequence[int]) -> Assignment:
    a = tuple(int(v) for v in a)
    if len(a) != m.n_vars:
        raise ModelError(f"assignment has {len(a)} values, model has {m.n_vars} variables")
    for i, (v, c) in enumerate(zip(a, m.cardinalities)):
        if not 0 <= v < c:
            raise ModelError(f"value {v} of variable {i} outside [0, {c})")
    return a


def model_log_score(m: GraphicalModel, a: Sequence[int]) -> float:
    """Sum of log potentials at ``a``: log p(a) up to the constant log Z."""
    a = validate_assignment(m, a)
    total = 0.0
    for f in m.factors:
        total += math.log(f.shaped(m.cardinalities)[tuple(a[v] for v in f.scope)])
    return total


def rescale_potentials(m: GraphicalModel, epsilon: float = DEFAULT_EPSILON) -> GraphicalModel:
    """Divide each table by its minimum and add ``epsilon``.

    Every entry of the result exceeds 1, so every log-potential is strictly
    positive; the per-table scaling leaves the maximizing assignment unchanged.
    """
    if not epsilon > 0:
        raise ModelError(f"epsilon must be positive, got {epsilon}")
    factors = []
    for f in m.factors:
        if np.any(f.table <= 0):
            raise ModelError(f"table for scope {f.scope} has nonpositive entries")
        factors.append(Factor(f.scope, f.table / f.table.min() + epsilon))
    return GraphicalModel(m.cardinalities, tuple(factors), epsilon=float(epsilon))


# --- GM text format -------------------------------------------------------


def _tokens(text: str) -> list[tuple[str, int]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        out.extend((tok, lineno) for tok in stripped.split())
    return out


def _expect_keyword(toks, pos, keyword):
    if pos >= len(toks):
        raise FormatError(f"unexpected end of input, expected '{keyword}'",
                          toks[-1][1] if toks else None)
    tok, line = toks[pos]
    if tok != keyword:
        raise FormatError(f"malformed header: expected '{keyword}', got '{tok}'", line)
    return line


def _int_token(toks, pos, what):
    if pos >= len(toks):
        raise FormatError(f"unexpected end of input reading {what}",
                          toks[-1][1] if toks else None)
    tok, line = toks[pos]
    try:
        return int(tok), line
    except ValueError:
        raise FormatError(f"expected integer {what}, got '{tok}'", line) from None


def parse_model(text: str) -> GraphicalModel:
    """Parse a model in GM text format.

    Duplicate scopes are merged by entrywise product. Every structural or
    numeric problem raises :class:`FormatError` with the line number.
    """
    toks = _tokens(text)
    pos = 0
    _expect_keyword(toks, pos, "GM")
    version, line = _int_token(toks, pos + 1, "format version")
    if version != 1:
        raise FormatError(f"unsupported GM version {version}", line)
    pos += 2
    _expect_keyword(toks, pos, "vars")
    n, line = _int_token(toks, pos + 1, "variable count")
    if n < 1:
        raise FormatError("vars must be >= 1", line)
    pos += 2
    _expect_keyword(toks, pos, "cards")
    pos += 1
    cards = []
    for _ in range(n):
        c, line = _int_token(toks, pos, "cardinality")
        if c < 1:
            raise FormatError(f"cardinality must be >= 1, got {c}", line)
        cards.append(c)
        pos += 1
    _expect_keyword(toks, pos, "factors")
    n_factors, _ = _int_token(toks, pos + 1, "factor count")
    pos += 2

    factors = []
    for _ in range(n_factors):
        fline = _expect_keyword(toks, pos, "factor")
        size, line = _int_token(toks, pos + 1, "scope size")
        pos += 2
        scope = []
        for _ in range(size):
            v, line = _int_token(toks, pos, "scope variable")
            if not 0 <= v < n:
                raise FormatError(f"scope variable {v} out of range [0, {n})", line)
            if scope and v <= scope[-1]:
                raise FormatError(f"scope is not strictly increasing at {v}", line)
            scope.append(v)
            pos += 1
        vline = _expect_keyword(toks, pos, "values")
        pos += 1
        values = []
        while pos < len(toks) and toks[pos][0] != "factor":
            tok, line = toks[pos]
            try:
                val = float(tok)
            except ValueError:
                raise FormatError(f"bad value literal '{tok}'", line) from None
            if not math.isfinite(val) or val <= 0:
                raise FormatError(f"nonpositive or non-finite value {tok}", line)
            values.append(val)
            pos += 1
        expected = math.prod(cards[v] for v in scope)
        if len(values) != expected:
            raise FormatError(
                f"wrong table length for factor declared on line {fline}: "
                f"got {len(values)} values, expected {expected}",
                vline,
            )
        factors.append(Factor(tuple(scope), values))
    if pos != len(toks):
        raise FormatError(f"unexpected trailing token '{toks[pos][0]}'", toks[pos][1])
    return GraphicalModel(tuple(cards), tuple(merge_duplicate_scopes(factors)))


def serialize_model(m: GraphicalModel) -> str:
    """GM text for ``m``. Floats use their shortest round-trip repr."""
    lines = [
        "GM 1",
        f"vars {m.n_vars}",
        "cards " + " ".join(str(c) for c in m.cardinalities),
        f"factors {len(m.factors)}",
    ]
    for f in m.factors:
        lines.append(f"factor {len(f.scope)} " + " ".join(str(v) for v in f.scope))
        lines.append("values " + " ".join(repr(float(x)) for x in f.table))
    return "\n".join(lines) + "\n"


def load_model(path) -> GraphicalModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# --- random instances ------------------------------------------------------


def random_model(
    rng: np.random.Generator,
    n_vars: int,
    max_card: int = 2,
    n_factors: int | None = None,
    max_scope: int = 2,
    low: float = 0.1,
    high: float = 1.0,
) -> GraphicalModel:
    """Random model with uniform(low, high) potentials on random scopes.

    Cardinalities are drawn from [2, max_card]. Every variable is covered by
    at least one factor; duplicate scopes are merged.
    """
    cards = tuple(int(c) for c in rng.integers(2, max(max_card, 2) + 1, size=n_vars))
    if n_factors is None:
        n_factors = n_vars
    scopes = []
    for _ in range(n_factors):
        size = int(rng.integers(1, min(max_scope, n_vars) + 1))
        scopes.append(tuple(sorted(int(v) for v in rng.choice(n_vars, size=size, replace=False))))
    covered = {v for s in scopes for v in s}
    scopes.extend((v,) for v in range(n_vars) if v not in covered)
    factors = [
        Factor(s, rng.uniform(low, high, size=math.prod(cards[v] for v in s)))
        for s in scopes
    ]
    return GraphicalModel(cards, tuple(merge_duplicate_scopes(factors)))


def random_tree_model(
    rng: np.random.Generator,
    n_vars: int,
    max_card: int = 3,
    low: float = 0.1,
    high: float = 1.0,
) -> GraphicalModel:
    """Pairwise model on a uniformly random labelled tree (random parent attachment)."""
    cards = tuple(int(c) for c in rng.integers(2, max_card + 1, size=n_vars))
    if n_vars == 1:
        return GraphicalModel(cards, (Factor((0,), rng.uniform(low, high, size=cards[0])),))
    order = rng.permutation(n_vars)
    factors = []
    for pos in range(1, n_vars):
        child = int(order[pos])
        parent = int(order[int(rng.integers(0, pos))])
        scope = tuple(sorted((child, parent)))
        factors.append(Factor(scope, rng.uniform(low, high, size=cards[scope[0]] * cards[scope[1]])))
    return GraphicalModel(cards, tuple(factors))
