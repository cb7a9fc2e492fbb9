"""Count-based conditional tree sampling.

The generative story is Markovian over the tree: draw the root's
(relation, nuclearity) pair, then repeatedly draw each child slot's
outcome conditioned on the parent's relation, nuclearity and depth plus
the child side.  An outcome is either LEAF (the slot stays an EDU) or a
(relation, nuclearity) pair (the slot becomes a parent whose own child
slots join the frontier).  Expansion is breadth first.

Fitting counts these outcomes over a corpus with additive smoothing.
Conditioning cells never observed back off to the marginal distribution
of their depth; a depth never observed clamps to the nearest observed
depth's marginal (so deep queries behave like the deepest training
depth instead of drifting to the uniform tail), and only a table with
no usable counts at all smooths down to the uniform distribution.

Size control: when a target EDU count is given, outcomes that would make
the target unreachable (frontier too small to absorb the remaining
leaves, or certain to overshoot) receive probability zero before
renormalisation, so every sampled tree hits the target exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Iterable, Mapping

import numpy as np

from .tree import (
    MAX_DEPTH,
    MAX_POSITIONS,
    NUCLEARITIES,
    RELATIONS,
    RstTree,
    children_of,
    depth_of,
    ensure_valid,
    parent_of,
)

LEAF = "LEAF"

_PAIRS = tuple((r, n) for r in RELATIONS[:-1] for n in NUCLEARITIES[:-1])

#: Fixed outcome order: LEAF first, then (relation, nuclearity) pairs.
OUTCOMES = (LEAF,) + _PAIRS
OUTCOME_INDEX = {o: i for i, o in enumerate(OUTCOMES)}

SIDES = ("left", "right")

TABLE_FORMAT_VERSION = "rstkit conditional-table v1"


class EmptyCorpusError(ValueError):
    pass


class UnreachableTargetError(ValueError):
    pass


class ConditionalTable:
    """Fitted child-given-parent outcome distribution.

    ``cells`` maps (parent_relation, parent_nuclearity, parent_depth, side)
    to an outcome count vector aligned with OUTCOMES.  ``root`` holds the
    (relation, nuclearity) distribution of roots, aligned with OUTCOMES[1:].
    Tables loaded from disk store probabilities instead of counts and set
    ``normalized``.
    """

    def __init__(
        self,
        alpha: float,
        cells: Mapping[tuple[str, str, int, str], np.ndarray],
        depth_totals: Mapping[int, np.ndarray],
        root: np.ndarray,
        normalized: bool = False,
    ):
        if alpha < 0:
            raise ValueError("smoothing constant must be >= 0")
        self.alpha = float(alpha)
        self.cells = dict(cells)
        self.depth_totals = dict(depth_totals)
        self.root = np.asarray(root, dtype=np.float64)
        self.normalized = normalized
        self._cache: dict = {}
        self._cum_cache: dict = {}

    def _smooth(self, counts: np.ndarray) -> np.ndarray:
        total = counts.sum()
        if total == 0.0 and self.alpha == 0.0:
            raise ValueError("cell has no mass and smoothing is disabled")
        return (counts + self.alpha) / (total + self.alpha * counts.shape[0])

    def probabilities(
        self, parent_relation: str, parent_nuclearity: str, parent_depth: int, side: str
    ) -> np.ndarray:
        """Conditional outcome distribution for one child slot (sums to 1)."""
        key = (parent_relation, parent_nuclearity, parent_depth, side)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        vec = self.cells.get(key)
        if vec is None or vec.sum() == 0.0:
            vec = self.depth_totals.get(parent_depth)
            if vec is None and self.depth_totals:
                # depth never observed: clamp to the nearest observed depth
                nearest = min(
                    self.depth_totals, key=lambda d: (abs(d - parent_depth), d)
                )
                vec = self.depth_totals[nearest]
        if self.normalized and vec is not None:
            probs = vec
        else:
            if vec is None:
                vec = np.zeros(len(OUTCOMES), dtype=np.float64)
            probs = self._smooth(vec)
        self._cache[key] = probs
        return probs

    def root_probabilities(self) -> np.ndarray:
        """Distribution of (relation, nuclearity) at the root, over OUTCOMES[1:]."""
        if self.normalized:
            return self.root
        return self._smooth(self.root)

    def cumulative(
        self, parent_relation: str, parent_nuclearity: str, parent_depth: int, side: str
    ) -> np.ndarray:
        """Cached cumulative sums of ``probabilities`` for fast repeated draws."""
        key = (parent_relation, parent_nuclearity, parent_depth, side)
        cum = self._cum_cache.get(key)
        if cum is None:
            cum = self._cum_cache[key] = np.cumsum(
                self.probabilities(parent_relation, parent_nuclearity, parent_depth, side)
            )
        return cum


def fit(corpus: Iterable[RstTree], alpha: float = 0.1) -> ConditionalTable:
    """Count child outcomes over validating trees with additive smoothing."""
    k = len(OUTCOMES)
    cells: dict[tuple[str, str, int, str], np.ndarray] = {}
    depth_totals: dict[int, np.ndarray] = {}
    root = np.zeros(k - 1, dtype=np.float64)
    n_trees = 0
    for tree in corpus:
        ensure_valid(tree)
        n_trees += 1
        root[OUTCOME_INDEX[tree.parents[0]] - 1] += 1.0
        for pos, labels in tree.parents.items():
            rel, nuc = labels
            d = depth_of(pos)
            for side, child in zip(SIDES, children_of(pos)):
                outcome = tree.parents.get(child, LEAF)
                if outcome != LEAF:
                    outcome = tuple(outcome)
                idx = OUTCOME_INDEX[outcome]
                cell = cells.get((rel, nuc, d, side))
                if cell is None:
                    cell = cells[(rel, nuc, d, side)] = np.zeros(k, dtype=np.float64)
                cell[idx] += 1.0
                marginal = depth_totals.get(d)
                if marginal is None:
                    marginal = depth_totals[d] = np.zeros(k, dtype=np.float64)
                marginal[idx] += 1.0
    if n_trees == 0:
        raise EmptyCorpusError("cannot fit a conditional table on an empty corpus")
    return ConditionalTable(alpha, cells, depth_totals, root)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerConstraints:
    """Structural constraints applied during sampling."""

    target_edu_count: int | None = None
    relation_boosts: Mapping[str, float] = field(default_factory=dict)
    max_depth: int = MAX_DEPTH
    seed: int | None = None

    def __post_init__(self):
        if self.target_edu_count is not None and self.target_edu_count < 1:
            raise ValueError("target_edu_count must be >= 1")
        if not 1 <= self.max_depth <= MAX_DEPTH:
            raise ValueError(f"max_depth must be in [1, {MAX_DEPTH}]")
        for rel, factor in self.relation_boosts.items():
            if rel not in RELATIONS:
                raise ValueError(f"unknown relation {rel!r} in boosts")
            if not factor > 0:
                raise ValueError(f"boost for {rel} must be positive")


def expandable(pos: int, max_depth: int = MAX_DEPTH) -> bool:
    """Whether ``pos`` may become a parent without breaking depth/position caps."""
    return depth_of(pos) + 1 <= max_depth and 2 * pos + 2 < MAX_POSITIONS


@lru_cache(maxsize=None)
def subtree_capacity(pos: int, max_depth: int = MAX_DEPTH) -> int:
    """Maximum number of leaves a subtree rooted at ``pos`` can hold."""
    if not expandable(pos, max_depth):
        return 1
    left, right = children_of(pos)
    return subtree_capacity(left, max_depth) + subtree_capacity(right, max_depth)


def _adjusted(probs: np.ndarray, boosts, leaf_ok: bool, internal_ok: bool) -> np.ndarray:
    if not boosts and leaf_ok and internal_ok:
        return probs  # already a distribution; callers never mutate
    adj = probs.copy()
    if boosts:
        for i, outcome in enumerate(OUTCOMES[1:], start=1):
            factor = boosts.get(outcome[0])
            if factor is not None:
                adj[i] *= factor
    if not leaf_ok:
        adj[0] = 0.0
    if not internal_ok:
        adj[1:] = 0.0
    total = adj.sum()
    if total <= 0.0:
        raise RuntimeError("no outcome is feasible under the current constraints")
    return adj / total


def child_distribution(
    table: ConditionalTable,
    parent_relation: str,
    parent_nuclearity: str,
    parent_pos: int,
    side: str,
    boosts: Mapping[str, float] | None = None,
    leaf_ok: bool = True,
    internal_ok: bool = True,
) -> np.ndarray:
    """Boost-adjusted, constraint-masked, renormalised conditional (over OUTCOMES)."""
    probs = table.probabilities(parent_relation, parent_nuclearity, depth_of(parent_pos), side)
    return _adjusted(probs, boosts, leaf_ok, internal_ok)


def _draw(probs: np.ndarray, rng) -> int:
    cum = np.cumsum(probs)
    u = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, u, side="right")), len(probs) - 1)


def sample_child(
    table: ConditionalTable,
    parent_relation: str,
    parent_nuclearity: str,
    parent_pos: int,
    side: str,
    rng,
    boosts: Mapping[str, float] | None = None,
    leaf_ok: bool = True,
    internal_ok: bool = True,
):
    """Draw one child outcome; deterministic given the rng state."""
    probs = child_distribution(
        table, parent_relation, parent_nuclearity, parent_pos, side, boosts, leaf_ok, internal_ok
    )
    return OUTCOMES[_draw(probs, rng)]


def sample_tree(table: ConditionalTable, constraints: SamplerConstraints, rng=None) -> RstTree:
    """Sample a full validating tree breadth first under the constraints."""
    if rng is None:
        rng = np.random.default_rng(constraints.seed)
    target = constraints.target_edu_count
    boosts = constraints.relation_boosts
    max_depth = constraints.max_depth

    if target is not None:
        cap = subtree_capacity(0, max_depth)
        if target < 2:
            raise UnreachableTargetError(
                "a tree has at least one parent and therefore at least 2 EDUs"
            )
        if target > cap:
            raise UnreachableTargetError(
                f"target of {target} EDUs exceeds capacity {cap} at max_depth {max_depth}"
            )

    root_probs = table.root_probabilities()
    if boosts:
        adj = root_probs.copy()
        for i, (rel, _) in enumerate(OUTCOMES[1:]):
            factor = boosts.get(rel)
            if factor is not None:
                adj[i] *= factor
        root_probs = adj / adj.sum()
    root_labels = OUTCOMES[1:][_draw(root_probs, rng)]

    parents: dict[int, tuple[str, str]] = {0: root_labels}
    queue: deque[tuple[int, tuple[str, str], str]] = deque()
    for side, child in zip(SIDES, children_of(0)):
        queue.append((child, root_labels, side))

    remaining = target
    frontier_caps = 0
    if target is not None:
        frontier_caps = sum(subtree_capacity(c, max_depth) for c, _, _ in queue)

    while queue:
        pos, parent_labels, side = queue.popleft()
        can_expand = expandable(pos, max_depth)
        if target is None:
            leaf_ok, internal_ok = True, can_expand
        else:
            cap_here = subtree_capacity(pos, max_depth)
            frontier_caps -= cap_here
            pending = len(queue)
            # rest of the frontier must absorb remaining - (this slot's leaves)
            leaf_ok = pending <= remaining - 1 <= frontier_caps
            lo = max(2, remaining - frontier_caps)
            hi = min(cap_here, remaining - pending)
            internal_ok = can_expand and lo <= hi
        prel, pnuc = parent_labels
        outcome = sample_child(
            table, prel, pnuc, parent_of(pos), side, rng, boosts, leaf_ok, internal_ok
        )
        if outcome == LEAF:
            if remaining is not None:
                remaining -= 1
        else:
            parents[pos] = outcome
            for child_side, child in zip(SIDES, children_of(pos)):
                queue.append((child, outcome, child_side))
                if target is not None:
                    frontier_caps += subtree_capacity(child, max_depth)

    if target is not None and remaining != 0:
        raise RuntimeError(
            f"feasibility bookkeeping failed: {remaining} leaves unaccounted for"
        )
    return RstTree.from_parents(parents)


# ---------------------------------------------------------------------------
# table serialisation (versioned TSV)
# ---------------------------------------------------------------------------

def _format_outcome(outcome) -> str:
    return LEAF if outcome == LEAF else f"{outcome[0]}/{outcome[1]}"


def _parse_outcome(text: str):
    if text == LEAF:
        return LEAF
    rel, _, nuc = text.partition("/")
    outcome = (rel, nuc)
    if outcome not in OUTCOME_INDEX:
        raise ValueError(f"unknown outcome {text!r}")
    return outcome


def save_table(table: ConditionalTable, fp: IO[str]) -> None:
    """Write the fitted probabilities as versioned TSV."""
    fp.write(f"# {TABLE_FORMAT_VERSION}\n")
    fp.write(f"# alpha\t{table.alpha!r}\n")
    for outcome, p in zip(OUTCOMES[1:], table.root_probabilities()):
        fp.write(f"root\t{_format_outcome(outcome)}\t{float(p)!r}\n")
    for d in sorted(table.depth_totals):
        probs = table.depth_totals[d] if table.normalized else table._smooth(table.depth_totals[d])
        for outcome, p in zip(OUTCOMES, probs):
            fp.write(f"depth\t{d}\t{_format_outcome(outcome)}\t{float(p)!r}\n")
    for key in sorted(table.cells):
        rel, nuc, d, side = key
        probs = table.probabilities(rel, nuc, d, side)
        for outcome, p in zip(OUTCOMES, probs):
            fp.write(
                f"cell\t{rel}\t{nuc}\t{d}\t{side}\t{_format_outcome(outcome)}\t{float(p)!r}\n"
            )


def load_table(fp: IO[str]) -> ConditionalTable:
    """Read a table written by ``save_table``; queries reproduce it exactly."""
    alpha = 0.0
    cells: dict[tuple[str, str, int, str], np.ndarray] = {}
    depth_totals: dict[int, np.ndarray] = {}
    root = np.zeros(len(OUTCOMES) - 1, dtype=np.float64)
    version_seen = False
    for no, raw in enumerate(fp, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body == TABLE_FORMAT_VERSION:
                version_seen = True
            elif body.startswith("alpha\t"):
                alpha = float(body.split("\t", 1)[1])
            continue
        parts = line.split("\t")
        if parts[0] == "root" and len(parts) == 3:
            root[OUTCOME_INDEX[_parse_outcome(parts[1])] - 1] = float(parts[2])
        elif parts[0] == "depth" and len(parts) == 4:
            vec = depth_totals.setdefault(int(parts[1]), np.zeros(len(OUTCOMES)))
            vec[OUTCOME_INDEX[_parse_outcome(parts[2])]] = float(parts[3])
        elif parts[0] == "cell" and len(parts) == 7:
            key = (parts[1], parts[2], int(parts[3]), parts[4])
            vec = cells.setdefault(key, np.zeros(len(OUTCOMES)))
            vec[OUTCOME_INDEX[_parse_outcome(parts[5])]] = float(parts[6])
        else:
            raise ValueError(f"line {no}: unrecognised table row {line!r}")
    if not version_seen:
        raise ValueError(f"missing version header '# {TABLE_FORMAT_VERSION}'")
    return ConditionalTable(alpha, cells, depth_totals, root, normalized=True)
