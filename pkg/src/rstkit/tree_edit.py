"""Tree edit distance between positional discourse trees.

Trees are compared as collections of labelled parent positions.  The
operation costs are fixed: relabelling a node's relation or nuclearity
costs 1 each, moving a node to its sibling position costs 1, and deleting
or inserting a node costs 3.  The distance is normalised by three times
the reference tree's parent count (the cost of building it), so values
above 1 are possible.

Three variants grade the label sensitivity: ``simple`` charges structural
operations only, ``complex`` adds nuclearity relabels, and ``complete``
adds relation relabels on top.

Because a move may only target the sibling slot, all matching decisions
decompose over sibling pairs {2k+1, 2k+2}: a node can stay in place, move
across its pair, or be deleted, and two nodes can never trade places in
one pair (the slot being moved into must be free when the move applies).
The matcher enumerates each pair's assignments exhaustively and is
therefore globally minimal; on small trees this is verified against a
script-space search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .tree import RstTree, children_of, ensure_valid, sibling_of, structural_leaves

VARIANTS = ("simple", "complex", "complete")

OP_COSTS = {
    "relabel-relation": 1,
    "relabel-nuclearity": 1,
    "sibling-move": 1,
    "delete": 3,
    "insert": 3,
}


class InapplicableOpError(ValueError):
    pass


@dataclass(frozen=True)
class EditOp:
    """One edit; relabels and inserts carry the labels they establish."""

    kind: str
    pos: int
    relation: str | None = None
    nuclearity: str | None = None

    def __post_init__(self):
        if self.kind not in OP_COSTS:
            raise ValueError(f"unknown edit kind {self.kind!r}")

    @property
    def cost(self) -> int:
        return OP_COSTS[self.kind]


@dataclass(frozen=True)
class TedReport:
    script: tuple[EditOp, ...]
    raw_cost: int
    normalizer: int
    normalized: float
    variant: str


def _label_cost(ref_labels, hyp_labels, variant: str) -> int:
    cost = 0
    if variant in ("complex", "complete") and ref_labels[1] != hyp_labels[1]:
        cost += 1
    if variant == "complete" and ref_labels[0] != hyp_labels[0]:
        cost += 1
    return cost


def _relabel_ops(pos: int, ref_labels, hyp_labels, variant: str) -> list[EditOp]:
    ops = []
    if variant in ("complex", "complete") and ref_labels[1] != hyp_labels[1]:
        ops.append(EditOp("relabel-nuclearity", pos, nuclearity=hyp_labels[1]))
    if variant == "complete" and ref_labels[0] != hyp_labels[0]:
        ops.append(EditOp("relabel-relation", pos, relation=hyp_labels[0]))
    return ops


def _pair_assignments(ref_here: list[int], hyp_here: list[int]):
    """All swap-free source->target assignments within one sibling pair."""
    yield {}
    if len(ref_here) == 1:
        (a,) = ref_here
        for tgt in hyp_here:
            yield {a: tgt}
    elif len(ref_here) == 2:
        a, b = ref_here
        for tgt in hyp_here:
            yield {a: tgt}
            yield {b: tgt}
        if len(hyp_here) == 2:
            x, y = hyp_here
            for fa, fb in ((x, y), (y, x)):
                if fa != fb and not (fa == sibling_of(a) and fb == sibling_of(b)):
                    yield {a: fa, b: fb}


def ted_parent_maps(
    reference: Mapping[int, tuple[str, str]],
    hypothesis: Mapping[int, tuple[str, str]],
    variant: str = "complete",
) -> TedReport:
    """Minimal edit script between two labelled parent-position collections."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not reference:
        raise ValueError("reference has no parent nodes; the normaliser is undefined")

    # Group every occupied position into its sibling pair; the root is a
    # degenerate pair of its own since it has no sibling.
    def pair_id(pos: int) -> int:
        return 0 if pos == 0 else (pos + 1) // 2 * 2 - 1

    pair_members: dict[int, set[int]] = {}
    for pos in list(reference) + list(hypothesis):
        pair_members.setdefault(pair_id(pos), set()).add(pos)

    matches: list[tuple[int, int]] = []  # (ref position, hyp position)
    deletes: list[int] = []
    inserts: list[int] = []
    raw = 0

    for pid in sorted(pair_members):
        members = sorted(pair_members[pid])
        ref_here = [p for p in members if p in reference]
        hyp_here = [p for p in members if p in hypothesis]
        best_cost = None
        best = None
        for assign in _pair_assignments(ref_here, hyp_here):
            cost = 0
            for src, tgt in assign.items():
                cost += (src != tgt) + _label_cost(reference[src], hypothesis[tgt], variant)
            cost += 3 * (len(ref_here) - len(assign))  # unmatched reference: delete
            cost += 3 * (len(hyp_here) - len(assign))  # uncovered hypothesis: insert
            if best_cost is None or cost < best_cost:
                best_cost, best = cost, assign
        raw += best_cost
        covered = set(best.values())
        matches.extend(sorted(best.items()))
        deletes.extend(p for p in ref_here if p not in best)
        inserts.extend(p for p in hyp_here if p not in covered)

    script: list[EditOp] = []
    for pos in sorted(deletes, reverse=True):
        script.append(EditOp("delete", pos))
    for src, tgt in matches:
        if src != tgt:
            script.append(EditOp("sibling-move", src))
    for pos in sorted(inserts):
        rel, nuc = hypothesis[pos]
        script.append(EditOp("insert", pos, relation=rel, nuclearity=nuc))
    for src, tgt in matches:
        script.extend(_relabel_ops(tgt, reference[src], hypothesis[tgt], variant))

    normalizer = 3 * len(reference)
    return TedReport(
        script=tuple(script),
        raw_cost=raw,
        normalizer=normalizer,
        normalized=raw / normalizer,
        variant=variant,
    )


def ted(
    reference: RstTree, hypothesis: RstTree, variant: str = "complete", check: bool = True
) -> TedReport:
    """Edit distance between two validating trees (see module docstring)."""
    if check:
        ensure_valid(reference)
        ensure_valid(hypothesis)
    return ted_parent_maps(reference.parents, hypothesis.parents, variant)


def apply_script(tree: RstTree, script: Iterable[EditOp], check: bool = True) -> RstTree:
    """Apply an edit script to the parent collection of ``tree``.

    Deletion requires a childless node (neither child slot is a parent);
    a move requires a free sibling slot; an insert requires a free slot
    whose own parent exists.  Leaf texts survive where the position stays
    a leaf, and keyphrases survive where their anchor still exists.
    """
    if check:
        ensure_valid(tree)
    parents = dict(tree.parents)
    for op in script:
        if op.kind == "delete":
            if op.pos not in parents:
                raise InapplicableOpError(f"delete at {op.pos}: no node there")
            if any(c in parents for c in children_of(op.pos)):
                raise InapplicableOpError(f"delete at {op.pos}: node still has children")
            del parents[op.pos]
        elif op.kind == "sibling-move":
            if op.pos not in parents:
                raise InapplicableOpError(f"move at {op.pos}: no node there")
            if op.pos == 0:
                raise InapplicableOpError("move at 0: the root has no sibling")
            target = sibling_of(op.pos)
            if target in parents:
                raise InapplicableOpError(f"move at {op.pos}: sibling slot {target} is occupied")
            parents[target] = parents.pop(op.pos)
        elif op.kind == "insert":
            if op.pos in parents:
                raise InapplicableOpError(f"insert at {op.pos}: slot is occupied")
            if op.pos != 0 and (op.pos - 1) // 2 not in parents:
                raise InapplicableOpError(f"insert at {op.pos}: parent slot is empty")
            parents[op.pos] = (op.relation or "Null", op.nuclearity or "Null")
        elif op.kind == "relabel-relation":
            if op.pos not in parents:
                raise InapplicableOpError(f"relabel at {op.pos}: no node there")
            parents[op.pos] = (op.relation, parents[op.pos][1])
        elif op.kind == "relabel-nuclearity":
            if op.pos not in parents:
                raise InapplicableOpError(f"relabel at {op.pos}: no node there")
            parents[op.pos] = (parents[op.pos][0], op.nuclearity)
        else:
            raise InapplicableOpError(f"unknown edit kind {op.kind!r}")

    leaves = structural_leaves(parents)
    texts = {pos: text for pos, text in tree.edus if pos in leaves}
    known = set(parents) | leaves
    kps = tuple((pos, phrase) for pos, phrase in tree.keyphrases if pos in known)
    return RstTree.from_parents(parents, texts, kps)
