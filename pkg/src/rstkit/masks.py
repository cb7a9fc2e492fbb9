"""Structure-aware attention mask construction.

The generation context is laid out as a prefix ahead of the text tokens:
tree slots (one per encoded parent node), keyphrase token spans, and
separator columns announcing each block.  A text token assigned to leaf
``l`` may attend a tree slot anchored at node ``p`` iff ``p`` is an
ancestor of ``l``, and a keyphrase span anchored at ``q`` iff ``q`` is
``l`` itself or an ancestor of ``l``.  Separator columns are always
attendable; text-to-text attention is plain causal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import jit_kernel
from .segmentation import TokenAssignment
from .tree import MAX_DEPTH, RstTree, ensure_valid, structural_leaves

__all__ = [
    "ContextLayout",
    "AttentionMaskSet",
    "LayoutError",
    "context_mask",
    "text_mask",
    "full_mask",
    "IncrementalMasker",
]


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class ContextLayout:
    """Column layout of the context prefix.

    ``rst_slots`` maps context columns to encoded parent nodes and
    ``kp_spans`` maps half-open column ranges to keyphrase anchor nodes.
    Columns in [0, text_start) claimed by neither are separator columns.
    """

    rst_slots: tuple[tuple[int, int], ...]
    kp_spans: tuple[tuple[tuple[int, int], int], ...]
    text_start: int

    def __post_init__(self):
        claimed: set[int] = set()
        for col, _ in self.rst_slots:
            if not 0 <= col < self.text_start:
                raise LayoutError(f"slot column {col} outside [0, {self.text_start})")
            if col in claimed:
                raise LayoutError(f"column {col} claimed twice")
            claimed.add(col)
        for (start, end), _ in self.kp_spans:
            if not (0 <= start <= end <= self.text_start):
                raise LayoutError(f"span [{start}, {end}) outside [0, {self.text_start})")
            for col in range(start, end):
                if col in claimed:
                    raise LayoutError(f"column {col} claimed twice")
                claimed.add(col)

    @classmethod
    def from_tree(cls, tree: RstTree) -> "ContextLayout":
        """Canonical layout: one tree separator, slots in ascending position,
        then one separator plus one column per word for each keyphrase."""
        col = 1  # column 0 announces the tree block
        slots = []
        for pos in sorted(tree.parents):
            slots.append((col, pos))
            col += 1
        spans = []
        for pos, phrase in tree.keyphrases:
            col += 1  # keyphrase separator
            width = len(phrase.split())
            spans.append(((col, col + width), pos))
            col += width
        return cls(rst_slots=tuple(slots), kp_spans=tuple(spans), text_start=col)


@dataclass(frozen=True)
class AttentionMaskSet:
    """Binary attendability matrix; rows are text tokens."""

    matrix: np.ndarray  # uint8, (n_text, n_context + n_text_columns)
    n_context: int = 0

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]


# ---------------------------------------------------------------------------
# kernels: fill the context columns for each token's assigned leaf
# ---------------------------------------------------------------------------

def _context_fill_loops(leaves, slot_cols, slot_nodes, kp_starts, kp_ends, kp_nodes, out):
    for t in range(leaves.shape[0]):
        leaf = leaves[t]
        for s in range(slot_nodes.shape[0]):
            node = slot_nodes[s]
            p = leaf
            hit = False
            while p > 0:
                p = (p - 1) // 2
                if p == node:
                    hit = True
                    break
                if p < node:
                    break
            out[t, slot_cols[s]] = 1 if hit else 0
        for kix in range(kp_nodes.shape[0]):
            node = kp_nodes[kix]
            hit = node == leaf
            p = leaf
            while not hit and p > 0:
                p = (p - 1) // 2
                if p == node:
                    hit = True
                    break
                if p < node:
                    break
            bit = 1 if hit else 0
            for c in range(kp_starts[kix], kp_ends[kix]):
                out[t, c] = bit
    return out


_context_fill_kernel = jit_kernel(_context_fill_loops)


def _ancestor_table(leaves: np.ndarray) -> np.ndarray:
    """(T, MAX_DEPTH + 1) table: column 0 is the leaf, then ancestors, -1 pad."""
    table = np.full((leaves.shape[0], MAX_DEPTH + 1), -1, dtype=np.int64)
    table[:, 0] = leaves
    for i in range(MAX_DEPTH):
        prev = table[:, i]
        table[:, i + 1] = np.where(prev > 0, (prev - 1) // 2, -1)
    return table


def _context_fill_numpy(leaves, slot_cols, slot_nodes, kp_starts, kp_ends, kp_nodes, out):
    table = _ancestor_table(leaves)
    if slot_nodes.shape[0]:
        bits = (table[:, 1:, None] == slot_nodes[None, None, :]).any(axis=1)
        out[:, slot_cols] = bits.astype(np.uint8)
    if kp_nodes.shape[0]:
        bits = (table[:, :, None] == kp_nodes[None, None, :]).any(axis=1).astype(np.uint8)
        for kix in range(kp_nodes.shape[0]):
            out[:, kp_starts[kix] : kp_ends[kix]] = bits[:, kix : kix + 1]
    return out


def _fill_context(leaves, layout: ContextLayout) -> np.ndarray:
    out = np.ones((leaves.shape[0], layout.text_start), dtype=np.uint8)
    slot_cols = np.array([c for c, _ in layout.rst_slots], dtype=np.int64)
    slot_nodes = np.array([n for _, n in layout.rst_slots], dtype=np.int64)
    kp_starts = np.array([s for (s, _), _ in layout.kp_spans], dtype=np.int64)
    kp_ends = np.array([e for (_, e), _ in layout.kp_spans], dtype=np.int64)
    kp_nodes = np.array([n for _, n in layout.kp_spans], dtype=np.int64)
    if leaves.shape[0] == 0 or layout.text_start == 0:
        return out
    if _context_fill_kernel is not None:
        return _context_fill_kernel(
            leaves, slot_cols, slot_nodes, kp_starts, kp_ends, kp_nodes, out
        )
    return _context_fill_numpy(
        leaves, slot_cols, slot_nodes, kp_starts, kp_ends, kp_nodes, out
    )


# ---------------------------------------------------------------------------
# public mask builders
# ---------------------------------------------------------------------------

def _checked_leaves(tree: RstTree, layout: ContextLayout, assignment: TokenAssignment):
    ensure_valid(tree)
    leaves = structural_leaves(tree.parents)
    for _, node in layout.rst_slots:
        if node not in tree.parents:
            raise LayoutError(f"slot anchored at {node}, which is not a parent of the tree")
    known = set(tree.parents) | leaves
    for _, node in layout.kp_spans:
        if node not in known:
            raise LayoutError(f"keyphrase span anchored at unknown position {node}")
    for token_index, pos in assignment.pairs:
        if pos not in leaves:
            raise LayoutError(f"token {token_index} assigned to {pos}, which is not a leaf")
    return np.array([pos for _, pos in assignment.pairs], dtype=np.int64)


def context_mask(
    tree: RstTree, layout: ContextLayout, assignment: TokenAssignment
) -> AttentionMaskSet:
    """Attendability of the context columns for each assigned text token."""
    leaves = _checked_leaves(tree, layout, assignment)
    matrix = _fill_context(leaves, layout)
    return AttentionMaskSet(matrix=matrix, n_context=layout.text_start)


def text_mask(assignment: TokenAssignment) -> AttentionMaskSet:
    """Causal lower-triangular mask over the text tokens themselves."""
    n = len(assignment)
    return AttentionMaskSet(matrix=np.tril(np.ones((n, n), dtype=np.uint8)), n_context=0)


def full_mask(
    tree: RstTree, layout: ContextLayout, assignment: TokenAssignment
) -> AttentionMaskSet:
    """Context and causal text columns side by side."""
    ctx = context_mask(tree, layout, assignment)
    txt = text_mask(assignment)
    return AttentionMaskSet(
        matrix=np.hstack([ctx.matrix, txt.matrix]), n_context=layout.text_start
    )


class IncrementalMasker:
    """Grow the mask one text token at a time without recomputing prior rows.

    Context rows are cached per leaf, since all tokens assigned to one
    leaf share their context attendability.
    """

    def __init__(self, tree: RstTree, layout: ContextLayout):
        ensure_valid(tree)
        self.tree = tree
        self.layout = layout
        self._leaves = structural_leaves(tree.parents)
        self._row_cache: dict[int, np.ndarray] = {}
        self._rows: list[np.ndarray] = []

    def add_token(self, leaf_pos: int) -> np.ndarray:
        """Append the row for one more token assigned to ``leaf_pos``."""
        if leaf_pos not in self._leaves:
            raise LayoutError(f"{leaf_pos} is not a leaf of the tree")
        ctx = self._row_cache.get(leaf_pos)
        if ctx is None:
            arr = np.array([leaf_pos], dtype=np.int64)
            ctx = self._row_cache[leaf_pos] = _fill_context(arr, self.layout)[0]
        n = len(self._rows)
        row = np.empty(self.layout.text_start + n + 1, dtype=np.uint8)
        row[: self.layout.text_start] = ctx
        row[self.layout.text_start :] = 1  # causal: sees all prior text + itself
        self._rows.append(row)
        return row

    def mask_set(self) -> AttentionMaskSet:
        n = len(self._rows)
        width = self.layout.text_start + n
        matrix = np.zeros((n, width), dtype=np.uint8)
        for i, row in enumerate(self._rows):
            matrix[i, : row.shape[0]] = row
        return AttentionMaskSet(matrix=matrix, n_context=self.layout.text_start)
