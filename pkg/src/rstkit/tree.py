"""Positional binary discourse trees.

Trees follow the Rhetorical Structure Theory conventions: internal
(parent) nodes carry a relation and a nuclearity label describing the
link between their two children, leaves are elementary discourse units
(EDUs) that may carry text, and key phrases may be anchored at any node
position.  Positions use implicit-heap numbering: the root is 0 and the
children of node ``l`` sit at ``2*l + 1`` (left) and ``2*l + 2`` (right).

A tree is stored as the collection of its parent nodes plus the ordered
leaf list; with both children of every parent always present, the parent
collection alone determines the shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

RELATIONS = (
    "Attribution",
    "Background",
    "Cause",
    "Comparison",
    "Condition",
    "Contrast",
    "Elaboration",
    "Enablement",
    "Evaluation",
    "Explanation",
    "Joint",
    "Manner-Means",
    "Topic-Comment",
    "Summary",
    "Temporal",
    "Topic-Change",
    "Same-Unit",
    "Textual-Organization",
    "Null",
)

NUCLEARITIES = ("NN", "NS", "SN", "Null")

NULL_LABEL = "Null"

#: Fixed label -> id tables; the pad label always takes the highest id.
RELATION_INDEX = {label: i for i, label in enumerate(RELATIONS)}
NUCLEARITY_INDEX = {label: i for i, label in enumerate(NUCLEARITIES)}

#: Node positions live in [0, MAX_POSITIONS); paths fit in MAX_DEPTH steps.
MAX_POSITIONS = 4094
MAX_DEPTH = 12


class InvalidTreeError(ValueError):
    """Raised by operations whose precondition is a validating tree."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        lines = "; ".join(v.message for v in report.violations)
        super().__init__(f"tree does not validate: {lines}")


class TreeFormatError(ValueError):
    """Raised for malformed tree files."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# position arithmetic
# ---------------------------------------------------------------------------

def parent_of(pos: int) -> int:
    """Parent position of ``pos``; the root has none."""
    if pos <= 0:
        raise ValueError("root has no parent" if pos == 0 else f"negative position {pos}")
    return (pos - 1) // 2


def children_of(pos: int) -> tuple[int, int]:
    return 2 * pos + 1, 2 * pos + 2


def sibling_of(pos: int) -> int:
    if pos <= 0:
        raise ValueError("root has no sibling" if pos == 0 else f"negative position {pos}")
    return pos + 1 if pos % 2 == 1 else pos - 1


def is_left_child(pos: int) -> bool:
    if pos <= 0:
        raise ValueError("root is neither a left nor a right child")
    return pos % 2 == 1


def depth_of(pos: int) -> int:
    """Number of edges from the root; positions at depth d are 2^d-1 .. 2^(d+1)-2."""
    if pos < 0:
        raise ValueError(f"negative position {pos}")
    return (pos + 1).bit_length() - 1


def ancestors_of(pos: int) -> list[int]:
    """Strict ancestors from the immediate parent up to the root."""
    if pos < 0:
        raise ValueError(f"negative position {pos}")
    out = []
    while pos > 0:
        pos = (pos - 1) // 2
        out.append(pos)
    return out


def inorder_key(pos: int):
    """Sort key realising left-to-right (in-order) traversal order.

    The key is the root-to-node step sequence with left=0 / right=2 and a
    terminating 1, so a node sorts after its left subtree and before its
    right subtree.  Works for arbitrary positions without a tree.
    """
    steps = []
    while pos > 0:
        steps.append(0 if pos % 2 == 1 else 2)
        pos = (pos - 1) // 2
    steps.reverse()
    steps.append(1)
    return tuple(steps)


# ---------------------------------------------------------------------------
# the tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RstTree:
    """A positional binary discourse tree.

    ``parents`` maps parent positions to their (relation, nuclearity)
    labels.  ``edus`` lists the leaves in left-to-right order together
    with their (possibly empty) text.  ``keyphrases`` anchors phrases at
    node positions; several phrases may share a position.

    Construction never fails on structural problems; run ``validate`` to
    obtain violations as data, or ``ensure_valid`` to raise.
    """

    parents: dict[int, tuple[str, str]]
    edus: tuple[tuple[int, str], ...] = ()
    keyphrases: tuple[tuple[int, str], ...] = ()

    @classmethod
    def from_parents(
        cls,
        parents: Mapping[int, tuple[str, str]],
        edu_texts: Mapping[int, str] | None = None,
        keyphrases: Iterable[tuple[int, str]] = (),
    ) -> "RstTree":
        """Build a tree from its parent collection, deriving the leaf list."""
        parents = dict(parents)
        texts = dict(edu_texts or {})
        leaves = sorted(structural_leaves(parents), key=inorder_key)
        edus = tuple((pos, texts.get(pos, "")) for pos in leaves)
        return cls(parents=parents, edus=edus, keyphrases=tuple(keyphrases))

    @property
    def edu_count(self) -> int:
        return len(self.edus)

    @property
    def parent_count(self) -> int:
        return len(self.parents)

    def leaf_positions(self) -> list[int]:
        return [pos for pos, _ in self.edus]


def structural_leaves(parents: Mapping[int, tuple[str, str]]) -> set[int]:
    """Child slots of the parent collection that are not parents themselves."""
    out: set[int] = set()
    for p in parents:
        for c in children_of(p):
            if c not in parents:
                out.add(c)
    return out


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    pos: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def validate(tree: RstTree) -> ValidationReport:
    """Check every structural invariant; violations are data, not failures."""
    bad: list[Violation] = []

    def flag(code, pos, message):
        bad.append(Violation(code, pos, message))

    if not tree.parents:
        flag("missing-root", None, "tree has no parent nodes (a tree must have a root)")
        return ValidationReport(tuple(bad))
    if 0 not in tree.parents:
        flag("missing-root", 0, "position 0 is not a parent node")

    for pos, (rel, nuc) in sorted(tree.parents.items()):
        if not 0 <= pos < MAX_POSITIONS:
            flag("position-out-of-range", pos, f"parent position {pos} outside [0, {MAX_POSITIONS})")
            continue
        if rel not in RELATION_INDEX:
            flag("unknown-relation", pos, f"unknown relation {rel!r} at {pos}")
        elif rel == NULL_LABEL:
            flag("null-relation", pos, f"relation at {pos} must be classified, not the pad label")
        if nuc not in NUCLEARITY_INDEX:
            flag("unknown-nuclearity", pos, f"unknown nuclearity {nuc!r} at {pos}")
        elif nuc == NULL_LABEL:
            flag("null-nuclearity", pos, f"nuclearity at {pos} must contain a nucleus")
        if pos > 0 and parent_of(pos) not in tree.parents:
            flag("orphan-node", pos, f"orphan node: parent of {pos} is missing")
        for child in children_of(pos):
            if child >= MAX_POSITIONS and child not in tree.parents:
                flag("position-out-of-range", child, f"leaf slot {child} outside [0, {MAX_POSITIONS})")

    leaves = structural_leaves(tree.parents)
    edu_positions = [pos for pos, _ in tree.edus]
    seen: set[int] = set()
    for pos in edu_positions:
        if pos in seen:
            flag("duplicate-edu", pos, f"duplicate EDU record at {pos}")
        seen.add(pos)
        if pos in tree.parents:
            flag("edu-not-leaf", pos, f"position {pos} is both parent and leaf")
        elif pos not in leaves:
            flag("edu-not-leaf", pos, f"EDU at {pos} is not a leaf of the tree")
    for pos in sorted(leaves - seen, key=inorder_key):
        flag("missing-edu", pos, f"leaf {pos} has no EDU record")
    ordered = sorted(seen, key=inorder_key)
    dedup = list(dict.fromkeys(edu_positions))
    if dedup != ordered and not any(v.code in ("duplicate-edu", "edu-not-leaf", "missing-edu") for v in bad):
        flag("edu-order", None, "EDU list is not in left-to-right traversal order")

    known = set(tree.parents) | leaves
    for pos, phrase in tree.keyphrases:
        if pos not in known:
            flag("keyphrase-unknown-position", pos, f"keyphrase anchored at unknown position {pos}")

    return ValidationReport(tuple(bad))


def ensure_valid(tree: RstTree) -> RstTree:
    report = validate(tree)
    if not report.ok:
        raise InvalidTreeError(report)
    return tree


def leaves_in_order(tree: RstTree) -> list[int]:
    """Leaf positions sorted left to right; the first is the leftmost leaf."""
    ensure_valid(tree)
    return sorted(structural_leaves(tree.parents), key=inorder_key)


# ---------------------------------------------------------------------------
# tree file format
# ---------------------------------------------------------------------------
#
# UTF-8, tab separated, one record per line, '#' lines are comments:
#
#   node <TAB> <pos> <TAB> <relation> <TAB> <nuclearity>
#   edu  <TAB> <pos> <TAB> <text>          (text may be empty / contain tabs)
#   kp   <TAB> <pos> <TAB> <phrase>
#
# Records may appear in any order.  Serialisation emits nodes in ascending
# position, then EDUs in tree order, then keyphrases.

def parse_tree(source: str | Iterable[str]) -> RstTree:
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]

    parents: dict[int, tuple[str, str]] = {}
    edu_records: dict[int, str] = {}
    keyphrases: list[tuple[int, str]] = []

    for no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t", 3)
        kind = fields[0]
        if kind == "node":
            if len(fields) != 4:
                raise TreeFormatError("node record needs pos, relation, nuclearity", no)
            pos = _parse_pos(fields[1], no)
            rel, nuc = fields[2], fields[3]
            if rel not in RELATION_INDEX:
                raise TreeFormatError(f"unknown relation {rel!r}", no)
            if nuc not in NUCLEARITY_INDEX:
                raise TreeFormatError(f"unknown nuclearity {nuc!r}", no)
            if pos in parents:
                raise TreeFormatError(f"duplicate position {pos} in node records", no)
            parents[pos] = (rel, nuc)
        elif kind == "edu":
            parts = line.split("\t", 2)
            if len(parts) < 2 or not parts[1]:
                raise TreeFormatError("edu record needs a position", no)
            pos = _parse_pos(parts[1], no)
            if pos in edu_records:
                raise TreeFormatError(f"duplicate position {pos} in edu records", no)
            edu_records[pos] = parts[2] if len(parts) == 3 else ""
        elif kind == "kp":
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise TreeFormatError("kp record needs pos and phrase", no)
            keyphrases.append((_parse_pos(parts[1], no), parts[2]))
        else:
            raise TreeFormatError(f"unknown record type {kind!r}", no)

    # Leaves without an edu record get empty text; ordering is canonical.
    leaf_order = sorted(set(edu_records) | structural_leaves(parents), key=inorder_key)
    edus = tuple((pos, edu_records.get(pos, "")) for pos in leaf_order)
    return RstTree(parents=parents, edus=edus, keyphrases=tuple(keyphrases))


def _parse_pos(text: str, line_no: int) -> int:
    try:
        pos = int(text, 10)
    except ValueError:
        raise TreeFormatError(f"position {text!r} is not an integer", line_no) from None
    if not 0 <= pos < MAX_POSITIONS:
        raise TreeFormatError(f"position {pos} outside [0, {MAX_POSITIONS})", line_no)
    return pos


def serialize_tree(tree: RstTree) -> str:
    out = []
    for pos in sorted(tree.parents):
        rel, nuc = tree.parents[pos]
        out.append(f"node\t{pos}\t{rel}\t{nuc}")
    for pos, text in tree.edus:
        _reject_newlines(text, "EDU text")
        out.append(f"edu\t{pos}\t{text}")
    for pos, phrase in tree.keyphrases:
        _reject_newlines(phrase, "keyphrase")
        out.append(f"kp\t{pos}\t{phrase}")
    return "\n".join(out) + "\n"


def _reject_newlines(text: str, what: str) -> None:
    if "\n" in text or "\r" in text:
        raise TreeFormatError(f"{what} may not contain newlines")
