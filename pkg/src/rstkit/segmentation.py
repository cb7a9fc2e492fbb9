"""EDU boundary heuristics and the leaf-advancement cursor.

Token streams are mapped onto a tree's leaves left to right.  The cursor
starts at the leftmost leaf; each observed token is assigned to the
current leaf, and when a boundary rule fires the cursor moves to the next
leaf starting with the following token.

Boundary rules (deterministic, token-level):

* R1: sentence-final punctuation (. ! ?) ends the EDU.
* R2: a comma ends the EDU if the EDU opened with a subordinating or
  discourse marker, or if the token after the comma is a coordinating
  conjunction (in which case the conjunction opens the next EDU).
* R3: semicolons and colons always end the EDU.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .tree import RstTree, leaves_in_order

SENTENCE_FINAL = frozenset({".", "!", "?"})
HARD_BREAKS = frozenset({";", ":"})

#: Markers that open a subordinate clause; a later comma closes the EDU.
SUBORDINATORS = frozenset(
    "if because although while since when after before unless whereas".split()
)

#: Conjunctions that open a coordinate clause directly after a comma.
COORDINATORS = frozenset("and but or nor so yet".split())


class CursorFinishedError(RuntimeError):
    pass


def load_marker_lexicon(fp: IO[str]) -> frozenset[str]:
    """One marker per line, lowercased; blank lines and # comments ignored."""
    words = set()
    for line in fp:
        word = line.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)


class EduCursor:
    """Single-owner state machine advancing through a tree's leaves.

    With ``clamp_to_last`` the cursor never finishes: boundary fires at
    the final leaf are ignored, which is the batch-assignment overflow
    policy.  Without it, advancing past the final leaf finishes the
    cursor and further tokens are an error.
    """

    def __init__(
        self,
        tree: RstTree,
        subordinators: frozenset[str] = SUBORDINATORS,
        coordinators: frozenset[str] = COORDINATORS,
        clamp_to_last: bool = False,
    ):
        self.tree = tree
        self.leaf_sequence = leaves_in_order(tree)
        self.current_index = 0
        self.finished = False
        self._subordinators = subordinators
        self._coordinators = coordinators
        self._clamp = clamp_to_last
        self._edu_token_count = 0
        self._opened_with_marker = False
        self._last_was_plain_comma = False

    @property
    def current_leaf(self) -> int:
        if self.finished:
            raise CursorFinishedError("cursor advanced past the final leaf")
        return self.leaf_sequence[self.current_index]

    def _advance(self, allow_finish: bool) -> None:
        if self.current_index + 1 < len(self.leaf_sequence):
            self.current_index += 1
            self._edu_token_count = 0
            self._opened_with_marker = False
        elif allow_finish and not self._clamp:
            self.finished = True

    def observe_token(self, token: str) -> tuple[int, bool]:
        """Assign ``token`` to the current leaf; returns (leaf, boundary_fired)."""
        if self.finished:
            raise CursorFinishedError("cursor advanced past the final leaf")
        lowered = token.lower()
        # R2 lookahead half: a coordinating conjunction right after a plain
        # comma starts the next EDU, so the boundary lands on the comma.
        if self._last_was_plain_comma and lowered in self._coordinators:
            self._advance(allow_finish=False)
        self._last_was_plain_comma = False

        leaf = self.leaf_sequence[self.current_index]
        if self._edu_token_count == 0:
            self._opened_with_marker = lowered in self._subordinators
        self._edu_token_count += 1

        fired = (
            token in SENTENCE_FINAL
            or token in HARD_BREAKS
            or (token == "," and self._opened_with_marker)
        )
        if fired:
            self._advance(allow_finish=True)
        else:
            self._last_was_plain_comma = token == ","
        return leaf, fired


def new_cursor(tree: RstTree) -> EduCursor:
    """Cursor positioned at the leftmost leaf of a validating tree."""
    return EduCursor(tree)


@dataclass(frozen=True)
class TokenAssignment:
    """Per-token leaf assignment; pairs are (token_index, node_pos)."""

    pairs: tuple[tuple[int, int], ...]
    unused_leaves: tuple[int, ...] = ()

    def leaves(self) -> list[int]:
        return [pos for _, pos in self.pairs]

    def __len__(self) -> int:
        return len(self.pairs)


def assign_tokens(
    tree: RstTree,
    tokens: Sequence[str],
    subordinators: frozenset[str] = SUBORDINATORS,
    coordinators: frozenset[str] = COORDINATORS,
) -> TokenAssignment:
    """Batch-assign a token stream; trailing tokens stay on the final leaf."""
    cursor = EduCursor(tree, subordinators, coordinators, clamp_to_last=True)
    pairs = tuple(
        (i, cursor.observe_token(token)[0]) for i, token in enumerate(tokens)
    )
    used = {pos for _, pos in pairs}
    unused = tuple(pos for pos in cursor.leaf_sequence if pos not in used)
    return TokenAssignment(pairs=pairs, unused_leaves=unused)


# ---------------------------------------------------------------------------
# assignment file format: token_index <TAB> node_pos, one pair per line
# ---------------------------------------------------------------------------

def write_assignment(assignment: TokenAssignment, fp: IO[str]) -> None:
    for token_index, pos in assignment.pairs:
        fp.write(f"{token_index}\t{pos}\n")


def read_assignment(source: str | Iterable[str]) -> TokenAssignment:
    lines = source.splitlines() if isinstance(source, str) else source
    pairs = []
    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            idx_text, pos_text = line.split("\t")
            pairs.append((int(idx_text), int(pos_text)))
        except ValueError:
            raise ValueError(f"line {no}: malformed assignment row {line!r}") from None
    return TokenAssignment(pairs=tuple(pairs))
