"""TextRank keyphrase extraction.

A co-occurrence graph is built over the lemmas of content words (ADJ,
NOUN, PROPN, VERB); two lemmas are linked with weight 1 when they occur
within a window of the filtered token sequence.  Node scores follow the
damped centrality update

    S(V_i) = (1 - d) + d * sum_{j in N(i)} w_ji * S(V_j) / sum_k w_jk

iterated from 1.0 until the largest per-node change drops below the
tolerance.  A candidate phrase with L words scores the sum of its member
word scores divided by (L + 1), which favours longer phrases; candidates
whose full lemma sequence duplicates a higher-ranked one are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import jit_kernel

#: Part-of-speech tags whose words enter the graph.
CONTENT_TAGS = frozenset({"ADJ", "NOUN", "PROPN", "VERB"})

#: Tags that may form fallback candidate phrases.
PHRASE_TAGS = frozenset({"ADJ", "NOUN", "PROPN"})

DEFAULT_WINDOW = 4
DEFAULT_DAMPING = 0.85
DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITER = 100


class PageRankDivergenceError(RuntimeError):
    """Iteration hit the limit; carries the last iterate."""

    def __init__(self, scores: dict, delta: float, iterations: int):
        self.scores = scores
        self.delta = delta
        self.iterations = iterations
        super().__init__(
            f"no convergence after {iterations} iterations (last change {delta:.3g})"
        )


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    lemma: str
    pos_tag: str
    index: int  # word offset within the document, strictly increasing


@dataclass(frozen=True)
class WordGraph:
    """Symmetric binary co-occurrence graph over content lemmas."""

    lemmas: tuple[str, ...]  # node id -> lemma, sorted
    weights: np.ndarray  # (n, n) float64, zero diagonal
    window: int

    @property
    def node_index(self) -> dict[str, int]:
        return {lemma: i for i, lemma in enumerate(self.lemmas)}


def build_graph(tokens: list[TaggedToken], window: int = DEFAULT_WINDOW) -> WordGraph:
    """Link lemmas co-occurring within ``window`` filtered-sequence steps."""
    if window < 1:
        raise ValueError("window must be >= 1")
    _check_offsets(tokens)
    content = [tok for tok in tokens if tok.pos_tag in CONTENT_TAGS]
    lemmas = tuple(sorted({tok.lemma for tok in content}))
    index = {lemma: i for i, lemma in enumerate(lemmas)}
    weights = np.zeros((len(lemmas), len(lemmas)), dtype=np.float64)
    for i, tok in enumerate(content):
        a = index[tok.lemma]
        for j in range(i + 1, min(i + window, len(content))):
            b = index[content[j].lemma]
            if a != b:
                weights[a, b] = 1.0
                weights[b, a] = 1.0
    return WordGraph(lemmas=lemmas, weights=weights, window=window)


def _check_offsets(tokens):
    last = None
    for tok in tokens:
        if last is not None and tok.index <= last:
            raise ValueError("token offsets must be strictly increasing")
        last = tok.index


# ---------------------------------------------------------------------------
# score iteration kernels (one update step)
# ---------------------------------------------------------------------------

def _rank_step_loops(weights, out_sums, scores, damping, new_scores):
    n = scores.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            w = weights[j, i]
            if w != 0.0 and out_sums[j] > 0.0:
                acc += w * scores[j] / out_sums[j]
        new_scores[i] = (1.0 - damping) + damping * acc
    return new_scores


_rank_step_kernel = jit_kernel(_rank_step_loops)


def _rank_step_numpy(weights, out_sums, scores, damping, new_scores):
    safe = np.where(out_sums > 0.0, out_sums, 1.0)
    contrib = weights.T @ (scores / safe * (out_sums > 0.0))
    new_scores[:] = (1.0 - damping) + damping * contrib
    return new_scores


def _iterate_scores(weights, damping, tol, max_iter):
    n = weights.shape[0]
    out_sums = weights.sum(axis=1)
    scores = np.ones(n, dtype=np.float64)
    step = _rank_step_kernel if _rank_step_kernel is not None else _rank_step_numpy
    deltas: list[float] = []
    for _ in range(max_iter):
        new_scores = step(weights, out_sums, scores, damping, np.empty_like(scores))
        delta = float(np.abs(new_scores - scores).max())
        deltas.append(delta)
        scores = new_scores
        if delta < tol:
            return scores, deltas
    return None, (scores, deltas)


def pagerank(
    graph: WordGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> dict[str, float]:
    """Converged lemma scores; raises PageRankDivergenceError at the limit."""
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if not graph.lemmas:
        return {}
    scores, info = _iterate_scores(graph.weights, damping, tol, max_iter)
    if scores is None:
        last_scores, deltas = info
        raise PageRankDivergenceError(
            dict(zip(graph.lemmas, last_scores.tolist())), deltas[-1], max_iter
        )
    return dict(zip(graph.lemmas, scores.tolist()))


# ---------------------------------------------------------------------------
# keyphrase candidates and scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KeyphraseCandidate:
    phrase: str
    span: tuple[int, int]  # half-open token range
    length: int
    score: float
    lemmas: tuple[str, ...]


def default_candidates(
    tokens: list[TaggedToken], sentence_bounds: list[int] | None = None
) -> list[tuple[int, int]]:
    """Maximal runs of ADJ/NOUN/PROPN tokens, not crossing sentence bounds."""
    bounds = set(sentence_bounds or ())
    spans = []
    start = None
    for i, tok in enumerate(tokens):
        if i in bounds and start is not None:
            spans.append((start, i))
            start = None
        if tok.pos_tag in PHRASE_TAGS:
            if start is None:
                start = i
        elif start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(tokens)))
    return spans


def extract_keyphrases(
    tokens: list[TaggedToken],
    candidates: list[tuple[int, int]] | None = None,
    window: int = DEFAULT_WINDOW,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    top_m: int = 10,
    sentence_bounds: list[int] | None = None,
) -> list[KeyphraseCandidate]:
    """Score, rank, deduplicate and truncate candidate spans."""
    if candidates is None:
        candidates = default_candidates(tokens, sentence_bounds)
    for start, end in candidates:
        if not (0 <= start < end <= len(tokens)):
            raise ValueError(f"candidate span [{start}, {end}) outside the token list")
    scores = pagerank(build_graph(tokens, window), damping, tol, max_iter)

    ranked = []
    for start, end in candidates:
        members = tokens[start:end]
        total = sum(scores.get(tok.lemma, 0.0) for tok in members)
        ranked.append(
            KeyphraseCandidate(
                phrase=" ".join(tok.surface for tok in members),
                span=(start, end),
                length=len(members),
                score=total / (len(members) + 1),
                lemmas=tuple(tok.lemma for tok in members),
            )
        )
    ranked.sort(key=lambda c: (-c.score, c.span))
    out = []
    seen: set[tuple[str, ...]] = set()
    for cand in ranked:
        if cand.lemmas in seen:
            continue
        seen.add(cand.lemmas)
        out.append(cand)
        if len(out) == top_m:
            break
    return out


# ---------------------------------------------------------------------------
# tagged-token file format and the demo fallback tagger
# ---------------------------------------------------------------------------
#
#   surface <TAB> lemma <TAB> pos      one token per line
#   (blank line)                       sentence break
#   span <TAB> start <TAB> end         optional candidate trailer records

def read_tagged_file(source: str):
    """Returns (tokens, candidate spans or None, sentence boundary indices)."""
    tokens: list[TaggedToken] = []
    spans: list[tuple[int, int]] = []
    bounds: list[int] = []
    for no, raw in enumerate(source.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if tokens and (not bounds or bounds[-1] != len(tokens)):
                bounds.append(len(tokens))
            continue
        if line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if parts[0] == "span":
            if len(parts) != 3:
                raise ValueError(f"line {no}: span record needs start and end")
            spans.append((int(parts[1]), int(parts[2])))
        elif len(parts) == 3:
            tokens.append(TaggedToken(parts[0], parts[1], parts[2], index=len(tokens)))
        else:
            raise ValueError(f"line {no}: expected 'surface<TAB>lemma<TAB>pos'")
    return tokens, (spans or None), bounds


_CLOSED_CLASS = {
    "the": "DET", "a": "DET", "an": "DET", "this": "DET", "that": "DET",
    "these": "DET", "those": "DET", "of": "ADP", "in": "ADP", "on": "ADP",
    "at": "ADP", "by": "ADP", "for": "ADP", "with": "ADP", "to": "ADP",
    "from": "ADP", "and": "CCONJ", "or": "CCONJ", "but": "CCONJ",
    "if": "SCONJ", "because": "SCONJ", "while": "SCONJ", "when": "SCONJ",
    "i": "PRON", "you": "PRON", "he": "PRON", "she": "PRON", "it": "PRON",
    "we": "PRON", "they": "PRON", "is": "AUX", "are": "AUX", "was": "AUX",
    "were": "AUX", "be": "AUX", "been": "AUX", "not": "PART",
}

_ADJ_SUFFIXES = ("ous", "ful", "able", "ible", "ive", "ical", "less")
_VERB_SUFFIXES = ("ing", "ize", "ise", "ified")


def tag_words(words: list[str]) -> list[TaggedToken]:
    """Tiny lexicon-and-suffix tagger for demos; not a real POS model."""
    out = []
    for i, word in enumerate(words):
        lowered = word.lower()
        if not any(c.isalnum() for c in word):
            tag = "PUNCT"
        elif lowered in _CLOSED_CLASS:
            tag = _CLOSED_CLASS[lowered]
        elif lowered.endswith("ly"):
            tag = "ADV"
        elif lowered.endswith(_ADJ_SUFFIXES):
            tag = "ADJ"
        elif lowered.endswith(_VERB_SUFFIXES) or (lowered.endswith("ed") and len(lowered) > 4):
            tag = "VERB"
        elif word[:1].isupper() and i > 0:
            tag = "PROPN"
        else:
            tag = "NOUN"
        lemma = lowered[:-1] if tag == "NOUN" and lowered.endswith("s") and len(lowered) > 3 else lowered
        out.append(TaggedToken(word, lemma, tag, index=i))
    return out
