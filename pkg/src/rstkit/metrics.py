"""Structural and textual evaluation metrics.

Position recall asks, per relation, how many reference parent nodes
reappear in the hypothesis tree at the same position with the same
relation.  The text metrics operate on whitespace-tokenised corpora:
distinct-n (type/token ratio over n-grams), multiset Jaccard similarity
of n-gram frequency profiles (geometric mean over n), and corpus-level
n-gram precision with a brevity penalty.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .segmentation import SENTENCE_FINAL
from .tree import RstTree, ensure_valid

#: EDU-count bands used when bucketing recall over a corpus of tree pairs.
RECALL_BUCKETS = (4, 8, 12, 16, 20)

#: EDU-count range accepted by length_stats.
LENGTH_EDU_RANGE = (2, 14)


@dataclass(frozen=True)
class RecallEntry:
    matched: int
    reference: int

    @property
    def recall(self) -> float:
        return self.matched / self.reference


@dataclass(frozen=True)
class RecallTable:
    """Per-relation position recall; relations absent from the reference
    are absent from the table rather than scored zero."""

    entries: dict[str, RecallEntry]
    edu_count: int

    def recall(self, relation: str) -> float:
        return self.entries[relation].recall


def relation_recall(reference: RstTree, hypothesis: RstTree) -> RecallTable:
    matched: Counter[str] = Counter()
    totals: Counter[str] = Counter()
    ensure_valid(reference)
    ensure_valid(hypothesis)
    for pos, (rel, _) in reference.parents.items():
        totals[rel] += 1
        hyp = hypothesis.parents.get(pos)
        if hyp is not None and hyp[0] == rel:
            matched[rel] += 1
    entries = {
        rel: RecallEntry(matched=matched[rel], reference=totals[rel])
        for rel in sorted(totals)
    }
    return RecallTable(entries=entries, edu_count=reference.edu_count)


def aggregate_recall(
    pairs: Iterable[tuple[RstTree, RstTree]],
    buckets: Sequence[int] = RECALL_BUCKETS,
    exact: bool = True,
) -> dict[int, RecallTable]:
    """Bucket recall over pairs by the reference's EDU count.

    Exact mode keeps only pairs whose EDU count equals a bucket value;
    range mode assigns each pair to the smallest bucket bound at or above
    its EDU count, dropping pairs beyond the largest bound.
    """
    grouped: dict[int, tuple[Counter, Counter]] = {}
    edus_seen: dict[int, int] = {}
    sorted_buckets = sorted(buckets)
    for ref, hyp in pairs:
        count = ref.edu_count
        if exact:
            if count not in sorted_buckets:
                continue
            bucket = count
        else:
            bucket = next((b for b in sorted_buckets if count <= b), None)
            if bucket is None:
                continue
        table = relation_recall(ref, hyp)
        matched, totals = grouped.setdefault(bucket, (Counter(), Counter()))
        for rel, entry in table.entries.items():
            matched[rel] += entry.matched
            totals[rel] += entry.reference
        edus_seen[bucket] = edus_seen.get(bucket, 0) + 1
    return {
        bucket: RecallTable(
            entries={
                rel: RecallEntry(matched[rel], totals[rel]) for rel in sorted(totals)
            },
            edu_count=bucket,
        )
        for bucket, (matched, totals) in sorted(grouped.items())
    }


# ---------------------------------------------------------------------------
# n-gram metrics; a corpus is an iterable of token sequences
# ---------------------------------------------------------------------------

def ngram_profile(corpus: Iterable[Sequence[str]], n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    profile: Counter = Counter()
    for tokens in corpus:
        for i in range(len(tokens) - n + 1):
            profile[tuple(tokens[i : i + n])] += 1
    return profile


def distinct_n(corpus: Sequence[Sequence[str]], n: int) -> float:
    """Unique n-grams over total n-grams across the corpus."""
    profile = ngram_profile(corpus, n)
    total = sum(profile.values())
    if total == 0:
        raise ValueError(f"corpus has no {n}-grams")
    return len(profile) / total


def ms_jaccard(
    corpus_a: Sequence[Sequence[str]], corpus_b: Sequence[Sequence[str]], max_n: int = 3
) -> float:
    """Geometric mean over n of the Jaccard overlap of frequency profiles."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    per_n = []
    for n in range(1, max_n + 1):
        pa = ngram_profile(corpus_a, n)
        pb = ngram_profile(corpus_b, n)
        ta, tb = sum(pa.values()), sum(pb.values())
        if ta == 0 or tb == 0:
            raise ValueError(f"one corpus has no {n}-grams")
        minsum = 0.0
        maxsum = 0.0
        for gram in pa.keys() | pb.keys():
            fa = pa.get(gram, 0) / ta
            fb = pb.get(gram, 0) / tb
            minsum += min(fa, fb)
            maxsum += max(fa, fb)
        per_n.append(minsum / maxsum)
    product = math.prod(per_n)
    return product ** (1.0 / max_n) if product > 0 else 0.0


def bleu_n(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]], n: int = 1
) -> float:
    """Corpus-level clipped n-gram precision with a brevity penalty."""
    if len(hypotheses) != len(references):
        raise ValueError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise ValueError("empty corpus")
    clipped = 0
    total = 0
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        hyp_counts = ngram_profile([hyp], n)
        ref_counts = ngram_profile([ref], n)
        total += sum(hyp_counts.values())
        clipped += sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
    if total == 0 or hyp_len == 0:
        return 0.0
    precision = clipped / total
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * precision


def length_stats(
    texts: Sequence[str], edu_counts: Sequence[int]
) -> dict[int, tuple[float, float]]:
    """Mean word and sentence counts grouped by EDU count.

    Words are whitespace tokens; sentences are counted as the number of
    sentence-final punctuation tokens (the same boundary rule the EDU
    cursor uses).
    """
    if len(texts) != len(edu_counts):
        raise ValueError(f"{len(texts)} texts vs {len(edu_counts)} EDU counts")
    lo, hi = LENGTH_EDU_RANGE
    buckets: dict[int, list[tuple[int, int]]] = {}
    for text, count in zip(texts, edu_counts):
        if not lo <= count <= hi:
            raise ValueError(f"EDU count {count} outside [{lo}, {hi}]")
        tokens = text.split()
        sentences = sum(1 for tok in tokens if tok in SENTENCE_FINAL)
        buckets.setdefault(count, []).append((len(tokens), sentences))
    return {
        count: (
            sum(w for w, _ in rows) / len(rows),
            sum(s for _, s in rows) / len(rows),
        )
        for count, rows in sorted(buckets.items())
    }
