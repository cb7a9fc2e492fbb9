"""Shared generators for randomised tests.

Random trees are grown structurally: child links and depths are recorded
as the tree is built, so tests can check the position arithmetic against
bookkeeping that never divides an index.
"""

import numpy as np

from rstkit.tree import MAX_POSITIONS, NUCLEARITIES, RELATIONS, RstTree

CONTENT_RELATIONS = RELATIONS[:-1]
CONTENT_NUCLEARITIES = NUCLEARITIES[:-1]

_WORDS = (
    "the storm kept every road closed so crews waited while engineers "
    "checked bridges and farmers moved cattle uphill before the river rose"
).split()


def random_labels(rng):
    return (
        CONTENT_RELATIONS[int(rng.integers(len(CONTENT_RELATIONS)))],
        CONTENT_NUCLEARITIES[int(rng.integers(len(CONTENT_NUCLEARITIES)))],
    )


def grow_random_tree(rng, max_parents=36, max_depth=11, with_texts=False, with_kps=False):
    """Returns (tree, links, depths); links map each child to its builder parent."""
    target = int(rng.integers(1, max_parents + 1))
    parents = {0: random_labels(rng)}
    links = {1: 0, 2: 0}
    depths = {0: 0, 1: 1, 2: 1}
    frontier = [1, 2]
    while frontier and len(parents) < target:
        pos = frontier.pop(int(rng.integers(len(frontier))))
        if depths[pos] >= max_depth or 2 * pos + 2 >= MAX_POSITIONS:
            continue
        parents[pos] = random_labels(rng)
        for child in (2 * pos + 1, 2 * pos + 2):
            links[child] = pos
            depths[child] = depths[pos] + 1
            frontier.append(child)

    leaves = sorted(set(links) - set(parents))
    texts = {}
    if with_texts:
        for leaf in leaves:
            n = int(rng.integers(0, 6))
            texts[leaf] = " ".join(_WORDS[int(rng.integers(len(_WORDS)))] for _ in range(n))
    kps = []
    if with_kps:
        known = sorted(set(parents) | set(leaves))
        for _ in range(int(rng.integers(0, 4))):
            pos = known[int(rng.integers(len(known)))]
            words = " ".join(_WORDS[int(rng.integers(len(_WORDS)))] for _ in range(int(rng.integers(1, 4))))
            kps.append((pos, words))
    tree = RstTree.from_parents(parents, texts, kps)
    return tree, links, depths


def ancestors_by_links(pos, links):
    """Ancestor chain recovered from recorded child links, no arithmetic."""
    out = []
    while pos in links:
        pos = links[pos]
        out.append(pos)
    return out


def inorder_leaves_recursive(parents):
    """Leaf order by explicit recursive traversal of the parent collection."""
    out = []

    def visit(pos):
        if pos in parents:
            visit(2 * pos + 1)
            visit(2 * pos + 2)
        else:
            out.append(pos)

    visit(0)
    return out


def seeded(seed):
    return np.random.default_rng(seed)
