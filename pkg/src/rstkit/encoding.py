"""Deterministic numeric encodings of discourse trees.

Each node position maps to a fixed-length path vector recording the
left/right steps from the root (left = -0.05, right = +0.05, trailing
zeros as padding).  A whole tree encodes as parallel sequences over its
parent nodes: positions, relation ids, nuclearity ids and path vectors,
one entry per parent, emitted in ascending position order.

Note on lengths: a full binary tree with N total nodes has (N - 1) / 2
parents, so the encoded sequences have length ceil(N / 2) - 1.  Counting
one extra slot for the prefix tag that announces the encoding gives the
ceil(N / 2) upper bound; the sequences themselves always have exactly
one entry per parent node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .tree import (
    MAX_DEPTH,
    NUCLEARITY_INDEX,
    RELATION_INDEX,
    RstTree,
    depth_of,
    ensure_valid,
)

LEFT_STEP = -0.05
RIGHT_STEP = 0.05

#: Hidden width of the projection target; matches common base LMs.
DEFAULT_HIDDEN_SIZE = 768


def encode_position(pos: int, depth_limit: int = MAX_DEPTH) -> np.ndarray:
    """Path vector of ``pos``: entry i is the i-th root step, 0 past the end."""
    if pos < 0:
        raise ValueError(f"negative position {pos}")
    depth = depth_of(pos)
    if depth > depth_limit:
        raise ValueError(f"depth of position {pos} is {depth}, exceeding {depth_limit}")
    vec = np.zeros(depth_limit, dtype=np.float64)
    i = depth
    while pos > 0:
        i -= 1
        vec[i] = LEFT_STEP if pos % 2 == 1 else RIGHT_STEP
        pos = (pos - 1) // 2
    return vec


def encode_all_positions(count: int, depth_limit: int = MAX_DEPTH) -> np.ndarray:
    """Path vectors for positions 0..count-1, stacked as a (count, depth) matrix."""
    out = np.zeros((count, depth_limit), dtype=np.float64)
    for pos in range(1, count):
        parent = (pos - 1) // 2
        d = depth_of(pos)
        if d > depth_limit:
            raise ValueError(f"depth of position {pos} is {d}, exceeding {depth_limit}")
        out[pos, : d - 1] = out[parent, : d - 1]
        out[pos, d - 1] = LEFT_STEP if pos % 2 == 1 else RIGHT_STEP
    return out


@dataclass(frozen=True)
class EncodedTree:
    """Parallel per-parent-node sequences; all four have equal length."""

    positions: tuple[int, ...]
    relation_ids: tuple[int, ...]
    nuclearity_ids: tuple[int, ...]
    path_vectors: np.ndarray  # (n_parents, MAX_DEPTH)

    def __len__(self) -> int:
        return len(self.positions)


def encode_tree(tree: RstTree) -> EncodedTree:
    """Encode the parent nodes of a validating tree in ascending position order."""
    ensure_valid(tree)
    positions = sorted(tree.parents)
    rel_ids = []
    nuc_ids = []
    vectors = np.zeros((len(positions), MAX_DEPTH), dtype=np.float64)
    for row, pos in enumerate(positions):
        rel, nuc = tree.parents[pos]
        rel_ids.append(RELATION_INDEX[rel])
        nuc_ids.append(NUCLEARITY_INDEX[nuc])
        vectors[row] = encode_position(pos)
    return EncodedTree(
        positions=tuple(positions),
        relation_ids=tuple(rel_ids),
        nuclearity_ids=tuple(nuc_ids),
        path_vectors=vectors,
    )


def gelu(x):
    """Exact Gaussian-error-linear unit: x * Phi(x) with the true normal CDF."""
    x = np.asarray(x, dtype=np.float64)
    return x * ndtr(x)


@dataclass(frozen=True)
class ProjectionWeights:
    """Feed-forward weights lifting a path vector into the hidden space."""

    matrix: np.ndarray  # (tree_depth, hidden)
    bias: np.ndarray  # (hidden,)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if m.ndim != 2 or b.ndim != 1 or m.shape[1] != b.shape[0]:
            raise ValueError(
                f"weight shapes disagree: matrix {m.shape}, bias {b.shape}"
            )
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "bias", b)

    @classmethod
    def random(cls, rng, hidden_size: int = DEFAULT_HIDDEN_SIZE, depth: int = MAX_DEPTH):
        scale = 1.0 / np.sqrt(depth)
        return cls(
            matrix=rng.normal(0.0, scale, size=(depth, hidden_size)),
            bias=rng.normal(0.0, scale, size=hidden_size),
        )


def project_path(encoding: np.ndarray, weights: ProjectionWeights) -> np.ndarray:
    """gelu(encoding @ matrix + bias); accepts a single vector or a batch."""
    enc = np.asarray(encoding, dtype=np.float64)
    if enc.shape[-1] != weights.matrix.shape[0]:
        raise ValueError(
            f"encoding width {enc.shape[-1]} does not match matrix rows {weights.matrix.shape[0]}"
        )
    return gelu(enc @ weights.matrix + weights.bias)
