import numpy as np
import pytest

from rstkit.encoding import (
    ProjectionWeights,
    encode_all_positions,
    encode_position,
    encode_tree,
    gelu,
    project_path,
)
from rstkit.tree import MAX_POSITIONS, RstTree, parent_of

from conftest import grow_random_tree, seeded

# x * Phi(x) at x = 0.05, evaluated with 40-digit arithmetic
# (mpmath: 0.02599694029191862307981607358863075174994).
GELU_AT_0_05 = 0.025996940291918624


class TestPathVectors:
    def test_root_is_all_zero(self):
        assert np.array_equal(encode_position(0), np.zeros(12))

    def test_node_five_goes_right_then_left(self):
        expected = np.zeros(12)
        expected[0] = 0.05
        expected[1] = -0.05
        assert np.array_equal(encode_position(5), expected)

    def test_node_one_goes_left(self):
        vec = encode_position(1)
        assert vec[0] == -0.05
        assert np.all(vec[1:] == 0.0)

    def test_nonzero_prefix_has_depth_length(self):
        rng = seeded(5)
        for pos in rng.integers(0, MAX_POSITIONS, size=300):
            vec = encode_position(int(pos))
            nonzero = np.flatnonzero(vec)
            depth = (int(pos) + 1).bit_length() - 1
            assert len(nonzero) == depth
            if depth:
                assert nonzero.max() == depth - 1  # zeros only pad the tail

    def test_injective_over_all_positions(self):
        vectors = {encode_position(pos).tobytes() for pos in range(MAX_POSITIONS)}
        assert len(vectors) == MAX_POSITIONS

    def test_batch_matches_single(self):
        batch = encode_all_positions(MAX_POSITIONS)
        rng = seeded(6)
        for pos in rng.integers(0, MAX_POSITIONS, size=200):
            assert np.array_equal(batch[int(pos)], encode_position(int(pos)))

    def test_parent_vector_is_child_vector_with_last_step_cleared(self):
        rng = seeded(7)
        for pos in rng.integers(1, MAX_POSITIONS, size=300):
            child = encode_position(int(pos))
            parent = encode_position(parent_of(int(pos)))
            truncated = child.copy()
            truncated[np.flatnonzero(child).max()] = 0.0
            assert np.array_equal(parent, truncated)

    def test_depth_limit(self):
        assert encode_position(8190)[11] != 0.0  # deepest encodable position
        with pytest.raises(ValueError, match="exceeding"):
            encode_position(8191)
        with pytest.raises(ValueError, match="negative"):
            encode_position(-1)


class TestGelu:
    def test_zero(self):
        assert gelu(0.0) == 0.0

    def test_frozen_value_at_0_05(self):
        assert abs(float(gelu(0.05)) - GELU_AT_0_05) < 1e-15

    def test_odd_part_identity(self):
        # Phi(x) + Phi(-x) = 1, so gelu(x) - gelu(-x) = x.
        x = np.arange(-5.0, 5.0, 0.01)
        np.testing.assert_allclose(gelu(x) - gelu(-x), x, atol=1e-12)

    def test_monotone_right_of_minimum(self):
        # x * Phi(x) dips to its minimum near x = -0.752 and increases
        # from there on; monotonicity only holds to the right of it.
        x = np.arange(-0.7, 5.0, 0.01)
        assert np.all(np.diff(gelu(x)) > 0)

    def test_minimum_sits_left_of_monotone_grid(self):
        x = np.arange(-5.0, 5.0, 0.01)
        values = gelu(x)
        argmin = x[int(np.argmin(values))]
        assert -0.76 < argmin < -0.74


class TestProjection:
    def test_zero_path_zero_bias(self):
        w = ProjectionWeights(matrix=np.ones((12, 4)), bias=np.zeros(4))
        assert np.array_equal(project_path(np.zeros(12), w), np.zeros(4))

    def test_zero_weights_give_gelu_of_bias(self):
        bias = np.array([-1.0, 0.0, 0.3, 2.0])
        w = ProjectionWeights(matrix=np.zeros((12, 4)), bias=bias)
        out = project_path(np.full(12, 0.05), w)
        np.testing.assert_array_equal(out, gelu(bias))

    def test_matches_explicit_loop_oracle(self):
        import math

        rng = seeded(99)
        w = ProjectionWeights(
            matrix=rng.normal(size=(12, 16)), bias=rng.normal(size=16)
        )
        for _ in range(20):
            enc = rng.choice([-0.05, 0.0, 0.05], size=12)
            got = project_path(enc, w)
            for j in range(16):
                pre = w.bias[j]
                for i in range(12):
                    pre += enc[i] * w.matrix[i, j]
                expected = pre * 0.5 * (1.0 + math.erf(pre / math.sqrt(2.0)))
                assert abs(got[j] - expected) < 1e-12

    def test_shape_mismatch(self):
        w = ProjectionWeights(matrix=np.zeros((12, 4)), bias=np.zeros(4))
        with pytest.raises(ValueError, match="width"):
            project_path(np.zeros(5), w)
        with pytest.raises(ValueError, match="shapes disagree"):
            ProjectionWeights(matrix=np.zeros((12, 4)), bias=np.zeros(5))

    def test_batch_projection(self):
        rng = seeded(3)
        w = ProjectionWeights.random(rng, hidden_size=8)
        batch = rng.choice([-0.05, 0.0, 0.05], size=(5, 12))
        out = project_path(batch, w)
        assert out.shape == (5, 8)
        for i in range(5):
            # batched and single-vector matmuls take different BLAS paths
            np.testing.assert_allclose(out[i], project_path(batch[i], w), atol=1e-14)


class TestEncodeTree:
    def test_single_parent(self):
        tree = RstTree.from_parents({0: ("Condition", "SN")})
        enc = encode_tree(tree)
        assert len(enc) == 1
        assert enc.positions == (0,)
        assert enc.relation_ids == (4,)  # fixed table: Condition
        assert enc.nuclearity_ids == (2,)  # fixed table: SN
        assert np.array_equal(enc.path_vectors, np.zeros((1, 12)))

    def test_three_parent_tree_has_three_entries(self):
        tree = RstTree.from_parents(
            {0: ("Joint", "NN"), 1: ("Contrast", "NN"), 2: ("Cause", "NS")}
        )
        enc = encode_tree(tree)
        assert len(enc) == 3
        assert enc.positions == (0, 1, 2)
        assert len(enc.relation_ids) == len(enc.nuclearity_ids) == 3
        assert enc.path_vectors.shape == (3, 12)

    def test_entry_count_equals_parent_count(self):
        rng = seeded(13)
        for _ in range(100):
            tree, _, _ = grow_random_tree(rng)
            assert len(encode_tree(tree)) == len(tree.parents)

    def test_empty_tree_is_an_error(self):
        from rstkit.tree import InvalidTreeError

        with pytest.raises(InvalidTreeError):
            encode_tree(RstTree(parents={}))
