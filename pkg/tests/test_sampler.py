import io

import numpy as np
import pytest

from rstkit.sampler import (
    LEAF,
    OUTCOME_INDEX,
    OUTCOMES,
    ConditionalTable,
    EmptyCorpusError,
    SamplerConstraints,
    UnreachableTargetError,
    child_distribution,
    expandable,
    fit,
    load_table,
    sample_child,
    sample_tree,
    save_table,
    subtree_capacity,
)
from rstkit.tree import RstTree, validate

from conftest import grow_random_tree, seeded

K = len(OUTCOMES)


def single_parent_tree(rel="Elaboration", nuc="NS"):
    return RstTree.from_parents({0: (rel, nuc)})


def make_depth_profile_table(mixture, root_mixture, alpha=0.0, depths=range(12)):
    """Truth table whose conditional depends on depth only (via the marginal)."""
    scale = 1000.0
    marginal = np.zeros(K)
    for outcome, p in mixture.items():
        marginal[OUTCOME_INDEX[outcome]] = p * scale
    root = np.zeros(K - 1)
    for outcome, p in root_mixture.items():
        root[OUTCOME_INDEX[outcome] - 1] = p * scale
    return ConditionalTable(
        alpha=alpha,
        cells={},
        depth_totals={d: marginal.copy() for d in depths},
        root=root,
    )


class TestFit:
    def test_single_tree_gives_leaf_probability_one(self):
        table = fit([single_parent_tree()], alpha=0.0)
        for side in ("left", "right"):
            probs = table.probabilities("Elaboration", "NS", 0, side)
            assert probs[OUTCOME_INDEX[LEAF]] == 1.0
            assert probs.sum() == 1.0

    def test_zero_count_cell_with_alpha_one_is_uniform(self):
        # Additive smoothing of an all-zero vector: (0 + 1) / (0 + K) per outcome.
        table = ConditionalTable(
            alpha=1.0,
            cells={("Contrast", "NN", 7, "left"): np.zeros(K)},
            depth_totals={},
            root=np.ones(K - 1),
        )
        probs = table.probabilities("Contrast", "NN", 7, "left")
        np.testing.assert_allclose(probs, np.full(K, 1.0 / K), rtol=0, atol=0)

    def test_unseen_depth_clamps_to_nearest_observed(self):
        table = fit([single_parent_tree()], alpha=0.5)
        deep = table.probabilities("Contrast", "NN", 9, "left")
        at_edge = table.probabilities("Contrast", "NN", 0, "left")
        assert np.array_equal(deep, at_edge)

    def test_unseen_cell_backs_off_to_depth_marginal(self):
        trees = [
            RstTree.from_parents({0: ("Joint", "NN"), 1: ("Contrast", "NN")}),
            RstTree.from_parents({0: ("Elaboration", "NS")}),
        ]
        table = fit(trees, alpha=0.0)
        # (Cause, NS) at depth 0 was never observed; depth 0 saw 4 child slots:
        # one Contrast/NN internal and three leaves.
        probs = table.probabilities("Cause", "NS", 0, "left")
        assert probs[OUTCOME_INDEX[LEAF]] == pytest.approx(0.75)
        assert probs[OUTCOME_INDEX[("Contrast", "NN")]] == pytest.approx(0.25)

    def test_distributions_sum_to_one(self):
        rng = seeded(31)
        corpus = [grow_random_tree(rng)[0] for _ in range(50)]
        table = fit(corpus, alpha=0.1)
        for key in list(table.cells)[:50]:
            probs = table.probabilities(*key)
            assert abs(probs.sum() - 1.0) < 1e-9
            assert probs.min() > 0.0  # smoothing floor

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            fit([], alpha=0.1)

    def test_refit_recovers_generating_table(self):
        mixture = {LEAF: 0.6, ("Elaboration", "NS"): 0.25, ("Joint", "NN"): 0.15}
        truth = make_depth_profile_table(
            mixture, {("Elaboration", "NS"): 0.7, ("Joint", "NN"): 0.3}
        )
        rng = seeded(32)
        corpus = [
            sample_tree(truth, SamplerConstraints(max_depth=6), rng) for _ in range(1000)
        ]
        refit = fit(corpus, alpha=0.0)
        checked = 0
        for key, counts in refit.cells.items():
            if counts.sum() < 200:
                continue
            checked += 1
            depth = key[2]
            # Non-expandable depths force LEAF, so compare only free depths.
            assert depth < 5
            tv = 0.5 * np.abs(refit.probabilities(*key) - truth.probabilities(*key)).sum()
            assert tv < 0.05, (key, tv)
        assert checked >= 1  # the bound must actually bite somewhere


class TestSampleChild:
    def test_degenerate_cell_always_returns_its_outcome(self):
        table = fit([single_parent_tree()], alpha=0.0)
        rng = seeded(1)
        for _ in range(50):
            assert sample_child(table, "Elaboration", "NS", 0, "left", rng) == LEAF

    def test_boost_renormalisation_arithmetic(self):
        cell = np.zeros(K)
        cell[OUTCOME_INDEX[("Contrast", "NN")]] = 1.0
        cell[OUTCOME_INDEX[("Elaboration", "NN")]] = 99.0
        table = ConditionalTable(0.0, {("Joint", "NN", 0, "left"): cell}, {}, np.ones(K - 1))
        probs = child_distribution(
            table, "Joint", "NN", 0, "left", boosts={"Contrast": 1000.0}
        )
        expected = 10.0 / (10.0 + 0.99)
        assert abs(probs[OUTCOME_INDEX[("Contrast", "NN")]] - expected) < 1e-12

    def test_empirical_frequencies_match_table(self):
        mixture = {LEAF: 0.5, ("Contrast", "NN"): 0.3, ("Cause", "NS"): 0.2}
        table = make_depth_profile_table(mixture, {("Joint", "NN"): 1.0})
        rng = seeded(2)
        counts = np.zeros(K)
        n = 100_000
        for _ in range(n):
            outcome = sample_child(table, "Joint", "NN", 3, "left", rng)
            counts[OUTCOME_INDEX[outcome]] += 1
        freq = counts / n
        probs = table.probabilities("Joint", "NN", 3, "left")
        assert np.abs(freq - probs).max() < 0.01


@pytest.fixture(scope="module")
def table():
    rng = seeded(40)
    corpus = [grow_random_tree(rng, max_parents=12)[0] for _ in range(60)]
    return fit(corpus, alpha=0.1)


class TestSampleTree:

    def test_target_two_gives_single_parent(self, table):
        rng = seeded(3)
        for _ in range(20):
            tree = sample_tree(table, SamplerConstraints(target_edu_count=2), rng)
            assert set(tree.parents) == {0}
            assert tree.edu_count == 2

    def test_target_one_is_rejected(self, table):
        with pytest.raises(UnreachableTargetError, match="at least 2"):
            sample_tree(table, SamplerConstraints(target_edu_count=1), seeded(0))

    def test_target_beyond_capacity_is_rejected(self, table):
        with pytest.raises(UnreachableTargetError, match="capacity"):
            sample_tree(
                table, SamplerConstraints(target_edu_count=9, max_depth=3), seeded(0)
            )

    def test_exact_leaf_counts(self, table):
        rng = seeded(4)
        for _ in range(200):
            target = int(rng.integers(2, 17))
            tree = sample_tree(table, SamplerConstraints(target_edu_count=target), rng)
            assert tree.edu_count == target
            assert len(tree.parents) == target - 1
            assert validate(tree).ok

    def test_capacity_saturating_target_forces_full_tree(self, table):
        tree = sample_tree(
            table, SamplerConstraints(target_edu_count=8, max_depth=3), seeded(5)
        )
        assert len(tree.parents) == 7
        assert tree.edu_count == 8

    def test_unconstrained_trees_validate(self, table):
        rng = seeded(6)
        for _ in range(200):
            assert validate(sample_tree(table, SamplerConstraints(), rng)).ok

    def test_same_seed_same_tree(self, table):
        a = sample_tree(table, SamplerConstraints(target_edu_count=8, seed=77))
        b = sample_tree(table, SamplerConstraints(target_edu_count=8, seed=77))
        assert a == b

    def test_depth_one_outcomes_match_fitted_conditional(self, table):
        n = 20_000
        rng = seeded(7)
        counts = np.zeros(K)
        for _ in range(n):
            tree = sample_tree(table, SamplerConstraints(), rng)
            outcome = tree.parents.get(1, LEAF)
            counts[OUTCOME_INDEX[outcome if outcome == LEAF else tuple(outcome)]] += 1
        freq = counts / n
        root_probs = table.root_probabilities()
        mixture = np.zeros(K)
        for i, (rel, nuc) in enumerate(OUTCOMES[1:]):
            if root_probs[i] > 0:
                mixture += root_probs[i] * table.probabilities(rel, nuc, 0, "left")
        tv = 0.5 * np.abs(freq - mixture).sum()
        assert tv < 0.02, tv

    def test_boosted_relation_becomes_more_frequent(self, table):
        rng = seeded(8)
        plain = boosted = 0
        constraints = SamplerConstraints(target_edu_count=8)
        pumped = SamplerConstraints(target_edu_count=8, relation_boosts={"Contrast": 50.0})
        for _ in range(150):
            plain += sum(
                1 for rel, _ in sample_tree(table, constraints, rng).parents.values()
                if rel == "Contrast"
            )
            boosted += sum(
                1 for rel, _ in sample_tree(table, pumped, rng).parents.values()
                if rel == "Contrast"
            )
        assert boosted > plain * 2


class TestCapacity:
    def test_depth_limited_capacity_is_a_power_of_two(self):
        assert subtree_capacity(0, 1) == 2
        assert subtree_capacity(0, 3) == 8
        assert subtree_capacity(0, 10) == 1024

    def test_position_cap_trims_the_deepest_level(self):
        # At depth 11 the slot 4094 is out of range, so one pair is lost
        # and its parent stays a leaf.
        assert subtree_capacity(0, 11) == 2**11 - 1
        assert subtree_capacity(0, 12) == 2**11 - 1

    def test_expandable_respects_position_cap(self):
        assert expandable(2045, 12)
        assert not expandable(2046, 12)  # right child would be 4094


class TestTableSerialisation:
    def test_round_trip_probabilities_bitwise(self):
        rng = seeded(50)
        corpus = [grow_random_tree(rng, max_parents=8)[0] for _ in range(20)]
        table = fit(corpus, alpha=0.1)
        buf = io.StringIO()
        save_table(table, buf)
        buf.seek(0)
        loaded = load_table(buf)
        assert loaded.alpha == table.alpha
        for key in list(table.cells)[:20]:
            assert np.array_equal(loaded.probabilities(*key), table.probabilities(*key))
        # depth-marginal backoff and the smoothed-uniform tail survive too
        assert np.array_equal(
            loaded.probabilities("Cause", "SN", 1, "right"),
            table.probabilities("Cause", "SN", 1, "right"),
        )
        assert np.array_equal(
            loaded.probabilities("Cause", "SN", 11, "right"),
            table.probabilities("Cause", "SN", 11, "right"),
        )
        assert np.array_equal(loaded.root_probabilities(), table.root_probabilities())

    def test_missing_version_header_is_rejected(self):
        with pytest.raises(ValueError, match="version"):
            load_table(io.StringIO("root\tJoint/NN\t1.0\n"))
