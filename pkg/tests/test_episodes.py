import numpy as np
import pytest

from deductree.episodes import (Episode, EpisodeConfig, EpisodeError,
                                assign_operator_image, check_episode,
                                default_config, dump_episodes, load_episodes,
                                make_compound, make_episode, make_proposition)
from deductree.modular import OP_CLASS
from deductree.rng import Rng
from deductree.tree import Kind, post_order


def test_depth0_oracle_matches_group_oracle(corpus):
    rng = Rng(12)
    for _ in range(200):
        ep = make_proposition(rng, default_config(3), corpus)
        left, right = ep.tree.children
        expected = ((left.label + right.label) % 10 if ep.tree.op == "oplus"
                    else (left.label - right.label) % 10)
        assert ep.oracle == [expected]
        assert ep.tree.label == expected


def test_determinism_same_seed_same_episode(corpus):
    for task in (1, 2, 3):
        a = make_episode(Rng(99), default_config(task, depth=3), corpus)
        b = make_episode(Rng(99), default_config(task, depth=3), corpus)
        assert dump_episodes([a]) == dump_episodes([b])


def test_chain_oracle_matches_independent_recursion(corpus):
    def reference(node):
        if node.kind is Kind.OBJECT:
            return node.label
        left = reference(node.children[0])
        right = reference(node.children[1])
        return (left + right) % 10 if node.op == "oplus" \
            else (left - right) % 10

    rng = Rng(4)
    for _ in range(100):
        depth = 1 + rng.below(5)
        ep = make_compound(rng, default_config(3, depth=depth), corpus)
        assert ep.oracle[-1] == reference(ep.tree)
        assert len(ep.oracle) == depth + 1


@pytest.mark.parametrize("shape", ["chain", "random"])
@pytest.mark.parametrize("depth", [0, 1, 3, 5])
def test_exactly_depth_plus_one_propositions(corpus, shape, depth):
    ep = make_episode(Rng(7), default_config(2, depth=depth, shape=shape),
                      corpus)
    assert len(post_order(ep.tree)) == depth + 1
    assert check_episode(ep, corpus) == []


def test_chain_feeds_previous_result_as_first_operand(corpus):
    ep = make_compound(Rng(5), default_config(2, depth=3), corpus)
    node = ep.tree
    while node.children[0].kind is Kind.PROPOSITION:
        assert node.children[1].kind is Kind.OBJECT
        node = node.children[0]


class TestOperatorImages:
    def test_convention(self, corpus):
        for _ in range(50):
            idx_plus = assign_operator_image(Rng(_), corpus.operator, "oplus")
            idx_minus = assign_operator_image(Rng(_ + 99), corpus.operator,
                                              "ominus")
            assert corpus.operator.labels[idx_plus] == 0
            assert corpus.operator.labels[idx_minus] == 1

    def test_many_draws_never_wrong_class(self, corpus):
        rng = Rng(31)
        labels = {corpus.operator.labels[
            assign_operator_image(rng, corpus.operator, "oplus")]
            for _ in range(10_000)}
        assert labels == {0}

    def test_task3_episodes_carry_operator_leaves(self, corpus):
        ep = make_episode(Rng(2), default_config(3, depth=2), corpus)
        for node in post_order(ep.tree):
            assert node.operator is not None
            assert node.operator.kind is Kind.OPERATOR
            assert node.operator.label == OP_CLASS[node.op]

    def test_fixed_source_has_no_operator_leaves(self, corpus):
        ep = make_episode(Rng(2), default_config(1, depth=2), corpus)
        assert all(n.operator is None for n in post_order(ep.tree))


def test_operator_choice_balanced(corpus):
    rng = Rng(13)
    n = 100_000
    plus = sum(make_proposition(rng, default_config(3), corpus).tree.op
               == "oplus" for _ in range(n))
    assert abs(plus / n - 0.5) <= 0.01


def test_serialization_round_trip(corpus):
    eps = [make_episode(Rng(s), default_config(3, depth=s % 4), corpus)
           for s in range(6)]
    text = dump_episodes(eps)
    again = load_episodes(text)
    assert dump_episodes(again) == text
    for a, b in zip(eps, again):
        assert a.oracle == b.oracle
        assert check_episode(b) == []


def test_load_rejects_bad_version():
    with pytest.raises(EpisodeError, match="version"):
        load_episodes('{"version": 99, "episodes": []}')


class TestConfig:
    def test_task3_requires_image_operators(self):
        with pytest.raises(EpisodeError):
            EpisodeConfig(task=3, operator_source="fixed")

    def test_bad_values(self):
        with pytest.raises(EpisodeError):
            EpisodeConfig(task=4)
        with pytest.raises(EpisodeError):
            EpisodeConfig(depth=-1)
        with pytest.raises(EpisodeError):
            EpisodeConfig(shape="loop")

    def test_compound_needs_depth(self, corpus):
        with pytest.raises(EpisodeError):
            make_compound(Rng(0), default_config(1, depth=0), corpus)
        with pytest.raises(EpisodeError):
            make_proposition(Rng(0), default_config(1, depth=2), corpus)

    def test_image_operators_need_operator_dataset(self, corpus):
        from deductree.datasets import Corpus
        bare = Corpus(corpus.operand, None, "bare")
        with pytest.raises(EpisodeError):
            make_episode(Rng(0), default_config(3), bare)


def test_random_shape_branches(corpus):
    # with enough propositions the random shape eventually places a
    # sub-proposition in the second operand slot, which chains never do
    found = False
    for seed in range(40):
        ep = make_episode(Rng(seed), default_config(1, depth=4,
                                                    shape="random"), corpus)
        for node in post_order(ep.tree):
            if node.children[1].kind is Kind.PROPOSITION:
                found = True
    assert found
