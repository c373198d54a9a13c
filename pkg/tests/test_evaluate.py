import numpy as np
import pytest

from deductree import evaluate as E
from deductree.evaluate import (EvalError, EvalResult, deductive_test,
                                parse_report_csv, report)
from deductree.model import ForwardResult, init_params
from deductree.rng import Rng
from deductree.tensor import Tensor

from conftest import zero_params


class TestEvalResult:
    def test_valid(self):
        EvalResult(1, 2, 100, 0.5, [0.9, 0.8, 0.6])

    def test_all_level_cannot_exceed_levels(self):
        with pytest.raises(EvalError):
            EvalResult(1, 1, 100, 0.9, [0.95, 0.85])

    def test_fractions_bounded(self):
        with pytest.raises(EvalError):
            EvalResult(1, 0, 100, 1.5, [1.5])


class TestReport:
    def test_empty_list_header_only(self):
        text = report([], "text")
        assert "task" in text and len(text.strip().splitlines()) == 1
        csv_out = report([], "csv")
        assert csv_out.splitlines()[0] == \
            "task,depth,episodes,accuracy,level_accuracies"
        assert len(csv_out.strip().splitlines()) == 1

    def test_single_result_row(self):
        r = EvalResult(2, 1, 50, 0.42, [0.8, 0.5])
        text = report([r], "text")
        assert "task 2" in text and "42.00%" in text
        parsed = parse_report_csv(report([r], "csv"))
        assert parsed[0].accuracy == 0.42

    def test_csv_round_trip_exact(self):
        rng = Rng(5)
        results = []
        for task in (1, 2, 3):
            for depth in (0, 3):
                levels = sorted(rng.uniform() for _ in range(depth + 1))
                results.append(EvalResult(task, depth, 2000, levels[0],
                                          levels))
        again = parse_report_csv(report(results, "csv"))
        for a, b in zip(results, again):
            assert (a.task, a.depth, a.episodes) == (b.task, b.depth,
                                                     b.episodes)
            assert a.accuracy == b.accuracy
            assert a.level_accuracies == b.level_accuracies

    def test_unknown_format(self):
        with pytest.raises(EvalError):
            report([], "yaml")


def test_stubbed_perfect_model_scores_100_at_every_depth(
        corpus, small_hyper, monkeypatch):
    params = zero_params(small_hyper)

    def perfect(params_, episode, corpus_, mode="deductive",
                leaf_embeddings=None):
        f = small_hyper.feature_dim
        return ForwardResult(
            embeddings=[Tensor(np.zeros(f)) for _ in episode.oracle],
            logits=[], predictions=list(episode.oracle))

    monkeypatch.setattr(E, "forward_episode", perfect)
    for depth in range(6):
        r = deductive_test(params, corpus, 1, depth, 50, seed=depth)
        assert r.accuracy == 1.0
        assert r.level_accuracies == [1.0] * (depth + 1)


def test_deterministic_given_seed(corpus, small_hyper):
    params = init_params(small_hyper, Rng(1))
    a = deductive_test(params, corpus, 1, 2, 100, seed=9)
    b = deductive_test(params, corpus, 1, 2, 100, seed=9)
    assert a.accuracy == b.accuracy
    assert a.level_accuracies == b.level_accuracies


def test_levels_count_matches_depth(corpus, small_hyper):
    params = init_params(small_hyper, Rng(2))
    r = deductive_test(params, corpus, 2, 3, 20, seed=1)
    assert len(r.level_accuracies) == 4
    assert r.episodes == 20


def test_centroid_decode_requires_centroids(corpus, small_hyper):
    params = init_params(small_hyper, Rng(3))
    with pytest.raises(EvalError):
        deductive_test(params, corpus, 1, 0, 10, seed=1, decode="centroid")
    centroids = Rng(4).uniform_array((10, small_hyper.feature_dim))
    r = deductive_test(params, corpus, 1, 0, 10, seed=1, decode="centroid",
                       centroids=centroids)
    assert 0.0 <= r.accuracy <= 1.0


def test_all_level_never_exceeds_levels_on_real_models(corpus, small_hyper):
    params = init_params(small_hyper, Rng(5))
    for depth in (1, 3):
        r = deductive_test(params, corpus, 3, depth, 200, seed=depth)
        assert r.accuracy <= min(r.level_accuracies) + 1e-12


def test_episodes_drawn_from_given_corpus_only(corpus, small_hyper):
    """Index bookkeeping: every image reference fits the corpus handed in."""
    from deductree.episodes import default_config, make_episode
    from deductree.tree import Kind
    rng = Rng(6)
    for _ in range(50):
        ep = make_episode(rng, default_config(3, depth=2), corpus)
        assert ep.corpus == corpus.name

        def walk(node):
            if node.kind is Kind.OBJECT:
                assert node.image[0] == "operand"
                assert 0 <= node.image[1] < len(corpus.operand)
            elif node.kind is Kind.PROPOSITION:
                if node.operator is not None:
                    assert node.operator.image[0] == "operator"
                    assert 0 <= node.operator.image[1] < len(corpus.operator)
                for child in node.children:
                    walk(child)

        walk(ep.tree)
