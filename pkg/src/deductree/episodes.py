"""Episode generation: single propositions and compound test trees.

A depth-d episode holds exactly d+1 proposition nodes. Training uses depth 0
only; deeper episodes appear at test time, where each proposition's predicted
output is fed to its parent. Operand classes are drawn uniformly i.i.d. from
{0..9}; the default compound shape is the left-deep chain (new operand enters
as the second argument, which matters for the non-commutative operation).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .datasets import Corpus, sample_by_class
from .modular import OP_CLASS, eval_tree
from .rng import Rng
from .tree import (Kind, Node, complete_adjacency, node_from_dict,
                   node_to_dict, post_order, validate)

TASK_OPS = {1: ("oplus",), 2: ("ominus",), 3: ("oplus", "ominus")}
SCHEMA_VERSION = 1


class EpisodeError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeConfig:
    depth: int = 0
    task: int = 1
    shape: str = "chain"  # "chain" or "random"
    operator_source: str = "fixed"  # "fixed" or "image"
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASK_OPS:
            raise EpisodeError(f"task must be 1, 2 or 3, got {self.task}")
        if self.depth < 0:
            raise EpisodeError("depth must be >= 0")
        if self.shape not in ("chain", "random"):
            raise EpisodeError(f"unknown shape {self.shape!r}")
        if self.operator_source not in ("fixed", "image"):
            raise EpisodeError(f"unknown operator_source {self.operator_source!r}")
        if self.task == 3 and self.operator_source != "image":
            raise EpisodeError("task 3 requires image operators")


def default_config(task: int, depth: int = 0, shape: str = "chain",
                   seed: int = 0) -> EpisodeConfig:
    source = "image" if task == 3 else "fixed"
    return EpisodeConfig(depth=depth, task=task, shape=shape,
                         operator_source=source, seed=seed)


@dataclass
class Episode:
    tree: Node
    oracle: list[int]  # target class per proposition, bottom-up
    depth: int
    task: int
    corpus: str  # name of the corpus the images were drawn from

    def propositions(self) -> list[Node]:
        return post_order(self.tree)


def assign_operator_image(rng: Rng, operator_dataset, op_name: str) -> int:
    """Index of a random operator-dataset image of the class denoting op_name."""
    return sample_by_class(rng, operator_dataset, OP_CLASS[op_name])


def _object_leaf(rng: Rng, corpus: Corpus) -> Node:
    cls = rng.below(10)
    idx = sample_by_class(rng, corpus.operand, cls)
    return Node(kind=Kind.OBJECT, image=("operand", idx), label=cls)


def _proposition(rng: Rng, config: EpisodeConfig, corpus: Corpus,
                 left: Node, right: Node) -> Node:
    ops = TASK_OPS[config.task]
    op = ops[0] if len(ops) == 1 else rng.choice(ops)
    node = Node(kind=Kind.PROPOSITION, children=[left, right],
                adjacency=complete_adjacency(2), op=op)
    if config.operator_source == "image":
        if corpus.operator is None:
            raise EpisodeError("image operators requested but corpus has no "
                               "operator dataset")
        idx = assign_operator_image(rng, corpus.operator, op)
        node.operator = Node(kind=Kind.OPERATOR, image=("operator", idx),
                             label=OP_CLASS[op], op=op)
    return node


def _finish(tree: Node, config: EpisodeConfig, corpus: Corpus) -> Episode:
    oracle = eval_tree(tree)
    for node, target in zip(post_order(tree), oracle):
        node.label = target
    return Episode(tree=tree, oracle=oracle, depth=config.depth,
                   task=config.task, corpus=corpus.name)


def make_proposition(rng: Rng, config: EpisodeConfig, corpus: Corpus) -> Episode:
    """Depth-0 episode: one proposition over two fresh object leaves."""
    if config.depth != 0:
        raise EpisodeError("make_proposition builds depth-0 episodes only")
    left = _object_leaf(rng, corpus)
    right = _object_leaf(rng, corpus)
    return _finish(_proposition(rng, config, corpus, left, right), config, corpus)


def make_compound(rng: Rng, config: EpisodeConfig, corpus: Corpus) -> Episode:
    """Depth >= 1 episode with exactly depth+1 propositions."""
    if config.depth < 1:
        raise EpisodeError("make_compound needs depth >= 1")
    if config.shape == "chain":
        node = _proposition(rng, config, corpus, _object_leaf(rng, corpus),
                            _object_leaf(rng, corpus))
        for _ in range(config.depth):
            node = _proposition(rng, config, corpus, node,
                                _object_leaf(rng, corpus))
    else:
        def build(n_props: int) -> Node:
            left_budget = rng.below(n_props)  # 0..n_props-1
            right_budget = n_props - 1 - left_budget
            left = build(left_budget) if left_budget else _object_leaf(rng, corpus)
            right = build(right_budget) if right_budget else _object_leaf(rng, corpus)
            return _proposition(rng, config, corpus, left, right)

        node = build(config.depth + 1)
    return _finish(node, config, corpus)


def make_episode(rng: Rng, config: EpisodeConfig, corpus: Corpus) -> Episode:
    if config.depth == 0:
        return make_proposition(rng, config, corpus)
    return make_compound(rng, config, corpus)


def check_episode(episode: Episode, corpus: Corpus | None = None) -> list[str]:
    """Violations of the episode invariants (empty when consistent)."""
    problems = validate(episode.tree)
    props = post_order(episode.tree)
    if len(props) != episode.depth + 1:
        problems.append(f"depth {episode.depth} but {len(props)} propositions")
    if eval_tree(episode.tree) != episode.oracle:
        problems.append("oracle labels disagree with tree evaluation")
    if corpus is not None:
        def walk(node: Node):
            if node.kind is Kind.OBJECT:
                src, idx = node.image
                if int(corpus.operand.labels[idx]) != node.label:
                    problems.append(f"object image {idx} has dataset label "
                                    f"{int(corpus.operand.labels[idx])}, node says "
                                    f"{node.label}")
            elif node.kind is Kind.PROPOSITION:
                if node.operator is not None:
                    _, idx = node.operator.image
                    got = int(corpus.operator.labels[idx])
                    if got != OP_CLASS[node.op]:
                        problems.append(f"operator image {idx} class {got} does not "
                                        f"denote {node.op}")
                for child in node.children:
                    walk(child)

        walk(episode.tree)
    return problems


def episode_to_dict(episode: Episode) -> dict:
    return {
        "task": episode.task,
        "depth": episode.depth,
        "oracle": episode.oracle,
        "corpus": episode.corpus,
        "tree": node_to_dict(episode.tree),
    }


def episode_from_dict(d: dict) -> Episode:
    return Episode(tree=node_from_dict(d["tree"]), oracle=list(d["oracle"]),
                   depth=int(d["depth"]), task=int(d["task"]),
                   corpus=d.get("corpus", ""))


def dump_episodes(episodes: list[Episode]) -> str:
    return json.dumps({"version": SCHEMA_VERSION,
                       "episodes": [episode_to_dict(e) for e in episodes]})


def load_episodes(text: str) -> list[Episode]:
    payload = json.loads(text)
    if payload.get("version") != SCHEMA_VERSION:
        raise EpisodeError(f"unsupported episode file version "
                           f"{payload.get('version')!r}")
    return [episode_from_dict(d) for d in payload["episodes"]]
