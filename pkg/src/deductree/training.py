"""Joint recognition + proposition-prediction training.

The recognition loss classifies every object leaf from its encoder embedding;
the prediction loss pulls each proposition's output embedding toward a target
embedding of its result class. The total is recognition + lam * prediction.
Targets carry no gradient. Two target definitions exist: ``centroid``
(default) tracks an exponential-moving-average class centroid of encoder
outputs, giving the cell a stable anchor per class; ``exemplar`` uses the
detached embedding of a freshly sampled image of the result class. Centroid
is the default because its stability is what keeps recursively fed
predictions classifiable at depth; exemplar targets chase a moving,
high-variance signal and measurably stall the prediction loss.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .checkpoint import save_checkpoint
from .datasets import Corpus, normalize, normalize_batch, sample_by_class
from .episodes import Episode, default_config, make_episode
from .model import (ForwardResult, HyperParams, ModelParams, classify,
                    classify_operator, encode, forward_episode, init_params)
from .rng import Rng
from .tensor import Parameter, Tensor
from .tree import Kind, Node


class TrainError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    task: int = 1
    epochs: int = 5
    episodes_per_epoch: int = 20000
    batch_size: int = 64
    learning_rate: float = 1e-3
    lam: float = 1.0  # weight of the prediction loss
    seed: int = 0
    attention: bool = False
    target_mode: str = "centroid"  # "centroid" or "exemplar"
    classify_operators: bool = True
    eval_episodes_per_epoch: int = 500

    def __post_init__(self):
        if self.lam < 0:
            raise TrainError("lam must be >= 0")
        if min(self.epochs, self.episodes_per_epoch, self.batch_size) < 1:
            raise TrainError("epochs, episodes_per_epoch and batch_size "
                             "must be >= 1")
        if self.target_mode not in ("exemplar", "centroid"):
            raise TrainError(f"unknown target_mode {self.target_mode!r}")


@dataclass
class Metrics:
    steps: list[tuple[int, float, float, float]] = field(default_factory=list)
    epochs: list[tuple[int, float, float]] = field(default_factory=list)

    def log_step(self, step, loss1, loss2, total):
        self.steps.append((step, loss1, loss2, total))

    def log_epoch(self, epoch, leaf_acc, prop_acc):
        self.epochs.append((epoch, leaf_acc, prop_acc))

    def write(self, out_dir: Path):
        with open(out_dir / "metrics.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["step", "loss_task1", "loss_task2", "total"])
            for row in self.steps:
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
        with open(out_dir / "epochs.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch", "leaf_accuracy", "prop_accuracy"])
            for row in self.epochs:
                w.writerow([row[0], repr(row[1]), repr(row[2])])


class Adam:
    """Adam with beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, params: list[Parameter], lr: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def _collect_leaves(episode: Episode) -> tuple[list[Node], list[Node]]:
    objects: list[Node] = []
    operators: list[Node] = []

    def walk(node: Node):
        if node.kind is Kind.OBJECT:
            objects.append(node)
            return
        if node.operator is not None:
            operators.append(node.operator)
        for child in node.children:
            walk(child)

    walk(episode.tree)
    return objects, operators


def batch_forward(params: ModelParams, episodes: list[Episode], corpus: Corpus,
                  rng: Rng | None = None, target_mode: str = "exemplar",
                  centroids: np.ndarray | None = None
                  ) -> tuple[list[ForwardResult], list[Tensor]]:
    """Forward a batch with one shared encoder pass over all leaf images.

    Returns per-episode forward results and, when an rng is given, one
    detached target embedding per episode for the prediction loss.
    """
    if rng is not None and target_mode == "centroid" and centroids is None:
        raise TrainError("centroid targets need a centroid table")
    images: list[np.ndarray] = []
    slots: list[tuple[int, dict[int, int]]] = []
    exemplar_rows: list[int] = []
    for episode in episodes:
        objects, operators = _collect_leaves(episode)
        mapping: dict[int, int] = {}
        for node in objects + operators:
            source, idx = node.image
            dataset = corpus.operand if source == "operand" else corpus.operator
            mapping[id(node)] = len(images)
            images.append(dataset.images[idx])
        slots.append((id(episode), mapping))
        if rng is not None and target_mode == "exemplar":
            target_cls = episode.oracle[-1]
            exemplar_rows.append(len(images))
            images.append(corpus.operand.images[
                sample_by_class(rng, corpus.operand, target_cls)])

    embedded = encode(params, Tensor(normalize_batch(np.stack(images))))

    results: list[ForwardResult] = []
    targets: list[Tensor] = []
    for i, episode in enumerate(episodes):
        _, mapping = slots[i]
        leaf_embeddings = {node_id: T.take_row(embedded, row)
                           for node_id, row in mapping.items()}
        results.append(forward_episode(params, episode, corpus,
                                       mode="teacher" if episode.depth == 0
                                       else "deductive",
                                       leaf_embeddings=leaf_embeddings))
        if rng is not None:
            if target_mode == "exemplar":
                targets.append(T.take_row(embedded, exemplar_rows[i]).detach())
            else:
                targets.append(Tensor(centroids[episode.oracle[-1]]))
    return results, targets


def task1_loss(params: ModelParams, episodes: list[Episode], corpus: Corpus,
               classify_operators: bool = True) -> Tensor:
    """Recognition loss: CE over every object leaf (and operator leaves via
    the auxiliary head), summed per episode, averaged over the batch."""
    results, _ = batch_forward(params, episodes, corpus)
    return _recognition_term(params, results, classify_operators)


def _recognition_term(params: ModelParams, results: list[ForwardResult],
                      classify_operators: bool) -> Tensor:
    total = None
    for res in results:
        terms = [T.cross_entropy_from_logits(classify(params, emb), label)
                 for emb, label in res.object_leaves]
        if classify_operators:
            terms += [T.cross_entropy_from_logits(classify_operator(params, emb),
                                                  label)
                      for emb, label in res.operator_leaves]
        ep_loss = terms[0]
        for term in terms[1:]:
            ep_loss = ep_loss + term
        total = ep_loss if total is None else total + ep_loss
    return total * (1.0 / len(results))


def task2_loss(params: ModelParams, episodes: list[Episode], corpus: Corpus,
               rng: Rng, target_mode: str = "exemplar",
               centroids: np.ndarray | None = None) -> Tensor:
    """Prediction loss: MSE between each root embedding and its constant
    target embedding, averaged over the batch."""
    results, targets = batch_forward(params, episodes, corpus, rng,
                                     target_mode, centroids)
    return _prediction_term(results, targets)


def _prediction_term(results: list[ForwardResult],
                     targets: list[Tensor]) -> Tensor:
    total = None
    for res, target in zip(results, targets):
        term = T.mse(res.embeddings[-1], target)
        total = term if total is None else total + term
    return total * (1.0 / len(results))


def total_loss(params: ModelParams, episodes: list[Episode], corpus: Corpus,
               rng: Rng, lam: float, target_mode: str = "exemplar",
               centroids: np.ndarray | None = None,
               classify_operators: bool = True
               ) -> tuple[Tensor, float, float, list[ForwardResult]]:
    """recognition + lam * prediction, sharing one forward pass."""
    results, targets = batch_forward(params, episodes, corpus, rng,
                                     target_mode, centroids)
    loss1 = _recognition_term(params, results, classify_operators)
    loss2 = _prediction_term(results, targets)
    return loss1 + loss2 * lam, loss1.item(), loss2.item(), results


def leaf_accuracy(params: ModelParams, dataset, chunk: int = 1024) -> float:
    """Classifier accuracy over a whole image dataset (no gradients kept)."""
    correct = 0
    for lo in range(0, len(dataset), chunk):
        images = dataset.images[lo:lo + chunk]
        logits = classify(params, encode(params, Tensor(normalize_batch(images))))
        correct += int(np.sum(np.argmax(logits.data, axis=1)
                              == dataset.labels[lo:lo + chunk]))
    return correct / len(dataset)


def proposition_accuracy(params: ModelParams, corpus: Corpus, task: int,
                         n_episodes: int, seed: int, depth: int = 0) -> float:
    """Fraction of episodes whose every level classifies to its oracle label."""
    rng = Rng(seed)
    config = default_config(task, depth=depth)
    correct = 0
    for _ in range(n_episodes):
        episode = make_episode(rng, config, corpus)
        result = forward_episode(params, episode, corpus, mode="deductive")
        correct += int(result.predictions == episode.oracle)
    return correct / n_episodes


@dataclass
class TrainResult:
    params: ModelParams
    metrics: Metrics
    checkpoint_dir: Path
    centroids: np.ndarray | None


def update_centroids(centroids: np.ndarray, results: list[ForwardResult],
                     decay: float = 0.99):
    """EMA update of per-class encoder centroids from a batch's leaves."""
    sums = np.zeros_like(centroids)
    counts = np.zeros(centroids.shape[0], dtype=np.int64)
    for res in results:
        for emb, label in res.object_leaves:
            sums[label] += emb.data
            counts[label] += 1
    for cls in np.nonzero(counts)[0]:
        centroids[cls] = decay * centroids[cls] + (1 - decay) * (sums[cls]
                                                                 / counts[cls])


def train(config: TrainConfig, hyper: HyperParams, train_corpus: Corpus,
          test_corpus: Corpus, out_dir, quiet: bool = False,
          max_steps: int | None = None) -> TrainResult:
    """Run the optimization and write metrics plus a final checkpoint.

    Fully reproducible per (config, datasets): one rng stream drives the
    init, every episode and every target draw in a fixed order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if hyper.attention != config.attention:
        hyper = HyperParams(hyper.feature_dim, hyper.hidden_dim, hyper.heads,
                            hyper.leaky_slope, config.attention)
    rng = Rng(config.seed)
    params = init_params(hyper, rng)
    adam = Adam(params.all(), config.learning_rate)
    episode_config = default_config(config.task)
    metrics = Metrics()
    centroids = (np.zeros((10, hyper.feature_dim))
                 if config.target_mode == "centroid" else None)

    steps_per_epoch = math.ceil(config.episodes_per_epoch / config.batch_size)
    step = 0
    done = False
    for epoch in range(1, config.epochs + 1):
        remaining = config.episodes_per_epoch
        for _ in range(steps_per_epoch):
            size = min(config.batch_size, remaining)
            remaining -= size
            episodes = [make_episode(rng, episode_config, train_corpus)
                        for _ in range(size)]
            loss, l1, l2, results = total_loss(
                params, episodes, train_corpus, rng, config.lam,
                config.target_mode, centroids, config.classify_operators)
            T.zero_grads(params.all())
            T.backward(loss)
            adam.step()
            if centroids is not None:
                update_centroids(centroids, results)
            step += 1
            metrics.log_step(step, l1, l2, loss.item())
            if max_steps is not None and step >= max_steps:
                done = True
                break
        leaf_acc = leaf_accuracy(params, test_corpus.operand)
        prop_acc = proposition_accuracy(params, test_corpus, config.task,
                                        config.eval_episodes_per_epoch,
                                        seed=config.seed + 9000 + epoch)
        metrics.log_epoch(epoch, leaf_acc, prop_acc)
        if not quiet:
            print(f"epoch {epoch}: leaf accuracy {leaf_acc:.4f}, "
                  f"depth-0 accuracy {prop_acc:.4f}, total loss "
                  f"{metrics.steps[-1][3]:.4f}")
        if done:
            break

    checkpoint_dir = out_dir / "checkpoint"
    extra = {"centroids": centroids} if centroids is not None else None
    save_checkpoint(params, checkpoint_dir, seed=config.seed,
                    extra_tensors=extra,
                    meta={"task": config.task, "lam": config.lam,
                          "target_mode": config.target_mode,
                          "classify_operators": config.classify_operators})
    metrics.write(out_dir)
    return TrainResult(params, metrics, checkpoint_dir, centroids)
