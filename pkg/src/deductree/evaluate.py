"""Deductive testing over compound episodes and result rendering.

An episode counts as correct only when every proposition level classifies to
its oracle label, so accuracy decays with depth as errors compound.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .datasets import Corpus
from .episodes import default_config, make_episode
from .model import ModelParams, forward_episode
from .rng import Rng


class EvalError(ValueError):
    pass


@dataclass
class EvalResult:
    task: int
    depth: int
    episodes: int
    accuracy: float  # fraction with every level correct
    level_accuracies: list[float]  # per level, bottom-up

    def __post_init__(self):
        values = [self.accuracy] + list(self.level_accuracies)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise EvalError("accuracies must lie in [0, 1]")
        if self.level_accuracies and \
                self.accuracy > min(self.level_accuracies) + 1e-12:
            raise EvalError("all-level accuracy exceeds a per-level accuracy")


def _centroid_decode(embedding: np.ndarray, centroids: np.ndarray) -> int:
    distances = np.linalg.norm(centroids - embedding[None, :], axis=1)
    return int(np.argmin(distances))


def deductive_test(params: ModelParams, corpus: Corpus, task: int, depth: int,
                   n_episodes: int, seed: int, shape: str = "chain",
                   decode: str = "classifier",
                   centroids: np.ndarray | None = None) -> EvalResult:
    """Generate fresh compound episodes and score every level's prediction.

    ``decode`` selects how a predicted embedding becomes a class: the shared
    classifier head (default) or the nearest stored class centroid.
    """
    if n_episodes < 1:
        raise EvalError("n_episodes must be >= 1")
    if decode not in ("classifier", "centroid"):
        raise EvalError(f"unknown decode {decode!r}")
    if decode == "centroid" and centroids is None:
        raise EvalError("centroid decoding needs stored centroids")
    rng = Rng(seed)
    config = default_config(task, depth=depth, shape=shape)
    levels = depth + 1
    level_hits = np.zeros(levels, dtype=np.int64)
    all_hits = 0
    for _ in range(n_episodes):
        episode = make_episode(rng, config, corpus)
        result = forward_episode(params, episode, corpus, mode="deductive")
        if decode == "classifier":
            preds = result.predictions
        else:
            preds = [_centroid_decode(emb.data, centroids)
                     for emb in result.embeddings]
        matches = [p == o for p, o in zip(preds, episode.oracle)]
        level_hits += np.asarray(matches, dtype=np.int64)
        all_hits += int(all(matches))
    return EvalResult(task=task, depth=depth, episodes=n_episodes,
                      accuracy=all_hits / n_episodes,
                      level_accuracies=(level_hits / n_episodes).tolist())


def report(results: list[EvalResult], fmt: str = "text") -> str:
    """Render results as a per-task text table or machine-readable CSV."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["task", "depth", "episodes", "accuracy", "level_accuracies"])
        for r in results:
            w.writerow([r.task, r.depth, r.episodes, repr(r.accuracy),
                        ";".join(repr(v) for v in r.level_accuracies)])
        return buf.getvalue()
    if fmt != "text":
        raise EvalError(f"unknown format {fmt!r}")

    depths = sorted({r.depth for r in results})
    header = ["task"] + [f"depth {d}" for d in depths]
    lines = ["  ".join(f"{h:>9s}" for h in header)]
    by_task: dict[int, dict[int, EvalResult]] = {}
    for r in results:
        by_task.setdefault(r.task, {})[r.depth] = r
    for task in sorted(by_task):
        cells = [f"{'task ' + str(task):>9s}"]
        for d in depths:
            r = by_task[task].get(d)
            cells.append(f"{r.accuracy * 100:8.2f}%" if r else f"{'-':>9s}")
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str) -> list[EvalResult]:
    """Inverse of report(..., "csv")."""
    rows = list(csv.reader(io.StringIO(text)))
    out = []
    for row in rows[1:]:
        if not row:
            continue
        task, depth, episodes, accuracy, levels = row
        out.append(EvalResult(
            task=int(task), depth=int(depth), episodes=int(episodes),
            accuracy=float(accuracy),
            level_accuracies=[float(v) for v in levels.split(";") if v]))
    return out
