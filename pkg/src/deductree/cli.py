"""Command-line surface: train, eval, gen-episodes, verify-group, gradcheck,
gen-data.

Exit codes: 0 success, 1 contract or parse error, 2 I/O error. A JSON config
file may supply any documented key; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint
from .datasets import IdxError, load_corpus
from .episodes import EpisodeConfig, dump_episodes, make_episode
from .evaluate import deductive_test, report
from .gradcheck import full_model_gradcheck
from .model import HyperParams
from .modular import OPS, check_axioms
from .rng import Rng
from .synth import generate_corpus_files
from .training import TrainConfig, train

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_IO = 2


class CliUsageError(ValueError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(message)


def _parse_depths(spec: str) -> list[int]:
    """Accepts '3', '0..5', or '0,2,4'."""
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        depths = list(range(int(lo), int(hi) + 1))
    else:
        depths = [int(part) for part in spec.split(",")]
    if not depths or any(d < 0 for d in depths):
        raise CliUsageError(f"bad --depths value {spec!r}")
    return depths


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise CliUsageError("config file must hold a JSON object")
    return cfg


def _pick(cfg: dict, cls) -> dict:
    names = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in cfg.items() if k in names}


_KNOWN_KEYS = ({f.name for f in dataclasses.fields(TrainConfig)}
               | {f.name for f in dataclasses.fields(HyperParams)}
               | {f.name for f in dataclasses.fields(EpisodeConfig)})


def _check_keys(cfg: dict):
    unknown = sorted(set(cfg) - _KNOWN_KEYS)
    if unknown:
        raise CliUsageError(f"unknown config keys: {', '.join(unknown)}")


def build_parser() -> Parser:
    parser = Parser(prog="deductree",
                    description="Tree-structured neural deduction over "
                                "modular arithmetic on digit images.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--data-dir", default=None)
        p.add_argument("--config", default=None, help="JSON config file")

    p = sub.add_parser("train", help="run deductive training")
    common(p)
    p.add_argument("--task", type=int, choices=(1, 2, 3), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--episodes-per-epoch", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--attention", action="store_true", default=None)
    p.add_argument("--target-mode", choices=("exemplar", "centroid"),
                   default=None)
    p.add_argument("--no-classify-operators", action="store_true")
    p.add_argument("--out", default="runs/latest")

    p = sub.add_parser("eval", help="deductive testing at given depths")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--task", type=int, choices=(1, 2, 3), default=None)
    p.add_argument("--depths", default="0..5")
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--shape", choices=("chain", "random"), default="chain")
    p.add_argument("--decode", choices=("classifier", "centroid"),
                   default="classifier")

    p = sub.add_parser("gen-episodes", help="write an episode JSON file")
    common(p)
    p.add_argument("--task", type=int, choices=(1, 2, 3), default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--shape", choices=("chain", "random"), default=None)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--out", default="episodes.json")

    p = sub.add_parser("verify-group", help="print the axiom report of an op")
    p.add_argument("--op", choices=sorted(OPS), required=True)

    p = sub.add_parser("gradcheck", help="full-model finite-difference check")
    p.add_argument("--episodes", type=int, default=5)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=2024)

    p = sub.add_parser("gen-data", help="write the synthetic IDX corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train-count", type=int, default=12000)
    p.add_argument("--test-count", type=int, default=2000)
    p.add_argument("--seed", type=int, default=77)

    return parser


def _require_data_dir(args) -> str:
    if args.data_dir is None:
        raise CliUsageError("--data-dir is required (generate one with "
                            "'deductree gen-data' if no real corpus exists)")
    return args.data_dir


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg)
    overrides = {
        "task": args.task, "epochs": args.epochs,
        "episodes_per_epoch": args.episodes_per_epoch,
        "batch_size": args.batch_size, "learning_rate": args.lr,
        "lam": args.lam, "seed": args.seed, "attention": args.attention,
        "target_mode": args.target_mode,
    }
    if args.no_classify_operators:
        overrides["classify_operators"] = False
    merged = {**_pick(cfg, TrainConfig),
              **{k: v for k, v in overrides.items() if v is not None}}
    config = TrainConfig(**merged)
    hyper = HyperParams(**{**_pick(cfg, HyperParams),
                           "attention": config.attention})
    data_dir = _require_data_dir(args)
    with_ops = config.task == 3
    train_corpus = load_corpus(data_dir, "train", with_ops)
    test_corpus = load_corpus(data_dir, "test", with_ops)
    result = train(config, hyper, train_corpus, test_corpus, args.out)
    print(f"checkpoint written to {result.checkpoint_dir}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg)
    params, extras, manifest = load_checkpoint(args.checkpoint)
    task = args.task if args.task is not None else \
        cfg.get("task", manifest.get("meta", {}).get("task"))
    if task is None:
        raise CliUsageError("--task not given and checkpoint records none")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    data_dir = _require_data_dir(args)
    corpus = load_corpus(data_dir, "test", task == 3)
    centroids = extras.get("centroids")
    results = [
        deductive_test(params, corpus, task, depth, args.episodes,
                       seed=seed + depth, shape=args.shape,
                       decode=args.decode, centroids=centroids)
        for depth in _parse_depths(args.depths)
    ]
    sys.stdout.write(report(results, args.format))
    return EXIT_OK


def _cmd_gen_episodes(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg)
    episode_keys = _pick(cfg, EpisodeConfig)
    for flag, value in (("task", args.task), ("depth", args.depth),
                        ("shape", args.shape), ("seed", args.seed)):
        if value is not None:
            episode_keys[flag] = value
    task = episode_keys.setdefault("task", 1)
    episode_keys.setdefault("operator_source", "image" if task == 3 else "fixed")
    config = EpisodeConfig(**episode_keys)
    corpus = load_corpus(_require_data_dir(args), args.split, task == 3)
    rng = Rng(config.seed)
    episodes = [make_episode(rng, config, corpus) for _ in range(args.count)]
    Path(args.out).write_text(dump_episodes(episodes))
    print(f"wrote {len(episodes)} episodes to {args.out}")
    return EXIT_OK


def _cmd_verify_group(args) -> int:
    rep = check_axioms(OPS[args.op])
    print(f"operation: {args.op}")
    print(rep.render())
    return EXIT_OK if rep.closed else EXIT_CONTRACT


def _cmd_gradcheck(args) -> int:
    cases = full_model_gradcheck(n_episodes=args.episodes, eps=args.eps,
                                 seed=args.seed)
    ok = True
    for case in cases:
        status = "ok" if case.passed(args.tol) else "FAIL"
        print(f"{status:4s} {case.label}: max rel-err "
              f"{case.report.max_rel_err:.3e}")
        ok = ok and case.passed(args.tol)
    print(f"gradcheck {'passed' if ok else 'FAILED'} at tol {args.tol:g}")
    return EXIT_OK if ok else EXIT_CONTRACT


def _cmd_gen_data(args) -> int:
    generate_corpus_files(args.out_dir, args.train_count, args.test_count,
                          args.seed)
    print(f"synthetic corpus written under {args.out_dir}")
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "gen-episodes": _cmd_gen_episodes,
    "verify-group": _cmd_verify_group,
    "gradcheck": _cmd_gradcheck,
    "gen-data": _cmd_gen_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (IdxError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
