"""Command-line entry point: ``hidenet detect|hide|train|benchmark``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import datasets, env
from .agent import CheckpointError, EmbeddingConfig, TrainConfig, load_checkpoint, save_checkpoint, train
from .baselines import SCOPES, HiderMethod, run_baseline
from .detection import DetectorKind, detect
from .graph import GraphError, ToggleKind
from .harness import (
    AGENT,
    ExperimentConfig,
    ProtocolError,
    budget_for,
    emit_results,
    run_experiment,
    task_sampler,
    write_summary_csv,
    write_trials_csv,
)
from .metrics import PenaltyWeights

log = logging.getLogger("hidenet")

METHODS = [m.value for m in HiderMethod] + [AGENT]


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _method_list(text: str) -> list[str]:
    out = [x.strip() for x in text.split(",") if x.strip()]
    bad = [x for x in out if x not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {METHODS}")
    return out


def _detector(text: str) -> DetectorKind:
    try:
        return DetectorKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser, *, hiding: bool = True) -> None:
    p.add_argument("--dataset", default="kar", help="bundled name or path to an edge list (default: kar)")
    p.add_argument("--detector", type=_detector, default=DetectorKind.GREEDY,
                   help="greedy | louvain | lpa (default: greedy)")
    p.add_argument("--seed", type=int, default=0)
    if hiding:
        p.add_argument("--lambda", dest="lam", type=float, default=0.1,
                       help="weight of the distance penalty (default: 0.1)")
        p.add_argument("--alpha", type=float, default=0.5,
                       help="NMI share of the distance penalty (default: 0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hidenet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="print the detector's partition as node_id,community_id")
    _common(p, hiding=False)
    p.add_argument("--out", type=Path, help="write CSV here instead of stdout")

    p = sub.add_parser("hide", help="print the edits one method makes for a single target")
    _common(p)
    p.add_argument("--target", type=int, required=True, help="node id as written in the edge list")
    p.add_argument("--method", choices=METHODS, default="greedy")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--beta-mult", type=float, default=1.0, help="budget in multiples of m/n")
    p.add_argument("--checkpoint", type=Path, help="agent checkpoint (for --method agent)")
    p.add_argument("--baseline-scope", choices=SCOPES, default="any")

    p = sub.add_parser("train", help="train the A2C agent and save a checkpoint")
    _common(p)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--beta-mult", type=float, default=1.0)
    p.add_argument("--episodes", type=int, default=TrainConfig.episodes)
    p.add_argument("--lr", type=float, default=TrainConfig.lr_actor, help="actor and critic step size")
    p.add_argument("--gamma", type=float, default=TrainConfig.gamma)
    p.add_argument("--hidden", type=int, default=TrainConfig.hidden_dim)
    p.add_argument("--dropout", type=float, default=TrainConfig.dropout)
    p.add_argument("--entropy", type=float, default=TrainConfig.entropy_coeff)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="sgd")
    p.add_argument("--embedding-dim", type=int, default=EmbeddingConfig.dim)
    p.add_argument("--out", type=Path, required=True, help="checkpoint path (.npz)")

    p = sub.add_parser("benchmark", help="run repeated hiding trials over a grid")
    _common(p)
    p.add_argument("--method", type=_method_list, default=["random"],
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--tau", type=_float_list, default=[0.5], help="comma-separated thresholds")
    p.add_argument("--beta-mult", type=_float_list, default=[1.0], help="comma-separated budget multipliers")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--train-detector", type=_detector,
                   help="detector the agent was trained against (reported only)")
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--baseline-scope", choices=SCOPES, default="any")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, help="directory for summary and per-run trial files")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtime per trial (output is then not reproducible)")
    return parser


def cmd_detect(args) -> int:
    g = datasets.load(args.dataset)
    part = detect(args.detector, g, args.seed)
    sink = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["node_id", "community_id"])
        for u in range(g.n):
            w.writerow([g.label(u), part[u]])
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_hide(args) -> int:
    g = datasets.load(args.dataset)
    try:
        u = g.node_of(args.target)
    except KeyError:
        raise ProtocolError(f"node {args.target} is not in {args.dataset}") from None
    task = env.make_task(g, u, detector=args.detector, tau=args.tau,
                         budget=budget_for(g, args.beta_mult),
                         weights=PenaltyWeights(alpha=args.alpha, lam=args.lam),
                         detector_seed=args.seed)
    if args.method == AGENT:
        if args.checkpoint is None:
            raise ProtocolError("--method agent needs --checkpoint")
        final = load_checkpoint(args.checkpoint).run(task)
    else:
        final = run_baseline(args.method, task, args.seed, args.baseline_scope).final_state
    for t in final.actions:
        verb = "unfollow" if t.kind is ToggleKind.REMOVE else "follow"
        print(f"{verb} {g.label(t.v)}")
    status = "hidden" if final.success else "not hidden"
    print(f"{status} after {final.step} of {task.budget} edits", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    g = datasets.load(args.dataset)
    cfg = TrainConfig(episodes=args.episodes, lr_actor=args.lr, lr_critic=args.lr, gamma=args.gamma,
                      hidden_dim=args.hidden, dropout=args.dropout, entropy_coeff=args.entropy,
                      optimizer=args.optimizer, seed=args.seed)
    emb = EmbeddingConfig(dim=args.embedding_dim, seed=args.seed)
    sampler = task_sampler(g, detector=args.detector, tau=args.tau, beta_multiplier=args.beta_mult,
                           weights=PenaltyWeights(alpha=args.alpha, lam=args.lam),
                           detector_seed=args.seed)
    agent = train(sampler, cfg, emb, detector_train=args.detector,
                  log_every=max(1, args.episodes // 10) if args.verbose else 0)
    save_checkpoint(agent, args.out)
    tail = agent.history[-100:]
    mean = float(np.mean(tail)) if tail else float("nan")
    print(f"saved {args.out} after {args.episodes} episodes (mean return of last {len(tail)}: {mean:.4f})",
          file=sys.stderr)
    return 0


def cmd_benchmark(args) -> int:
    g = datasets.load(args.dataset)
    if AGENT in args.method and args.checkpoint is None:
        raise ProtocolError("--method agent needs --checkpoint")
    agent = load_checkpoint(args.checkpoint) if AGENT in args.method else None
    weights = PenaltyWeights(alpha=args.alpha, lam=args.lam)
    cache = env.DetectionCache()
    runs = []
    for method in args.method:
        for tau in args.tau:
            for mult in args.beta_mult:
                cfg = ExperimentConfig(
                    dataset=args.dataset, method=method, detector_eval=args.detector,
                    detector_train=args.train_detector, tau=tau, beta_multiplier=mult,
                    trials=args.trials, weights=weights, seed=args.seed,
                    checkpoint=str(args.checkpoint) if args.checkpoint else None,
                    timing=args.timing, baseline_scope=args.baseline_scope)
                records, summary = run_experiment(cfg, graph=g, agent=agent, cache=cache)
                log.info("%s tau=%s beta=%d: sr=%.3f nmi=%.3f", method, tau, summary.beta,
                         summary.sr, summary.nmi_mean)
                runs.append((cfg, records, summary))

    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        for cfg, records, summary in runs:
            stem = f"{cfg.method}_tau{cfg.tau:g}_beta{cfg.beta_multiplier:g}"
            with open(args.out / f"{stem}.{args.format}", "w", newline="", encoding="utf-8") as fh:
                emit_results(records, summary, args.format, fh, g)
        with open(args.out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            write_summary_csv([s for _, _, s in runs], fh)

    if args.format == "csv":
        if len(runs) == 1:
            _, records, summary = runs[0]
            emit_results(records, summary, "csv", sys.stdout, g)
        else:
            write_summary_csv([s for _, _, s in runs], sys.stdout)
    else:
        payload = []
        for _, records, summary in runs:
            trials = []
            for r in records:
                d = asdict(r)
                d["target"] = g.label(r.target)
                trials.append(d)
            payload.append({"summary": asdict(summary), "trials": trials})
        json.dump(payload[0] if len(payload) == 1 else payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return 0


COMMANDS = {"detect": cmd_detect, "hide": cmd_hide, "train": cmd_train, "benchmark": cmd_benchmark}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GraphError, ProtocolError, CheckpointError, datasets.DatasetNotFoundError,
            ValueError, OSError) as exc:
        print(f"hidenet: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
