"""Experiment protocol: target sampling, repeated hiding trials, summaries."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Sequence

import numpy as np

from . import datasets, env
from .baselines import HiderMethod, run_baseline
from .detection import DetectorKind, Partition
from .graph import Graph
from .metrics import PenaltyWeights, harmonic_f1, jaccard_graph_distance, nmi

AGENT = "agent"
TAU_GRID = (0.3, 0.5, 0.8)
BETA_GRID = (0.5, 1.0, 2.0)


class ProtocolError(ValueError):
    pass


def budget_for(g: Graph, multiplier: float) -> int:
    """``max(1, round(multiplier * m / n))`` with halves rounded up."""
    mu = g.m / g.n
    return max(1, int(math.floor(multiplier * mu + 0.5)))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    method: str
    detector_eval: DetectorKind = DetectorKind.GREEDY
    detector_train: DetectorKind | None = None
    tau: float = 0.5
    beta_multiplier: float = 1.0
    trials: int = 100
    weights: PenaltyWeights = field(default_factory=PenaltyWeights)
    seed: int = 0
    checkpoint: str | None = None
    timing: bool = False
    baseline_scope: str = "any"

    def __post_init__(self):
        if self.trials < 1:
            raise ProtocolError("trials must be >= 1")
        if self.method != AGENT:
            HiderMethod(self.method)
        elif self.checkpoint is None:
            raise ProtocolError("the agent method needs a checkpoint")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    target: int
    success: bool
    steps: int
    nmi: float
    jaccard: float
    runtime_ms: float
    truncated: bool = False


@dataclass(frozen=True)
class SummaryRow:
    method: str
    detector_train: str
    detector_eval: str
    tau: float
    beta: int
    trials: int
    sr: float
    sr_ci: float
    nmi_mean: float
    f1: float


TRIAL_COLUMNS = ("trial", "target", "success", "steps", "nmi", "jaccard", "runtime_ms")
SUMMARY_COLUMNS = tuple(f.name for f in fields(SummaryRow))


def eligible_targets(g: Graph, p: Partition) -> list[int]:
    """Nodes with at least one feasible toggle at the start of an episode."""
    out = []
    for u in range(g.n):
        comm = p.communities[p[u]]
        nbrs = g.neighbors(u)
        has_remove = bool(nbrs & comm)
        has_add = len(nbrs - comm) < g.n - len(comm)
        if has_remove or has_add:
            out.append(u)
    return out


def sample_targets(g: Graph, p: Partition, trials: int, seed: int) -> list[int]:
    """Random targets, each from a different community than the previous one."""
    if p.k < 2:
        raise ProtocolError("target sampling needs at least two communities")
    pool = eligible_targets(g, p)
    rng = np.random.default_rng(seed)
    out: list[int] = []
    prev = None
    for _ in range(trials):
        choices = [u for u in pool if p[u] != prev]
        if not choices:
            raise ProtocolError("no eligible target outside the previous community")
        u = choices[int(rng.integers(len(choices)))]
        out.append(u)
        prev = p[u]
    return out


def task_sampler(g: Graph, *, detector: DetectorKind = DetectorKind.GREEDY, tau: float = 0.5,
                 beta_multiplier: float = 1.0, weights: PenaltyWeights | None = None,
                 detector_seed: int = 0, cache: env.DetectionCache | None = None):
    """Training tasks on ``g``: a uniformly drawn eligible target per call."""
    cache = cache if cache is not None else env.DetectionCache()
    p0 = cache.get(detector, detector_seed, g)
    pool = eligible_targets(g, p0)
    if not pool:
        raise ProtocolError("no eligible targets")
    budget = budget_for(g, beta_multiplier)

    def sample(rng: np.random.Generator) -> env.HidingTask:
        u = pool[int(rng.integers(len(pool)))]
        return env.make_task(g, u, detector=detector, tau=tau, budget=budget, weights=weights,
                             detector_seed=detector_seed, partition0=p0, cache=cache)

    return sample


def wald_halfwidth(p: float, n: int) -> float:
    return 1.96 * math.sqrt(p * (1.0 - p) / n)


def summarize(records: Sequence[TrialRecord], cfg: ExperimentConfig, budget: int,
              detector_train: DetectorKind) -> SummaryRow:
    n = len(records)
    sr = sum(r.success for r in records) / n
    nmi_mean = float(np.mean([r.nmi for r in records]))
    return SummaryRow(
        method=cfg.method, detector_train=detector_train.value,
        detector_eval=cfg.detector_eval.value, tau=cfg.tau, beta=budget, trials=n,
        sr=sr, sr_ci=wald_halfwidth(sr, n), nmi_mean=nmi_mean, f1=harmonic_f1(sr, nmi_mean),
    )


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None, agent=None,
                   cache: env.DetectionCache | None = None):
    """Run ``cfg.trials`` hiding episodes and aggregate them.

    Returns ``(records, summary)``.  The detector seed is the experiment seed
    for every trial, so ``f(G)`` is the same reference partition throughout;
    method randomness is seeded per trial from ``(seed, trial)``.
    """
    g = graph if graph is not None else datasets.load(cfg.dataset)
    if cfg.method == AGENT and agent is None:
        from .agent import load_checkpoint
        agent = load_checkpoint(cfg.checkpoint)
    if cfg.detector_train is not None:
        detector_train = cfg.detector_train
    elif agent is not None:
        detector_train = agent.detector_train
    else:
        detector_train = cfg.detector_eval
    cache = cache if cache is not None else env.DetectionCache()
    budget = budget_for(g, cfg.beta_multiplier)
    p0 = cache.get(cfg.detector_eval, cfg.seed, g)
    targets = sample_targets(g, p0, cfg.trials, cfg.seed)
    records = []
    for i, u in enumerate(targets):
        trial_seed = int(np.random.SeedSequence([cfg.seed, i]).generate_state(1)[0])
        task = env.make_task(g, u, detector=cfg.detector_eval, tau=cfg.tau, budget=budget,
                             weights=cfg.weights, detector_seed=cfg.seed, partition0=p0,
                             cache=cache)
        t0 = time.perf_counter()
        if cfg.method == AGENT:
            final = agent.run(task)
        else:
            final = run_baseline(cfg.method, task, trial_seed, cfg.baseline_scope).final_state
        elapsed = (time.perf_counter() - t0) * 1000.0
        jac = 0.0 if final.graph.edges == g.edges else jaccard_graph_distance(g, final.graph)
        records.append(TrialRecord(
            trial=i, target=u, success=final.success, steps=final.step,
            nmi=nmi(p0, final.partition), jaccard=jac,
            runtime_ms=round(elapsed, 3) if cfg.timing else 0.0, truncated=final.truncated,
        ))
    return records, summarize(records, cfg, budget, detector_train)


# -- serialization -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trials_csv(records: Sequence[TrialRecord], sink: IO[str], graph: Graph | None = None) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for r in records:
        target = graph.label(r.target) if graph is not None else r.target
        w.writerow([_fmt(r.trial), _fmt(target), _fmt(r.success), _fmt(r.steps),
                    _fmt(r.nmi), _fmt(r.jaccard), _fmt(r.runtime_ms)])


def write_summary_csv(rows: Sequence[SummaryRow], sink: IO[str]) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_fmt(getattr(row, c)) for c in SUMMARY_COLUMNS])


def _coerce_summary(d: dict) -> SummaryRow:
    return SummaryRow(
        method=d["method"], detector_train=d["detector_train"], detector_eval=d["detector_eval"],
        tau=float(d["tau"]), beta=int(d["beta"]), trials=int(d["trials"]), sr=float(d["sr"]),
        sr_ci=float(d["sr_ci"]), nmi_mean=float(d["nmi_mean"]), f1=float(d["f1"]),
    )


def read_summary_csv(source: IO[str]) -> list[SummaryRow]:
    return [_coerce_summary(d) for d in csv.DictReader(source)]


def read_trials_csv(source: IO[str]) -> list[TrialRecord]:
    return [TrialRecord(trial=int(d["trial"]), target=int(d["target"]),
                        success=bool(int(d["success"])), steps=int(d["steps"]),
                        nmi=float(d["nmi"]), jaccard=float(d["jaccard"]),
                        runtime_ms=float(d["runtime_ms"]))
            for d in csv.DictReader(source)]


def emit_results(records: Sequence[TrialRecord], summary: SummaryRow, fmt: str,
                 sink: IO[str], graph: Graph | None = None) -> None:
    """Write a summary and its trials.

    CSV output is the one-row summary table, a blank line, then the trial
    table.  JSON output is ``{"summary": {...}, "trials": [...]}``.
    """
    if not records:
        raise ProtocolError("nothing to emit")
    if fmt == "csv":
        write_summary_csv([summary], sink)
        sink.write("\n")
        write_trials_csv(records, sink, graph)
    elif fmt == "json":
        trials = []
        for r in records:
            d = asdict(r)
            if graph is not None:
                d["target"] = graph.label(r.target)
            trials.append(d)
        json.dump({"summary": asdict(summary), "trials": trials}, sink, indent=2, sort_keys=True)
        sink.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def parse_results(text: str, fmt: str) -> tuple[list[TrialRecord], SummaryRow]:
    if fmt == "json":
        data = json.loads(text)
        recs = [TrialRecord(**d) for d in data["trials"]]
        return recs, _coerce_summary(data["summary"])
    head, _, tail = text.partition("\n\n")
    (summary,) = read_summary_csv(io.StringIO(head))
    return read_trials_csv(io.StringIO(tail)), summary
