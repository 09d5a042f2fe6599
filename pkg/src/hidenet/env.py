"""Community membership hiding as a deterministic, budgeted MDP.

The target node ``u`` may only delete its edges to members of its original
community or add edges to nodes outside it.  After every toggle the detector
is re-run on the rewired graph and the target's new community is compared to
the original one with the Dice coefficient.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace

from .detection import DetectorKind, Partition, community_of, detect
from .graph import EdgeToggle, Graph, InvalidActionError, ToggleKind, toggle_edge
from .metrics import PenaltyWeights, dice_similarity, penalty


class TerminalStateError(RuntimeError):
    pass


class DetectionCache:
    """Bounded memo of detector outputs keyed by (detector, seed, edge set)."""

    def __init__(self, maxsize: int = 50_000):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, kind: DetectorKind, seed: int, g: Graph) -> Partition:
        key = (kind, seed, g)
        with self._lock:
            p = self._data.get(key)
            if p is not None:
                self._data.move_to_end(key)
                self.hits += 1
                return p
        p = detect(kind, g, seed)
        with self._lock:
            self.misses += 1
            self._data[key] = p
            if len(self._data) > self.maxsize:
                self._data.popitem(last=False)
        return p


@dataclass(frozen=True)
class HidingTask:
    graph0: Graph
    detector: DetectorKind
    detector_seed: int
    target: int
    partition0: Partition
    community0: frozenset[int]
    tau: float
    budget: int
    weights: PenaltyWeights
    cache: DetectionCache | None = field(default=None, compare=False, repr=False)
    # False lets the target toggle its edge to any other node (used by the
    # "any"-scope baselines); feasibility is then only presence consistency
    restrict: bool = True

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must be in [0, 1), got {self.tau}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if not 0 <= self.target < self.graph0.n:
            raise ValueError(f"target {self.target} out of range")
        if self.target not in self.community0:
            raise ValueError("community0 must contain the target")


@dataclass(frozen=True)
class EnvState:
    graph: Graph
    partition: Partition
    community: frozenset[int]
    step: int = 0
    dist: float = 0.0
    done: bool = False
    success: bool = False
    actions: tuple[EdgeToggle, ...] = ()
    truncated: bool = False


def run_detector(task: HidingTask, g: Graph) -> Partition:
    if task.cache is not None:
        return task.cache.get(task.detector, task.detector_seed, g)
    return detect(task.detector, g, task.detector_seed)


def make_task(graph0: Graph, target: int, *, detector: DetectorKind | str = DetectorKind.GREEDY,
              tau: float = 0.5, budget: int = 1, weights: PenaltyWeights | None = None,
              detector_seed: int = 0, partition0: Partition | None = None,
              cache: DetectionCache | None = None) -> HidingTask:
    detector = DetectorKind.parse(detector)
    if not 0 <= target < graph0.n:
        raise ValueError(f"target {target} out of range for n={graph0.n}")
    if partition0 is None:
        if cache is not None:
            partition0 = cache.get(detector, detector_seed, graph0)
        else:
            partition0 = detect(detector, graph0, detector_seed)
    return HidingTask(
        graph0=graph0, detector=detector, detector_seed=detector_seed, target=target,
        partition0=partition0, community0=community_of(partition0, target), tau=tau,
        budget=budget, weights=weights or PenaltyWeights(), cache=cache,
    )


def initial_state(task: HidingTask) -> EnvState:
    return EnvState(graph=task.graph0, partition=task.partition0, community=task.community0)


def candidate_actions(task: HidingTask, state: EnvState) -> list[EdgeToggle]:
    """Feasible toggles, sorted by counterpart node.

    Removals are edges from ``u`` into its original community, additions are
    missing edges from ``u`` to nodes outside it.  Each counterpart node
    appears at most once.
    """
    if state.done:
        raise TerminalStateError("no actions in a terminal state")
    u = task.target
    nbrs = state.graph.neighbors(u)
    comm = task.community0
    out = []
    for v in range(task.graph0.n):
        if v == u:
            continue
        if not task.restrict:
            kind = ToggleKind.REMOVE if v in nbrs else ToggleKind.ADD
            out.append(EdgeToggle(u, v, kind))
        elif v in comm:
            if v in nbrs:
                out.append(EdgeToggle(u, v, ToggleKind.REMOVE))
        elif v not in nbrs:
            out.append(EdgeToggle(u, v, ToggleKind.ADD))
    return out


def is_feasible(task: HidingTask, state: EnvState, action: EdgeToggle) -> bool:
    u = task.target
    if action.u != u:
        return False
    v = action.v
    if v == u or not 0 <= v < task.graph0.n:
        return False
    present = state.graph.has_edge(u, v)
    if not task.restrict:
        return present == (action.kind is ToggleKind.REMOVE)
    if action.kind is ToggleKind.REMOVE:
        return v in task.community0 and present
    return v not in task.community0 and not present


def goal_met(task: HidingTask, state: EnvState) -> bool:
    u = task.target
    sim = dice_similarity(task.community0 - {u}, state.community - {u})
    return sim <= task.tau


def step(task: HidingTask, state: EnvState, action: EdgeToggle) -> tuple[EnvState, float]:
    """Apply one toggle; returns the successor state and its reward."""
    if state.done:
        raise TerminalStateError("episode already finished")
    if action.u != task.target and action.v == task.target:
        action = EdgeToggle(action.v, action.u, action.kind)
    if not is_feasible(task, state, action):
        raise InvalidActionError(f"{action} is not a feasible action for target {task.target}")
    graph = toggle_edge(state.graph, action)
    partition = run_detector(task, graph)
    community = community_of(partition, task.target)
    dist = penalty(task.graph0, graph, task.partition0, partition, task.weights)
    n_steps = state.step + 1
    nxt = EnvState(graph=graph, partition=partition, community=community, step=n_steps,
                   dist=dist, actions=state.actions + (action,))
    success = goal_met(task, nxt)
    nxt = replace(nxt, success=success, done=success or n_steps >= task.budget)
    reward = (1.0 if success else 0.0) - task.weights.lam * (dist - state.dist)
    return nxt, reward


def truncate(state: EnvState) -> EnvState:
    """Mark a state terminal because no feasible action is left."""
    return replace(state, done=True, truncated=True)


def episode_loss(task: HidingTask, final: EnvState) -> float:
    if not final.done:
        raise ValueError("episode_loss needs a terminal state")
    return (0.0 if final.success else 1.0) + task.weights.lam * final.dist


def state_loss(task: HidingTask, state: EnvState) -> float:
    """Loss of a (possibly non-terminal) state, as used for greedy look-ahead."""
    return (0.0 if state.success else 1.0) + task.weights.lam * state.dist
