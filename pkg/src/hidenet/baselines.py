"""Non-learning hiding strategies.

All methods stop as soon as the goal is met or the budget is spent, and only
ever touch edges incident to the target.  Random, Degree and Betweenness come
in two scopes: ``"any"`` picks any other node and toggles the edge to it
(removing it if present, adding it otherwise), never revisiting a node within
an episode; ``"feasible"`` restricts them to the agent's action set.  Roam and
Greedy are defined on that action set and ignore the scope.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import env
from .detection import Partition
from .graph import EdgeToggle, Graph, ToggleKind


class HiderMethod(str, enum.Enum):
    RANDOM = "random"
    DEGREE = "degree"
    BETWEENNESS = "betweenness"
    ROAM = "roam"
    GREEDY = "greedy"


@dataclass(frozen=True)
class HidingOutcome:
    success: bool
    steps_used: int
    actions: tuple[EdgeToggle, ...]
    final_graph: Graph
    final_partition: Partition
    truncated: bool = False
    final_state: env.EnvState | None = None

    @classmethod
    def from_state(cls, state: env.EnvState) -> "HidingOutcome":
        return cls(success=state.success, steps_used=state.step, actions=state.actions,
                   final_graph=state.graph, final_partition=state.partition,
                   truncated=state.truncated, final_state=state)


def betweenness_centrality(g: Graph) -> np.ndarray:
    """Exact unnormalized betweenness (Brandes), unordered pairs counted once."""
    n = g.n
    bc = np.zeros(n)
    nbrs = [sorted(g.neighbors(u)) for u in range(n)]
    for s in range(n):
        order = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    return bc / 2.0


def _argmax_by(actions: list[EdgeToggle], score) -> EdgeToggle:
    # actions arrive sorted by counterpart id, so the first maximum wins ties
    best, best_score = actions[0], score(actions[0])
    for a in actions[1:]:
        s = score(a)
        if s > best_score:
            best, best_score = a, s
    return best


def _choose_degree(task, state, actions, rng):
    g = state.graph
    return _argmax_by(actions, lambda a: g.degree(a.v))


def _choose_betweenness(task, state, actions, rng):
    bc = betweenness_centrality(state.graph)
    return _argmax_by(actions, lambda a: bc[a.v])


def _choose_random(task, state, actions, rng):
    return actions[int(rng.integers(len(actions)))]


def _run_roam(task: env.HidingTask, state: env.EnvState) -> env.EnvState:
    # one round = drop the link to the best-connected community neighbour,
    # then link to the best-connected outsider
    want_remove = True
    while not state.done:
        actions = env.candidate_actions(task, state)
        if not actions:
            return env.truncate(state)
        removes = [a for a in actions if a.kind is ToggleKind.REMOVE]
        adds = [a for a in actions if a.kind is ToggleKind.ADD]
        pool = removes if (want_remove and removes) or not adds else adds
        g = state.graph
        action = _argmax_by(pool, lambda a: g.degree(a.v))
        state, _ = env.step(task, state, action)
        want_remove = action.kind is not ToggleKind.REMOVE
    return state


def greedy_candidates(task: env.HidingTask, state: env.EnvState) -> tuple[EdgeToggle | None, EdgeToggle | None]:
    """The two actions the relaxed greedy rule considers: (remove, add)."""
    actions = env.candidate_actions(task, state)
    g = state.graph
    comm = task.community0
    removes = [a for a in actions if a.kind is ToggleKind.REMOVE]
    adds = [a for a in actions if a.kind is ToggleKind.ADD]
    rem = _argmax_by(removes, lambda a: len(g.neighbors(a.v) & comm)) if removes else None
    add = _argmax_by(adds, lambda a: g.degree(a.v)) if adds else None
    return rem, add


def _run_greedy(task: env.HidingTask, state: env.EnvState) -> env.EnvState:
    while not state.done:
        rem, add = greedy_candidates(task, state)
        if rem is None and add is None:
            return env.truncate(state)
        options = []
        # the look-ahead successor is kept, so f runs at most twice per step
        for action in (rem, add):
            if action is not None:
                nxt, _ = env.step(task, state, action)
                options.append((env.state_loss(task, nxt), nxt))
        best = options[0]
        for opt in options[1:]:
            if opt[0] < best[0]:
                best = opt
        state = best[1]
    return state


_CHOOSERS = {
    HiderMethod.RANDOM: _choose_random,
    HiderMethod.DEGREE: _choose_degree,
    HiderMethod.BETWEENNESS: _choose_betweenness,
}


SCOPES = ("any", "feasible")


def run_policy(task: env.HidingTask, choose, rng=None) -> env.EnvState:
    """Roll out ``choose(task, state, actions, rng)`` until goal or budget."""
    state = env.initial_state(task)
    while not state.done:
        actions = env.candidate_actions(task, state)
        if not task.restrict:
            touched = {a.v for a in state.actions}
            actions = [a for a in actions if a.v not in touched]
        if not actions:
            return env.truncate(state)
        state, _ = env.step(task, state, choose(task, state, actions, rng))
    return state


def run_baseline(method: HiderMethod | str, task: env.HidingTask, rng_seed: int = 0,
                 scope: str = "any") -> HidingOutcome:
    method = HiderMethod(method)
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}")
    if method is HiderMethod.ROAM:
        final = _run_roam(task, env.initial_state(task))
    elif method is HiderMethod.GREEDY:
        final = _run_greedy(task, env.initial_state(task))
    else:
        rng = np.random.default_rng(rng_seed)
        if scope == "any":
            task = replace(task, restrict=False)
        final = run_policy(task, _CHOOSERS[method], rng)
    return HidingOutcome.from_state(final)
