"""Graph-convolution actor and critic.

Both networks start with one GCN layer over the *current* adjacency
(``D^-1/2 (A + I) D^-1/2``) applied to fixed node embeddings.  The actor
scores every node with a three-layer MLP fed by the convolved features plus
skip connections, then takes a softmax over the counterpart nodes of the
feasible toggles.  The critic sum-pools the convolved features and regresses
a scalar state value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .. import env
from ..graph import EdgeToggle, Graph, ToggleKind

DTYPE = torch.float64


class NoActionError(ValueError):
    pass


def normalized_adjacency(g: Graph) -> torch.Tensor:
    """Sparse ``D^-1/2 (A + I) D^-1/2`` as a coalesced COO tensor."""
    n = g.n
    edges = np.array(g.sorted_edges(), dtype=np.int64).reshape(-1, 2)
    loops = np.arange(n, dtype=np.int64)
    rows = np.concatenate([edges[:, 0], edges[:, 1], loops])
    cols = np.concatenate([edges[:, 1], edges[:, 0], loops])
    deg = g.degrees().astype(np.float64) + 1.0
    inv_sqrt = 1.0 / np.sqrt(deg)
    vals = inv_sqrt[rows] * inv_sqrt[cols]
    idx = torch.from_numpy(np.stack([rows, cols]))
    return torch.sparse_coo_tensor(idx, torch.from_numpy(vals), (n, n), dtype=DTYPE,
                                   check_invariants=True).coalesce()


def gcn_layer(adj_norm: torch.Tensor, x: torch.Tensor, weight: torch.Tensor) -> torch.Tensor:
    """``ReLU(A_hat X W)``; ``adj_norm`` may be dense or sparse."""
    xw = x @ weight
    out = torch.sparse.mm(adj_norm, xw) if adj_norm.is_sparse else adj_norm @ xw
    return torch.relu(out)


@dataclass(frozen=True)
class Observation:
    """Everything the networks see of an :class:`env.EnvState`."""

    adj_norm: torch.Tensor
    target: int
    actions: tuple[EdgeToggle, ...]
    counterparts: torch.Tensor   # long, one node per feasible action
    node_flags: torch.Tensor     # n x 3: remove-candidate, add-candidate, in current community
    context: torch.Tensor        # remaining budget fraction, tau


def observe(task: env.HidingTask, state: env.EnvState, actions=None) -> Observation:
    n = task.graph0.n
    if actions is None:
        actions = [] if state.done else env.candidate_actions(task, state)
    flags = torch.zeros((n, 3), dtype=DTYPE)
    for a in actions:
        flags[a.v, 0 if a.kind is ToggleKind.REMOVE else 1] = 1.0
    flags[list(state.community), 2] = 1.0
    remaining = (task.budget - state.step) / task.budget
    return Observation(
        adj_norm=normalized_adjacency(state.graph),
        target=task.target,
        actions=tuple(actions),
        counterparts=torch.tensor([a.v for a in actions], dtype=torch.long),
        node_flags=flags,
        context=torch.tensor([remaining, task.tau], dtype=DTYPE),
    )


def _mlp(in_dim: int, hidden: int, dropout: float) -> nn.Sequential:
    layers: list[nn.Module] = []
    dim = in_dim
    for _ in range(3):
        layers += [nn.Linear(dim, hidden), nn.ReLU(), nn.Dropout(dropout)]
        dim = hidden
    return nn.Sequential(*layers)


class PolicyNet(nn.Module):
    def __init__(self, feat_dim: int, hidden: int, dropout: float = 0.2):
        super().__init__()
        self.gcn_weight = nn.Parameter(torch.empty(feat_dim, hidden, dtype=DTYPE))
        nn.init.xavier_uniform_(self.gcn_weight)
        # per node: conv output, raw features (skip), target's conv output, 3 flags
        self.block = _mlp(2 * hidden + feat_dim + 3, hidden, dropout)
        self.head = nn.Linear(hidden, 1)

    def scores(self, feats: torch.Tensor, obs: Observation) -> torch.Tensor:
        h = gcn_layer(obs.adj_norm, feats, self.gcn_weight)
        n = feats.shape[0]
        z = torch.cat([h, feats, h[obs.target].expand(n, -1), obs.node_flags], dim=1)
        return self.head(self.block(z)).squeeze(-1)

    def forward(self, feats: torch.Tensor, obs: Observation) -> torch.Tensor:
        """Log-probabilities over ``obs.actions`` (infeasible nodes are excluded)."""
        if len(obs.actions) == 0:
            raise NoActionError("no feasible action to score")
        logits = self.scores(feats, obs)[obs.counterparts]
        return torch.log_softmax(logits, dim=0)


class ValueNet(nn.Module):
    def __init__(self, feat_dim: int, hidden: int, dropout: float = 0.2):
        super().__init__()
        self.gcn_weight = nn.Parameter(torch.empty(feat_dim, hidden, dtype=DTYPE))
        nn.init.xavier_uniform_(self.gcn_weight)
        self.block = _mlp(2 * hidden + 2, hidden, dropout)
        self.head = nn.Linear(hidden, 1)

    def forward(self, feats: torch.Tensor, obs: Observation) -> torch.Tensor:
        if feats.shape[0] != obs.adj_norm.shape[0]:
            raise ValueError(f"features cover {feats.shape[0]} nodes, graph has {obs.adj_norm.shape[0]}")
        h = gcn_layer(obs.adj_norm, feats, self.gcn_weight)
        z = torch.cat([h.sum(dim=0), h[obs.target], obs.context])
        return self.head(self.block(z)).squeeze(-1)


class ActorCritic(nn.Module):
    def __init__(self, feat_dim: int = 64, hidden: int = 128, dropout: float = 0.2):
        super().__init__()
        self.feat_dim = feat_dim
        self.hidden = hidden
        self.dropout = dropout
        self.actor = PolicyNet(feat_dim, hidden, dropout)
        self.critic = ValueNet(feat_dim, hidden, dropout)
        self.to(DTYPE)


def policy_forward(model: ActorCritic, feats: torch.Tensor, obs: Observation) -> np.ndarray:
    """Action probabilities aligned with ``obs.actions`` (eval mode, no grad)."""
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            probs = model.actor(feats, obs).exp().numpy()
    finally:
        model.train(was_training)
    return probs


def critic_forward(model: ActorCritic, feats: torch.Tensor, obs: Observation) -> float:
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            return float(model.critic(feats, obs))
    finally:
        model.train(was_training)
