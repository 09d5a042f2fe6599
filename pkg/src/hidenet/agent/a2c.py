"""Advantage actor-critic training and greedy inference for the hiding agent."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from .. import env
from ..detection import DetectorKind
from ..graph import EdgeToggle, Graph
from .embeddings import EmbeddingConfig, compute_embeddings
from .networks import DTYPE, ActorCritic, NoActionError, Observation, observe

logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.95
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    episodes: int = 2000
    dropout: float = 0.2
    hidden_dim: int = 128
    entropy_coeff: float = 0.01
    grad_clip: float = 1.0
    optimizer: str = "sgd"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.lr_actor <= 0 or self.lr_critic <= 0:
            raise ValueError("learning rates must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.entropy_coeff < 0:
            raise ValueError("entropy_coeff must be non-negative")
        if self.episodes < 0 or self.hidden_dim < 1:
            raise ValueError("episodes and hidden_dim must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class Transition:
    obs: Observation
    action: int          # index into obs.actions
    reward: float
    next_obs: Observation
    done: bool


def advantages(rewards: Sequence[float], values: Sequence[float],
               next_values: Sequence[float], dones: Sequence[bool], gamma: float) -> np.ndarray:
    """One-step advantage ``r + gamma * V(s') - V(s)``, with ``V(s') = 0`` at episode end."""
    r = np.asarray(rewards, dtype=float)
    nv = np.where(np.asarray(dones, dtype=bool), 0.0, np.asarray(next_values, dtype=float))
    return r + gamma * nv - np.asarray(values, dtype=float)


def make_optimizers(model: ActorCritic, cfg: TrainConfig):
    if cfg.optimizer == "adam":
        opt = torch.optim.Adam
    else:
        opt = torch.optim.SGD
    return (opt(model.actor.parameters(), lr=cfg.lr_actor),
            opt(model.critic.parameters(), lr=cfg.lr_critic))


def a2c_losses(model: ActorCritic, feats: torch.Tensor, trajectory: list[Transition],
               cfg: TrainConfig):
    """Actor and critic losses for one episode.

    Advantages are detached, so the actor loss only moves the policy and the
    critic loss only moves the value network.
    """
    values = torch.stack([model.critic(feats, t.obs) for t in trajectory])
    with torch.no_grad():
        next_values = torch.stack([
            torch.zeros((), dtype=DTYPE) if t.done else model.critic(feats, t.next_obs)
            for t in trajectory
        ])
    rewards = torch.tensor([t.reward for t in trajectory], dtype=DTYPE)
    targets = rewards + cfg.gamma * next_values
    adv = (targets - values).detach()
    logps = []
    entropies = []
    for t in trajectory:
        logp = model.actor(feats, t.obs)
        logps.append(logp[t.action])
        entropies.append(-(logp.exp() * logp).sum())
    actor_loss = -(torch.stack(logps) * adv).sum() - cfg.entropy_coeff * torch.stack(entropies).sum()
    critic_loss = ((values - targets) ** 2).sum()
    return actor_loss, critic_loss


def a2c_update(model: ActorCritic, feats: torch.Tensor, trajectory: list[Transition],
               cfg: TrainConfig, optimizers=None) -> dict:
    if not trajectory:
        return {"actor_loss": 0.0, "critic_loss": 0.0}
    if optimizers is None:
        optimizers = make_optimizers(model, cfg)
    opt_actor, opt_critic = optimizers
    actor_loss, critic_loss = a2c_losses(model, feats, trajectory, cfg)
    if not (torch.isfinite(actor_loss) and torch.isfinite(critic_loss)):
        raise TrainingDivergedError(
            f"non-finite loss (actor={float(actor_loss)}, critic={float(critic_loss)})")
    opt_actor.zero_grad()
    opt_critic.zero_grad()
    (actor_loss + critic_loss).backward()
    torch.nn.utils.clip_grad_norm_(model.actor.parameters(), cfg.grad_clip)
    torch.nn.utils.clip_grad_norm_(model.critic.parameters(), cfg.grad_clip)
    opt_actor.step()
    opt_critic.step()
    return {"actor_loss": actor_loss.item(), "critic_loss": critic_loss.item()}


def init_model(feat_dim: int, cfg: TrainConfig) -> ActorCritic:
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        model = ActorCritic(feat_dim, cfg.hidden_dim, cfg.dropout)
    return model


@dataclass
class HiderAgent:
    """A trained policy plus the embedding recipe it expects."""

    model: ActorCritic
    emb_cfg: EmbeddingConfig
    train_cfg: TrainConfig
    detector_train: DetectorKind = DetectorKind.GREEDY
    history: list[float] = field(default_factory=list)
    _feats: dict = field(default_factory=dict, repr=False)

    def features(self, g: Graph) -> torch.Tensor:
        feats = self._feats.get(g)
        if feats is None:
            feats = torch.from_numpy(compute_embeddings(g, self.emb_cfg)).to(DTYPE)
            self._feats[g] = feats
        return feats

    def act(self, task: env.HidingTask, state: env.EnvState) -> EdgeToggle:
        return act(self.model, self.features(task.graph0), task, state)

    def run(self, task: env.HidingTask) -> env.EnvState:
        state = env.initial_state(task)
        while not state.done:
            if not env.candidate_actions(task, state):
                return env.truncate(state)
            state, _ = env.step(task, state, self.act(task, state))
        return state


def act(model: ActorCritic, feats: torch.Tensor, task: env.HidingTask,
        state: env.EnvState) -> EdgeToggle:
    """Most probable feasible action; ties go to the smallest counterpart id."""
    obs = observe(task, state)
    if not obs.actions:
        raise NoActionError("no feasible action")
    model.eval()
    with torch.no_grad():
        logp = model.actor(feats, obs).numpy()
    # actions are sorted by counterpart, so argmax's first-hit rule is the tie rule
    return obs.actions[int(np.argmax(logp))]


def rollout(model: ActorCritic, feats: torch.Tensor, task: env.HidingTask,
            rng: np.random.Generator) -> tuple[list[Transition], env.EnvState]:
    """Sample one episode from the current policy (training mode)."""
    state = env.initial_state(task)
    obs = observe(task, state)
    traj: list[Transition] = []
    while not state.done:
        if not obs.actions:
            state = env.truncate(state)
            break
        with torch.no_grad():
            probs = model.actor(feats, obs).exp().numpy()
        probs = probs / probs.sum()
        idx = int(rng.choice(len(probs), p=probs))
        state, reward = env.step(task, state, obs.actions[idx])
        next_obs = observe(task, state)
        traj.append(Transition(obs, idx, reward, next_obs, state.done))
        obs = next_obs
    return traj, state


TaskSampler = Callable[[np.random.Generator], env.HidingTask]


def train(sampler: TaskSampler, cfg: TrainConfig = TrainConfig(),
          emb: EmbeddingConfig = EmbeddingConfig(),
          detector_train: DetectorKind = DetectorKind.GREEDY,
          log_every: int = 0) -> HiderAgent:
    """Train on ``cfg.episodes`` sampled tasks, one A2C update per episode."""
    rng = np.random.default_rng(cfg.seed)
    model = init_model(emb.dim, cfg)
    agent = HiderAgent(model=model, emb_cfg=emb, train_cfg=cfg, detector_train=detector_train)
    optimizers = make_optimizers(model, cfg)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed + 1)
        for episode in range(cfg.episodes):
            task = sampler(rng)
            feats = agent.features(task.graph0)
            model.train()
            traj, final = rollout(model, feats, task, rng)
            a2c_update(model, feats, traj, cfg, optimizers)
            ret = sum(t.reward for t in traj)
            if not math.isfinite(ret):
                raise TrainingDivergedError(f"non-finite return at episode {episode}")
            agent.history.append(ret)
            if log_every and (episode + 1) % log_every == 0:
                recent = agent.history[-log_every:]
                logger.info("episode %d: mean return %.3f", episode + 1, float(np.mean(recent)))
    model.eval()
    return agent


def config_dict(agent: HiderAgent) -> dict:
    return {
        "emb": asdict(agent.emb_cfg),
        "train": asdict(agent.train_cfg),
        "detector_train": agent.detector_train.value,
        "feat_dim": agent.model.feat_dim,
        "hidden": agent.model.hidden,
        "dropout": agent.model.dropout,
    }
