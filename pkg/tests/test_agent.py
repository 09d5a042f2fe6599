import dataclasses
import itertools

import numpy as np
import pytest
import torch

from hidenet import env
from hidenet.agent import (
    ActorCritic,
    CheckpointError,
    EmbeddingConfig,
    HiderAgent,
    NoActionError,
    TrainConfig,
    Transition,
    a2c_update,
    act,
    advantages,
    compute_embeddings,
    critic_forward,
    gcn_layer,
    init_model,
    load_checkpoint,
    normalized_adjacency,
    observe,
    policy_forward,
    save_checkpoint,
    train,
)
from hidenet.agent.networks import DTYPE
from hidenet.detection import Partition
from hidenet.graph import EdgeToggle, Graph
from hidenet.harness import task_sampler

from . import oracles

SMALL_EMB = EmbeddingConfig(dim=8, walks_per_node=4, walk_length=10, epochs=1)


def small_model(seed=0, feat_dim=8, hidden=6):
    torch.manual_seed(seed)
    return ActorCritic(feat_dim, hidden, dropout=0.0)


def random_feats(n, d, seed=0):
    return torch.from_numpy(np.random.default_rng(seed).normal(size=(n, d)))


def zero_params(model):
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()


@pytest.fixture
def kar_obs(karate):
    task = env.make_task(karate, 0, tau=0.5, budget=3)
    return task, observe(task, env.initial_state(task))


def test_normalized_adjacency_matches_dense_formula(two_triangles):
    a = two_triangles.adjacency_matrix() + np.eye(6)
    d = np.diag(1 / np.sqrt(a.sum(axis=1)))
    np.testing.assert_allclose(normalized_adjacency(two_triangles).to_dense().numpy(), d @ a @ d,
                               rtol=0, atol=1e-15)


def test_gcn_identity_reproduces_adjacency(karate):
    adj = normalized_adjacency(karate)
    eye = torch.eye(karate.n, dtype=DTYPE)
    out = gcn_layer(adj, eye, eye)
    assert torch.equal(out, adj.to_dense())


def test_policy_is_a_distribution_over_feasible_actions(karate, kar_obs):
    task, obs = kar_obs
    model = ActorCritic(8, 6, 0.2)
    probs = policy_forward(model, random_feats(karate.n, 8), obs)
    assert len(probs) == len(obs.actions) == len(env.candidate_actions(task, env.initial_state(task)))
    assert (probs >= 0).all()
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_singleton_action_gets_all_mass():
    g = Graph(3, [(0, 1)])
    task = env.make_task(g, 0, budget=1, partition0=Partition([0, 0, 1]))
    obs = observe(task, env.initial_state(task), actions=[EdgeToggle.add(0, 2)])
    probs = policy_forward(small_model(feat_dim=4), random_feats(3, 4), obs)
    assert probs.tolist() == [1.0]


def test_zero_weights_give_uniform_policy_and_zero_value(karate, kar_obs):
    _, obs = kar_obs
    model = ActorCritic(8, 6, 0.2)
    zero_params(model)
    feats = random_feats(karate.n, 8)
    probs = policy_forward(model, feats, obs)
    np.testing.assert_allclose(probs, np.full(len(probs), 1 / len(probs)), rtol=0, atol=1e-15)
    assert critic_forward(model, feats, obs) == 0.0


def test_empty_action_set_raises():
    g = Graph(4, [(0, 2), (0, 3), (2, 3)])
    task = env.make_task(g, 0, budget=2, partition0=Partition([0, 0, 1, 1]))
    obs = observe(task, env.initial_state(task))
    model = small_model(feat_dim=4)
    with pytest.raises(NoActionError):
        policy_forward(model, random_feats(4, 4), obs)
    with pytest.raises(NoActionError):
        act(model, random_feats(4, 4), task, env.initial_state(task))


def test_critic_rejects_mismatched_features(kar_obs):
    _, obs = kar_obs
    with pytest.raises(ValueError):
        critic_forward(small_model(), random_feats(10, 8), obs)


def test_critic_is_deterministic_and_sees_graph_changes(karate):
    model = ActorCritic(8, 16, 0.2)
    feats = random_feats(karate.n, 8)
    hub = int(np.argmax(karate.degrees()))
    task = env.make_task(karate, hub, budget=3)
    s0 = env.initial_state(task)
    obs0 = observe(task, s0)
    assert critic_forward(model, feats, obs0) == critic_forward(model, feats, obs0)
    s1, _ = env.step(task, s0, env.candidate_actions(task, s0)[0])
    assert abs(critic_forward(model, feats, observe(task, s1)) - critic_forward(model, feats, obs0)) > 0


class _FixedActor:
    def __init__(self, probs):
        self.logp = torch.log(torch.tensor(probs, dtype=DTYPE))

    def __call__(self, feats, obs):
        return self.logp


class _FixedModel:
    def __init__(self, probs):
        self.actor = _FixedActor(probs)

    def eval(self):
        return self


@pytest.mark.parametrize("probs, expected", [([0.2, 0.7, 0.1], 1), ([1 / 3] * 3, 0)])
def test_act_takes_argmax_with_smallest_id_ties(probs, expected):
    g = Graph(5, [(1, 2)])
    task = env.make_task(g, 0, budget=1, partition0=Partition([0, 0, 1, 1, 1]))
    feasible = env.candidate_actions(task, env.initial_state(task))
    assert [a.v for a in feasible] == [2, 3, 4]
    chosen = act(_FixedModel(probs), None, task, env.initial_state(task))
    assert chosen == feasible[expected]


def test_terminal_advantage_example():
    assert advantages([1.0], [0.3], [5.0], [True], 0.95)[0] == pytest.approx(0.7, abs=1e-12)
    assert advantages([0.0], [0.3], [0.5], [False], 0.95)[0] == pytest.approx(0.175, abs=1e-12)


def _one_step_trajectory(karate, model, feats, reward=None):
    task = env.make_task(karate, 0, tau=0.5, budget=1)
    s0 = env.initial_state(task)
    obs = observe(task, s0)
    s1, r = env.step(task, s0, obs.actions[0])
    if reward is None:
        reward = r
    return [Transition(obs, 0, reward, observe(task, s1), True)]


def test_zero_advantage_leaves_actor_unchanged(karate):
    model = ActorCritic(8, 6, 0.0)
    feats = random_feats(karate.n, 8)
    traj = _one_step_trajectory(karate, model, feats)
    # make the reward equal the critic's estimate so the advantage is exactly zero
    traj[0].reward = critic_forward(model, feats, traj[0].obs)
    before = {k: v.clone() for k, v in model.actor.state_dict().items()}
    a2c_update(model, feats, traj, TrainConfig(entropy_coeff=0.0, lr_actor=0.5))
    for k, v in model.actor.state_dict().items():
        assert torch.equal(v, before[k])


def test_update_moves_parameters_and_empty_is_noop(karate):
    model = ActorCritic(8, 6, 0.0)
    feats = random_feats(karate.n, 8)
    before = [p.clone() for p in model.parameters()]
    assert a2c_update(model, feats, [], TrainConfig()) == {"actor_loss": 0.0, "critic_loss": 0.0}
    assert all(torch.equal(a, b) for a, b in zip(before, model.parameters()))
    a2c_update(model, feats, _one_step_trajectory(karate, model, feats, reward=1.0),
               TrainConfig(lr_actor=0.1, lr_critic=0.1))
    assert any(not torch.equal(a, b) for a, b in zip(before, model.parameters()))


def relu_pattern(net, feats, obs):
    """Signs of every ReLU input in ``net`` for one forward pass."""
    signs = []
    hooks = [m.register_forward_hook(lambda mod, inp, out: signs.append(out > 0))
             for m in net.block if isinstance(m, torch.nn.Linear)]
    try:
        with torch.no_grad():
            signs.append(torch.sparse.mm(obs.adj_norm, feats @ net.gcn_weight) > 0)
            net(feats, obs)
    finally:
        for h in hooks:
            h.remove()
    return signs


def _gradient_mismatches(net, loss_fn, rng, pattern, per_tensor=4, eps=1e-4):
    """Entries whose analytic and central-difference derivatives disagree.

    Entries whose +-eps step flips a ReLU are redrawn: the loss has a kink
    there, so the difference quotient is not a derivative estimate.
    Returns ``(mismatches, redraws)``.
    """
    net.zero_grad()
    loss_fn().backward()
    bad, redraws = [], 0
    for name, p in net.named_parameters():
        checked = 0
        while checked < per_tensor:
            idx = tuple(int(rng.integers(s)) for s in p.shape)
            base = pattern()
            with torch.no_grad():
                old = p[idx].item()
                p[idx] = old + eps
                up = pattern()
                p[idx] = old - eps
                down = pattern()
                p[idx] = old
            if any(not torch.equal(a, b) for a, b in zip(base + base, up + down)):
                redraws += 1
                continue
            analytic = p.grad[idx].item()
            numeric = oracles.central_difference(loss_fn, p, idx, eps)
            scale = max(abs(analytic), abs(numeric), 1e-6)
            if abs(analytic - numeric) / scale > 1e-3:
                bad.append((name, idx, analytic, numeric))
            checked += 1
    return bad, redraws


def make_gradcheck_case(seed, graph):
    """A random small model, observation and scalar losses for both networks."""
    rng = np.random.default_rng(seed)
    model = small_model(seed, feat_dim=5, hidden=7)
    model.eval()
    feats = torch.from_numpy(rng.normal(size=(graph.n, 5)))
    u = int(rng.integers(graph.n))
    task = env.make_task(graph, u, tau=0.5, budget=3)
    obs = observe(task, env.initial_state(task))
    w = torch.from_numpy(rng.normal(size=len(obs.actions)))
    actor = {"loss": lambda: (model.actor(feats, obs) * w).sum(),
             "pattern": lambda: relu_pattern(model.actor, feats, obs)}
    critic = {"loss": lambda: (model.critic(feats, obs) - 0.5) ** 2,
              "pattern": lambda: relu_pattern(model.critic, feats, obs)}
    return model, actor, critic, rng


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(seed):
    g = Graph(7, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 6)])
    model, actor, critic, rng = make_gradcheck_case(seed, g)
    assert _gradient_mismatches(model.actor, actor["loss"], rng, actor["pattern"])[0] == []
    assert _gradient_mismatches(model.critic, critic["loss"], rng, critic["pattern"])[0] == []


def test_embeddings_separate_cliques():
    cliques = [(i, j) for i, j in itertools.combinations(range(5), 2)]
    g = Graph(10, cliques + [(i + 5, j + 5) for i, j in cliques])
    for seed in (0, 1):
        x = compute_embeddings(g, dataclasses.replace(EmbeddingConfig(), seed=seed))
        x = x / np.linalg.norm(x, axis=1, keepdims=True)
        cos = x @ x.T
        intra = np.mean([cos[i, j] for i in range(10) for j in range(10) if i != j and i // 5 == j // 5])
        inter = np.mean([cos[i, j] for i in range(10) for j in range(10) if i // 5 != j // 5])
        assert intra > inter


def test_embedding_shapes_and_determinism(karate):
    x = compute_embeddings(karate, EmbeddingConfig(dim=64))
    assert x.shape == (34, 64) and np.isfinite(x).all()
    assert np.array_equal(x, compute_embeddings(karate, EmbeddingConfig(dim=64)))
    pair = compute_embeddings(Graph(2, [(0, 1)]), SMALL_EMB)
    assert pair.shape == (2, 8) and np.isfinite(pair).all()
    lonely = compute_embeddings(Graph(3, [(0, 1)]), SMALL_EMB)
    assert np.isfinite(lonely).all()
    with pytest.raises(ValueError):
        compute_embeddings(Graph(1), SMALL_EMB)
    with pytest.raises(ValueError):
        EmbeddingConfig(dim=0)


def test_train_zero_episodes_returns_initialization(karate):
    cfg = TrainConfig(episodes=0, hidden_dim=6, seed=4)
    agent = train(task_sampler(karate), cfg, SMALL_EMB)
    ref = init_model(SMALL_EMB.dim, cfg)
    for a, b in zip(agent.model.state_dict().values(), ref.state_dict().values()):
        assert torch.equal(a, b)
    assert agent.history == []


def test_training_is_reproducible(karate):
    cfg = TrainConfig(episodes=15, hidden_dim=6, seed=2)
    a = train(task_sampler(karate), cfg, SMALL_EMB)
    b = train(task_sampler(karate), cfg, SMALL_EMB)
    assert a.history == b.history
    for x, y in zip(a.model.parameters(), b.model.parameters()):
        assert torch.equal(x, y)


def test_agent_episode_respects_budget(karate):
    agent = train(task_sampler(karate), TrainConfig(episodes=5, hidden_dim=6), SMALL_EMB)
    for u in (0, 9, 33):
        task = env.make_task(karate, u, tau=0.3, budget=2)
        final = agent.run(task)
        assert final.done and final.step <= 2
        assert all(a.u == u for a in final.actions)


def test_checkpoint_round_trip_is_bit_exact(tmp_path, karate):
    agent = train(task_sampler(karate), TrainConfig(episodes=3, hidden_dim=6, seed=9), SMALL_EMB)
    path = tmp_path / "agent.npz"
    save_checkpoint(agent, path)
    back = load_checkpoint(path)
    assert back.emb_cfg == agent.emb_cfg
    assert back.train_cfg == agent.train_cfg
    assert back.detector_train == agent.detector_train
    assert back.history == agent.history
    for (k, a), (k2, b) in zip(agent.model.state_dict().items(), back.model.state_dict().items()):
        assert k == k2 and a.dtype == b.dtype and torch.equal(a, b)
    task = env.make_task(karate, 5, budget=2)
    assert back.run(task) == agent.run(task)


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, x=np.zeros(3))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


@pytest.mark.parametrize("kwargs", [{"gamma": 1.0}, {"lr_actor": 0.0}, {"dropout": 1.0},
                                    {"entropy_coeff": -1.0}, {"optimizer": "rmsprop"}])
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)
