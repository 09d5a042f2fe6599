"""Agent checks on the bundled karate graph.

These mirror the agent acceptance criteria (which are defined on the words
graph) at a scale that always runs.  They are not substitutes for them.
"""

import numpy as np
import pytest

from hidenet.detection import DetectorKind
from hidenet.harness import ExperimentConfig, run_experiment, task_sampler
from hidenet.agent import train

from .test_acceptance import AGENT_TRAIN, EVAL_TRIALS, NOISE

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def kar_agent(karate):
    return train(task_sampler(karate, tau=0.5, beta_multiplier=1.0), AGENT_TRAIN)


def sr(karate, method, agent=None, detector=DetectorKind.GREEDY, tau=0.5, beta=1.0):
    cfg = ExperimentConfig("kar", method, detector_eval=detector, detector_train=DetectorKind.GREEDY,
                           tau=tau, beta_multiplier=beta, trials=EVAL_TRIALS, seed=0,
                           checkpoint="in-memory" if method == "agent" else None)
    return run_experiment(cfg, graph=karate, agent=agent)[1].sr


def test_learning_curve_rises(kar_agent):
    h = np.asarray(kar_agent.history)
    tenth = len(h) // 10
    assert h[-tenth:].mean() >= h[:tenth].mean()


def test_agent_beats_random(karate, kar_agent):
    assert sr(karate, "agent", kar_agent) >= sr(karate, "random") + 0.05


def test_agent_transfers_to_label_propagation(karate, kar_agent):
    lpa = DetectorKind.LABEL_PROPAGATION
    assert sr(karate, "agent", kar_agent, detector=lpa) >= sr(karate, "random", detector=lpa)


@pytest.mark.parametrize("method", ["agent", "random"])
def test_success_rate_grows_with_tau_and_budget(karate, kar_agent, method):
    by_tau = [sr(karate, method, kar_agent, tau=t) for t in (0.3, 0.5, 0.8)]
    by_beta = [sr(karate, method, kar_agent, beta=b) for b in (0.5, 1.0, 2.0)]
    for series in (by_tau, by_beta):
        assert all(b >= a - NOISE for a, b in zip(series, series[1:])), series
