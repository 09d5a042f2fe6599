"""Hide a node from a community detector by rewiring its own edges."""

from .baselines import HiderMethod, HidingOutcome, betweenness_centrality, run_baseline
from .detection import DetectorKind, Partition, detect, modularity
from .env import DetectionCache, EnvState, HidingTask, candidate_actions, initial_state, make_task, step
from .graph import EdgeToggle, Graph, GraphError, ToggleKind, load_edge_list, toggle_edge
from .harness import ExperimentConfig, SummaryRow, TrialRecord, run_experiment
from .metrics import PenaltyWeights, dice_similarity, jaccard_graph_distance, nmi, penalty

__version__ = "0.1.0"
