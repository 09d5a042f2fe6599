from .a2c import (
    HiderAgent,
    TrainConfig,
    TrainingDivergedError,
    Transition,
    a2c_losses,
    a2c_update,
    act,
    advantages,
    init_model,
    rollout,
    train,
)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .embeddings import EmbeddingConfig, compute_embeddings
from .networks import (
    ActorCritic,
    NoActionError,
    Observation,
    critic_forward,
    gcn_layer,
    normalized_adjacency,
    observe,
    policy_forward,
)
