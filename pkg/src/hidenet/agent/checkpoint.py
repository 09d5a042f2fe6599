"""Versioned ``.npz`` checkpoints: one array per tensor plus a JSON header."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from ..detection import DetectorKind
from .a2c import HiderAgent, TrainConfig, config_dict
from .embeddings import EmbeddingConfig
from .networks import DTYPE, ActorCritic

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(agent: HiderAgent, path: str | Path) -> None:
    meta = {"format": "hidenet-a2c", "version": FORMAT_VERSION, **config_dict(agent),
            "shapes": {k: list(v.shape) for k, v in agent.model.state_dict().items()},
            "history": agent.history}
    arrays = {f"param/{k}": v.detach().cpu().numpy() for k, v in agent.model.state_dict().items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_checkpoint(path: str | Path) -> HiderAgent:
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise CheckpointError(f"{path}: missing header")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != "hidenet-a2c":
            raise CheckpointError(f"{path}: not a hidenet checkpoint")
        if meta.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported version {meta.get('version')}")
        state = {k[len("param/"):]: torch.from_numpy(data[k].copy())
                 for k in data.files if k.startswith("param/")}
    for k, shape in meta["shapes"].items():
        if k not in state or list(state[k].shape) != shape:
            raise CheckpointError(f"{path}: tensor {k} missing or mis-shaped")
    model = ActorCritic(meta["feat_dim"], meta["hidden"], meta["dropout"])
    model.load_state_dict({k: v.to(DTYPE) for k, v in state.items()})
    model.eval()
    return HiderAgent(
        model=model,
        emb_cfg=EmbeddingConfig(**meta["emb"]),
        train_cfg=TrainConfig(**meta["train"]),
        detector_train=DetectorKind(meta["detector_train"]),
        history=list(meta.get("history", [])),
    )
