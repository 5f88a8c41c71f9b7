"""Seeded mini-batch training and checkpoint I/O for the forecaster."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np
import torch

from ..pipeline.dataset import WindowedDataset
from .astgcn import DTYPE, DemandForecaster, TrainConfig, loss_fn


class TrainingDiverged(RuntimeError):
    pass


def _split_loss(model: DemandForecaster, feats: torch.Tensor,
                truths: torch.Tensor, chunk: int = 4096) -> float:
    was_training = model.training
    model.train()  # loss uses raw (unclamped) outputs on every split
    total, count = 0.0, 0
    with torch.no_grad():
        for i in range(0, feats.shape[0], chunk):
            f, t = feats[i:i + chunk], truths[i:i + chunk]
            total += float(((model(f) - t) ** 2).sum(dim=1).sum())
            count += f.shape[0]
    if not was_training:
        model.eval()
    return total / max(count, 1)


def train(
    config: TrainConfig,
    dataset: WindowedDataset,
    fixed_similarity: np.ndarray | None = None,
    log_every: int | None = None,
) -> tuple[DemandForecaster, dict[str, list[float]]]:
    """Train with RMSprop; keep the parameters with the lowest validation
    loss. Deterministic under config.seed.

    Returns (model loaded with the best parameters, loss curves per split).
    Raises TrainingDiverged when the batch loss explodes past 1e6 and
    ValueError on an empty split.
    """
    # the tensors here are small enough that thread fan-out costs more than
    # it saves, and a fixed thread count keeps reruns bit-identical
    torch.set_num_threads(1)
    tensors = {}
    for name in ("train", "val", "test"):
        feats, truths = dataset.subset(name)
        if feats.shape[0] == 0:
            raise ValueError(f"empty {name} split")
        tensors[name] = (
            torch.as_tensor(feats, dtype=DTYPE),
            torch.as_tensor(truths, dtype=DTYPE),
        )

    model = DemandForecaster(config, fixed_similarity=fixed_similarity)
    opt = torch.optim.RMSprop(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    curves: dict[str, list[float]] = {"train": [], "val": [], "test": []}
    best_val = np.inf
    best_state = copy.deepcopy(model.state_dict())
    best_epoch = 0

    n_train = tensors["train"][0].shape[0]
    feats_tr, truths_tr = tensors["train"]
    model.train()
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        for i in range(0, n_train, config.batch_size):
            idx = order[i:i + config.batch_size]
            opt.zero_grad(set_to_none=True)
            loss = loss_fn(model, feats_tr[idx], truths_tr[idx])
            val = float(loss.detach())
            if not np.isfinite(val) or val > 1e6:
                raise TrainingDiverged(
                    f"loss {val:.3e} at epoch {epoch}, batch {i // config.batch_size}"
                )
            loss.backward()
            opt.step()
        for name in ("train", "val", "test"):
            curves[name].append(_split_loss(model, *tensors[name]))
        if curves["val"][-1] < best_val:
            best_val = curves["val"][-1]
            best_state = copy.deepcopy(model.state_dict())
            best_epoch = epoch
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}: train {curves['train'][-1]:.5f} "
                  f"val {curves['val'][-1]:.5f} test {curves['test'][-1]:.5f}")

    model.load_state_dict(best_state)
    model.eval()
    model.best_epoch = best_epoch
    model.best_val_loss = best_val
    return model, curves


def predict(model: DemandForecaster, features: np.ndarray,
            chunk: int = 4096) -> np.ndarray:
    """Clamped deterministic forecasts for [n, C, N, T] feature arrays."""
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, features.shape[0], chunk):
            f = torch.as_tensor(features[i:i + chunk], dtype=DTYPE)
            out.append(model(f).numpy())
    return np.concatenate(out, axis=0)


def save_checkpoint(path: Path, model: DemandForecaster,
                    scales: np.ndarray, metadata: dict | None = None) -> None:
    doc = {
        "config": model.config.to_dict(),
        "scales_kw": [float(s) for s in scales],
        "metadata": metadata or {},
        "parameters": {
            name: {
                "shape": list(tensor.shape),
                "values": tensor.detach().reshape(-1).tolist(),
            }
            for name, tensor in model.state_dict().items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: Path,
                    fixed_similarity: np.ndarray | None = None
                    ) -> tuple[DemandForecaster, np.ndarray, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = TrainConfig(**doc["config"])
    state = {
        name: torch.tensor(entry["values"], dtype=DTYPE).reshape(entry["shape"])
        for name, entry in doc["parameters"].items()
    }
    if fixed_similarity is None and "fixed_w" in state:
        fixed_similarity = state["fixed_w"].numpy()
    model = DemandForecaster(config, fixed_similarity=fixed_similarity)
    model.load_state_dict(state)
    model.eval()
    return model, np.asarray(doc["scales_kw"]), doc["metadata"]


def write_loss_curves(path: Path, curves: dict[str, list[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,train,val,test\n")
        for i, (tr, va, te) in enumerate(
            zip(curves["train"], curves["val"], curves["test"]), start=1
        ):
            fh.write(f"{i},{tr!r},{va!r},{te!r}\n")
