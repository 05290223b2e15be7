"""Centralized and federated-local training for the battery model.

``train_model`` is the plain Adam trainer used for benchmarks and for seeding
deployable checkpoints. ``train_local`` is the federated client step: it
starts from the supplied global weights and optimizes the data loss plus the
proximal penalty (mu/2)*||w - w_global||^2 with a proximal-gradient update,
so arbitrarily large mu values stay stable and pin the weights to the global
model instead of diverging.
"""
from __future__ import annotations

import numpy as np
import torch

from evops.battery.model import BatteryModel, multi_task_loss
from evops.battery.types import EmptyShard, MultiTaskModelConfig
from evops.evalkit.synth import BatteryDataset
from evops.fl.coordinator import ModelUpdate


def _shard_tensors(model: BatteryModel, shard: BatteryDataset):
    x = model.normalize(shard.windows)
    y_cls = torch.tensor(shard.soh_anomaly.astype(np.float32))
    y_reg = torch.tensor(
        (shard.capacity - model.target_mean) / model.target_std,
        dtype=torch.float32)
    return x, y_cls, y_reg


def train_model(model: BatteryModel, data: BatteryDataset, epochs: int = 10,
                seed: int = 0) -> list[float]:
    """Adam training on one dataset; returns per-epoch mean losses."""
    if len(data) == 0:
        raise EmptyShard("training dataset is empty")
    cfg = model.cfg
    x, y_cls, y_reg = _shard_tensors(model, data)
    optimizer = torch.optim.Adam(model.net.parameters(), lr=cfg.learning_rate)
    gen = torch.Generator().manual_seed(seed)
    model.net.train()
    history: list[float] = []
    best, stale = float("inf"), 0
    for _ in range(epochs):
        order = torch.randperm(len(data), generator=gen)
        losses = []
        for start in range(0, len(data), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            pred = model.net(x[idx])
            loss = multi_task_loss(pred, (y_cls[idx], y_reg[idx]), cfg)
            loss.backward()
            optimizer.step()
            losses.append(loss.item())
        epoch_loss = float(np.mean(losses))
        history.append(epoch_loss)
        if epoch_loss < best - 1e-5:
            best, stale = epoch_loss, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.net.eval()
    return history


def train_local(model: BatteryModel, shard: BatteryDataset,
                global_weights: np.ndarray, cfg: MultiTaskModelConfig,
                epochs: int = 1, seed: int = 0,
                client_id: str = "client") -> ModelUpdate:
    """One federated client step from the given global weights.

    Each minibatch applies an SGD step on the data loss followed by the exact
    proximal shrink toward the global weights:
        w <- (w - lr*g + lr*mu*w_g) / (1 + lr*mu)
    Early stopping watches the epoch training loss with cfg.patience.
    """
    if len(shard) == 0:
        raise EmptyShard("client shard is empty")
    model.set_weights_vector(global_weights)
    x, y_cls, y_reg = _shard_tensors(model, shard)
    params = list(model.net.parameters())
    globals_t = [torch.tensor(p.detach().numpy(), dtype=torch.float32) for p in params]
    lr, mu = cfg.learning_rate, cfg.mu_prox
    gen = torch.Generator().manual_seed(seed)
    model.net.train()

    best, stale = float("inf"), 0
    for _ in range(epochs):
        order = torch.randperm(len(shard), generator=gen)
        losses = []
        for start in range(0, len(shard), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            model.net.zero_grad()
            pred = model.net(x[idx])
            loss = multi_task_loss(pred, (y_cls[idx], y_reg[idx]), cfg)
            loss.backward()
            with torch.no_grad():
                for p, g_ref in zip(params, globals_t):
                    stepped = p - lr * p.grad
                    p.copy_((stepped + lr * mu * g_ref) / (1.0 + lr * mu))
            losses.append(loss.item())
        epoch_loss = float(np.mean(losses))
        if epoch_loss < best - 1e-5:
            best, stale = epoch_loss, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.net.eval()
    delta = model.weights_vector() - np.asarray(global_weights, dtype=np.float64)
    return ModelUpdate(weight_delta=delta, num_samples=len(shard),
                       client_id=client_id)


def evaluate_model(model: BatteryModel, data: BatteryDataset) -> dict:
    """Accuracy of the anomaly head and MAE of the capacity head."""
    probs, soc = model.forward_arrays(data.windows)
    pred_labels = probs >= model.cfg.threshold
    accuracy = float((pred_labels == data.soh_anomaly).mean())
    mae = float(np.mean(np.abs(soc - data.capacity)))
    return {"soh_accuracy": accuracy, "soc_mae": mae,
            "label_std": float(data.capacity.std())}
