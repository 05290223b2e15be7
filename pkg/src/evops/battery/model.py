"""Multi-task sequence model: SoH anomaly head + SoC/capacity regression head.

The recurrent encoder reads a normalized 128x6 window; each head is a small
MLP over the final hidden state. Normalization statistics are fixed at model
creation and embedded in checkpoints so federated clients share one feature
space.
"""
from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from evops.battery.types import (
    BatteryDiagnosis,
    ModelNotLoaded,
    MultiTaskModelConfig,
    ShapeMismatch,
    TelemetryWindow,
)

_PROB_EPS = 1e-7


class _MultiTaskNet(nn.Module):
    def __init__(self, cfg: MultiTaskModelConfig, input_size: int = 6):
        super().__init__()
        bidirectional = cfg.arch == "bilstm"
        rnn_cls = nn.GRU if cfg.arch == "gru" else nn.LSTM
        self.rnn = rnn_cls(input_size=input_size, hidden_size=cfg.hidden_units,
                           num_layers=cfg.num_layers, dropout=cfg.dropout,
                           batch_first=True, bidirectional=bidirectional)
        enc_out = cfg.hidden_units * (2 if bidirectional else 1)
        hidden, out = cfg.head_dims
        self.cls_head = nn.Sequential(
            nn.Linear(enc_out, hidden), nn.ReLU(), nn.Linear(hidden, out))
        self.reg_head = nn.Sequential(
            nn.Linear(enc_out, hidden), nn.ReLU(), nn.Linear(hidden, out))

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out, _ = self.rnn(x)
        last = out[:, -1, :]
        prob = torch.sigmoid(self.cls_head(last)).squeeze(-1)
        soc = self.reg_head(last).squeeze(-1)
        return prob, soc


def multi_task_loss(pred: tuple[torch.Tensor, torch.Tensor],
                    target: tuple[torch.Tensor, torch.Tensor],
                    cfg: MultiTaskModelConfig) -> torch.Tensor:
    """BCE(anomaly) + lambda_reg * MSE(soc); probabilities clipped at 1e-7."""
    probs, soc_pred = pred
    labels, soc_true = target
    if probs.shape != labels.shape or soc_pred.shape != soc_true.shape:
        raise ShapeMismatch(
            f"pred shapes {tuple(probs.shape)}/{tuple(soc_pred.shape)} vs "
            f"target {tuple(labels.shape)}/{tuple(soc_true.shape)}")
    p = torch.clamp(probs, _PROB_EPS, 1.0 - _PROB_EPS)
    bce = -(labels * torch.log(p) + (1.0 - labels) * torch.log(1.0 - p)).mean()
    mse = ((soc_pred - soc_true) ** 2).mean()
    return bce + cfg.lambda_reg * mse


class BatteryModel:
    """Trained model handle; immutable for inference, single-writer training."""

    def __init__(self, cfg: MultiTaskModelConfig, net: _MultiTaskNet,
                 feature_mean: np.ndarray, feature_std: np.ndarray,
                 target_mean: float, target_std: float, model_id: str = "battery"):
        self.cfg = cfg
        self.net = net
        self.feature_mean = np.asarray(feature_mean, dtype=np.float32)
        self.feature_std = np.asarray(feature_std, dtype=np.float32)
        self.target_mean = float(target_mean)
        self.target_std = float(target_std)
        self.model_id = model_id

    def normalize(self, windows: np.ndarray) -> torch.Tensor:
        arr = (np.asarray(windows, dtype=np.float32) - self.feature_mean) / self.feature_std
        return torch.tensor(arr, dtype=torch.float32)

    def forward_arrays(self, windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Both heads in one pass; soc de-normalized to dataset units."""
        self.net.eval()
        with torch.no_grad():
            probs, soc = self.net(self.normalize(windows))
        return probs.numpy(), soc.numpy() * self.target_std + self.target_mean

    def weights_vector(self) -> np.ndarray:
        return parameters_to_vector(self.net.parameters()).detach().numpy().astype(np.float64)

    def set_weights_vector(self, vec: np.ndarray) -> None:
        vector_to_parameters(torch.tensor(vec, dtype=torch.float32),
                             self.net.parameters())

    def save(self, path: str | Path) -> None:
        torch.save({
            "config": asdict(self.cfg),
            "state_dict": self.net.state_dict(),
            "feature_mean": self.feature_mean,
            "feature_std": self.feature_std,
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "model_id": self.model_id,
        }, path)

    @classmethod
    def load(cls, path: str | Path) -> "BatteryModel":
        payload = torch.load(path, weights_only=False)
        raw_cfg = dict(payload["config"])
        raw_cfg["head_dims"] = tuple(raw_cfg["head_dims"])
        cfg = MultiTaskModelConfig(**raw_cfg)
        net = _MultiTaskNet(cfg)
        net.load_state_dict(payload["state_dict"])
        return cls(cfg=cfg, net=net,
                   feature_mean=payload["feature_mean"],
                   feature_std=payload["feature_std"],
                   target_mean=payload["target_mean"],
                   target_std=payload["target_std"],
                   model_id=payload.get("model_id", "battery"))


def init_model(cfg: MultiTaskModelConfig, stats_windows: np.ndarray,
               stats_targets: np.ndarray, seed: int = 0,
               model_id: str = "battery") -> BatteryModel:
    """Fresh model with normalization statistics frozen from reference data."""
    torch.manual_seed(seed)
    net = _MultiTaskNet(cfg)
    wins = np.asarray(stats_windows, dtype=np.float64)
    feature_mean = wins.reshape(-1, wins.shape[-1]).mean(axis=0)
    feature_std = wins.reshape(-1, wins.shape[-1]).std(axis=0).clip(1e-6)
    targets = np.asarray(stats_targets, dtype=np.float64)
    t_std = float(targets.std())
    return BatteryModel(cfg=cfg, net=net, feature_mean=feature_mean,
                        feature_std=feature_std,
                        target_mean=float(targets.mean()),
                        target_std=t_std if t_std > 1e-9 else 1.0,
                        model_id=model_id)


def infer_diagnosis(model: BatteryModel | None, window: TelemetryWindow) -> BatteryDiagnosis:
    """Evaluate both heads on one validated window."""
    if model is None or model.net is None:
        raise ModelNotLoaded("battery model is not loaded")
    probs, soc = model.forward_arrays(window.frames[None, ...])
    prob = float(probs[0])
    if not np.isfinite(prob) or not np.isfinite(soc[0]):
        raise ValueError("model produced non-finite outputs")
    return BatteryDiagnosis(
        soh_anomaly_prob=prob,
        soh_label=prob >= model.cfg.threshold,
        soc_estimate=float(soc[0]),
        model_id=model.model_id,
    )
