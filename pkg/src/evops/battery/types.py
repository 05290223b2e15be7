"""Domain types for battery telemetry and diagnosis."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from evops.errors import EvopsError
from evops.evalkit.synth import FRAME_FEATURES, WINDOW_STEPS


class SeriesTooShort(EvopsError):
    pass


class ModelNotLoaded(EvopsError):
    http_status = 503


class ShapeMismatch(EvopsError):
    pass


class EmptyShard(EvopsError):
    pass


@dataclass
class TelemetryWindow:
    """One 128-step charging snippet: (v_mean, v_min, v_max, current,
    temperature, soc) per frame."""

    frames: np.ndarray
    vehicle_id: str = ""
    window_start_index: int = 0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.shape != (WINDOW_STEPS, len(FRAME_FEATURES)):
            raise ValueError(
                f"frames must be ({WINDOW_STEPS}, {len(FRAME_FEATURES)}), "
                f"got {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("frames must be finite")
        soc = self.frames[:, 5]
        if (soc < 0).any() or (soc > 100).any():
            raise ValueError("soc must lie in [0, 100] for every frame")
        v_mean, v_min, v_max = self.frames[:, 0], self.frames[:, 1], self.frames[:, 2]
        if (v_min > v_mean).any() or (v_mean > v_max).any():
            raise ValueError("frame voltages must satisfy v_min <= v_mean <= v_max")


@dataclass
class BatteryDiagnosis:
    soh_anomaly_prob: float
    soh_label: bool
    soc_estimate: float
    model_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.soh_anomaly_prob <= 1.0:
            raise ValueError("soh_anomaly_prob must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "soh_anomaly_prob": self.soh_anomaly_prob,
            "soh_label": self.soh_label,
            "soc_estimate": self.soc_estimate,
            "model_id": self.model_id,
        }


@dataclass
class MultiTaskModelConfig:
    """Training defaults for the two-head sequence model."""

    arch: str = "lstm"                    # lstm | bilstm | gru
    num_layers: int = 2
    hidden_units: int = 64
    head_dims: tuple[int, int] = (32, 1)
    dropout: float = 0.3
    learning_rate: float = 0.001
    batch_size: int = 8
    rounds: int = 20                      # federated rounds
    mu_prox: float = 0.2
    patience: int = 10
    lambda_reg: float = 1.0               # loss mixing weight for the soc head
    threshold: float = 0.5                # anomaly probability cut

    def __post_init__(self):
        if self.arch not in ("lstm", "bilstm", "gru"):
            raise ValueError(f"unknown arch {self.arch!r}")
        if self.mu_prox < 0:
            raise ValueError("mu_prox must be >= 0")
        if self.lambda_reg <= 0:
            raise ValueError("lambda_reg must be > 0")


def segment_windows(series: np.ndarray, stride: int) -> list[TelemetryWindow]:
    """Slice a raw charging series into overlapping 128-step windows."""
    series = np.asarray(series, dtype=np.float32)
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    if series.ndim != 2 or series.shape[1] != len(FRAME_FEATURES):
        raise ValueError(f"series must be (T, {len(FRAME_FEATURES)})")
    if series.shape[0] < WINDOW_STEPS:
        raise SeriesTooShort(
            f"series has {series.shape[0]} steps; need >= {WINDOW_STEPS}")
    count = (series.shape[0] - WINDOW_STEPS) // stride + 1
    return [
        TelemetryWindow(frames=series[i * stride:i * stride + WINDOW_STEPS],
                        window_start_index=i * stride)
        for i in range(count)
    ]
