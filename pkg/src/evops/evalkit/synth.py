"""Seeded synthetic data generators.

These generators are the desk-scale stand-ins for the external datasets the
models were designed around. Labels are ground truth by construction, which
makes every generator usable as a test oracle. All draws go through
``numpy.random.default_rng(seed)`` so identical seeds produce identical bytes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

WINDOW_STEPS = 128
FRAME_FEATURES = ["v_mean", "v_min", "v_max", "current", "temperature", "soc"]

FLOW_FEATURES = [
    "bidirectional_duration_ms",
    "bidirectional_packets",
    "bidirectional_bytes",
    "src2dst_bytes",
    "dst2src_bytes",
    "mean_iat_ms",
    "syn_flag_count",
    "rst_flag_count",
]

# per-class feature means for the 3-cluster flow generator; designed so the
# Bayes-optimal boundary is essentially error-free
_FLOW_MEANS = {
    0: [800.0, 40.0, 30000.0, 18000.0, 12000.0, 20.0, 1.0, 0.2],        # benign
    1: [150.0, 12.0, 1500.0, 900.0, 600.0, 12.0, 6.0, 4.0],             # recon
    2: [9000.0, 3000.0, 450000.0, 440000.0, 10000.0, 0.5, 60.0, 2.0],   # dos
}
_FLOW_STDS = {
    0: [120.0, 6.0, 4000.0, 2500.0, 1800.0, 3.0, 0.5, 0.2],
    1: [40.0, 2.0, 300.0, 200.0, 150.0, 2.5, 1.0, 0.8],
    2: [900.0, 300.0, 45000.0, 44000.0, 1500.0, 0.1, 8.0, 0.7],
}


@dataclass
class BatteryDataset:
    """Charging windows with ground-truth anomaly labels and capacity targets."""

    windows: np.ndarray        # (n, 128, 6) float32, columns per FRAME_FEATURES
    soh_anomaly: np.ndarray    # (n,) bool
    capacity: np.ndarray       # (n,) float64, kWh

    def __len__(self) -> int:
        return self.windows.shape[0]


def synth_battery(seed: int, n: int, anomaly_fraction: float = 0.3) -> BatteryDataset:
    """Two-regime charging-window generator.

    Healthy windows charge a battery of nominal capacity at constant current;
    degraded windows show elevated temperature drift, a depressed minimum cell
    voltage, and faded capacity. The SoC trace rises at a rate inversely
    proportional to capacity, so the regression target is recoverable from the
    observed dynamics.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    degraded = rng.random(n) < anomaly_fraction

    base_capacity = rng.normal(60.0, 5.0, size=n).clip(45.0, 75.0)
    fade = np.where(degraded, rng.uniform(0.70, 0.85, size=n), 1.0)
    capacity = base_capacity * fade

    current = rng.normal(30.0, 2.0, size=n).clip(20.0, 40.0)
    soc0 = rng.uniform(10.0, 35.0, size=n)
    step_hours = 0.5 / 60.0  # 30-second frames

    t = np.arange(WINDOW_STEPS, dtype=np.float64)
    rate = current * step_hours * 100.0 / capacity                    # %/step
    soc = soc0[:, None] + rate[:, None] * t[None, :]
    soc = np.clip(soc + rng.normal(0.0, 0.05, size=(n, WINDOW_STEPS)), 0.0, 100.0)

    cur = current[:, None] + rng.normal(0.0, 0.3, size=(n, WINDOW_STEPS))

    v_mean = 3.55 + 0.005 * soc + rng.normal(0.0, 0.008, size=(n, WINDOW_STEPS))
    v_max = v_mean + np.abs(rng.normal(0.03, 0.008, size=(n, WINDOW_STEPS)))
    spread = np.abs(rng.normal(0.03, 0.008, size=(n, WINDOW_STEPS)))
    spread += np.where(degraded, rng.uniform(0.08, 0.15, size=n), 0.0)[:, None]
    v_min = v_mean - spread

    temp = 25.0 + rng.normal(0.0, 0.4, size=(n, WINDOW_STEPS)) + 0.004 * t[None, :]
    drift = np.where(degraded, rng.uniform(6.0, 12.0, size=n), 0.0)
    temp = temp + drift[:, None] * (t[None, :] / (WINDOW_STEPS - 1))

    windows = np.stack([v_mean, v_min, v_max, cur, temp, soc], axis=2).astype(np.float32)
    return BatteryDataset(windows=windows, soh_anomaly=degraded, capacity=capacity)


def synth_flows(seed: int, n: int,
                class_probs: tuple[float, float, float] = (0.5, 0.25, 0.25)) -> pd.DataFrame:
    """Three-cluster Gaussian network-flow generator (benign / recon / dos)."""
    if n <= 0:
        raise ValueError("n must be positive")
    probs = np.asarray(class_probs, dtype=np.float64)
    if probs.shape != (3,) or not np.isclose(probs.sum(), 1.0):
        raise ValueError("class_probs must be 3 probabilities summing to 1")
    rng = np.random.default_rng(seed)
    labels = rng.choice(3, size=n, p=probs)
    rows = np.empty((n, len(FLOW_FEATURES)), dtype=np.float64)
    for k in range(3):
        mask = labels == k
        m = int(mask.sum())
        if m == 0:
            continue
        sample = rng.normal(_FLOW_MEANS[k], _FLOW_STDS[k], size=(m, len(FLOW_FEATURES)))
        rows[mask] = np.clip(sample, 0.0, None)
    df = pd.DataFrame(rows, columns=FLOW_FEATURES)
    df["label"] = labels
    return df


def flow_class_mean(label: int) -> dict[str, float]:
    """Cluster mean for one class; probes at these points are unambiguous."""
    return dict(zip(FLOW_FEATURES, _FLOW_MEANS[label]))


_SERIES_DEFAULTS = {
    # component: (offset, amplitude, noise_std)
    "occupancy": (0.50, 0.35, 0.02),
    "duration": (45.0, 15.0, 2.0),
    "volume": (250.0, 120.0, 10.0),
    "price": (0.30, 0.12, 0.01),
}


def synth_series(seed: int, length: int, component: str = "price",
                 amplitude: float | None = None, noise_std: float | None = None,
                 period: float = 24.0) -> np.ndarray:
    """Daily-periodic series with additive Gaussian noise.

    Occupancy output is clipped to [0, 1].
    """
    if length <= 0:
        raise ValueError("length must be positive")
    if component not in _SERIES_DEFAULTS:
        raise ValueError(f"unknown component {component!r}")
    offset, amp_default, noise_default = _SERIES_DEFAULTS[component]
    amp = amp_default if amplitude is None else amplitude
    noise = noise_default if noise_std is None else noise_std
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    t = np.arange(length, dtype=np.float64)
    values = offset + amp * np.sin(2.0 * np.pi * t / period + phase)
    values = values + rng.normal(0.0, noise, size=length)
    if component == "occupancy":
        values = np.clip(values, 0.0, 1.0)
    return values


_QUERY_TEMPLATES = {
    0: [  # user support / charging optimization
        "Charge my car cheaply before {time}",
        "Find me the cheapest way to charge by {time}",
        "I need {kwh} kWh added before {time} at the lowest cost",
        "Plan an overnight charge that saves money",
        "Schedule charging so it costs as little as possible by {time}",
    ],
    1: [  # charging-station security
        "The charging station at {place} looks like it is under attack",
        "Why is the charger network traffic spiking at {place}",
        "Investigate suspicious connections on the {place} charge point",
        "Is someone scanning the charging station at {place}",
        "The station controller at {place} keeps dropping sessions, possible intrusion?",
    ],
    2: [  # battery diagnostics
        "Is my battery degrading faster than normal?",
        "Check my battery health after the last {n_trips} trips",
        "My range dropped suddenly, is the battery pack failing?",
        "Run a battery checkup, the cells feel hot while charging",
        "How healthy is my battery compared to last month?",
    ],
}
_TIMES = ["6am", "7am", "8am", "noon", "9pm", "midnight"]
_PLACES = ["the depot", "lot 4", "the mall", "highway plaza", "dock B"]


def synth_queries(seed: int, n: int) -> list[dict]:
    """Template-expanded labeled intent queries, balanced over the 3 classes."""
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    out: list[dict] = []
    for i in range(n):
        label = i % 3
        tpl = _QUERY_TEMPLATES[label][int(rng.integers(len(_QUERY_TEMPLATES[label])))]
        text = tpl.format(
            time=_TIMES[int(rng.integers(len(_TIMES)))],
            place=_PLACES[int(rng.integers(len(_PLACES)))],
            kwh=int(rng.integers(10, 50)),
            n_trips=int(rng.integers(3, 30)),
        )
        out.append({"text": text, "label": label})
    return out
