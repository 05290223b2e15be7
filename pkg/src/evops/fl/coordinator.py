"""Federated round orchestration with differentially private aggregation.

Updates are L2-clipped, combined as a sample-weighted mean, and perturbed with
Gaussian noise scaled by 1/n_clients. With noise_sigma=0 and an infinite clip
norm this reduces to exact FedAvg. Noise draws are derived from
(dp.seed, round_index) so a fixed seed reproduces every round.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from evops.errors import EvopsError


class DimensionMismatch(EvopsError):
    pass


class EmptyRound(EvopsError):
    pass


@dataclass
class ModelUpdate:
    weight_delta: np.ndarray
    num_samples: int
    client_id: str
    round_index: int = 0

    def __post_init__(self):
        self.weight_delta = np.asarray(self.weight_delta, dtype=np.float64)
        if not np.all(np.isfinite(self.weight_delta)):
            raise ValueError("weight delta must be finite")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")


@dataclass
class DPConfig:
    clip_norm: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


@dataclass
class RoundState:
    round_index: int
    global_weights: np.ndarray
    received: list[ModelUpdate] = field(default_factory=list)
    status: str = "open"
    failures: dict[str, str] = field(default_factory=dict)


def clip_update(u: ModelUpdate, clip_norm: float) -> ModelUpdate:
    """Scale the delta onto the L2 ball of radius clip_norm; direction kept."""
    if clip_norm <= 0:
        raise ValueError("clip_norm must be positive")
    norm = float(np.linalg.norm(u.weight_delta))
    # the tolerance absorbs the roundoff of a previous rescale, making
    # clipping exactly idempotent
    if norm <= clip_norm * (1.0 + 1e-12) or not math.isfinite(clip_norm):
        return u
    return ModelUpdate(
        weight_delta=u.weight_delta * (clip_norm / norm),
        num_samples=u.num_samples,
        client_id=u.client_id,
        round_index=u.round_index,
    )


def aggregate(round_state: RoundState, dp: DPConfig) -> np.ndarray:
    """New global weights from the received updates.

    global += weighted_mean(clipped deltas) + N(0, sigma^2 I) / n_clients
    """
    updates = round_state.received
    if not updates:
        raise EmptyRound("no updates received for this round")
    dim = round_state.global_weights.size
    for u in updates:
        if u.weight_delta.size != dim:
            raise DimensionMismatch(
                f"update from {u.client_id} has dim {u.weight_delta.size}, expected {dim}")

    clipped = np.stack([clip_update(u, dp.clip_norm).weight_delta for u in updates])
    weights = np.array([u.num_samples for u in updates], dtype=np.float64)
    mean_delta = np.average(clipped, axis=0, weights=weights)

    if dp.noise_sigma > 0:
        rng = np.random.default_rng([dp.seed, round_state.round_index])
        noise = rng.normal(0.0, dp.noise_sigma, size=dim) / len(updates)
        mean_delta = mean_delta + noise

    round_state.status = "aggregated"
    return round_state.global_weights + mean_delta


# A client is a callable taking the current global weights and returning its
# local update. Training internals live with the model owner (battery module).
ClientFn = Callable[[np.ndarray], ModelUpdate]


class FLCoordinator:
    """Single-writer round driver over a set of client handles."""

    def __init__(self, initial_weights: np.ndarray, dp: DPConfig | None = None):
        self.global_weights = np.asarray(initial_weights, dtype=np.float64).copy()
        self.dp = dp or DPConfig()
        self.round_index = 0
        self.history: list[RoundState] = []

    def run_round(self, clients: Sequence[ClientFn],
                  timeout: float | None = None) -> RoundState:
        """Train every client against the current global weights and aggregate.

        Per-client failures (exceptions or timeouts) are recorded and the round
        proceeds with the survivors; a round with no survivors raises.
        """
        if not clients:
            raise EmptyRound("no clients supplied")
        state = RoundState(round_index=self.round_index,
                           global_weights=self.global_weights.copy())

        with ThreadPoolExecutor(max_workers=max(1, len(clients))) as pool:
            futures = {
                pool.submit(client, self.global_weights.copy()): i
                for i, client in enumerate(clients)
            }
            for fut, idx in futures.items():
                try:
                    update = fut.result(timeout=timeout)
                    state.received.append(update)
                except FutureTimeout:
                    state.failures[f"client-{idx}"] = "timeout"
                except Exception as exc:  # client failures must not kill the round
                    state.failures[f"client-{idx}"] = repr(exc)

        if not state.received:
            raise EmptyRound(f"all clients failed: {state.failures}")

        self.global_weights = aggregate(state, self.dp)
        self.round_index += 1
        self.history.append(state)
        return state
