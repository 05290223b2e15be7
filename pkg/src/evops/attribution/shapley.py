"""Model-agnostic interventional Shapley attribution.

The value of a coalition S is the model output averaged over the background
set with the features in S taken from the explained input and the rest taken
from each background row. Exact mode enumerates all 2^n coalitions; sampled
mode averages marginal contributions over random feature permutations, which
keeps the efficiency identity intact (each permutation telescopes to
f(x) - E[f]) while providing a Monte-Carlo error estimate per feature.

Features may be grouped: a group of columns is switched between the input and
the background as one unit and receives a single contribution. This is how
sequence models are explained at the channel level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from evops.errors import EvopsError

EXACT_FEATURE_LIMIT = 12


class TooManyFeaturesForExact(EvopsError):
    pass


class EmptyBackground(EvopsError):
    pass


@dataclass
class Attribution:
    """Additive explanation: base_value + sum(contributions) == prediction."""

    base_value: float
    contributions: dict[str, float]
    prediction: float
    feature_values: dict[str, float]
    mc_error: dict[str, float] | None = None

    def to_dict(self) -> dict:
        out = {
            "base_value": self.base_value,
            "prediction": self.prediction,
            "items": [
                {"name": name, "value": self.feature_values.get(name), "phi": phi}
                for name, phi in self.contributions.items()
            ],
        }
        if self.mc_error is not None:
            out["mc_error"] = dict(self.mc_error)
        return out


@dataclass
class WaterfallItem:
    name: str
    value: float | None
    contribution: float


def shapley_attribution(model_fn: Callable[[np.ndarray], np.ndarray],
                        x: np.ndarray,
                        background: np.ndarray,
                        feature_names: Sequence[str] | None = None,
                        mode: str = "exact",
                        budget: int | None = None,
                        groups: Sequence[Sequence[int]] | None = None,
                        group_names: Sequence[str] | None = None,
                        seed: int = 0) -> Attribution:
    """Attribute model_fn(x) to features against a background distribution.

    model_fn maps a (m, d) array to m scalar outputs. ``groups`` partitions
    the d columns into players; by default each column is its own player.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    background = np.asarray(background, dtype=np.float64)
    if background.ndim == 1:
        background = background.reshape(1, -1)
    if background.shape[0] == 0:
        raise EmptyBackground("background set must contain at least one row")
    if background.shape[1] != x.size:
        raise ValueError(
            f"background has {background.shape[1]} columns, input has {x.size}")

    if groups is None:
        groups = [[j] for j in range(x.size)]
        names = list(feature_names) if feature_names is not None else [
            f"f{j}" for j in range(x.size)]
    else:
        groups = [list(g) for g in groups]
        names = list(group_names) if group_names is not None else [
            f"g{j}" for j in range(len(groups))]
    n = len(groups)
    if len(names) != n:
        raise ValueError("one name per player required")

    nbg = background.shape[0]
    value_cache: dict[int, float] = {}

    def coalition_value(mask: int) -> float:
        cached = value_cache.get(mask)
        if cached is not None:
            return cached
        rows = background.copy()
        for j in range(n):
            if mask >> j & 1:
                rows[:, groups[j]] = x[groups[j]]
        val = float(np.mean(model_fn(rows)))
        value_cache[mask] = val
        return val

    base = coalition_value(0)
    prediction = coalition_value((1 << n) - 1)

    if mode == "exact":
        if n > EXACT_FEATURE_LIMIT:
            raise TooManyFeaturesForExact(
                f"{n} players exceeds the exact-mode limit of {EXACT_FEATURE_LIMIT}")
        phi = _exact_phi(coalition_value, n)
        mc_err = None
    elif mode == "sampled":
        min_budget = 2 * n
        if budget is None or budget < min_budget:
            raise ValueError(f"sampled mode requires budget >= {min_budget} permutations")
        phi, mc_err_arr = _sampled_phi(coalition_value, n, budget, seed)
        mc_err = {names[j]: float(mc_err_arr[j]) for j in range(n)}
    else:
        raise ValueError(f"unknown mode {mode!r}")

    feature_values = {
        names[j]: float(np.mean(x[groups[j]])) for j in range(n)
    }
    return Attribution(
        base_value=base,
        contributions={names[j]: float(phi[j]) for j in range(n)},
        prediction=prediction,
        feature_values=feature_values,
        mc_error=mc_err,
    )


def _exact_phi(value: Callable[[int], float], n: int) -> np.ndarray:
    # weight for a coalition of size s (excluding the player): s!(n-s-1)!/n!
    weights = np.array([
        math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n)
        for s in range(n)
    ])
    phi = np.zeros(n)
    for mask in range(1 << n):
        v = value(mask)
        s = bin(mask).count("1")
        for j in range(n):
            if not mask >> j & 1:
                phi[j] += weights[s] * (value(mask | 1 << j) - v)
    return phi


def _sampled_phi(value: Callable[[int], float], n: int, budget: int,
                 seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    marginals = np.zeros((budget, n))
    for p in range(budget):
        order = rng.permutation(n)
        mask = 0
        prev = value(0)
        for j in order:
            mask |= 1 << j
            cur = value(mask)
            marginals[p, j] = cur - prev
            prev = cur
    phi = marginals.mean(axis=0)
    stderr = marginals.std(axis=0, ddof=1) / math.sqrt(budget)
    return phi, stderr


def waterfall_data(attr: Attribution, top_k: int) -> tuple[list[WaterfallItem], float]:
    """Features ordered by |contribution| plus a remainder bucket.

    The remainder makes the displayed bars sum to prediction - base_value even
    when only the top_k features are shown.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    items = list(attr.contributions.items())
    order = sorted(range(len(items)), key=lambda i: (-abs(items[i][1]), i))
    top = order[:top_k]
    shown = [
        WaterfallItem(name=items[i][0], value=attr.feature_values.get(items[i][0]),
                      contribution=items[i][1])
        for i in top
    ]
    remainder = attr.prediction - attr.base_value - sum(w.contribution for w in shown)
    return shown, remainder
