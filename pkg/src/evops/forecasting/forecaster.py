"""One-step-ahead forecasters for station occupancy, duration, volume, price.

A small 2-layer recurrent net (hidden size 16) is fit per station and
component on z-scored history. Occupancy forecasts are clamped to [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from evops.errors import EvopsError
from evops.evalkit import RegressionErrors, regression_metrics

COMPONENTS = ("occupancy", "duration", "volume", "price")
SEQ_LENGTHS = (3, 6, 9, 12)


class HistoryTooShort(EvopsError):
    pass


class ComponentMismatch(EvopsError):
    pass


@dataclass
class ForecastConfig:
    arch: str = "lstm"            # lstm | gru
    hidden_units: int = 16
    num_layers: int = 2
    seq_len: int = 6
    horizon: int = 1
    epochs: int = 300
    learning_rate: float = 0.01

    def __post_init__(self):
        if self.seq_len not in SEQ_LENGTHS:
            raise ValueError(f"seq_len must be one of {SEQ_LENGTHS}")
        if self.arch not in ("lstm", "gru"):
            raise ValueError(f"unknown arch {self.arch!r}")


@dataclass
class SeriesWindow:
    values: np.ndarray
    component: str
    station_id: str = ""
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.component not in COMPONENTS:
            raise ValueError(f"unknown component {self.component!r}")
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps)
            if ts.shape != self.values.shape:
                raise ValueError("timestamps must align with values")
            if not (np.diff(ts) > 0).all():
                raise ValueError("timestamps must be strictly increasing")


@dataclass
class Forecast:
    component: str
    point_estimate: float
    station_id: str = ""
    as_of: float | None = None


class _RecurrentNet(nn.Module):
    def __init__(self, cfg: ForecastConfig):
        super().__init__()
        rnn_cls = nn.LSTM if cfg.arch == "lstm" else nn.GRU
        self.rnn = rnn_cls(input_size=1, hidden_size=cfg.hidden_units,
                           num_layers=cfg.num_layers, batch_first=True)
        self.head = nn.Linear(cfg.hidden_units, 1)

    def forward(self, x):
        out, _ = self.rnn(x)
        return self.head(out[:, -1, :]).squeeze(-1)


class Forecaster:
    """Trained one-step forecaster bound to a component and sequence length."""

    def __init__(self, net: _RecurrentNet, cfg: ForecastConfig, component: str,
                 mean: float, std: float, station_id: str = "",
                 validation: RegressionErrors | None = None):
        self.net = net.eval()
        self.cfg = cfg
        self.component = component
        self.mean = mean
        self.std = std
        self.station_id = station_id
        self.validation = validation

    def _predict_normalized(self, windows: np.ndarray) -> np.ndarray:
        x = torch.tensor((windows - self.mean) / self.std,
                         dtype=torch.float32).unsqueeze(-1)
        with torch.no_grad():
            out = self.net(x).numpy()
        return out * self.std + self.mean

    def forecast_next(self, window: SeriesWindow) -> Forecast:
        if window.component != self.component:
            raise ComponentMismatch(
                f"forecaster serves {self.component!r}, window is {window.component!r}")
        if window.values.size != self.cfg.seq_len:
            raise ValueError(
                f"window length {window.values.size} != seq_len {self.cfg.seq_len}")
        raw = float(self._predict_normalized(window.values[None, :])[0])
        if self.component == "occupancy":
            raw = float(np.clip(raw, 0.0, 1.0))
        as_of = None
        if window.timestamps is not None:
            as_of = float(window.timestamps[-1])
        return Forecast(component=self.component, point_estimate=raw,
                        station_id=window.station_id or self.station_id, as_of=as_of)

    def rolling_predictions(self, series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One-step predictions over a series; each uses only prior values."""
        series = np.asarray(series, dtype=np.float64)
        L = self.cfg.seq_len
        if series.size < L + 1:
            raise HistoryTooShort(f"need at least {L + 1} points")
        windows = np.stack([series[t - L:t] for t in range(L, series.size)])
        preds = self._predict_normalized(windows)
        if self.component == "occupancy":
            preds = np.clip(preds, 0.0, 1.0)
        return preds, series[L:]


def _make_windows(series: np.ndarray, seq_len: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([series[i:i + seq_len] for i in range(series.size - seq_len)])
    y = series[seq_len:]
    return x, y


def fit_forecaster(history: np.ndarray, cfg: ForecastConfig | None = None,
                   seed: int = 0, component: str = "price",
                   station_id: str = "") -> Forecaster:
    """Fit a one-step forecaster on a single station's history.

    The trailing 20% of windows are held out to report validation RMSE/MAE.
    """
    cfg = cfg or ForecastConfig()
    if component not in COMPONENTS:
        raise ValueError(f"unknown component {component!r}")
    history = np.asarray(history, dtype=np.float64)
    if history.size < cfg.seq_len + 1:
        raise HistoryTooShort(
            f"history of {history.size} points < seq_len+1 = {cfg.seq_len + 1}")

    mean = float(history.mean())
    std = float(history.std())
    if std < 1e-12:
        std = 1.0
    normalized = (history - mean) / std

    x, y = _make_windows(normalized, cfg.seq_len)
    n_val = max(1, int(0.2 * len(x))) if len(x) >= 5 else 0
    x_train, y_train = (x[:-n_val], y[:-n_val]) if n_val else (x, y)

    torch.manual_seed(seed)
    net = _RecurrentNet(cfg)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.MSELoss()
    xt = torch.tensor(x_train, dtype=torch.float32).unsqueeze(-1)
    yt = torch.tensor(y_train, dtype=torch.float32)
    net.train()
    for _ in range(cfg.epochs):
        optimizer.zero_grad()
        loss = loss_fn(net(xt), yt)
        loss.backward()
        optimizer.step()
        if loss.item() < 1e-7:
            break

    forecaster = Forecaster(net=net, cfg=cfg, component=component,
                            mean=mean, std=std, station_id=station_id)
    if n_val:
        x_val = x[-n_val:] * std + mean
        y_val = y[-n_val:] * std + mean
        preds = forecaster._predict_normalized(x_val)
        forecaster.validation = regression_metrics(y_val, preds)
    return forecaster


def evaluate_forecast(forecaster: Forecaster, series: np.ndarray) -> RegressionErrors:
    """Rolling one-step evaluation over a test series."""
    preds, targets = forecaster.rolling_predictions(series)
    return regression_metrics(targets, preds)


def persistence_forecast(series: np.ndarray, seq_len: int) -> RegressionErrors:
    """Last-observed-value baseline evaluated the same rolling way."""
    series = np.asarray(series, dtype=np.float64)
    if series.size < seq_len + 1:
        raise HistoryTooShort(f"need at least {seq_len + 1} points")
    preds = series[seq_len - 1:-1]
    targets = series[seq_len:]
    return regression_metrics(targets, preds)
