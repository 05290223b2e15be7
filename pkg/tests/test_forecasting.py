import numpy as np
import pytest

from evops.evalkit import synth_series
from evops.forecasting.forecaster import (
    ComponentMismatch,
    Forecast,
    ForecastConfig,
    Forecaster,
    HistoryTooShort,
    SeriesWindow,
    evaluate_forecast,
    fit_forecaster,
    persistence_forecast,
)


@pytest.fixture(scope="module")
def sinusoid_forecaster():
    t = np.arange(200)
    series = np.sin(2 * np.pi * t / 24)
    return fit_forecaster(series, ForecastConfig(seq_len=6), seed=0,
                          component="price"), series


def test_constant_series_fixed_point():
    f = fit_forecaster(np.full(50, 3.7), ForecastConfig(seq_len=6), seed=0)
    w = SeriesWindow(values=np.full(6, 3.7), component="price")
    assert f.forecast_next(w).point_estimate == pytest.approx(3.7, abs=1e-2)


def test_noiseless_sinusoid_rmse(sinusoid_forecaster):
    f, series = sinusoid_forecaster
    t = np.arange(200, 260)
    test = np.sin(2 * np.pi * t / 24)
    m = evaluate_forecast(f, test)
    assert m.rmse <= 0.05  # 5% of unit amplitude


def test_beats_persistence_on_noisy_series():
    rng = np.random.default_rng(1)
    noisy = np.sin(2 * np.pi * np.arange(300) / 24) + rng.normal(0, 0.1, 300)
    f = fit_forecaster(noisy[:240], ForecastConfig(seq_len=6), seed=0)
    model = evaluate_forecast(f, noisy[240:])
    baseline = persistence_forecast(noisy[240:], 6)
    assert model.rmse < baseline.rmse


def test_history_too_short():
    with pytest.raises(HistoryTooShort):
        fit_forecaster(np.zeros(6), ForecastConfig(seq_len=6), seed=0)


def test_component_mismatch(sinusoid_forecaster):
    f, _ = sinusoid_forecaster
    w = SeriesWindow(values=np.zeros(6), component="occupancy")
    with pytest.raises(ComponentMismatch):
        f.forecast_next(w)


def test_window_length_enforced(sinusoid_forecaster):
    f, _ = sinusoid_forecaster
    with pytest.raises(ValueError):
        f.forecast_next(SeriesWindow(values=np.zeros(5), component="price"))


def test_occupancy_clamped():
    # constant saturated series drives raw outputs past the bound at times
    series = synth_series(seed=3, length=120, component="occupancy")
    f = fit_forecaster(series, ForecastConfig(seq_len=6, epochs=50), seed=0,
                       component="occupancy")
    big = SeriesWindow(values=np.full(6, 1.0), component="occupancy")
    out = f.forecast_next(big)
    assert 0.0 <= out.point_estimate <= 1.0


def test_occupancy_clamp_rule_direct():
    class FakeNet:
        def __call__(self, x):
            import torch
            return torch.full((x.shape[0],), 1.2)

        def eval(self):
            return self

    f = Forecaster(net=FakeNet(), cfg=ForecastConfig(seq_len=3),
                   component="occupancy", mean=0.0, std=1.0)
    out = f.forecast_next(SeriesWindow(values=np.zeros(3), component="occupancy"))
    assert out.point_estimate == 1.0


def test_all_sequence_lengths_train():
    series = synth_series(seed=5, length=80, component="price")
    for seq_len in (3, 6, 9, 12):
        f = fit_forecaster(series, ForecastConfig(seq_len=seq_len, epochs=30), seed=0)
        assert f.cfg.seq_len == seq_len
        assert np.isfinite(
            f.forecast_next(SeriesWindow(values=series[:seq_len],
                                         component="price")).point_estimate)


def test_invalid_seq_len():
    with pytest.raises(ValueError):
        ForecastConfig(seq_len=5)


def test_seeded_determinism():
    series = synth_series(seed=7, length=100, component="volume")
    a = fit_forecaster(series, ForecastConfig(seq_len=6, epochs=40), seed=11,
                       component="volume")
    b = fit_forecaster(series, ForecastConfig(seq_len=6, epochs=40), seed=11,
                       component="volume")
    w = SeriesWindow(values=series[:6], component="volume")
    assert a.forecast_next(w).point_estimate == b.forecast_next(w).point_estimate


def test_evaluation_hand_arithmetic():
    # degenerate forecaster wrapper not needed: check the metric path directly
    base = persistence_forecast(np.array([0.0, 0.0, 3.0, 4.0]), seq_len=2)
    # predictions are [0, 3] against targets [3, 4] -> errors [3, 1]
    assert base.mae == pytest.approx(2.0)
    assert base.rmse == pytest.approx(np.sqrt(5.0))


def test_no_leakage_future_shuffle(sinusoid_forecaster):
    f, _ = sinusoid_forecaster
    rng = np.random.default_rng(0)
    series = rng.normal(size=40)
    preds, _ = f.rolling_predictions(series)
    t = 10  # prediction index t uses series[t:t+6] only
    shuffled = series.copy()
    shuffled[t + 6 + 1:] = rng.permutation(shuffled[t + 6 + 1:])
    preds2, _ = f.rolling_predictions(shuffled)
    assert preds[t] == preds2[t]


def test_validation_metrics_reported():
    series = synth_series(seed=9, length=120, component="duration")
    f = fit_forecaster(series, ForecastConfig(seq_len=6, epochs=40), seed=0,
                       component="duration")
    assert f.validation is not None
    assert f.validation.rmse >= f.validation.mae


def test_rmse_at_least_mae_on_eval(sinusoid_forecaster):
    f, series = sinusoid_forecaster
    m = evaluate_forecast(f, series[:60])
    assert m.rmse >= m.mae


def test_series_window_timestamp_invariant():
    with pytest.raises(ValueError):
        SeriesWindow(values=np.zeros(3), component="price",
                     timestamps=np.array([3.0, 2.0, 1.0]))
