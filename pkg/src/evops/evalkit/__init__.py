from evops.evalkit.metrics import (
    ConfusionCounts,
    EmptyCounts,
    LengthMismatch,
    RegressionErrors,
    classification_metrics,
    regression_metrics,
)
from evops.evalkit.synth import (
    BatteryDataset,
    FLOW_FEATURES,
    FRAME_FEATURES,
    WINDOW_STEPS,
    flow_class_mean,
    synth_battery,
    synth_flows,
    synth_queries,
    synth_series,
)

__all__ = [
    "ConfusionCounts",
    "EmptyCounts",
    "LengthMismatch",
    "RegressionErrors",
    "classification_metrics",
    "regression_metrics",
    "BatteryDataset",
    "FLOW_FEATURES",
    "FRAME_FEATURES",
    "WINDOW_STEPS",
    "flow_class_mean",
    "synth_battery",
    "synth_flows",
    "synth_queries",
    "synth_series",
]
