from evops.attribution.shapley import (
    Attribution,
    EmptyBackground,
    TooManyFeaturesForExact,
    WaterfallItem,
    shapley_attribution,
    waterfall_data,
)

__all__ = [
    "Attribution",
    "EmptyBackground",
    "TooManyFeaturesForExact",
    "WaterfallItem",
    "shapley_attribution",
    "waterfall_data",
]
