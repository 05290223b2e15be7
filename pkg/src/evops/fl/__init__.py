from evops.fl.coordinator import (
    ClientFn,
    DimensionMismatch,
    DPConfig,
    EmptyRound,
    FLCoordinator,
    ModelUpdate,
    RoundState,
    aggregate,
    clip_update,
)

__all__ = [
    "ClientFn",
    "DimensionMismatch",
    "DPConfig",
    "EmptyRound",
    "FLCoordinator",
    "ModelUpdate",
    "RoundState",
    "aggregate",
    "clip_update",
]
