from .engine import Entity, PlantSim, RawChange, RobotState, TrackState
from .layout import (
    FunctionDescriptor,
    HolderLayout,
    LayoutConfig,
    ModuleLayout,
    ParamSpec,
    RobotLayout,
    SensorLayout,
    TrackLayout,
    TransferLayout,
    load_layout,
)

__all__ = [
    "Entity",
    "PlantSim",
    "RawChange",
    "RobotState",
    "TrackState",
    "FunctionDescriptor",
    "HolderLayout",
    "LayoutConfig",
    "ModuleLayout",
    "ParamSpec",
    "RobotLayout",
    "SensorLayout",
    "TrackLayout",
    "TransferLayout",
    "load_layout",
]
