"""Simulation orchestration: config, tick loop, lockstep/streaming runs."""

from .config import DEFAULT_TOPICS, SimConfig, config_from_dict, load_config
from .orchestrator import (
    CommandCache,
    ObservationBundle,
    RunReport,
    SimNode,
    apply_zoh,
)

__all__ = [
    "CommandCache",
    "DEFAULT_TOPICS",
    "ObservationBundle",
    "RunReport",
    "SimConfig",
    "SimNode",
    "apply_zoh",
    "config_from_dict",
    "load_config",
]
