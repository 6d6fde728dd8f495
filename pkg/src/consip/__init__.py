"""Simulator and bounded verifier for consistent per-link hopping-function exchange in TSCH."""

from consip.fsm import ConsistencyError
from consip.hopping import Cell, HoppingFunction, SlotframeConfig, hop_channel
from consip.simulator import ScenarioConfig, SimReport, paired_sweep, placement_experiment, run
from consip.verifier import ExchangeScript, random_soak, verify

__all__ = [
    "Cell",
    "ConsistencyError",
    "ExchangeScript",
    "HoppingFunction",
    "ScenarioConfig",
    "SimReport",
    "SlotframeConfig",
    "hop_channel",
    "paired_sweep",
    "placement_experiment",
    "random_soak",
    "run",
    "verify",
]
