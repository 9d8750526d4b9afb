"""Scenario engine: pump preparation through tomography, plus report output."""

from .presets import PREPARATIONS, Preparation, fit_preparation, get_preparation
from .report import ChannelRow, DemuxReport, MetricValue, emit_report
from .scenario import Scenario, channel_state, load_scenario, run_scenario, slow_detector_state

__all__ = [
    "PREPARATIONS",
    "ChannelRow",
    "DemuxReport",
    "MetricValue",
    "Preparation",
    "Scenario",
    "channel_state",
    "emit_report",
    "fit_preparation",
    "get_preparation",
    "load_scenario",
    "run_scenario",
    "slow_detector_state",
]
