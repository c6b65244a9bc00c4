"""Uncertainty-aware keyframe selection for edge-assisted visual(-inertial) SLAM."""

from importlib import resources

from .graph import EdgeCategory, GraphError, KeyframeRecord, PoseGraph, load_graph
from .selection import SelectionBudget, TopHConfig, construct_local_map, select_global_keyframes
from .sim import BandwidthTrace, SimConfig, SimReport, simulate
from .uncertainty import global_uncertainty, local_uncertainty, set_uncertainty


def data_path(name: str):
    """Path to a bundled fixture, e.g. ``data_path("stream60.jsonl")``."""
    return resources.files(__package__) / "data" / name
