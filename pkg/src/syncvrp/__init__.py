"""Routing of primary vehicles synchronized with support vehicles."""

from .graph import STUDY_POLICIES, ExpandedGraph, Flow, VariantPolicy, build_graph, cross_fleet_arcs
from .instance import (
    CustomerSpec,
    FleetConfig,
    GenConfig,
    Instance,
    Point,
    default_productivity,
    generate_instance,
    mode_service_time,
    read_instance,
    travel_time,
    write_instance,
)

__all__ = [
    "STUDY_POLICIES", "ExpandedGraph", "Flow", "VariantPolicy", "build_graph", "cross_fleet_arcs",
    "CustomerSpec", "FleetConfig", "GenConfig", "Instance", "Point", "default_productivity",
    "generate_instance", "mode_service_time", "read_instance", "travel_time", "write_instance",
]
