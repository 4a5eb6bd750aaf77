"""Capacity bounds for hybrid fiber / free-space quantum networks."""

from .capacity import (
    BoundKind,
    CapacityBound,
    FadingDensity,
    ThermalOccupation,
    Transmissivity,
    fading_capacity,
    fiber_transmissivity,
    plob,
    thermal_fading_capacity,
    thermal_loss_bound,
)
from .config import PRESETS, ScenarioConfig, channel_from_spec, get_preset
from .modular import (
    IdealModularSpec,
    ModularNetwork,
    global_community_capacity,
    h_min,
    local_community_capacity,
    quotient_graph,
    theorem1_thresholds,
    verify_ideal,
)
from .network import Network, NodeLabel, flooding_capacity, single_path_capacity
from .optics import (
    AtmosphereModel,
    BeamSetup,
    Trajectory,
    build_channel,
    intersatellite_capacity,
    line_of_sight_limit,
)
from .planner import intersat_bounds, max_fiber_length, max_freespace_length, max_intersatellite_separation

__version__ = "0.1.0"
