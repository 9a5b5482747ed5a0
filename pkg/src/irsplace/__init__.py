"""Exact placement of passive reflecting surfaces along a drone corridor."""

from .capacity import StreamAllocation, channel_rate, singular_values, water_fill
from .channel import AntennaArray, CascadeScaling, RadioParams
from .errors import (
    BehindSurfaceError,
    DegenerateGeometryError,
    InstanceTooLargeError,
    IrsPlaceError,
    NoChannelError,
    ReflectorDegenerateError,
    ScenarioError,
    ShapeError,
)
from .geometry import ReflectorGeometry, SizingRule, size_reflector
from .placement import (
    Assignment,
    CandidateSet,
    RateTable,
    build_candidate_set,
    build_rate_table,
    evaluate_interim,
    exhaustive_oracle,
    solve_assignment,
)
from .runner import RateReport, evaluate_fixed, run_optimize, run_sweep
from .scenario import Scenario, bundled_scenario, bundled_scenario_path, load_scenario

__version__ = "0.1.0"
