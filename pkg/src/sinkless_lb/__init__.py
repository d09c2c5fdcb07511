"""
sinkless-lb: construction trees, input trees and an online-LOCAL adversary
for lower bounds on sinkless orientation.

The pipeline runs ctree -> ftransform -> labelings -> marked -> adversary;
olocal and algorithms provide the model the adversary attacks.
"""

__version__ = "0.1.0"

from .adversary import HardInstanceRun, attack, bound_report, pad_graph, smallest_frequent_edge, swap_rewire
from .algorithms import OnlineAlgorithm, PortPreference, load_algorithm, random_port_preference
from .config_manager import ConfigManager, Deadline, RunSettings
from .ctree import ConstructionTree, build_t2, build_t2_literal, compute_phi, jth_child, validate
from .error_handler import (
    CapacityError,
    ConfigError,
    DomainError,
    InvariantViolation,
    ParseError,
    PreconditionError,
    ProtocolError,
    SinklessLbError,
    TimeBudgetExceeded,
    UsageError,
    WellNestedError,
)
from .ftransform import Tower, dfs_sequence, f_implicit, f_materialize, implicit_node, power_tower_exceeds
from .labelings import EdgeLabeling, compute_labelings
from .labelstr import Label, expand, is_clearing, is_final_substring, is_independent, pad
from .marked import (
    BuildTrace,
    MarkedTree,
    build_input_tree,
    canonical_sequence,
    check_distance_correct,
    neighbor_oracle,
    presentation_order,
    reflect,
    split,
)
from .olocal import (
    Decision,
    Instance,
    OnlineSession,
    Orientation,
    Transcript,
    View,
    reveal_view,
    run,
    validate_sinkless_orientation,
)

__all__ = [
    "__version__",
    "BuildTrace",
    "CapacityError",
    "ConfigError",
    "ConfigManager",
    "ConstructionTree",
    "Deadline",
    "Decision",
    "DomainError",
    "EdgeLabeling",
    "HardInstanceRun",
    "Instance",
    "InvariantViolation",
    "Label",
    "MarkedTree",
    "OnlineAlgorithm",
    "OnlineSession",
    "Orientation",
    "ParseError",
    "PortPreference",
    "PreconditionError",
    "ProtocolError",
    "RunSettings",
    "SinklessLbError",
    "TimeBudgetExceeded",
    "Tower",
    "Transcript",
    "UsageError",
    "View",
    "WellNestedError",
    "attack",
    "bound_report",
    "build_input_tree",
    "build_t2",
    "build_t2_literal",
    "canonical_sequence",
    "check_distance_correct",
    "compute_labelings",
    "compute_phi",
    "dfs_sequence",
    "expand",
    "f_implicit",
    "f_materialize",
    "implicit_node",
    "is_clearing",
    "is_final_substring",
    "is_independent",
    "jth_child",
    "load_algorithm",
    "neighbor_oracle",
    "pad",
    "pad_graph",
    "power_tower_exceeds",
    "presentation_order",
    "random_port_preference",
    "reflect",
    "reveal_view",
    "run",
    "smallest_frequent_edge",
    "split",
    "swap_rewire",
    "validate",
    "validate_sinkless_orientation",
]
