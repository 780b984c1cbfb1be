"""Concrete protocols: the quantum AND, identified minimum, Grover disjointness and small toys."""

from .and_protocol import and_protocol, abort_probability, message_distance, repetitions_for
from .disjointness import (
    DISJOINT,
    INTERSECTING,
    GroverStagePlan,
    default_stage_plan,
    disjointness_protocol,
    simulate_all_pairs,
    simulate_batch,
    stage_privacy_losses,
)
from .idmin import (
    QuerySchedule,
    conditional_rows,
    idmin_communication_bound,
    idmin_leaky_adapted,
    idmin_leaky_uniform,
    idmin_private,
    quantile_points,
    query_schedule,
)
from .nonorth import NonOrthogonalizationError, nonorthogonalize
from .reencode import quantum_reencoding
from .toys import equality_hash, noisy_and
