"""Protocol representations and exact execution engines."""

from .classical import (
    ABORT,
    DeterministicProtocol,
    Leaf,
    Node,
    ProtocolError,
    RandomizedProtocol,
    as_randomized,
    eval_deterministic,
    protocol_from_json,
    protocol_to_json,
    send_input_protocol,
)
from .conversions import best_deterministic_for_distribution, boost, default_seed_count, sparsify_public_coin
from .execution import Executions, ViewTable, error_on_distribution, execute, joint_cq_state
from .matrix import (
    CommMatrix,
    and_matrix,
    disj_matrix,
    idmin_matrix,
    or_matrix,
    pair_weights,
    random_pair_distribution,
    uniform_pairs,
    xor_matrix,
)
from .quantum import (
    AnnounceStep,
    BudgetError,
    ExecutionResult,
    MeasureStep,
    PrepareStep,
    QuantumProtocol,
    UnitaryStep,
    run_quantum,
)
