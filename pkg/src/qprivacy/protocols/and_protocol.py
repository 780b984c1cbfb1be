"""Quantum AND protocol with small leakage to Bob.

One repetition: Al sends ``d/2 |x 0> + c |11>`` (c = sqrt(1 - d^2/4)) on two
qubits plus a blank third qubit.  Bob, when ``y = 1``, swaps ``|100>`` and
``|101>`` and returns the triple.  Al measures it privately.  ``|000>`` and
``|100>`` mean 0, ``|101>`` means 1, anything else carries no verdict.  The
repetitions use fresh qubits; the first verdict is the output.
"""

from __future__ import annotations

import math

import numpy as np

from ..core.quantum import MeasureStep, QuantumProtocol, UnitaryStep
from ..qstate import complete_to_unitary

VERDICTS = {0b000: 0, 0b100: 0, 0b101: 1}


def repetitions_for(delta: float) -> int:
    return math.ceil(math.log(3) / (delta**2 / 4))


def message(x: int, delta: float) -> np.ndarray:
    v = np.zeros(8, dtype=complex)
    v[0b100 if x else 0b000] = delta / 2
    v[0b110] = math.sqrt(1 - delta**2 / 4)
    return v


def bob_unitary(y: int) -> np.ndarray:
    u = np.eye(8, dtype=complex)
    if y:
        u[:, [0b100, 0b101]] = u[:, [0b101, 0b100]]
    return u


def message_distance(delta: float) -> float:
    """Exact trace distance between the two messages."""
    return delta * math.sqrt(2 - delta**2 / 4)


def and_protocol(delta: float, repetitions: int | None = None) -> QuantumProtocol:
    if not 0 < delta <= 0.5:
        raise ValueError(f"delta {delta} outside (0, 1/2]")
    k = repetitions_for(delta) if repetitions is None else repetitions
    prep = {x: complete_to_unitary(message(x, delta).reshape(8, 1)) for x in (0, 1)}
    bob = {y: bob_unitary(y) for y in (0, 1)}

    def verdict(transcript, record, x):
        return VERDICTS.get(record[-1]) if record else None

    steps = [
        UnitaryStep("A", lambda x, tr: prep[x]),
        UnitaryStep("B", lambda y, tr: bob[y]),
        MeasureStep("A", "M", private=True),
    ]
    return QuantumProtocol(2, 2, {"A": 1, "M": 8, "B": 1}, steps, verdict, output_player="A",
                           repetitions=k, name=f"quantum AND (delta={delta:g})")


def abort_probability(delta: float, k: int | None = None) -> float:
    k = repetitions_for(delta) if k is None else k
    return (1 - delta**2 / 4) ** k
