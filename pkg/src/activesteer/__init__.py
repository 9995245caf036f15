"""Measurement-driven steering of multi-qubit registers toward entangled target states."""

from __future__ import annotations

from .bloch_tensor import BlochTensor, PauliString, bloch_from_state, rdm_bloch
from .cost import CostWeights, expected_dC, global_cost, local_cost, total_cost, weak_values
from .measurement import (
    OUTCOMES,
    MeasurementOutcome,
    PairConfig,
    SteeringConfig,
    WeakLimitWarning,
    enumerate_configs,
    outcome_probabilities,
    sample_outcome,
    sse_step,
)
from .protocol import ProtocolParams, TrajectoryRecord, run_ensemble, run_step, run_trajectory, schedule_pairs, select_config
from .quantum_state import StateVector, TargetStateSpec, entanglement_entropy, fidelity, make_target, partial_trace
from .stats import averaged_curves, summarize

__version__ = "0.1.0"

__all__ = [
    "BlochTensor",
    "CostWeights",
    "MeasurementOutcome",
    "OUTCOMES",
    "PairConfig",
    "PauliString",
    "ProtocolParams",
    "StateVector",
    "SteeringConfig",
    "TargetStateSpec",
    "TrajectoryRecord",
    "WeakLimitWarning",
    "averaged_curves",
    "bloch_from_state",
    "entanglement_entropy",
    "enumerate_configs",
    "expected_dC",
    "fidelity",
    "global_cost",
    "local_cost",
    "make_target",
    "outcome_probabilities",
    "partial_trace",
    "rdm_bloch",
    "run_ensemble",
    "run_step",
    "run_trajectory",
    "sample_outcome",
    "schedule_pairs",
    "select_config",
    "summarize",
    "sse_step",
    "total_cost",
    "weak_values",
]
