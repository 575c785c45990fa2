"""Trapped-ion CNOT with quantized laser fields: Poisson sums, pulse channels,
repeated-gate failure probabilities and a brute-force joint-state reference."""
from .field import CoherentField, evaluate_sum, evaluate_sum_certified, evaluate_table, poisson_weight
from .dynamics import Protocol, Pulse, cz_cnot_protocol, ideal_gate
from .channel import (ALL_IDEAL, ALL_QUANTIZED, SIDEBAND_LIMITED, KrausFamily, Superoperator,
                      WindowError, evolve, gate_superop, kraus_from_pulse)
from .metrics import PRESETS, InitialQubitState, failure_curve, failure_probability

__version__ = "0.1.0"

__all__ = [
    "CoherentField", "evaluate_sum", "evaluate_sum_certified", "evaluate_table", "poisson_weight",
    "Protocol", "Pulse", "cz_cnot_protocol", "ideal_gate",
    "ALL_IDEAL", "ALL_QUANTIZED", "SIDEBAND_LIMITED", "KrausFamily", "Superoperator",
    "WindowError", "evolve", "gate_superop", "kraus_from_pulse",
    "PRESETS", "InitialQubitState", "failure_curve", "failure_probability",
]
