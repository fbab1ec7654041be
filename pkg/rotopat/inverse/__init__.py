from .operator import (KAPPA_BUDGET, KappaMatrix, LinearizedOperator, MeasurementModel,
                       assemble_kappa, data_derivative, hat_basis, measurement_matrix,
                       singular_values)
from .reconstruct import (IterationRecord, ReconstructionState, reconstruct, reconstruct_noisy,
                          relative_errors)
from .spectral import poincare_constant, power_iteration, time_reversal_norm
from .stability import StabilityReport, domination_ratio, smallness_margin, stability_experiment
from .symbol import SymbolWeight, symbol_weight, visibility_factors

__all__ = [
    "KAPPA_BUDGET", "KappaMatrix", "LinearizedOperator", "MeasurementModel", "assemble_kappa",
    "data_derivative", "hat_basis", "measurement_matrix", "singular_values",
    "IterationRecord", "ReconstructionState", "reconstruct", "reconstruct_noisy", "relative_errors",
    "poincare_constant", "power_iteration", "time_reversal_norm",
    "StabilityReport", "domination_ratio", "smallness_margin", "stability_experiment",
    "SymbolWeight", "symbol_weight", "visibility_factors",
]
