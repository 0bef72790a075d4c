"""Periodic strictly lower-triangular difference operators: spectral curves,
Bloch expansions, Lax flows, symplectic charts and frame coordinates."""

from .charts import Chart, ChartPoint, chart_from_operator, operator_from_chart
from .errors import TodaTriError
from .flows import FlowTag, integrate, invariant_drift
from .frame import FramePair, frame_to_operator, operator_to_frame
from .operator import TriangularOperator, random_operator, validate
from .series import hamiltonian_e, hamiltonian_log, minus_series, plus_series
from .spectral import SpectralCurve, characteristic_curve, floquet_roots
from .symplectic import (
    Hamiltonian,
    hamiltonian_value,
    hamiltonian_vector_field,
    match_lax,
    omega1_evaluate,
    symplectic_matrix,
)

__all__ = [
    "Chart", "ChartPoint", "FlowTag", "FramePair", "Hamiltonian", "SpectralCurve",
    "TodaTriError", "TriangularOperator", "characteristic_curve", "chart_from_operator",
    "floquet_roots", "frame_to_operator", "hamiltonian_e", "hamiltonian_log",
    "hamiltonian_value", "hamiltonian_vector_field", "integrate", "invariant_drift",
    "match_lax", "minus_series", "omega1_evaluate", "operator_from_chart",
    "operator_to_frame", "plus_series", "random_operator", "symplectic_matrix", "validate",
]
