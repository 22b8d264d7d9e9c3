"""Hidden-variable no-go verification: valuations, expectation representations,
and the qubit value model."""

from .operators import (
    DensityMatrix,
    JointSpectrumSet,
    Observable,
    Polynomial,
    Ray,
    check_vanishing,
    commutes,
    embed,
    joint_spectrum,
    spectrum,
)
from .valuation import (
    RaySet,
    SearchCertificate,
    build_contexts,
    find_valuation,
    find_valuation_general,
    verify_valuation,
)

__all__ = [
    "DensityMatrix",
    "JointSpectrumSet",
    "Observable",
    "Polynomial",
    "Ray",
    "RaySet",
    "SearchCertificate",
    "build_contexts",
    "check_vanishing",
    "commutes",
    "embed",
    "find_valuation",
    "find_valuation_general",
    "joint_spectrum",
    "spectrum",
    "verify_valuation",
]
