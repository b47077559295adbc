"""Exact decision procedures for pseudo-orbit shadowing on finite metric spaces."""

from .analyze import (
    COLUMNS,
    IMPLICATIONS,
    Check,
    EquivalenceReport,
    FunctionalPseudoOrbit,
    ModulusTable,
    cgpotp_check,
    equivalence_experiment,
    fgpotp_check,
    modulus_table,
    separation_search,
    structural_check,
    structural_check_nonaut,
    usc_check,
)
from .construct import (
    Infeasible,
    PerturbationRequest,
    PreconditionError,
    RealizationResult,
    check_consistency,
    compress_loops,
    perturb_finite_support,
    perturb_to_injective,
    realize_autonomous,
    realize_by_continuous_sequence,
    realize_nonautonomous,
    realize_prefix_continuous,
    telescoping_bound_check,
    weak_perturbation_delta,
)
from .core import (
    ALL,
    INF,
    ContinuityClass,
    FiniteMetricSpace,
    NonautonomousSystem,
    SystemMap,
    Violation,
    orbit,
    orbit_nonaut,
    rho,
    rho_seq,
    validate_space,
)
from .documents import DocumentError, load_system, load_table, save_results, system_to_document
from .pseudo import (
    BudgetExceeded,
    DeltaGraph,
    Outcome,
    PseudoOrbit,
    ShadowingVerdict,
    brute_force_shadowing,
    decide_shadowing,
    delta_graph,
    delta_probes,
    epsilon_probes,
    first_violation,
    is_pseudo_orbit,
    shadow_survivors,
    shadowing_modulus,
    threshold,
)
from .zoo import ZooSpec, build_zoo

__all__ = [
    "ALL",
    "BudgetExceeded",
    "COLUMNS",
    "Check",
    "ContinuityClass",
    "DeltaGraph",
    "DocumentError",
    "EquivalenceReport",
    "FiniteMetricSpace",
    "FunctionalPseudoOrbit",
    "IMPLICATIONS",
    "INF",
    "Infeasible",
    "ModulusTable",
    "NonautonomousSystem",
    "Outcome",
    "PerturbationRequest",
    "PreconditionError",
    "PseudoOrbit",
    "RealizationResult",
    "ShadowingVerdict",
    "SystemMap",
    "Violation",
    "ZooSpec",
    "brute_force_shadowing",
    "build_zoo",
    "cgpotp_check",
    "check_consistency",
    "compress_loops",
    "decide_shadowing",
    "delta_graph",
    "delta_probes",
    "epsilon_probes",
    "equivalence_experiment",
    "fgpotp_check",
    "first_violation",
    "is_pseudo_orbit",
    "load_system",
    "load_table",
    "modulus_table",
    "orbit",
    "orbit_nonaut",
    "perturb_finite_support",
    "perturb_to_injective",
    "realize_autonomous",
    "realize_by_continuous_sequence",
    "realize_nonautonomous",
    "realize_prefix_continuous",
    "rho",
    "rho_seq",
    "save_results",
    "separation_search",
    "shadow_survivors",
    "shadowing_modulus",
    "structural_check",
    "structural_check_nonaut",
    "system_to_document",
    "telescoping_bound_check",
    "threshold",
    "usc_check",
    "validate_space",
    "weak_perturbation_delta",
]
__version__ = "0.1.0"
