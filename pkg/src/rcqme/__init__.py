"""Steady-state heat transport through a strongly coupled two-level junction.

The package maps each bosonic bath onto a reaction coordinate absorbed into
an enlarged system, solves the non-secular Redfield equation for the steady
state, and extracts effective two-level parameters that feed closed-form
current and rectification expressions.
"""

from .bath import (
    BathSpec,
    RotatedBathParams,
    bose_occupation,
    gamma_rate,
    gamma_rate_ssb,
    j_rc,
    j_ssb,
    kernel_equivalence_residual,
    reorganization_energy,
    rotated_params,
)
from .hamiltonian import (
    EffectiveSB,
    EnlargedSystem,
    JunctionModel,
    Spectrum,
    build_enlarged,
    converge_effective,
    delta_eff_closed_form,
    diagonalize,
    effective_sb,
    fit_lambda_m,
)
from .methods import (
    MethodResult,
    RectificationResult,
    RectificationTrend,
    asymmetric_model,
    bmr_closed_form,
    current_bmr,
    current_effsb,
    current_rcqme,
    effsb_symmetric_closed_form,
    rectification,
    rectification_analytic,
    rectification_strength_trend,
)
from .redfield import (
    BathChannel,
    DegenerateSteadyStateError,
    RedfieldSetup,
    SteadyStateResult,
    SteadyStateSolution,
    build_liouvillian,
    dissipator_apply,
    heat_current,
    setup_junction,
    solve_junction,
    steady_state,
)
from .sweep import (
    ConfigError,
    SweepConfig,
    SweepSummary,
    config_from_text,
    config_to_text,
    m_convergence_report,
    preset,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BathChannel",
    "BathSpec",
    "ConfigError",
    "DegenerateSteadyStateError",
    "EffectiveSB",
    "EnlargedSystem",
    "JunctionModel",
    "MethodResult",
    "RectificationResult",
    "RectificationTrend",
    "RedfieldSetup",
    "RotatedBathParams",
    "Spectrum",
    "SteadyStateResult",
    "SteadyStateSolution",
    "SweepConfig",
    "SweepSummary",
    "asymmetric_model",
    "bmr_closed_form",
    "bose_occupation",
    "build_enlarged",
    "build_liouvillian",
    "config_from_text",
    "config_to_text",
    "converge_effective",
    "current_bmr",
    "current_effsb",
    "current_rcqme",
    "delta_eff_closed_form",
    "diagonalize",
    "dissipator_apply",
    "effective_sb",
    "effsb_symmetric_closed_form",
    "fit_lambda_m",
    "gamma_rate",
    "gamma_rate_ssb",
    "heat_current",
    "j_rc",
    "j_ssb",
    "kernel_equivalence_residual",
    "m_convergence_report",
    "preset",
    "rectification",
    "rectification_analytic",
    "rectification_strength_trend",
    "reorganization_energy",
    "rotated_params",
    "run_sweep",
    "setup_junction",
    "solve_junction",
    "steady_state",
    "__version__",
]
