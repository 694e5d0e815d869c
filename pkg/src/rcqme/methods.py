"""High-level heat-current calculators and the rectification study.

Three methods share one junction description:

  rcqme  -- full solve of the RC-enlarged system at truncation m,
  bmr    -- the same Redfield machinery on the bare two-level system with
            rates built from the structured spectral density (weak-coupling
            baseline; quadratic in the coupling),
  effsb  -- closed-form current of the effective spin-boson model, with
            (Delta_eff, f_h, f_c) taken at truncation convergence.

The effective closed form, with J^eff_i = gamma_i * Delta_eff * f_i^2 *
exp(-Delta_eff / cutoff_i) and occupations at Delta_eff, reads

              2 pi Delta_eff J^eff_h J^eff_c (n_h - n_c)
    J_h = -------------------------------------------------- .
            J^eff_h (2 n_h + 1) + J^eff_c (2 n_c + 1)

Rectification compares the junction against itself with hot and cold
temperatures exchanged at fixed couplings lambda(1 -+ chi); the ratio
R = |J_fwd / J_rev| is also available analytically from the effective
parameters, with the coupling asymmetry entering as r = f_h^2 / f_c^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .bath import bose_occupation, gamma_rate_ssb, j_ssb
from .hamiltonian import (
    EffectiveSB,
    EnlargedSystem,
    JunctionModel,
    converge_effective,
    diagonalize,
)
from .redfield import (
    BathChannel,
    RedfieldSetup,
    build_liouvillian,
    heat_current,
    solve_junction,
    steady_state,
)

METHOD_TOKENS = ("rcqme", "bmr", "effsb")

# below this absolute reverse current the rectification ratio is meaningless
REVERSE_CURRENT_FLOOR = 1e-15

_SZ = np.diag([1.0, -1.0])
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class MethodResult:
    """Scalar hot-side current plus whatever metadata the method produced."""

    method: str
    current: float
    current_cold: float | None = None
    m_used: int | None = None
    delta_eff: float | None = None
    f_hot: float | None = None
    f_cold: float | None = None
    residual_norm: float | None = None
    null_space_dim: int | None = None
    min_eigenvalue: float | None = None
    converged: bool = True
    note: str = ""


@dataclass(frozen=True)
class RectificationResult:
    chi: float
    current_forward: float
    current_reverse: float
    ratio: float


@dataclass(frozen=True)
class RectificationTrend:
    """R(lambda) table at fixed chi, plus the monotonicity verdict."""

    lambdas: tuple[float, ...]
    rows: tuple[RectificationResult, ...]
    nondecreasing: bool


def current_rcqme(model: JunctionModel, m: int) -> MethodResult:
    """Hot-side steady current of the RC-enlarged junction at truncation m."""
    if m < 2:
        raise ValueError("rcqme needs m >= 2; m = 1 has no RC transitions")
    result = solve_junction(model, m)
    return MethodResult(
        method="rcqme",
        current=result.current_hot,
        current_cold=result.current_cold,
        m_used=m,
        residual_norm=result.residual_norm,
        null_space_dim=result.null_space_dim,
        min_eigenvalue=result.min_eigenvalue,
        note=result.note,
    )


def _bare_spin_setup(model: JunctionModel) -> RedfieldSetup:
    """Two-level system, sigma_z coupling per bath, structured-density rates."""
    h = 0.5 * model.epsilon * _SZ + 0.5 * model.delta * _SX
    container = EnlargedSystem(
        m_levels=1,
        dimension=2,
        hamiltonian=h,
        coupling_hot=_SZ.copy(),
        coupling_cold=_SZ.copy(),
    )
    spec = diagonalize(container)
    return RedfieldSetup(
        energies=spec.eigenvalues,
        hot=BathChannel("hot", model.hot, spec.coupling_hot_d,
                        partial(gamma_rate_ssb, bath=model.hot)),
        cold=BathChannel("cold", model.cold, spec.coupling_cold_d,
                         partial(gamma_rate_ssb, bath=model.cold)),
    )


def bmr_closed_form(model: JunctionModel) -> float:
    """Unbiased weak-coupling current from the two-level closed form.

    Only valid at epsilon = 0, where populations and coherences decouple and
    the bare splitting carries all transport.
    """
    if model.epsilon != 0.0:
        raise ValueError("closed form requires epsilon = 0")
    w = model.delta
    jh = float(j_ssb(w, model.hot))
    jc = float(j_ssb(w, model.cold))
    nh = bose_occupation(w, model.hot.temperature)
    nc = bose_occupation(w, model.cold.temperature)
    den = jh * (2 * nh + 1) + jc * (2 * nc + 1)
    if den == 0.0:
        return 0.0
    return 2 * np.pi * w * jh * jc * (nh - nc) / den


def current_bmr(model: JunctionModel) -> MethodResult:
    """Weak-coupling baseline on the bare spin (quadratic in the coupling)."""
    if model.hot.coupling == 0.0 and model.cold.coupling == 0.0:
        return MethodResult(method="bmr", current=0.0, current_cold=0.0,
                            note="both couplings zero: no dissipation")
    setup = _bare_spin_setup(model)
    sol = steady_state(build_liouvillian(setup))
    j_hot = heat_current(setup, sol.rho_extended, "hot")
    j_cold = heat_current(setup, sol.rho_extended, "cold")
    note = ""
    if model.epsilon == 0.0:
        reference = bmr_closed_form(model)
        scale = max(abs(reference), 1e-300)
        if abs(j_hot - reference) > 1e-8 * scale + 1e-16:
            note = "solver and closed form disagree at epsilon = 0"
            warnings.warn(note, RuntimeWarning, stacklevel=2)
    return MethodResult(
        method="bmr",
        current=j_hot,
        current_cold=j_cold,
        residual_norm=sol.residual_norm,
        null_space_dim=sol.null_space_dim,
        min_eigenvalue=sol.min_eigenvalue,
        note=note,
    )


def _effsb_from_parameters(eff: EffectiveSB, model: JunctionModel) -> float:
    de = eff.delta_eff
    j_eff_h = model.hot.gamma * de * eff.f_hot ** 2 * np.exp(-de / model.hot.cutoff)
    j_eff_c = model.cold.gamma * de * eff.f_cold ** 2 * np.exp(-de / model.cold.cutoff)
    nh = bose_occupation(de, model.hot.temperature)
    nc = bose_occupation(de, model.cold.temperature)
    den = j_eff_h * (2 * nh + 1) + j_eff_c * (2 * nc + 1)
    if den == 0.0:
        return 0.0
    return 2 * np.pi * de * j_eff_h * j_eff_c * (nh - nc) / den


def current_effsb(model: JunctionModel, tol: float = 1e-4,
                  m_max: int = 8) -> MethodResult:
    """Closed-form current of the effective spin-boson model."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    eff = converge_effective(model, tol=tol, m_max=m_max)
    if eff.degenerate:
        return MethodResult(
            method="effsb", current=0.0, current_cold=0.0,
            m_used=eff.m_used, delta_eff=eff.delta_eff,
            f_hot=eff.f_hot, f_cold=eff.f_cold, converged=eff.converged,
            note="effective splitting below degeneracy threshold",
        )
    j = _effsb_from_parameters(eff, model)
    return MethodResult(
        method="effsb", current=j, current_cold=-j,
        m_used=eff.m_used, delta_eff=eff.delta_eff,
        f_hot=eff.f_hot, f_cold=eff.f_cold, converged=eff.converged,
        note="" if eff.converged else "effective parameters not converged",
    )


def effsb_symmetric_closed_form(eff: EffectiveSB, gamma: float,
                                t_hot: float, t_cold: float) -> float:
    """Symmetric-junction, infinite-cutoff form of the effective current.

    J = pi gamma f^2 Delta_eff^2 (n_h - n_c) / (n_h + n_c + 1); differs from
    the full form by the cutoff factor exp(-Delta_eff / cutoff) only.
    """
    de = eff.delta_eff
    f2 = eff.f_hot * eff.f_cold
    nh = bose_occupation(de, t_hot)
    nc = bose_occupation(de, t_cold)
    return np.pi * gamma * abs(f2) * de ** 2 * (nh - nc) / (nh + nc + 1)


def _current_for(model: JunctionModel, method: str, m: int | None,
                 tol: float, m_max: int) -> float:
    if method == "rcqme":
        if m is None:
            raise ValueError("method 'rcqme' needs the truncation m")
        return current_rcqme(model, m).current
    if method == "bmr":
        return current_bmr(model).current
    if method == "effsb":
        return current_effsb(model, tol=tol, m_max=m_max).current
    raise ValueError(f"unknown method {method!r}; expected one of {METHOD_TOKENS}")


def asymmetric_model(model: JunctionModel, lambda_mean: float,
                     chi: float) -> JunctionModel:
    """Couplings lambda(1 - chi) hot and lambda(1 + chi) cold, all else kept."""
    if not -1.0 < chi < 1.0:
        raise ValueError("chi must lie in (-1, 1)")
    if lambda_mean < 0:
        raise ValueError("lambda_mean must be nonnegative")
    return replace(
        model,
        hot=replace(model.hot, coupling=lambda_mean * (1.0 - chi)),
        cold=replace(model.cold, coupling=lambda_mean * (1.0 + chi)),
    )


def _swap_temperatures(model: JunctionModel) -> JunctionModel:
    return replace(
        model,
        hot=replace(model.hot, temperature=model.cold.temperature),
        cold=replace(model.cold, temperature=model.hot.temperature),
    )


def rectification(model: JunctionModel, lambda_mean: float, chi: float,
                  method: str = "effsb", m: int | None = None,
                  tol: float = 1e-4, m_max: int = 8) -> RectificationResult:
    """Two-direction rectification ratio R = |J_fwd / J_rev|.

    Forward: temperatures as given.  Reverse: hot and cold temperatures
    exchanged, couplings held fixed.  Both currents are read at the hot-side
    port of the forward orientation.
    """
    forward_model = asymmetric_model(model, lambda_mean, chi)
    j_fwd = _current_for(forward_model, method, m, tol, m_max)
    j_rev = _current_for(_swap_temperatures(forward_model), method, m, tol, m_max)
    if abs(j_rev) < REVERSE_CURRENT_FLOOR:
        raise RuntimeError(
            "rectification ratio undefined: reverse current below "
            f"{REVERSE_CURRENT_FLOOR:g}"
        )
    return RectificationResult(
        chi=chi,
        current_forward=j_fwd,
        current_reverse=j_rev,
        ratio=abs(j_fwd / j_rev),
    )


def rectification_analytic(eff: EffectiveSB, temps: tuple[float, float]) -> float:
    """Closed-form ratio from the effective parameters.

    With r = f_h^2 / f_c^2 and occupations at Delta_eff,

        R = [r (2 n_c + 1) + (2 n_h + 1)] / [r (2 n_h + 1) + (2 n_c + 1)].

    The coupling asymmetry enters squared because the effective spectral
    densities carry |f_i|^2.
    """
    if eff.delta_eff <= 0:
        raise ValueError("delta_eff must be positive")
    t_hot, t_cold = temps
    nh = bose_occupation(eff.delta_eff, t_hot)
    nc = bose_occupation(eff.delta_eff, t_cold)
    if eff.f_cold == 0.0:
        # r -> infinity limit
        return (2 * nc + 1) / (2 * nh + 1)
    r = (eff.f_hot / eff.f_cold) ** 2
    return (r * (2 * nc + 1) + (2 * nh + 1)) / (r * (2 * nh + 1) + (2 * nc + 1))


def rectification_strength_trend(model: JunctionModel, lambdas,
                                 chi: float, method: str = "effsb",
                                 m: int | None = None, tol: float = 1e-4,
                                 m_max: int = 8) -> RectificationTrend:
    """R(lambda) at fixed chi, with a nondecreasing-trend verdict."""
    lams = tuple(float(x) for x in lambdas)
    if len(lams) < 2:
        raise ValueError("need at least two lambda values")
    rows = tuple(
        rectification(model, lam, chi, method=method, m=m, tol=tol, m_max=m_max)
        for lam in lams
    )
    ratios = [row.ratio for row in rows]
    nondecreasing = all(b >= a * (1 - 1e-12) for a, b in zip(ratios, ratios[1:]))
    return RectificationTrend(lambdas=lams, rows=rows, nondecreasing=nondecreasing)
