"""Enlarged-system construction, diagonalization and effective parameters.

Each bath's reaction coordinate is truncated to M harmonic levels and absorbed
into the system, giving a spin + two-oscillator Hamiltonian of dimension 2M^2
with basis index n = s*M^2 + l_h*M + l_c (s = 0 spin-up, s = 1 spin-down;
l_i = RC occupation).  The two lowest eigenstates define a renormalized
two-level system: splitting delta_eff = E_2 - E_1 and dressed couplings
f_i = <1|V_i^D|2>.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bath import OMEGA_ZERO_TOL, BathSpec

# Hard ceiling on RC levels: the downstream Liouvillian holds 2*(2M^2)^4
# complex entries (M = 7 is ~1.5 GiB), so anything past this is hopeless to
# solve and almost certainly a typo'd argument.
M_LEVELS_CAP = 12

_SIGMA_Z = np.diag([1.0, -1.0])
_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class JunctionModel:
    """Two-level junction: spin bias, tunneling, and the two reservoirs."""

    epsilon: float
    delta: float
    hot: BathSpec
    cold: BathSpec

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")

    def bath(self, side: str) -> BathSpec:
        if side == "hot":
            return self.hot
        if side == "cold":
            return self.cold
        raise ValueError(f"unknown bath side {side!r}; use 'hot' or 'cold'")


@dataclass(frozen=True)
class EnlargedSystem:
    """Truncated spin + two-RC Hamiltonian and the bath coupling operators.

    Basis index n = s*M^2 + l_h*M + l_c.  All three matrices are exactly
    symmetric by construction (tensor products of symmetric factors).
    """

    m_levels: int
    dimension: int
    hamiltonian: np.ndarray
    coupling_hot: np.ndarray
    coupling_cold: np.ndarray

    def coupling(self, side: str) -> np.ndarray:
        return self.coupling_hot if side == "hot" else self.coupling_cold


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of an EnlargedSystem with fixed eigenvector signs."""

    m_levels: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthogonal; column j is the j-th eigenvector
    coupling_hot_d: np.ndarray
    coupling_cold_d: np.ndarray

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    def coupling_d(self, side: str) -> np.ndarray:
        return self.coupling_hot_d if side == "hot" else self.coupling_cold_d


@dataclass(frozen=True)
class EffectiveSB:
    """Renormalized two-level parameters from the lowest eigenstate pair."""

    delta_eff: float
    f_hot: float
    f_cold: float
    m_used: int
    converged: bool = True
    degenerate: bool = False


def _ladder(m: int) -> np.ndarray:
    """Position-like ladder matrix: sqrt(l) on the (l, l-1) +/- diagonals."""
    x = np.zeros((m, m))
    if m > 1:
        root = np.sqrt(np.arange(1.0, m))
        idx = np.arange(1, m)
        x[idx, idx - 1] = root
        x[idx - 1, idx] = root
    return x


def _kron3(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.kron(np.kron(a, b), c)


def _build_rect(model: JunctionModel, m_hot: int, m_cold: int) -> EnlargedSystem:
    """Rectangular-truncation builder (debug aid; public API keeps m equal)."""
    if min(m_hot, m_cold) < 1:
        raise ValueError("RC truncation needs at least one level")
    if max(m_hot, m_cold) > M_LEVELS_CAP:
        raise MemoryError(
            f"m = {max(m_hot, m_cold)} exceeds the cap {M_LEVELS_CAP}: the"
            f" steady-state solve needs 2*(2m^2)^4 complex entries"
            f" (~{2 * (2 * max(m_hot, m_cold) ** 2) ** 4 * 16 / 2**30:.0f} GiB)"
        )
    eye_h = np.eye(m_hot)
    eye_c = np.eye(m_cold)
    num_h = np.diag(np.arange(m_hot) + 0.5)
    num_c = np.diag(np.arange(m_cold) + 0.5)
    v_hot = _kron3(np.eye(2), _ladder(m_hot), eye_c)
    v_cold = _kron3(np.eye(2), eye_h, _ladder(m_cold))
    h = (
        0.5 * model.epsilon * _kron3(_SIGMA_Z, eye_h, eye_c)
        + 0.5 * model.delta * _kron3(_SIGMA_X, eye_h, eye_c)
        + model.hot.omega_rc * _kron3(np.eye(2), num_h, eye_c)
        + model.cold.omega_rc * _kron3(np.eye(2), eye_h, num_c)
        + model.hot.coupling * _kron3(_SIGMA_Z, _ladder(m_hot), eye_c)
        + model.cold.coupling * _kron3(_SIGMA_Z, eye_h, _ladder(m_cold))
    )
    return EnlargedSystem(
        m_levels=max(m_hot, m_cold),
        dimension=2 * m_hot * m_cold,
        hamiltonian=h,
        coupling_hot=v_hot,
        coupling_cold=v_cold,
    )


def build_enlarged(model: JunctionModel, m: int) -> EnlargedSystem:
    """Assemble the 2m^2-dimensional spin + two-RC system.

    Both RCs keep the same number of levels; zero-point shifts are retained
    (they cancel in every observable).  Coupling operators are the bare
    ladders (unit-normalized); the coupling energies live inside H.
    """
    return _build_rect(model, m, m)


def diagonalize(es: EnlargedSystem) -> Spectrum:
    """Eigendecomposition with a reproducible eigenvector sign convention.

    Ascending eigenvalues; in each eigenvector the entry of largest magnitude
    is made positive (ties broken by lowest index, which argmax provides).
    """
    try:
        evals, vecs = np.linalg.eigh(es.hamiltonian)
    except np.linalg.LinAlgError as exc:
        h = es.hamiltonian
        raise RuntimeError(
            f"eigensolver failed: dim {es.dimension},"
            f" max|H| {np.abs(h).max():.3e}, ||H||_F {np.linalg.norm(h):.3e}"
        ) from exc
    anchor = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[anchor, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    vd_hot = vecs.T @ es.coupling_hot @ vecs
    vd_cold = vecs.T @ es.coupling_cold @ vecs
    return Spectrum(
        m_levels=es.m_levels,
        eigenvalues=evals,
        eigenvectors=vecs,
        coupling_hot_d=0.5 * (vd_hot + vd_hot.T),
        coupling_cold_d=0.5 * (vd_cold + vd_cold.T),
    )


def effective_sb(spec: Spectrum) -> EffectiveSB:
    """Extract (delta_eff, f_hot, f_cold) from the lowest two eigenstates."""
    if spec.dimension < 2:
        raise ValueError("effective model needs at least two eigenstates")
    delta_eff = float(spec.eigenvalues[1] - spec.eigenvalues[0])
    degenerate = delta_eff < OMEGA_ZERO_TOL
    if degenerate:
        warnings.warn(
            f"delta_eff = {delta_eff:.3e} is below the degeneracy threshold;"
            " the effective two-level model is ill-conditioned",
            stacklevel=2,
        )
    return EffectiveSB(
        delta_eff=delta_eff,
        f_hot=float(spec.coupling_hot_d[0, 1]),
        f_cold=float(spec.coupling_cold_d[0, 1]),
        m_used=spec.m_levels,
        degenerate=degenerate,
    )


def converge_effective(model: JunctionModel, tol: float = 1e-4, m_max: int = 8) -> EffectiveSB:
    """Refine M until delta_eff and both |f_i| settle to relative tol.

    Compares successive truncations M, M+1; on success returns the earlier
    member of the converged pair (so a decoupled model reports m_used = 2).
    Non-convergence is reported through the flag, never raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if m_max < 2:
        raise ValueError("m_max must be at least 2")
    prev = effective_sb(diagonalize(build_enlarged(model, 2)))
    for m in range(3, m_max + 1):
        cur = effective_sb(diagonalize(build_enlarged(model, m)))
        d_gap = abs(cur.delta_eff - prev.delta_eff) / max(cur.delta_eff, 1e-12)
        d_fh = abs(abs(cur.f_hot) - abs(prev.f_hot)) / max(abs(cur.f_hot), 1e-12)
        d_fc = abs(abs(cur.f_cold) - abs(prev.f_cold)) / max(abs(cur.f_cold), 1e-12)
        if max(d_gap, d_fh, d_fc) < tol:
            return replace(prev, converged=True)
        prev = cur
    return replace(prev, converged=False)


def delta_eff_closed_form(delta: float, omega_rc: float, coupling: float) -> float:
    """Two-level splitting of a qubit hybridized with one two-level mode.

    Closed form for the single-RC system truncated at M = 2 (the oscillator
    reduced to its lowest pair), valid in the dispersive regime
    omega_rc > delta:

        delta_eff = [sqrt((W+D)^2 + 4 l^2) - sqrt((W-D)^2 + 4 l^2)] / 2

    Reduces to delta exactly at zero coupling and to the Gaussian estimate
    delta*exp(-2 l^2/W^2) for small l/W.
    """
    if omega_rc <= delta:
        raise ValueError("closed form requires omega_rc > delta")
    plus = (omega_rc + delta) ** 2 + 4.0 * coupling**2
    minus = (omega_rc - delta) ** 2 + 4.0 * coupling**2
    return 0.5 * (math.sqrt(plus) - math.sqrt(minus))


def fit_lambda_m(couplings, delta_effs) -> tuple[float, float]:
    """Gaussian-decay scale from ln(delta_eff) vs coupling^2 least squares.

    Returns (lambda_m, rms residual of the linear fit).  Requires at least
    five samples with positive coupling and splitting; a non-negative slope
    means no decay is present and is an error.
    """
    lam = np.asarray(couplings, dtype=float)
    de = np.asarray(delta_effs, dtype=float)
    keep = (lam > 0) & (de > 0)
    if keep.sum() < 5:
        raise ValueError("need at least 5 samples with coupling > 0 and delta_eff > 0")
    x = lam[keep] ** 2
    y = np.log(de[keep])
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0:
        raise RuntimeError(f"no Gaussian decay: fitted slope {slope:.3e} >= 0")
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(math.sqrt(-1.0 / slope)), residual
