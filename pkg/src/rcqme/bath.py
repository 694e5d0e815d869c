"""Bath spectral densities, thermal occupation and Redfield rate functions.

Two spectral families appear throughout: the Brownian (peaked) density of the
original spin-boson description,

    J_brown(w) = 4 g w W^2 l^2 / [(W^2 - w^2)^2 + (2 pi g W w)^2],

and the Ohmic density of the residual baths left over after the
reaction-coordinate extraction,

    J_ohmic(w) = g w exp(-w/cutoff).

All energies are measured in units of the bare tunneling splitting
(hbar = k_B = 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

# Bohr frequencies below this (units of the tunneling splitting) are treated
# as exactly zero when building rates; eigensolver noise sits well below it.
OMEGA_ZERO_TOL = 1e-9

# The Redfield treatment assumes g << 1; warn (don't refuse) past this point.
GAMMA_WARN_THRESHOLD = 0.1


@dataclass(frozen=True)
class BathSpec:
    """Physical parameters of one reservoir.

    coupling      spin-RC coupling energy (lambda_i >= 0)
    omega_rc      reaction-coordinate frequency (Omega_i > 0)
    gamma         dimensionless width / residual coupling (gamma_i > 0)
    cutoff        exponential cutoff of the residual Ohmic bath (Lambda_i > 0)
    temperature   bath temperature (T_i > 0)
    """

    coupling: float
    omega_rc: float
    gamma: float
    cutoff: float
    temperature: float

    def __post_init__(self) -> None:
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        for name in ("omega_rc", "gamma", "cutoff", "temperature"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.gamma > GAMMA_WARN_THRESHOLD:
            warnings.warn(
                f"gamma = {self.gamma} exceeds {GAMMA_WARN_THRESHOLD}; the"
                " weak-coupling master equation is unreliable here",
                stacklevel=2,
            )


@dataclass(frozen=True)
class RotatedBathParams:
    """Renormalized RC parameters after absorbing the quadratic bath shift."""

    eta: float
    lambda_tilde: float
    omega_tilde: float
    gamma_tilde: float


def bose_occupation(omega, temperature):
    """Bose-Einstein occupation n(w) = 1/(exp(w/T) - 1) for w > 0.

    Accepts scalars or arrays (elementwise).  Strictly positive frequencies
    only; rate functions own the w -> 0 limit.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("bose_occupation requires omega > 0")
    if temperature <= 0:
        raise ValueError("bose_occupation requires temperature > 0")
    with np.errstate(over="ignore"):
        n = 1.0 / np.expm1(w / temperature)  # expm1 -> inf deep in the quantum limit, n -> 0
    return n if n.ndim else float(n)


def j_ssb(omega, bath: BathSpec):
    """Brownian spectral density of the unmapped model, defined for w >= 0."""
    w = np.asarray(omega, dtype=float)
    om2 = bath.omega_rc**2
    num = 4.0 * bath.gamma * w * om2 * bath.coupling**2
    den = (om2 - w * w) ** 2 + (2.0 * math.pi * bath.gamma * bath.omega_rc * w) ** 2
    out = num / den
    return out if out.ndim else float(out)


def j_rc(omega, bath: BathSpec):
    """Ohmic residual-bath spectral density g * w * exp(-w/cutoff), w >= 0."""
    w = np.asarray(omega, dtype=float)
    out = bath.gamma * w * np.exp(-w / bath.cutoff)
    return out if out.ndim else float(out)


def _thermal_rate(omega, bath: BathSpec, j_of_w, zero_limit: float):
    """Half-Fourier-transform rate for one spectral family.

      w > 0:  pi J(w) n(w)          (absorption)
      w < 0:  pi J(|w|) (n(|w|)+1)  (emission)
      w = 0:  analytic Ohmic-slope limit, supplied by the caller

    |w| below OMEGA_ZERO_TOL counts as zero (eigenvalue noise).
    """
    w = np.asarray(omega, dtype=float)
    aw = np.abs(w)
    nonzero = aw >= OMEGA_ZERO_TOL
    out = np.full(w.shape, zero_limit)
    if np.any(nonzero):
        awn = aw[nonzero]
        n = bose_occupation(awn, bath.temperature)
        emission = w[nonzero] < 0
        out[nonzero] = math.pi * j_of_w(awn, bath) * (n + emission)
    return out if out.ndim else float(out)


def gamma_rate(omega, bath: BathSpec):
    """Redfield rate for the Ohmic residual bath; zero-frequency limit pi*g*T."""
    return _thermal_rate(omega, bath, j_rc, math.pi * bath.gamma * bath.temperature)


def gamma_rate_ssb(omega, bath: BathSpec):
    """Redfield rate built on the Brownian density (weak-coupling baseline).

    Zero-frequency limit pi * T * J'(0) with J'(0) = 4 g l^2 / W^2.
    """
    slope = 4.0 * bath.gamma * bath.coupling**2 / bath.omega_rc**2
    return _thermal_rate(omega, bath, j_ssb, math.pi * bath.temperature * slope)


def rotated_params(bath: BathSpec) -> RotatedBathParams:
    """Exact rotation absorbing the quadratic RC displacement term.

    eta = g*cutoff/W;  W~ = W sqrt(1+4 eta);  l~ = l/(1+4 eta)^(1/4);
    g~ = g/sqrt(1+4 eta).  Identity transform when the product g*cutoff
    vanishes.  Note: master-equation propagation in the rotated frame is
    invalid (the residual coupling is no longer weak); this transform is a
    parameter diagnostic only.
    """
    eta = bath.gamma * bath.cutoff / bath.omega_rc
    scale = 1.0 + 4.0 * eta
    return RotatedBathParams(
        eta=eta,
        lambda_tilde=bath.coupling / scale**0.25,
        omega_tilde=bath.omega_rc * math.sqrt(scale),
        gamma_tilde=bath.gamma / math.sqrt(scale),
    )


def kernel_equivalence_residual(omega: float, bath: BathSpec) -> float:
    """Mismatch between the RC-picture kernel and pi*J_brown(w).

    Evaluates Im[(kappa^2/W^2) L(z)/(W^2 + L(z))] with kappa^2 = 2 W l^2 and
    L(z) = -z^2 + 2 pi i z W g (the infinite-cutoff closed form of the
    residual-bath self-energy; finite cutoff adds O(w/cutoff)), divides by
    pi*J_brown(w) and returns |ratio - 1|.  The identity is exact, so any
    appreciable residual signals a transcription bug.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("kernel equivalence is defined for omega > 0")
    om = bath.omega_rc
    kappa_sq = 2.0 * om * bath.coupling**2
    lz = -(omega**2) + 2j * math.pi * omega * om * bath.gamma
    kernel = ((kappa_sq / om**2) * lz / (om**2 + lz)).imag
    out = np.abs(kernel / (math.pi * j_ssb(omega, bath)) - 1.0)
    return float(out) if out.ndim == 0 else out


def reorganization_energy(bath: BathSpec, which: str = "rc") -> tuple[float, float]:
    """Reorganization energy  int_0^inf J(w)/w dw  and an error estimate.

    which="rc": closed form g*cutoff (error 0).  which="ssb": adaptive
    quadrature over [0, 50 W] with the peak at W flagged as a breakpoint,
    plus the analytic 1/w^4 tail estimate beyond.
    """
    fam = which.lower()
    if fam == "rc":
        return bath.gamma * bath.cutoff, 0.0
    if fam != "ssb":
        raise ValueError(f"unknown spectral family {which!r}; use 'rc' or 'ssb'")

    om = bath.omega_rc
    prefac = 4.0 * bath.gamma * om**2 * bath.coupling**2

    def integrand(w):
        return prefac / ((om**2 - w * w) ** 2 + (2.0 * math.pi * bath.gamma * om * w) ** 2)

    hi = 50.0 * om
    value, abserr, info, *tail_msg = quad(
        integrand, 0.0, hi, points=[om], limit=200, full_output=1
    )
    if tail_msg:  # quad appended a convergence warning message
        raise RuntimeError(
            f"reorganization-energy quadrature did not converge: {tail_msg[0]}"
            f" (partial result {value})"
        )
    # Integrand ~ prefac/w^4 past the peak; the cutoff at 50 W leaves a tail
    # known analytically to leading order, off by O((W/hi)^2) from the exact one.
    tail = prefac / (3.0 * hi**3)
    return value + tail, abserr + tail * (om / hi) ** 2
