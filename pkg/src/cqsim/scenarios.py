"""Built-in scenario presets.

Each preset materializes a complete run bundle: model couplings, local
moments (explicit or extracted from an environment correlator), assembled
coefficients, phase-space grid, initial data, evolution settings, and the
observables reported in time series.

Presets:
  cubic-white       cubic model, white noise, at trade-off saturation
                    N22 N33 = hbar^2 lambda1^2 / 16
  cubic-thermal     cubic model driven by a damped thermal mode
  ou-classical      d = 1, decoupled classical Kramers oscillator
  lindblad-frozen   frozen classical point, pure GKSL quantum evolution
  tradeoff-violated cubic model below the trade-off bound (CP broken)
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .cq_coeffs import CQCoefficients, ModelConfig, assemble
from .cq_master import EvolutionConfig
from .kernels import LocalMoments, build_cubic_kernels, cubic_moments, thermal_mode_correlator
from .semi_wigner import PhaseSpaceGrid, SemiWignerState, init_gaussian_product, init_point_mass
from .unraveling import GaussianInitial


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    model: ModelConfig
    moments: LocalMoments
    coeffs: CQCoefficients
    grid: PhaseSpaceGrid
    initial_kind: str  # "gaussian" | "point"
    initial: GaussianInitial
    evolution: EvolutionConfig
    observables: dict
    unravel_dt: float
    unravel_stride: int
    # closed-box runs (coarse pinned grids) tolerate wall contact: the
    # flux closure conserves trace and positivity structurally there.
    monitor_boundaries: bool = True

    def initial_state(self) -> SemiWignerState:
        if self.initial_kind == "point":
            return init_point_mass(self.grid, self.initial.h0, self.initial.pi0, self.initial.rho_psi)
        return init_gaussian_product(
            self.grid,
            self.initial.h0,
            self.initial.pi0,
            self.initial.sigma_h,
            self.initial.sigma_pi,
            self.initial.rho_psi,
        )


def _qubit_observables():
    return {"sz": hilbert.PAULI_Z, "sx": hilbert.PAULI_X, "sy": hilbert.PAULI_Y}


_RHO_PLUS_TILTED = np.array([[0.5, 0.3 - 0.15j], [0.3 + 0.15j, 0.5]], dtype=complex)


def cubic_white() -> Scenario:
    """White-noise cubic model exactly at trade-off saturation."""
    model = ModelConfig(
        hbar=1.0,
        lambda1=1.0,
        H_psi=0.5 * hilbert.PAULI_Z,
        F2=hilbert.PAULI_X,
        omega_c=1.0,
    )
    moments = LocalMoments(N22=0.25, N33=0.25)
    coeffs = assemble(moments, model)
    grid = PhaseSpaceGrid(-10.0, 10.0, 64, -10.0, 10.0, 64)
    initial = GaussianInitial(h0=0.5, pi0=0.0, sigma_h=0.9, sigma_pi=0.9, rho_psi=_RHO_PLUS_TILTED)
    evolution = EvolutionConfig(dt=0.005, t_final=1.0, output_stride=20)
    return Scenario(
        name="cubic-white",
        description="cubic model, white noise, N22 N33 = hbar^2 lambda1^2/16 (saturated)",
        model=model,
        moments=moments,
        coeffs=coeffs,
        grid=grid,
        initial_kind="gaussian",
        initial=initial,
        evolution=evolution,
        observables=_qubit_observables(),
        unravel_dt=0.0025,
        unravel_stride=40,
    )


def tradeoff_violated() -> Scenario:
    """Cubic model with N22 N33 = 0.25 of the trade-off bound (CP broken).

    Run a little longer than cubic-white: the negativity of the evolved
    state needs about a unit of time to grow past the demonstration
    threshold.
    """
    base = cubic_white()
    moments = LocalMoments(N22=0.0625, N33=0.25)
    coeffs = assemble(moments, base.model)
    return replace(
        base,
        name="tradeoff-violated",
        description="cubic model below the trade-off bound; positivity falsification demo",
        moments=moments,
        coeffs=coeffs,
        evolution=EvolutionConfig(dt=0.005, t_final=1.5, output_stride=30),
    )


def cubic_thermal() -> Scenario:
    """Cubic model with kernels from a damped thermal mode (32 x 32, d = 2).

    Temperature is low (beta hbar Omega = 8) so that the oscillatory kernel
    tails keep all second moments nonnegative; the damping of the mode
    gives finite memory and hence finite Markov moments. The pinned coarse
    grid cannot hold a 1e-8 boundary clearance for a resolved state, so
    this preset runs as a closed box (monitor_boundaries=False): the flux
    closure conserves trace and positivity structurally at the walls.
    """
    hbar = 1.0
    omega = 1.0
    corr = thermal_mode_correlator(
        omega=omega,
        temperature=hbar * omega / 8.0,
        hbar=hbar,
        linewidth=0.25 * omega,
        window=60.0 / omega,
        dtau=0.005 / omega,
    )
    kernels = build_cubic_kernels(corr, lambda2=0.7, lambda3=0.2)
    moments = cubic_moments(kernels)
    model = ModelConfig(
        hbar=hbar,
        lambda1=0.12,
        H_psi=0.5 * hilbert.PAULI_Z,
        F2=hilbert.PAULI_X,
        omega_c=1.0,
    )
    coeffs = assemble(moments, model)
    grid = PhaseSpaceGrid(-5.0, 5.0, 32, -5.0, 5.0, 32)
    initial = GaussianInitial(h0=0.3, pi0=0.0, sigma_h=1.0, sigma_pi=1.0, rho_psi=_RHO_PLUS_TILTED)
    evolution = EvolutionConfig(dt=1.5e-4, t_final=1.5, output_stride=500)
    return Scenario(
        name="cubic-thermal",
        description="cubic model, damped thermal single mode environment (closed box)",
        model=model,
        moments=moments,
        coeffs=coeffs,
        grid=grid,
        initial_kind="gaussian",
        initial=initial,
        evolution=evolution,
        observables=_qubit_observables(),
        unravel_dt=0.0025,
        unravel_stride=60,
        monitor_boundaries=False,
    )


def ou_classical() -> Scenario:
    """Decoupled classical Kramers oscillator (d = 1 oracle scenario)."""
    model = ModelConfig(
        hbar=1.0,
        lambda1=0.0,
        H_psi=np.zeros((1, 1)),
        F2=np.zeros((1, 1)),
        omega_c=1.0,
    )
    moments = LocalMoments(N33=0.4, N33_2=0.1, D33_1=1.0)
    coeffs = assemble(moments, model)
    grid = PhaseSpaceGrid(-6.5, 6.5, 64, -6.5, 6.5, 64)
    initial = GaussianInitial(h0=0.4, pi0=0.0, sigma_h=0.6, sigma_pi=0.6, rho_psi=np.eye(1))
    evolution = EvolutionConfig(dt=0.003, t_final=5.0, output_stride=100)
    return Scenario(
        name="ou-classical",
        description="classical Kramers/Ornstein-Uhlenbeck oscillator, quantum sector trivial",
        model=model,
        moments=moments,
        coeffs=coeffs,
        grid=grid,
        initial_kind="gaussian",
        initial=initial,
        evolution=evolution,
        observables={},
        unravel_dt=0.003,
        unravel_stride=100,
    )


def lindblad_frozen() -> Scenario:
    """Frozen classical point; the quantum sector evolves by pure GKSL.

    All hybrid couplings vanish (lambda1 = 0, mixed 32-moments zero) and
    the classical sector is drift- and diffusion-free, so a point mass at
    a grid node with pi0 = 0 never moves. The quantum marginal then obeys
    the dense Lindblad equation with H_eff(h0, 0) and D0. D23, D22 and
    D22_1 are nonzero so every term of H_eff is exercised; F2 carries an
    identity part so that {F2, R2} does not vanish identically.
    """
    model = ModelConfig(
        hbar=1.0,
        lambda1=0.0,
        H_psi=0.6 * hilbert.PAULI_Z,
        F2=hilbert.PAULI_X + 0.5 * hilbert.identity(2),
        omega_c=0.0,
    )
    moments = LocalMoments(N22=0.5, N22_2=0.125, D22_1=0.4, D22=0.3, D23=-0.9, D23_1=0.2)
    coeffs = assemble(moments, model)
    grid = PhaseSpaceGrid(-2.0, 2.0, 17, -2.0, 2.0, 17)
    initial = GaussianInitial(h0=0.5, pi0=0.0, sigma_h=0.0, sigma_pi=0.0, rho_psi=_RHO_PLUS_TILTED)
    evolution = EvolutionConfig(dt=0.004, t_final=10.0, output_stride=250)
    return Scenario(
        name="lindblad-frozen",
        description="diffusion-free frozen-classical run; dense Lindblad oracle applies",
        model=model,
        moments=moments,
        coeffs=coeffs,
        grid=grid,
        initial_kind="point",
        initial=initial,
        evolution=evolution,
        observables=_qubit_observables(),
        unravel_dt=0.004,
        unravel_stride=250,
    )


PRESETS = {
    "cubic-white": cubic_white,
    "cubic-thermal": cubic_thermal,
    "ou-classical": ou_classical,
    "lindblad-frozen": lindblad_frozen,
    "tradeoff-violated": tradeoff_violated,
}


def build_scenario(name: str) -> Scenario:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {sorted(PRESETS)}") from None
    return builder()
