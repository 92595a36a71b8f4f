"""Assembly of the Markovian CQ generator coefficients.

From the local moments and the model couplings this builds the classical
drift and diffusion, the effective Hamiltonian acting on the quantum
sector, the GKSL coefficient matrix D0 over the operator basis
(F2, R2 = (i/hbar)[H_psi, F2]), and the hybrid coefficients

    gamma = lambda1/2 + D32/(2 hbar)    nu = 2 N23/hbar = 2 N32/hbar
    kappa = D32_1/(2 hbar)              mu = 2 N23_2/hbar,

together with the hybrid-coupling vectors d_pi = (gamma - i nu, kappa)
and d_h = (0, i mu). The classical free sector is a harmonic oscillator
H_c = pi^2/2 + omega_c^2 h^2/2, so the drift is
A(h, pi) = -(omega_c^2 + D33/hbar) h - (D33_1/hbar) pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .errors import KernelConsistencyError
from .kernels import LocalMoments

_MIXED_SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class ModelConfig:
    """Couplings and operators of the reduced hybrid model."""

    hbar: float
    lambda1: float
    H_psi: np.ndarray
    F2: np.ndarray
    omega_c: float = 0.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.omega_c < 0:
            raise ValueError("omega_c must be nonnegative")
        H = hilbert.require_hermitian(self.H_psi, "H_psi")
        F = hilbert.require_hermitian(self.F2, "F2")
        if H.shape != F.shape:
            raise ValueError("H_psi and F2 dimensions differ")
        object.__setattr__(self, "H_psi", H)
        object.__setattr__(self, "F2", F)

    @property
    def dim(self) -> int:
        return self.H_psi.shape[0]


@dataclass(frozen=True)
class CQCoefficients:
    """Complete coefficient set of the Markovian hybrid master equation."""

    hbar: float
    lambda1: float
    omega_c: float
    moments: LocalMoments
    F2: np.ndarray
    R2: np.ndarray
    # effective Hamiltonian, affine in the phase-space point:
    # H_eff(h, pi) = H_base + h * H_h + pi * H_pi
    H_base: np.ndarray
    H_h: np.ndarray
    H_pi: np.ndarray
    # classical drift A(h, pi) = drift_h * h + drift_pi * pi
    drift_h: float
    drift_pi: float
    # classical diffusion constants (pi- and h-direction)
    N33: float
    N33_2: float
    # quantum GKSL block and hybrid couplings
    D0: np.ndarray
    gamma: float
    nu: float
    kappa: float
    mu: float
    d_pi: np.ndarray = field(repr=False, default=None)
    d_h: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "d_pi", np.array([self.gamma - 1j * self.nu, self.kappa]))
        object.__setattr__(self, "d_h", np.array([0.0, 1j * self.mu]))

    @property
    def dim(self) -> int:
        return self.F2.shape[0]

    def drift(self, h, pi):
        """Local classical drift A(h, pi)."""
        return self.drift_h * h + self.drift_pi * pi

    def heff(self, h: float, pi: float) -> np.ndarray:
        return self.H_base + h * self.H_h + pi * self.H_pi

    def to_dict(self) -> dict:
        return {
            "hbar": self.hbar,
            "lambda1": self.lambda1,
            "omega_c": self.omega_c,
            "gamma": self.gamma,
            "nu": self.nu,
            "kappa": self.kappa,
            "mu": self.mu,
            "drift_h": self.drift_h,
            "drift_pi": self.drift_pi,
            "N33": self.N33,
            "N33_2": self.N33_2,
            "D0": hilbert.operator_to_json(self.D0),
            "d_pi": [[z.real, z.imag] for z in self.d_pi],
            "d_h": [[z.real, z.imag] for z in self.d_h],
            "moments": self.moments.to_dict(),
        }


def assemble(moments: LocalMoments, model: ModelConfig) -> CQCoefficients:
    """Build the full CQ coefficient set from moments and model couplings."""
    hbar = model.hbar
    scale = max(abs(moments.N23), abs(moments.N32), 1e-300)
    if abs(moments.N23 - moments.N32) > _MIXED_SYMMETRY_RTOL * scale:
        raise KernelConsistencyError(
            f"mixed noise moments must satisfy N23 = N32 "
            f"(got {moments.N23!r} vs {moments.N32!r})"
        )
    scale2 = max(abs(moments.N23_2), abs(moments.N32_2), 1e-300)
    if abs(moments.N23_2 - moments.N32_2) > _MIXED_SYMMETRY_RTOL * scale2:
        raise KernelConsistencyError(
            f"mixed noise moments must satisfy N23_2 = N32_2 "
            f"(got {moments.N23_2!r} vs {moments.N32_2!r})"
        )

    F2 = model.F2
    R2 = hilbert.heisenberg_rate(model.H_psi, F2, hbar)

    H_base = (
        model.H_psi
        + (moments.D22 / (2.0 * hbar)) * (F2 @ F2)
        - (moments.D22_1 / (4.0 * hbar)) * hilbert.anticommutator(F2, R2)
    )
    H_h = (model.lambda1 - moments.D23 / hbar) * F2
    H_pi = -(moments.D23_1 / hbar) * F2

    D0 = (2.0 / hbar**2) * np.array(
        [
            [moments.N22, -0.25j * moments.D22_1],
            [0.25j * moments.D22_1, moments.N22_2],
        ]
    )

    return CQCoefficients(
        hbar=hbar,
        lambda1=model.lambda1,
        omega_c=model.omega_c,
        moments=moments,
        F2=F2,
        R2=R2,
        H_base=H_base,
        H_h=H_h,
        H_pi=H_pi,
        drift_h=-(model.omega_c**2) - moments.D33 / hbar,
        drift_pi=-moments.D33_1 / hbar,
        N33=moments.N33,
        N33_2=moments.N33_2,
        D0=D0,
        gamma=model.lambda1 / 2.0 + moments.D32 / (2.0 * hbar),
        nu=2.0 * moments.N23 / hbar,
        kappa=moments.D32_1 / (2.0 * hbar),
        mu=2.0 * moments.N23_2 / hbar,
    )


@dataclass(frozen=True)
class OppenheimBlocks:
    """CQ master-equation coefficients in the (D0, D1, D2) dictionary.

    D2_00 = diag(N33_2, N33) over z = (h, pi); the hybrid first-moment
    blocks are the vectors d_h and d_pi over the Lindblad basis (F2, R2);
    the classical drift block is D1_00 = (pi, A(h, pi)).
    """

    D2_00: np.ndarray
    d_h: np.ndarray
    d_pi: np.ndarray
    D0: np.ndarray
    drift_h_coeffs: tuple  # D1_00 h-component: coefficients of (h, pi)
    drift_pi_coeffs: tuple  # D1_00 pi-component: coefficients of (h, pi)

    @property
    def D1(self) -> np.ndarray:
        """Hybrid block as a matrix, rows indexed by (h, pi)."""
        return np.array([self.d_h, self.d_pi])


def to_oppenheim(coeffs: CQCoefficients) -> OppenheimBlocks:
    """Translate assembled coefficients into the Oppenheim dictionary."""
    return OppenheimBlocks(
        D2_00=np.diag([coeffs.N33_2, coeffs.N33]).astype(float),
        d_h=coeffs.d_h.copy(),
        d_pi=coeffs.d_pi.copy(),
        D0=coeffs.D0.copy(),
        drift_h_coeffs=(0.0, 1.0),
        drift_pi_coeffs=(coeffs.drift_h, coeffs.drift_pi),
    )


def hybrid_from_blocks(blocks: OppenheimBlocks, hbar: float = 1.0) -> dict:
    """Recover (gamma, nu, kappa, mu) from the dictionary blocks."""
    d_pi, d_h = blocks.d_pi, blocks.d_h
    return {
        "gamma": float(d_pi[0].real),
        "nu": float(-d_pi[0].imag),
        "kappa": float(d_pi[1].real),
        "mu": float(d_h[1].imag),
    }
