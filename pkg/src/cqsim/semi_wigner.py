"""Operator-valued phase-space state (the semi-Wigner operator).

The state W(h, pi) is a Hermitian d x d matrix at every node of a uniform
(h, pi) grid, stored as one complex array of shape (n_h, n_pi, d, d).
Tr W(h, pi) is the classical phase-space density; summing W over the grid
(times the cell area) recovers the quantum state of the psi sector.

Derivatives are 2nd-order central differences with one-sided 2nd-order
stencils on the boundary rows; all stencils are real, so Hermiticity is
preserved exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .errors import BoundaryLeakError, DimensionMismatchError

NORM_TOL = 1e-8
POINTWISE_HERM_TOL = 1e-10
BOUNDARY_CELLS = 5
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class PhaseSpaceGrid:
    h_min: float
    h_max: float
    n_h: int
    pi_min: float
    pi_max: float
    n_pi: int
    h: np.ndarray = field(repr=False, default=None)
    pi: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.n_h < 8 or self.n_pi < 8:
            raise ValueError("grid must have at least 8 points per axis")
        if not (self.h_max > self.h_min and self.pi_max > self.pi_min):
            raise ValueError("grid bounds must be increasing")
        object.__setattr__(self, "h", np.linspace(self.h_min, self.h_max, self.n_h))
        object.__setattr__(self, "pi", np.linspace(self.pi_min, self.pi_max, self.n_pi))

    @property
    def dh(self) -> float:
        return float(self.h[1] - self.h[0])

    @property
    def dpi(self) -> float:
        return float(self.pi[1] - self.pi[0])

    @property
    def cell_area(self) -> float:
        return self.dh * self.dpi


@dataclass(frozen=True)
class SemiWignerState:
    grid: PhaseSpaceGrid
    W: np.ndarray  # (n_h, n_pi, d, d) complex

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if W.ndim != 4 or W.shape[2] != W.shape[3]:
            raise DimensionMismatchError(f"state array must be (n_h, n_pi, d, d), got {W.shape}")
        if W.shape[0] != self.grid.n_h or W.shape[1] != self.grid.n_pi:
            raise DimensionMismatchError("state array does not match the grid")
        object.__setattr__(self, "W", W)

    @property
    def dim(self) -> int:
        return self.W.shape[2]

    def hermiticity_defect(self) -> float:
        scale = np.abs(self.W).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.W - self.W.conj().transpose(0, 1, 3, 2)).max() / scale)

    def trace_field(self) -> np.ndarray:
        """p(h, pi) = Tr W, real by Hermiticity."""
        return np.einsum("ijaa->ij", self.W).real

    def total_trace(self) -> float:
        return float(self.trace_field().sum() * self.grid.cell_area)

    def validate(self) -> "SemiWignerState":
        if not np.all(np.isfinite(self.W)):
            raise ValueError("state contains non-finite entries")
        defect = self.hermiticity_defect()
        if defect > POINTWISE_HERM_TOL:
            raise ValueError(f"state not pointwise Hermitian (defect {defect:.3e})")
        return self


def init_gaussian_product(grid: PhaseSpaceGrid, h0: float, pi0: float, sigma_h: float, sigma_pi: float, rho_psi) -> SemiWignerState:
    """W(h, pi) = G(h, pi) rho_psi with G a grid-normalized Gaussian."""
    if sigma_h <= 0 or sigma_pi <= 0:
        raise ValueError("Gaussian widths must be positive")
    rho = hilbert.require_hermitian(rho_psi, "rho_psi")
    evals = np.linalg.eigvalsh(rho)
    if evals[0] < -1e-12 * max(evals[-1], 1e-300):
        raise ValueError(f"rho_psi is not positive semidefinite (min eigenvalue {evals[0]:.3e})")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("rho_psi must have unit trace")
    g = np.exp(
        -((grid.h[:, None] - h0) ** 2) / (2.0 * sigma_h**2)
        - ((grid.pi[None, :] - pi0) ** 2) / (2.0 * sigma_pi**2)
    )
    g /= g.sum() * grid.cell_area
    return SemiWignerState(grid=grid, W=g[:, :, None, None] * rho[None, None, :, :])


def smooth_binomial(state: SemiWignerState, passes: int = 1) -> SemiWignerState:
    """Band-limit a state with separable [1, 2, 1]/4 filter passes.

    Each pass removes the grid-Nyquist component exactly (the filter's
    response vanishes there), suppressing the dispersive wiggle seed that
    coarse grids otherwise advect around. Zero padding at the edges, then
    renormalized; convex weights preserve Hermiticity and positivity.
    """
    W = state.W
    for _ in range(passes):
        for axis in (0, 1):
            a = np.moveaxis(W, axis, 0)
            out = 0.5 * a
            out[1:] += 0.25 * a[:-1]
            out[:-1] += 0.25 * a[1:]
            W = np.moveaxis(out, 0, axis)
    smoothed = SemiWignerState(grid=state.grid, W=W)
    total = smoothed.total_trace()
    return SemiWignerState(grid=state.grid, W=W / total * state.total_trace())


def init_point_mass(grid: PhaseSpaceGrid, h0: float, pi0: float, rho_psi) -> SemiWignerState:
    """All mass in the single cell nearest (h0, pi0). Used by frozen-classical runs."""
    rho = hilbert.require_hermitian(rho_psi, "rho_psi")
    i = int(np.argmin(np.abs(grid.h - h0)))
    j = int(np.argmin(np.abs(grid.pi - pi0)))
    W = np.zeros((grid.n_h, grid.n_pi, rho.shape[0], rho.shape[0]), dtype=complex)
    W[i, j] = rho / grid.cell_area
    return SemiWignerState(grid=grid, W=W)


# ---------------------------------------------------------------------------
# Finite differences (act on raw (n_h, n_pi, d, d) arrays)


def diff1(arr: np.ndarray, delta: float, axis: int) -> np.ndarray:
    """First derivative: central interior, one-sided 2nd-order boundary."""
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * delta)
    out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * delta)
    out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * delta)
    return np.moveaxis(out, 0, axis)


def diff2(arr: np.ndarray, delta: float, axis: int) -> np.ndarray:
    """Second derivative: central interior, one-sided 2nd-order boundary."""
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    d2 = delta * delta
    out[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / d2
    out[0] = (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) / d2
    out[-1] = (2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]) / d2
    return np.moveaxis(out, 0, axis)


def partial_h(state: SemiWignerState) -> np.ndarray:
    return diff1(state.W, state.grid.dh, axis=0)


def partial_pi(state: SemiWignerState) -> np.ndarray:
    return diff1(state.W, state.grid.dpi, axis=1)


def partial2_h(state: SemiWignerState) -> np.ndarray:
    return diff2(state.W, state.grid.dh, axis=0)


def partial2_pi(state: SemiWignerState) -> np.ndarray:
    return diff2(state.W, state.grid.dpi, axis=1)


# ---------------------------------------------------------------------------
# Marginals and monitors


@dataclass(frozen=True)
class Marginals:
    p: np.ndarray
    rho_psi: np.ndarray
    mean_h: float
    mean_pi: float
    var_h: float
    var_pi: float


def marginals(state: SemiWignerState) -> Marginals:
    """Classical density, quantum marginal, and first/second moments."""
    grid = state.grid
    p = state.trace_field()
    area = grid.cell_area
    norm = p.sum() * area
    rho = state.W.sum(axis=(0, 1)) * area
    ph = p.sum(axis=1) * grid.dpi
    ppi = p.sum(axis=0) * grid.dh
    mean_h = float((grid.h * ph).sum() * grid.dh / norm)
    mean_pi = float((grid.pi * ppi).sum() * grid.dpi / norm)
    var_h = float(((grid.h - mean_h) ** 2 * ph).sum() * grid.dh / norm)
    var_pi = float(((grid.pi - mean_pi) ** 2 * ppi).sum() * grid.dpi / norm)
    return Marginals(p=p, rho_psi=rho, mean_h=mean_h, mean_pi=mean_pi, var_h=var_h, var_pi=var_pi)


def boundary_mass_ratio(state: SemiWignerState, cells: int = BOUNDARY_CELLS) -> float:
    """Largest |p| within `cells` of the boundary, relative to the peak."""
    p = np.abs(state.trace_field())
    peak = p.max()
    if peak == 0.0:
        return 0.0
    edge = max(
        p[:cells].max(), p[-cells:].max(), p[:, :cells].max(), p[:, -cells:].max()
    )
    return float(edge / peak)


def check_boundary(state: SemiWignerState, tol: float = BOUNDARY_TOL, cells: int = BOUNDARY_CELLS) -> None:
    ratio = boundary_mass_ratio(state, cells)
    if ratio > tol:
        raise BoundaryLeakError(
            f"phase-space mass reached the grid boundary "
            f"(edge/peak = {ratio:.3e} > {tol:.1e}); enlarge the grid"
        )


def write_snapshot(state: SemiWignerState, directory, label: str) -> None:
    """CSV of p(h, pi) plus JSON of the quantum marginal and moments."""
    m = marginals(state)
    grid = state.grid
    with open(f"{directory}/p_{label}.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["h", "pi", "p"])
        for i, h in enumerate(grid.h):
            for j, pi in enumerate(grid.pi):
                w.writerow([f"{h:.17g}", f"{pi:.17g}", f"{m.p[i, j]:.17g}"])
    payload = {
        "rho_psi": hilbert.operator_to_json(m.rho_psi),
        "mean_h": m.mean_h,
        "mean_pi": m.mean_pi,
        "var_h": m.var_h,
        "var_pi": m.var_pi,
        "trace": state.total_trace(),
    }
    with open(f"{directory}/state_{label}.json", "w") as f:
        json.dump(payload, f, indent=1)
