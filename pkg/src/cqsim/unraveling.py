"""Stochastic trajectory representation of the Markovian hybrid dynamics.

Each trajectory carries a classical point (h, pi) and an unnormalized PSD
conditional operator rho. One Euler-Maruyama step of size dt:

    h  -> h  + (pi + xi_h) dt
    pi -> pi + (A(h, pi) + xi_pi) dt
    rho -> K rho K^dag

with independent real noises Var(xi_h) = 2 N33_2/dt, Var(xi_pi) = 2 N33/dt,
a circular complex 2-vector eta with E[eta eta^dag] = C_M/dt, and

    K = exp[ (-(i/hbar) H_eff(h, pi) - a^T Q B+ L + i eta^T L - Yq) dt ],
    a = (xi_h, -xi_pi),  Q = diag(1/(2 N33_2), 1/(2 N33)),  L = (F2, R2),
    Yq = 1/2 sum_ab (D0 + B+^T Q B+)_ab L_b L_a.

The classical noise realization enters K through the a^T Q B+ L term;
that correlation (not an explicit backreaction drift) carries the hybrid
couplings, and trajectory weights Tr rho restore the backreaction in
ensemble averages. Expanding E[K rho K^dag] to O(dt) reproduces every
term of the master equation; the one-step moment test in the suite pins
this, and ensemble consistency against the deterministic integrator is
the binding contract.

B+ is taken as [[0, +i mu], [-(gamma - i nu), -kappa]]; the +i mu entry
is fixed by matching the i mu [R2, dW/dh] term of the master equation.

Randomness is drawn from counter-based Philox streams keyed by
(master seed, trajectory index), so results are independent of chunking
or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cq_coeffs import CQCoefficients
from .errors import NumericalAbortError, PositivityError
from .semi_wigner import PhaseSpaceGrid, SemiWignerState

RHO_PSD_TOL = 1e-8
_KRAUS_ORDER = 4


@dataclass(frozen=True)
class NoiseSpec:
    """Noise covariances of the Markovian unraveling (per unit time)."""

    CM: np.ndarray
    var_xi_h: float  # 2 N33_2
    var_xi_pi: float  # 2 N33
    cm_sqrt: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        CM = np.asarray(self.CM, dtype=complex)
        if self.var_xi_h < 0 or self.var_xi_pi < 0:
            raise PositivityError("classical noise variances must be nonnegative")
        vals, vecs = np.linalg.eigh(0.5 * (CM + CM.conj().T))
        scale = max(abs(vals).max(), 1e-300)
        if vals[0] < -1e-12 * scale:
            raise PositivityError(
                f"unraveling undefined: C_M has negative eigenvalue {vals[0]:.3e}"
            )
        root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
        object.__setattr__(self, "cm_sqrt", root)

    @classmethod
    def from_coefficients(cls, coeffs: CQCoefficients) -> "NoiseSpec":
        from .positivity import build_CM

        return cls(CM=build_CM(coeffs), var_xi_h=2.0 * coeffs.N33_2, var_xi_pi=2.0 * coeffs.N33)


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory."""
    key = np.array([np.uint64(master_seed), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_noise(spec: NoiseSpec, dt: float, rng: np.random.Generator):
    """One draw of (eta, xi_h, xi_pi) with the white-noise 1/dt scaling."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    z = rng.standard_normal(6)
    zeta = (z[0:2] + 1j * z[2:4]) / np.sqrt(2.0 * dt)
    eta = spec.cm_sqrt @ zeta
    xi_h = z[4] * np.sqrt(spec.var_xi_h / dt)
    xi_pi = z[5] * np.sqrt(spec.var_xi_pi / dt)
    return eta, float(xi_h), float(xi_pi)


class _StepContext:
    """Per-run constants of the Kraus step."""

    def __init__(self, coeffs: CQCoefficients, spec: NoiseSpec):
        self.coeffs = coeffs
        self.spec = spec
        c = coeffs
        self.q_h = 0.0 if c.N33_2 <= 0 else 1.0 / (2.0 * c.N33_2)
        self.q_pi = 0.0 if c.N33 <= 0 else 1.0 / (2.0 * c.N33)
        if c.N33_2 <= 0 and abs(c.mu) > 0:
            raise PositivityError("mu != 0 requires N33_2 > 0 (unsupported direction)")
        if c.N33 <= 0 and max(abs(c.gamma), abs(c.nu), abs(c.kappa)) > 0:
            raise PositivityError("gamma/nu/kappa != 0 require N33 > 0 (unsupported direction)")
        Bp = np.array(
            [[0.0, 1j * c.mu], [-(c.gamma - 1j * c.nu), -c.kappa]], dtype=complex
        )
        Q = np.diag([self.q_h, self.q_pi])
        S = c.D0 + Bp.T @ Q @ Bp
        Ls = (c.F2, c.R2)
        self.Yq = 0.5 * sum(S[a, b] * (Ls[b] @ Ls[a]) for a in range(2) for b in range(2))
        self.base = -(1j / c.hbar) * c.H_base - self.Yq
        self.Hh_fac = -(1j / c.hbar) * c.H_h
        self.Hpi_fac = -(1j / c.hbar) * c.H_pi
        self.gmn = c.gamma - 1j * c.nu


def _step_batch(ctx: _StepContext, h, pi, rho, dt: float, z):
    """Advance a batch one step. z: standard normals of shape (M, 6)."""
    c, spec = ctx.coeffs, ctx.spec
    zeta = (z[:, 0:2] + 1j * z[:, 2:4]) / np.sqrt(2.0 * dt)
    eta = zeta @ spec.cm_sqrt.T  # rows eta_i = cm_sqrt @ zeta_i (symmetric root)
    xi_h = z[:, 4] * np.sqrt(spec.var_xi_h / dt)
    xi_pi = z[:, 5] * np.sqrt(spec.var_xi_pi / dt)

    # coupling scalars: c_F F2 + c_R R2 with c = -(a^T Q B+) + i eta
    cF = -ctx.gmn * ctx.q_pi * xi_pi + 1j * eta[:, 0]
    cR = -1j * c.mu * ctx.q_h * xi_h - c.kappa * ctx.q_pi * xi_pi + 1j * eta[:, 1]

    X = (
        ctx.base[None, :, :]
        + h[:, None, None] * ctx.Hh_fac[None, :, :]
        + pi[:, None, None] * ctx.Hpi_fac[None, :, :]
        + cF[:, None, None] * c.F2[None, :, :]
        + cR[:, None, None] * c.R2[None, :, :]
    ) * dt
    K = np.eye(c.dim, dtype=complex)[None, :, :] + X
    term = X
    for k in range(2, _KRAUS_ORDER + 1):
        term = term @ X / k
        K = K + term
    rho_new = K @ rho @ K.conj().transpose(0, 2, 1)

    h_new = h + (pi + xi_h) * dt
    pi_new = pi + (c.drift(h, pi) + xi_pi) * dt
    return h_new, pi_new, rho_new


@dataclass
class Trajectory:
    """Single stochastic trajectory (convenience wrapper over the batch core)."""

    seed: int
    h: float
    pi: float
    rho: np.ndarray

    @property
    def weight(self) -> float:
        return float(np.trace(self.rho).real)


def trajectory_step(traj: Trajectory, coeffs: CQCoefficients, spec: NoiseSpec, dt: float, rng: np.random.Generator) -> Trajectory:
    """One Euler-Maruyama Kraus step of a single trajectory."""
    ctx = _StepContext(coeffs, spec)
    z = rng.standard_normal(6)[None, :]
    h, pi, rho = _step_batch(
        ctx, np.array([traj.h]), np.array([traj.pi]), traj.rho[None, :, :], dt, z
    )
    new = Trajectory(seed=traj.seed, h=float(h[0]), pi=float(pi[0]), rho=rho[0])
    tr = max(new.weight, 1.0)
    if float(np.linalg.eigvalsh(0.5 * (new.rho + new.rho.conj().T))[0]) < -RHO_PSD_TOL * tr:
        raise NumericalAbortError(f"trajectory rho lost positivity (seed {traj.seed})")
    return new


# ---------------------------------------------------------------------------
# Ensembles


@dataclass(frozen=True)
class GaussianInitial:
    """Uncorrelated product initial data: classical Gaussian x rho_psi."""

    h0: float
    pi0: float
    sigma_h: float
    sigma_pi: float
    rho_psi: np.ndarray


@dataclass
class EnsembleResult:
    times: np.ndarray
    stats: dict  # name -> (estimate array, standard error array)
    n_trajectories: int
    seed: int
    ess: float  # effective sample size at the final time
    final_h: np.ndarray = None
    final_pi: np.ndarray = None
    final_rho: np.ndarray = None

    def observable_names(self) -> list:
        return list(self.stats)

    def to_csv(self, path) -> None:
        names = self.observable_names()
        cols = [self.times]
        header = ["t"]
        for n in names:
            est, se = self.stats[n]
            cols.extend([est, se])
            header.extend([n, f"{n}_se"])
        data = np.column_stack(cols)
        with open(path, "w") as f:
            f.write(",".join(header) + "\n")
            for row in data:
                f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _ratio_stat(values, weights):
    """Weighted-mean estimate and delta-method standard error."""
    wbar = weights.mean()
    est = values.mean() / wbar
    resid = values - est * weights
    se = resid.std(ddof=1) / (wbar * np.sqrt(values.size))
    return float(est), float(se)


def run_ensemble(
    coeffs: CQCoefficients,
    initial: GaussianInitial,
    t_final: float,
    dt: float,
    n_trajectories: int,
    seed: int,
    observables: dict | None = None,
    output_stride: int = 10,
    chunk: int = 2048,
    keep_final: bool = False,
) -> EnsembleResult:
    """Evolve an ensemble and return weighted observable series with errors.

    Per-trajectory noise comes from Philox streams keyed by
    (seed, trajectory index): the first two draws set the initial
    classical point, then six per step.
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    spec = NoiseSpec.from_coefficients(coeffs)
    ctx = _StepContext(coeffs, spec)
    observables = observables or {}
    n_steps = max(1, int(round(t_final / dt)))
    out_steps = sorted(set(range(0, n_steps + 1, output_stride)) | {0, n_steps})
    times = np.asarray(out_steps, dtype=float) * dt
    n_out = len(out_steps)

    names = ["mean_h", "mean_pi", "var_h", "var_pi"] + [f"obs_{n}" for n in observables]
    M = n_trajectories
    h_s = np.empty((M, n_out))
    pi_s = np.empty((M, n_out))
    w_s = np.empty((M, n_out))
    q_s = {n: np.empty((M, n_out)) for n in observables}
    rho_final = np.empty((M, coeffs.dim, coeffs.dim), dtype=complex) if keep_final else None
    h_final = np.empty(M) if keep_final else None
    pi_final = np.empty(M) if keep_final else None
    bad_seeds = []

    for start in range(0, M, chunk):
        idx = np.arange(start, min(start + chunk, M))
        C = idx.size
        noise = np.empty((C, n_steps, 6))
        init = np.empty((C, 2))
        for row, traj_index in enumerate(idx):
            rng = trajectory_rng(seed, int(traj_index))
            init[row] = rng.standard_normal(2)
            noise[row] = rng.standard_normal((n_steps, 6))
        h = initial.h0 + initial.sigma_h * init[:, 0]
        pi = initial.pi0 + initial.sigma_pi * init[:, 1]
        rho = np.broadcast_to(
            np.asarray(initial.rho_psi, complex), (C, coeffs.dim, coeffs.dim)
        ).copy()

        out_i = 0

        def take(out_i, h, pi, rho):
            h_s[idx, out_i] = h
            pi_s[idx, out_i] = pi
            w = np.einsum("mii->m", rho).real
            w_s[idx, out_i] = w
            for n, op in observables.items():
                q_s[n][idx, out_i] = np.einsum("mij,ji->m", rho, op).real
            sym = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
            mins = np.linalg.eigvalsh(sym)[:, 0]
            bad = mins < -RHO_PSD_TOL * np.maximum(w, 1.0)
            if np.any(bad):
                bad_seeds.extend(int(i) for i in idx[bad])

        take(out_i, h, pi, rho)
        out_i += 1
        for step in range(1, n_steps + 1):
            h, pi, rho = _step_batch(ctx, h, pi, rho, dt, noise[:, step - 1])
            if out_i < n_out and step == out_steps[out_i]:
                take(out_i, h, pi, rho)
                out_i += 1
        if keep_final:
            rho_final[idx] = rho
            h_final[idx] = h
            pi_final[idx] = pi

    if bad_seeds:
        raise NumericalAbortError(
            f"{len(bad_seeds)} trajectories lost rho positivity; "
            f"first seeds: {sorted(set(bad_seeds))[:5]} (master seed {seed})"
        )

    stats = {}
    for name in names:
        est = np.empty(n_out)
        se = np.empty(n_out)
        for k in range(n_out):
            w = w_s[:, k]
            if name == "mean_h":
                est[k], se[k] = _ratio_stat(w * h_s[:, k], w)
            elif name == "mean_pi":
                est[k], se[k] = _ratio_stat(w * pi_s[:, k], w)
            elif name in ("var_h", "var_pi"):
                x = h_s[:, k] if name == "var_h" else pi_s[:, k]
                m, _ = _ratio_stat(w * x, w)
                est[k], se[k] = _ratio_stat(w * (x - m) ** 2, w)
            else:
                est[k], se[k] = _ratio_stat(q_s[name[4:]][:, k], w)
        stats[name] = (est, se)

    w_last = w_s[:, -1]
    ess = float(w_last.sum() ** 2 / (w_last**2).sum())
    return EnsembleResult(
        times=times,
        stats=stats,
        n_trajectories=M,
        seed=seed,
        ess=ess,
        final_h=h_final,
        final_pi=pi_final,
        final_rho=rho_final,
    )


def deposit_state(h, pi, rho, grid: PhaseSpaceGrid) -> SemiWignerState:
    """Cloud-in-cell deposit of weighted (h, pi, rho) triples onto a grid.

    Convex bilinear weights keep the deposited p(h, pi) nonnegative.
    Points outside the grid are clamped to the edge cells.
    """
    M, d = rho.shape[0], rho.shape[1]
    fh = np.clip((h - grid.h_min) / grid.dh, 0.0, grid.n_h - 1.000001)
    fp = np.clip((pi - grid.pi_min) / grid.dpi, 0.0, grid.n_pi - 1.000001)
    i0 = fh.astype(int)
    j0 = fp.astype(int)
    ah = fh - i0
    ap = fp - j0
    W = np.zeros((grid.n_h, grid.n_pi, d, d), dtype=complex)
    for di, wi in ((0, 1.0 - ah), (1, ah)):
        for dj, wj in ((0, 1.0 - ap), (1, ap)):
            np.add.at(W, (i0 + di, j0 + dj), (wi * wj)[:, None, None] * rho)
    W /= M * grid.cell_area
    return SemiWignerState(grid=grid, W=W)


def ensemble_average(
    coeffs: CQCoefficients,
    initial: GaussianInitial,
    t_final: float,
    dt: float,
    n_trajectories: int,
    seed: int,
    grid: PhaseSpaceGrid,
    observables: dict | None = None,
    output_stride: int = 10,
) -> tuple:
    """Run an ensemble and deposit the final-time state onto a grid.

    Returns (SemiWignerState estimate, EnsembleResult with standard errors).
    """
    if n_trajectories < 100:
        raise ValueError("ensemble_average requires at least 100 trajectories")
    result = run_ensemble(
        coeffs,
        initial,
        t_final,
        dt,
        n_trajectories,
        seed,
        observables=observables,
        output_stride=output_stride,
        keep_final=True,
    )
    state = deposit_state(result.final_h, result.final_pi, result.final_rho, grid)
    return state, result
