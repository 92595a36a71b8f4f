"""Nonlocal noise/dissipation kernels and their local Markov moments.

Everything is dimensionally reduced to a single time lag tau on a uniform
symmetric grid [-window, window]. Spatial delta factors are absorbed into
the coupling normalization.

Conventions:
  noise kernels       N(tau) symmetric, real;
  dissipation kernels D(tau) retarded (zero for tau < 0, theta(0) = 1/2);
  local moments       N = 1/2 int N dtau,      N2 = -1/4 int tau^2 N dtau,
                      D = 1/2 int D dtau,      D1 = -1/2 int tau  D dtau,
obtained by matching time moments of the equal-time delta expansion
N(tau) ~ 2N delta(tau) - 2N2 delta''(tau), D(tau) ~ 2D delta(tau)
+ 2D1 delta'(tau). The signs are pinned by the delta-sequence oracle in
the test suite.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import KernelConsistencyError

PAIRS = ("22", "33", "23", "32")

_SYMMETRY_TOL = 1e-10
_MATSUBARA_TERMS = 400


def coth(x):
    """Numerically stable coth for positive arguments."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    big = np.abs(x) > 20.0
    mid = ~(small | big)
    with np.errstate(divide="ignore"):
        out[small] = 1.0 / x[small] + x[small] / 3.0
    out[big] = np.sign(x[big])
    out[mid] = np.cosh(x[mid]) / np.sinh(x[mid])
    return out


def lag_grid(window: float, dtau: float) -> np.ndarray:
    """Uniform symmetric lag grid containing tau = 0 exactly."""
    if window <= 0 or dtau <= 0:
        raise ValueError("window and dtau must be positive")
    n = int(round(window / dtau))
    if n < 2:
        raise ValueError("window must span at least two lag steps")
    return np.arange(-n, n + 1, dtype=float) * dtau


def theta_retarded(tau: np.ndarray) -> np.ndarray:
    """Heaviside step with the grid convention theta(0) = 1/2."""
    return np.where(tau > 0, 1.0, np.where(tau == 0, 0.5, 0.0))


# ---------------------------------------------------------------------------
# Environment correlators


@dataclass(frozen=True)
class EnvironmentCorrelator:
    """Two-point function G_F(tau) of the traced-out environment operator.

    Samples use the stationary convention G_F(-tau) = G_F(tau)^*; only
    Re G_F and the retarded part of Im G_F enter the kernels, so this is
    interchangeable with the time-ordered convention there.
    """

    kind: str
    tau: np.ndarray
    values: np.ndarray  # complex G_F samples on tau
    temperature: float
    hbar: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.values, dtype=complex)
        scale = np.abs(g).max()
        if scale == 0.0:
            return
        defect = np.abs(g[::-1] - g.conj()).max() / scale
        if defect > _SYMMETRY_TOL:
            raise KernelConsistencyError(
                f"correlator violates G_F(-tau) = G_F(tau)* (defect {defect:.3e})"
            )

    @property
    def dtau(self) -> float:
        return float(self.tau[1] - self.tau[0])


def thermal_mode_correlator(
    omega: float,
    temperature: float,
    hbar: float = 1.0,
    linewidth: float = 0.0,
    window: float | None = None,
    dtau: float | None = None,
) -> EnvironmentCorrelator:
    """Single thermal oscillator mode of frequency omega.

    G_F(tau) = (hbar/2 omega) [coth(beta hbar omega / 2) cos(omega tau)
               - i sin(omega tau)] exp(-linewidth |tau|).

    linewidth = 0 is the exact undamped mode (infinite memory; its Markov
    moments do not converge). A positive linewidth models a damped mode
    with exponentially decaying memory.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    window = 50.0 / omega if window is None else window
    dtau = 0.01 / omega if dtau is None else dtau
    tau = lag_grid(window, dtau)
    if temperature > 0:
        cth = float(coth(hbar * omega / (2.0 * temperature)))
    else:
        cth = 1.0
    g = (hbar / (2.0 * omega)) * (cth * np.cos(omega * tau) - 1j * np.sin(omega * tau))
    g *= np.exp(-linewidth * np.abs(tau))
    return EnvironmentCorrelator(
        kind="thermal_mode",
        tau=tau,
        values=g,
        temperature=temperature,
        hbar=hbar,
        params={"omega": omega, "linewidth": linewidth, "window": window, "dtau": dtau},
    )


def ohmic_spectral_density(omega, eta: float, cutoff: float):
    """J(omega) = eta omega exp(-omega/cutoff)."""
    omega = np.asarray(omega, dtype=float)
    return eta * omega * np.exp(-omega / cutoff)


def ohmic_correlator(
    cutoff: float,
    temperature: float,
    eta: float = 1.0,
    hbar: float = 1.0,
    window: float | None = None,
    dtau: float | None = None,
) -> EnvironmentCorrelator:
    """Ohmic bath with exponential cutoff, J(w) = eta w exp(-w/cutoff).

    G_F(tau) = 1/2 int_0^inf dw J(w) [coth(beta hbar w/2) cos(w tau)
               - i sin(w tau)].

    Evaluated in closed form per Matsubara term using
    int_0^inf w e^{-cw} e^{-iw tau} dw = 1/(c + i tau)^2, with an
    Euler-Maclaurin tail after a fixed number of terms.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    window = 50.0 / cutoff if window is None else window
    dtau = 0.01 / cutoff if dtau is None else dtau
    tau = lag_grid(window, dtau)
    a = 1.0 / cutoff

    def T2(c):
        return 1.0 / (c + 1j * tau) ** 2

    g = T2(a).copy()  # vacuum: full complex contribution
    if temperature > 0:
        b = hbar / (2.0 * temperature)  # Matsubara spacing parameter beta*hbar/2
        acc = np.zeros_like(tau, dtype=complex)
        for n in range(1, _MATSUBARA_TERMS + 1):
            acc += T2(a + 2.0 * b * n)
        zN = a + 2.0 * b * _MATSUBARA_TERMS + 1j * tau
        # Euler-Maclaurin tail: int_N^inf - f(N)/2 - f'(N)/12
        acc += 1.0 / (2.0 * b * zN) - 0.5 / zN**2 + b / (3.0 * zN**3)
        g += 2.0 * acc.real  # thermal part is purely in Re G_F
    g *= 0.5 * eta
    return EnvironmentCorrelator(
        kind="ohmic",
        tau=tau,
        values=g,
        temperature=temperature,
        hbar=hbar,
        params={"cutoff": cutoff, "eta": eta, "window": window, "dtau": dtau},
    )


# ---------------------------------------------------------------------------
# Sampled kernels


@dataclass(frozen=True)
class NonlocalKernel:
    """Real kernel sampled on a uniform symmetric lag grid.

    Noise kernels (retarded=False) satisfy N(tau) = N(-tau); dissipation
    kernels (retarded=True) vanish for tau < 0 and carry theta(0) = 1/2
    on the tau = 0 point.
    """

    tau: np.ndarray
    values: np.ndarray
    pair: str
    retarded: bool

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if tau.ndim != 1 or tau.size < 3 or tau.size % 2 == 0:
            raise KernelConsistencyError("lag grid must be 1-D, odd-length, symmetric")
        steps = np.diff(tau)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) or steps[0] <= 0:
            raise KernelConsistencyError("lag grid must be uniform and increasing")
        if abs(tau[0] + tau[-1]) > 1e-9 * tau[-1]:
            raise KernelConsistencyError("lag grid must be symmetric about tau = 0")
        if v.shape != tau.shape:
            raise KernelConsistencyError("values and lag grid sizes differ")
        if not np.all(np.isfinite(v)):
            raise KernelConsistencyError(f"kernel {self.pair}: non-finite samples")
        scale = np.abs(v).max()
        if scale > 0.0:
            if self.retarded:
                if np.abs(v[tau < 0]).max(initial=0.0) > 1e-12 * scale:
                    raise KernelConsistencyError(
                        f"dissipation kernel {self.pair} must vanish for tau < 0"
                    )
            else:
                defect = np.abs(v - v[::-1]).max() / scale
                if defect > _SYMMETRY_TOL:
                    raise KernelConsistencyError(
                        f"noise kernel {self.pair} not symmetric (defect {defect:.3e})"
                    )

    @property
    def dtau(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def center(self) -> int:
        return self.tau.size // 2

    def scaled(self, s: float) -> "NonlocalKernel":
        return replace(self, values=np.asarray(self.values) * s)


def zero_kernel(tau: np.ndarray, pair: str, retarded: bool = False) -> NonlocalKernel:
    return NonlocalKernel(tau=tau, values=np.zeros_like(np.asarray(tau, float)), pair=pair, retarded=retarded)


def kernel_to_csv(kernel: NonlocalKernel, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tau", "value_re", "value_im"])
        for t, v in zip(kernel.tau, kernel.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}", "0"])


def kernel_from_csv(path, pair: str, retarded: bool) -> NonlocalKernel:
    tau, re, im = [], [], []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            tau.append(float(row["tau"]))
            re.append(float(row["value_re"]))
            im.append(float(row["value_im"]))
    im = np.asarray(im)
    if np.abs(im).max(initial=0.0) > 1e-12 * max(np.abs(re).max(initial=0.0), 1e-300):
        raise KernelConsistencyError(f"{path}: kernel samples must be real")
    return NonlocalKernel(tau=np.asarray(tau), values=np.asarray(re), pair=pair, retarded=retarded)


# ---------------------------------------------------------------------------
# Cubic-interaction model kernels


@dataclass(frozen=True)
class CubicKernels:
    """The four kernels of the cubic hidden model plus vanishing mixed ones.

    N22 = 4 lambda2^2 Re G_F            D22 = 4 lambda2^2 theta Im G_F
    N33 = 8 lambda3^2 Re G_F^2          D33 = 8 lambda3^2 theta Im G_F^2
    and N23 = N32 = D23 = D32 = 0 (environment symmetric under phi -> -phi).
    """

    lambda2: float
    lambda3: float
    N22: NonlocalKernel
    D22: NonlocalKernel
    N33: NonlocalKernel
    D33: NonlocalKernel
    N23: NonlocalKernel
    N32: NonlocalKernel
    D23: NonlocalKernel
    D32: NonlocalKernel


def build_cubic_kernels(corr: EnvironmentCorrelator, lambda2: float, lambda3: float) -> CubicKernels:
    """Construct the cubic-model kernels from an environment correlator."""
    tau = corr.tau
    g = np.asarray(corr.values, dtype=complex)
    g2 = g * g
    th = theta_retarded(tau)
    return CubicKernels(
        lambda2=lambda2,
        lambda3=lambda3,
        N22=NonlocalKernel(tau, 4.0 * lambda2**2 * g.real, "22", retarded=False),
        D22=NonlocalKernel(tau, 4.0 * lambda2**2 * th * g.imag, "22", retarded=True),
        N33=NonlocalKernel(tau, 8.0 * lambda3**2 * g2.real, "33", retarded=False),
        D33=NonlocalKernel(tau, 8.0 * lambda3**2 * th * g2.imag, "33", retarded=True),
        N23=zero_kernel(tau, "23"),
        N32=zero_kernel(tau, "32"),
        D23=zero_kernel(tau, "23", retarded=True),
        D32=zero_kernel(tau, "32", retarded=True),
    )


# ---------------------------------------------------------------------------
# Local Markov moments


def extract_moments(kernel: NonlocalKernel, kind: str) -> dict:
    """Local moments of a sampled kernel by trapezoid quadrature.

    kind="noise":       {"N<pair>": 1/2 int K, "N<pair>_2": -1/4 int tau^2 K}
    kind="dissipation": {"D<pair>": 1/2 int K, "D<pair>_1": -1/2 int tau K}

    Warns if the kernel has not decayed to <= 1e-6 of its peak at the
    window edge (the window then truncates the moments).
    """
    if kind not in ("noise", "dissipation"):
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "noise" and kernel.retarded:
        raise KernelConsistencyError("noise moments requested for a retarded kernel")
    if kind == "dissipation" and not kernel.retarded:
        raise KernelConsistencyError("dissipation moments requested for a symmetric kernel")
    tau = np.asarray(kernel.tau, dtype=float)
    v = np.asarray(kernel.values, dtype=float)
    if tau.size == 0:
        raise KernelConsistencyError("empty lag grid")
    peak = np.abs(v).max()
    if peak > 0.0 and max(abs(v[0]), abs(v[-1])) > 1e-6 * peak:
        warnings.warn(
            f"kernel {kernel.pair}: not decayed at the window edge "
            f"(edge/peak = {max(abs(v[0]), abs(v[-1])) / peak:.2e}); moments are windowed",
            stacklevel=2,
        )
    if kind == "noise":
        return {
            f"N{kernel.pair}": 0.5 * float(np.trapezoid(v, tau)),
            f"N{kernel.pair}_2": -0.25 * float(np.trapezoid(tau**2 * v, tau)),
        }
    return {
        f"D{kernel.pair}": 0.5 * float(np.trapezoid(v, tau)),
        f"D{kernel.pair}_1": -0.5 * float(np.trapezoid(tau * v, tau)),
    }


_MOMENT_KEYS = tuple(
    [f"N{p}" for p in PAIRS]
    + [f"N{p}_2" for p in PAIRS]
    + [f"D{p}" for p in PAIRS]
    + [f"D{p}_1" for p in PAIRS]
)


@dataclass(frozen=True)
class LocalMoments:
    """The sixteen Markov coefficients of the equal-time delta expansion."""

    N22: float = 0.0
    N33: float = 0.0
    N23: float = 0.0
    N32: float = 0.0
    N22_2: float = 0.0
    N33_2: float = 0.0
    N23_2: float = 0.0
    N32_2: float = 0.0
    D22: float = 0.0
    D33: float = 0.0
    D23: float = 0.0
    D32: float = 0.0
    D22_1: float = 0.0
    D33_1: float = 0.0
    D23_1: float = 0.0
    D32_1: float = 0.0

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in _MOMENT_KEYS}

    @classmethod
    def from_dict(cls, data: dict) -> "LocalMoments":
        unknown = set(data) - set(_MOMENT_KEYS)
        if unknown:
            raise KernelConsistencyError(f"unknown moment keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


def moments_from_kernels(noise: dict, dissipation: dict) -> LocalMoments:
    """Assemble LocalMoments from per-pair kernel maps (missing pairs -> 0)."""
    out = {}
    for pair, k in noise.items():
        if k is not None:
            out.update(extract_moments(k, "noise"))
    for pair, k in dissipation.items():
        if k is not None:
            out.update(extract_moments(k, "dissipation"))
    return LocalMoments.from_dict(out)


def cubic_moments(kernels: CubicKernels) -> LocalMoments:
    return moments_from_kernels(
        noise={"22": kernels.N22, "33": kernels.N33, "23": kernels.N23, "32": kernels.N32},
        dissipation={"22": kernels.D22, "33": kernels.D33, "23": kernels.D23, "32": kernels.D32},
    )


# ---------------------------------------------------------------------------
# Fluctuation-dissipation check


@dataclass(frozen=True)
class FdrReport:
    """Per-pair ratio r = hbar N / (4 T D1) against the thermal relation."""

    ratios: dict
    statuses: dict  # pair -> "pass" | "fail" | "not_applicable"
    temperature: float
    tolerance: float = 0.05

    @property
    def passed(self) -> bool:
        return all(s != "fail" for s in self.statuses.values())

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "tolerance": self.tolerance,
            "pairs": {
                p: {"ratio": self.ratios[p], "status": self.statuses[p]}
                for p in self.statuses
            },
        }


def fdr_check(moments: LocalMoments, temperature: float, hbar: float = 1.0, tolerance: float = 0.05) -> FdrReport:
    """Test the high-temperature relation N_IJ ~ (4T/hbar) D_IJ^(1).

    Pairs with vanishing D1 are reported "not_applicable" rather than
    failed (the relation is empty there).
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    ratios, statuses = {}, {}
    scale = max(
        max(abs(getattr(moments, f"N{p}")) for p in PAIRS),
        max(abs(getattr(moments, f"D{p}_1")) * 4.0 * temperature / hbar for p in PAIRS),
        1e-300,
    )
    for p in PAIRS:
        n = getattr(moments, f"N{p}")
        d1 = getattr(moments, f"D{p}_1")
        if abs(d1) * 4.0 * temperature / hbar <= 1e-12 * scale:
            ratios[p] = None
            statuses[p] = "not_applicable"
            continue
        r = hbar * n / (4.0 * temperature * d1)
        ratios[p] = float(r)
        statuses[p] = "pass" if abs(r - 1.0) <= tolerance else "fail"
    return FdrReport(ratios=ratios, statuses=statuses, temperature=temperature, tolerance=tolerance)
