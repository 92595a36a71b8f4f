"""Complete-positivity certificates for the hybrid dynamics.

Two equivalent local (Markovian) conditions are implemented:

  Schur form   C_M = D0 - d_h d_h^dag/(2 N33_2) - d_pi d_pi^dag/(2 N33) >= 0
               together with N33 >= 0, N33_2 >= 0;
  trade-off    2 D2_00 >= D1 D0^+ D1^dag with the generalized inverse,
               plus the support condition that the hybrid vectors lie in
               the range of D0.

Both are Schur complements of one 4x4 Hermitian block matrix
[[2 D2, B], [B^dag, D0]] (B built from the hybrid vectors); its minimum
eigenvalue is reported as the common `margin` so the two certificate
paths can be compared directly.

The non-Markovian checker discretizes the kernel
C = N22/hbar^2 - i D22^a/(2 hbar^2) - B+^T Q B- (Q the pseudo-inverse of
N33^R) as a matrix on a uniform time grid and eigen-tests it.

A "fail" verdict means the sufficient condition is not certified, not
that the map is proven non-CP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cq_coeffs import CQCoefficients, OppenheimBlocks
from .errors import KernelConsistencyError, PositivityError, UnsupportedDirectionError
from .kernels import NonlocalKernel

EIG_TOL = 1e-12  # on matrices normalized by their max norm
SUPPORT_TOL = 1e-10
PINV_RCOND = 1e-10


@dataclass(frozen=True)
class CertReport:
    """Outcome of one positivity certificate."""

    condition_name: str
    passed: bool
    min_eigenvalue: float
    margin: float
    witness: np.ndarray = field(repr=False, default=None)
    matrix: np.ndarray = field(repr=False, default=None)
    reason: str = ""

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "condition": self.condition_name,
            "verdict": self.verdict,
            "min_eigenvalue": self.min_eigenvalue,
            "margin": self.margin,
            "witness": None
            if self.witness is None
            else [[z.real, z.imag] for z in np.asarray(self.witness, complex)],
            "reason": self.reason,
        }


def _min_eig_witness(M: np.ndarray):
    vals, vecs = np.linalg.eigh(M)
    return float(vals[0]), vecs[:, 0]


def _scale(M: np.ndarray) -> float:
    s = float(np.abs(M).max()) if M.size else 0.0
    return s if s > 0.0 else 1.0


def psd_pseudo_inverse(M: np.ndarray, rcond: float = PINV_RCOND, name: str = "matrix"):
    """Pseudo-inverse and support projector of a Hermitian PSD matrix.

    Eigenvalues below -EIG_TOL * scale raise; eigenvalues below
    rcond * max eigenvalue are treated as zero (outside the support).
    """
    M = np.asarray(M, dtype=complex)
    vals, vecs = np.linalg.eigh(M)
    scale = max(abs(vals[0]), abs(vals[-1]), 1e-300)
    if vals[0] < -EIG_TOL * scale:
        raise PositivityError(f"invalid GKSL block: {name} has negative eigenvalue {vals[0]:.3e}")
    keep = vals > rcond * scale
    inv_vals = np.where(keep, 1.0 / np.where(keep, vals, 1.0), 0.0)
    pinv = (vecs * inv_vals) @ vecs.conj().T
    proj = (vecs * keep.astype(float)) @ vecs.conj().T
    return pinv, proj


def cp_block_matrix(D2_diag, d_h, d_pi, D0) -> np.ndarray:
    """Hermitian embedding [[2 D2, B], [B^dag, D0]] shared by both checks.

    B = conj([d_h^T; d_pi^T]) is oriented so that the lower-right Schur
    complement is exactly C_M and the upper-left one is the trade-off
    matrix.
    """
    D2 = np.diag(np.asarray(D2_diag, dtype=float))
    B = np.vstack([np.asarray(d_h, complex), np.asarray(d_pi, complex)]).conj()
    top = np.hstack([2.0 * D2, B])
    bottom = np.hstack([B.conj().T, np.asarray(D0, complex)])
    return np.vstack([top, bottom])


def _embedding_margin(coeffs_or_blocks) -> float:
    if isinstance(coeffs_or_blocks, OppenheimBlocks):
        b = coeffs_or_blocks
        M = cp_block_matrix(np.diag(b.D2_00), b.d_h, b.d_pi, b.D0)
    else:
        c = coeffs_or_blocks
        M = cp_block_matrix([c.N33_2, c.N33], c.d_h, c.d_pi, c.D0)
    val, _ = _min_eig_witness(M)
    return val


# ---------------------------------------------------------------------------
# Markovian certificates


def build_CM(coeffs: CQCoefficients) -> np.ndarray:
    """Local Markovian kernel C_M = D0 - sum_i d_i d_i^dag / (2 N_i).

    A vanishing diffusion constant is allowed only when its hybrid vector
    vanishes too (the subtraction is then dropped); otherwise the
    direction is unsupported and no finite C_M exists.
    """
    CM = np.asarray(coeffs.D0, dtype=complex).copy()
    dscale = max(np.abs(coeffs.d_h).max(), np.abs(coeffs.d_pi).max(), 1e-300)
    for name, N, d in (("h", coeffs.N33_2, coeffs.d_h), ("pi", coeffs.N33, coeffs.d_pi)):
        nscale = max(abs(coeffs.N33), abs(coeffs.N33_2), 1e-300)
        if N < -EIG_TOL * nscale:
            raise PositivityError(f"negative classical diffusion constant for direction {name}: {N!r}")
        if N <= EIG_TOL * nscale:
            if np.abs(d).max() > SUPPORT_TOL * dscale:
                raise UnsupportedDirectionError(name)
            continue
        CM -= np.outer(d, d.conj()) / (2.0 * N)
    return CM


@dataclass(frozen=True)
class MarkovCPReport:
    cm_report: CertReport
    classical_report: CertReport

    @property
    def passed(self) -> bool:
        return self.cm_report.passed and self.classical_report.passed

    def to_dict(self) -> dict:
        return {"C_M": self.cm_report.to_dict(), "classical": self.classical_report.to_dict()}


def check_markov_cp(coeffs: CQCoefficients) -> MarkovCPReport:
    """Certify C_M >= 0 and N33, N33_2 >= 0 (Schur form)."""
    margin = _embedding_margin(coeffs)
    # tolerance scale from the constituents: C_M itself cancels to ~0 at
    # trade-off saturation, where its own norm would be pure roundoff
    tol_scale = max(
        _scale(coeffs.D0),
        abs(coeffs.N33),
        abs(coeffs.N33_2),
        float(np.abs(coeffs.d_pi).max() ** 2),
        float(np.abs(coeffs.d_h).max() ** 2),
    )
    try:
        CM = build_CM(coeffs)
    except PositivityError as err:
        cm_report = CertReport(
            condition_name="C_M >= 0",
            passed=False,
            min_eigenvalue=float("-inf"),
            margin=margin,
            reason=str(err),
        )
    else:
        val, wit = _min_eig_witness(CM)
        cm_report = CertReport(
            condition_name="C_M >= 0",
            passed=val >= -EIG_TOL * max(tol_scale, 1e-300),
            min_eigenvalue=val,
            margin=margin,
            witness=wit,
            matrix=CM,
        )
    diag = np.array([coeffs.N33_2, coeffs.N33])
    cls_scale = _scale(diag)
    val_c = float(diag.min())
    classical = CertReport(
        condition_name="N33 >= 0 and N33_2 >= 0",
        passed=val_c >= -EIG_TOL * cls_scale,
        min_eigenvalue=val_c,
        margin=margin,
        witness=np.eye(2)[int(np.argmin(diag))].astype(complex),
        matrix=np.diag(diag).astype(complex),
    )
    return MarkovCPReport(cm_report=cm_report, classical_report=classical)


def check_tradeoff(blocks: OppenheimBlocks) -> CertReport:
    """Certify the CQ trade-off 2 D2_00 >= D1 D0^+ D1^dag with support.

    Raises PositivityError if D0 itself has a negative eigenvalue.
    """
    D0 = np.asarray(blocks.D0, dtype=complex)
    D0_pinv, proj = psd_pseudo_inverse(D0, name="D0")
    D2 = np.asarray(blocks.D2_00, dtype=float)
    ds = [np.asarray(blocks.d_h, complex), np.asarray(blocks.d_pi, complex)]

    dscale = max(max(np.abs(d).max() for d in ds), 1e-300)
    eye = np.eye(D0.shape[0])
    support_defect = max(np.linalg.norm((eye - proj) @ d) for d in ds)
    support_ok = support_defect <= SUPPORT_TOL * dscale

    G = np.array([[di.conj() @ D0_pinv @ dj for dj in ds] for di in ds])
    T = 2.0 * D2 - G
    T = 0.5 * (T + T.conj().T)
    val, wit = _min_eig_witness(T)
    tol_scale = max(_scale(2.0 * D2), _scale(G), 1e-300)
    eig_ok = val >= -EIG_TOL * tol_scale
    reason = "" if support_ok else (
        f"support condition violated: hybrid vector outside range of D0 "
        f"(defect {support_defect:.3e})"
    )
    return CertReport(
        condition_name="2 D2_00 >= D1 D0^+ D1^dag",
        passed=bool(eig_ok and support_ok),
        min_eigenvalue=val,
        margin=_embedding_margin(blocks),
        witness=wit,
        matrix=T,
        reason=reason,
    )


# ---------------------------------------------------------------------------
# Non-Markovian kernel certificate


def _toeplitz_from_kernel(kernel: NonlocalKernel, n: int) -> np.ndarray:
    """Kernel matrix K[i, j] = K(t_i - t_j) * dt (measure absorbed)."""
    c = kernel.center
    if n > c + 1:
        raise KernelConsistencyError(
            f"time grid of {n} points needs lags up to {(n - 1)}, kernel has {c}"
        )
    idx = c + (np.arange(n)[:, None] - np.arange(n)[None, :])
    return np.asarray(kernel.values, dtype=float)[idx] * kernel.dtau


@dataclass(frozen=True)
class NonMarkovReport:
    kernel_report: CertReport
    classical_report: CertReport

    @property
    def passed(self) -> bool:
        return self.kernel_report.passed and self.classical_report.passed

    def to_dict(self) -> dict:
        return {"C": self.kernel_report.to_dict(), "N33R": self.classical_report.to_dict()}


def check_nonmarkov_kernel(kernels: dict, lambda1: float, hbar: float, n_time: int | None = None) -> NonMarkovReport:
    """Eigen-test the discretized non-Markovian kernel condition.

    `kernels` maps {"N22", "D22", "N23", "N32", "D32", "N33R"} to
    NonlocalKernel instances (missing/None entries are treated as zero
    kernels). All kernels must share one lag grid; the time grid uses its
    positive lags (or the first n_time of them).
    """
    present = [k for k in kernels.values() if k is not None]
    if not present:
        raise KernelConsistencyError("no kernels provided")
    ref = present[0]
    for k in present[1:]:
        if k.tau.shape != ref.tau.shape or abs(k.dtau - ref.dtau) > 1e-12 * ref.dtau:
            raise KernelConsistencyError("all kernels must share one lag grid")
    n = (ref.tau.size + 1) // 2 if n_time is None else int(n_time)

    n23 = kernels.get("N23")
    n32 = kernels.get("N32")
    if n23 is not None and n32 is not None:
        scale = max(np.abs(n23.values).max(), np.abs(n32.values).max(), 1e-300)
        if np.abs(np.asarray(n23.values) - np.asarray(n32.values)[::-1]).max() > 1e-8 * scale:
            raise KernelConsistencyError("kernel input inconsistency: N23(tau) != N32(-tau)")

    def mat(key):
        k = kernels.get(key)
        return np.zeros((n, n)) if k is None else _toeplitz_from_kernel(k, n)

    N22 = mat("N22")
    D22 = mat("D22")
    N32 = mat("N32")
    D32 = mat("D32")
    N33R = mat("N33R")

    D22a = 0.5 * (D22 - D22.T)
    L = lambda1 * np.eye(n) - D32 / (2.0 * hbar)
    Bp = 0.5 * L - (1j / hbar) * N32
    Bm = 0.5 * L + (1j / hbar) * N32

    # classical weight: N33R must itself be PSD on the grid
    val_n, wit_n = _min_eig_witness(0.5 * (N33R + N33R.T).astype(complex))
    n33_scale = _scale(N33R)
    classical = CertReport(
        condition_name="N33R >= 0",
        passed=val_n >= -EIG_TOL * n33_scale,
        min_eigenvalue=val_n,
        margin=val_n,
        witness=wit_n,
        matrix=N33R.astype(complex),
    )

    Q, proj = psd_pseudo_inverse(
        np.where(np.abs(N33R) > 0, N33R, 0.0).astype(complex), name="N33R"
    ) if val_n >= -EIG_TOL * n33_scale else (np.zeros((n, n)), np.zeros((n, n)))

    bscale = max(np.abs(Bp).max(), 1e-300)
    support_defect = max(
        np.linalg.norm((np.eye(n) - proj) @ Bp),
        np.linalg.norm((np.eye(n) - proj) @ Bm),
    )
    support_ok = support_defect <= SUPPORT_TOL * bscale * np.sqrt(n)

    subtraction = Bp.T @ Q @ Bm
    C = (1.0 / hbar**2) * N22 - (0.5j / hbar**2) * D22a - subtraction
    # constituent scale: C itself cancels to ~0 for saturated inputs
    tol_scale = max(_scale(N22) / hbar**2, _scale(D22a) / (2 * hbar**2), _scale(subtraction), 1e-300)
    herm_defect = np.abs(C - C.conj().T).max() / tol_scale
    if herm_defect > 1e-8:
        raise KernelConsistencyError(
            f"kernel input inconsistency: assembled C not Hermitian (defect {herm_defect:.3e})"
        )
    C = 0.5 * (C + C.conj().T)
    val, wit = _min_eig_witness(C)
    passed = bool(val >= -EIG_TOL * tol_scale and support_ok and classical.passed)
    reason = "" if support_ok else (
        f"unsupported direction: coupling outside the support of N33R (defect {support_defect:.3e})"
    )
    report = CertReport(
        condition_name="C(x, y) positive as a bilinear form",
        passed=passed,
        min_eigenvalue=val,
        margin=val,
        witness=wit,
        matrix=C,
        reason=reason,
    )
    return NonMarkovReport(kernel_report=report, classical_report=classical)
