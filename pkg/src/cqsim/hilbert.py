"""Dense linear algebra on the finite-dimensional quantum sector.

Operators are plain complex numpy arrays of shape (d, d), treated as
immutable values. The module hosts the system Hamiltonian, the coupling
operator F2, its Heisenberg rate R2 = (i/hbar)[H, F2], and the GKSL
dissipator used by the hybrid generator. Target dimensions are small
(d <= 32), so everything is dense.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, HermiticityError

HERMITICITY_RTOL = 1e-12


def as_operator(A, name: str = "operator") -> np.ndarray:
    """Validate and return a square, finite complex matrix."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatchError(f"{name}: expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name}: entries must be finite (no NaN/Inf)")
    return M


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def hermiticity_defect(A: np.ndarray) -> float:
    """max|A - A^dag| relative to max|A| (0 for the zero matrix)."""
    scale = np.abs(A).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(A - dagger(A)).max() / scale)


def is_hermitian(A, rtol: float = HERMITICITY_RTOL) -> bool:
    return hermiticity_defect(np.asarray(A, dtype=complex)) <= rtol


def require_hermitian(A, name: str = "operator", rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    M = as_operator(A, name)
    defect = hermiticity_defect(M)
    if defect > rtol:
        raise HermiticityError(f"{name}: not Hermitian (relative defect {defect:.3e} > {rtol:.1e})")
    return M


def _check_same_dim(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise DimensionMismatchError(f"operator dimensions differ: {A.shape} vs {B.shape}")


def commutator(A, B) -> np.ndarray:
    """AB - BA."""
    A = as_operator(A, "A")
    B = as_operator(B, "B")
    _check_same_dim(A, B)
    return A @ B - B @ A


def anticommutator(A, B) -> np.ndarray:
    """AB + BA."""
    A = as_operator(A, "A")
    B = as_operator(B, "B")
    _check_same_dim(A, B)
    return A @ B + B @ A


def heisenberg_rate(H, F, hbar: float = 1.0) -> np.ndarray:
    """(i/hbar)[H, F], the Heisenberg-picture rate of F under H.

    Both inputs must be Hermitian; the result is Hermitian again.
    """
    H = require_hermitian(H, "H")
    F = require_hermitian(F, "F")
    _check_same_dim(H, F)
    return (1j / hbar) * commutator(H, F)


def gksl_apply(D0, ops, W) -> np.ndarray:
    """Apply the GKSL dissipator with coefficient matrix D0 to W.

    Returns sum_ab D0[a,b] (L_a W L_b^dag - 1/2 {L_b^dag L_a, W}) for the
    operator tuple ops = (L_1, ..., L_n). D0 must be Hermitian n x n; the
    result is trace-annihilating.
    """
    D0 = require_hermitian(D0, "D0")
    Ls = [as_operator(L, f"L{a + 1}") for a, L in enumerate(ops)]
    n = len(Ls)
    if D0.shape != (n, n):
        raise DimensionMismatchError(f"D0 must be {n}x{n} for {n} operators, got {D0.shape}")
    W = as_operator(W, "W")
    for L in Ls:
        _check_same_dim(L, W)

    out = np.zeros_like(W)
    for a in range(n):
        # Sandwich terms grouped as L_a W M_a with M_a = sum_b D0[a,b] L_b^dag.
        Ma = sum(D0[a, b] * dagger(Ls[b]) for b in range(n))
        out += Ls[a] @ W @ Ma
    P = sum(D0[a, b] * (dagger(Ls[b]) @ Ls[a]) for a in range(n) for b in range(n))
    out -= 0.5 * (P @ W + W @ dagger(P))
    return out


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue of a Hermitian matrix (symmetric eigensolver)."""
    A = require_hermitian(A, "A")
    return float(np.linalg.eigvalsh(A)[0])


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def operator_to_json(A) -> list:
    """Serialize as nested row-major lists of [re, im] pairs."""
    A = as_operator(A)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def operator_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a d x d array of [re, im] pairs, got shape {arr.shape}")
    return as_operator(arr[..., 0] + 1j * arr[..., 1])
