import numpy as np
import pytest

from cqsim import hilbert
from cqsim.errors import DimensionMismatchError, HermiticityError

SX, SY, SZ = hilbert.PAULI_X, hilbert.PAULI_Y, hilbert.PAULI_Z
I2 = hilbert.identity(2)


def random_hermitian(rng, d):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (A + A.conj().T)


def test_commutator_identity_and_self():
    B = np.array([[1.0, 2.0j], [-2.0j, -0.5]])
    assert np.allclose(hilbert.commutator(I2, B), 0.0)
    assert np.allclose(hilbert.commutator(B, B), 0.0)


def test_commutator_pauli():
    # hand product: sigma_x sigma_y = i sigma_z, sigma_y sigma_x = -i sigma_z
    assert np.allclose(hilbert.commutator(SX, SY), 2j * SZ)


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        hilbert.commutator(I2, np.eye(3))


def test_anticommutator_cases():
    B = random_hermitian(np.random.default_rng(0), 2)
    assert np.allclose(hilbert.anticommutator(I2, B), 2.0 * B)
    assert np.allclose(hilbert.anticommutator(SX, SX), 2.0 * I2)
    assert np.allclose(hilbert.anticommutator(SX, SY), 0.0)


def test_heisenberg_rate_diagonal_commute():
    H = np.diag([1.0, 2.0]).astype(complex)
    F = np.diag([0.3, -0.7]).astype(complex)
    assert np.allclose(hilbert.heisenberg_rate(H, F), 0.0)


def test_heisenberg_rate_pauli():
    # (i/hbar)[(hbar w/2) sz, sx] = (i w/2)(2i sy) = -w sy
    omega, hbar = 1.7, 0.5
    out = hilbert.heisenberg_rate(hbar * omega / 2.0 * SZ, SX, hbar)
    assert np.allclose(out, -omega * SY, atol=1e-14)


def test_heisenberg_rate_linear_and_hermitian():
    rng = np.random.default_rng(3)
    H = random_hermitian(rng, 4)
    F = random_hermitian(rng, 4)
    r1 = hilbert.heisenberg_rate(H, F)
    r2 = hilbert.heisenberg_rate(2.0 * H, F)
    assert np.allclose(r2, 2.0 * r1)
    assert hilbert.is_hermitian(r1)


def test_heisenberg_rate_rejects_nonhermitian():
    with pytest.raises(HermiticityError):
        hilbert.heisenberg_rate(np.array([[0.0, 1.0], [0.0, 0.0]]), SX)


def test_gksl_zero_coefficients():
    W = random_hermitian(np.random.default_rng(1), 2)
    out = hilbert.gksl_apply(np.zeros((2, 2)), (SX, SY), W)
    assert np.allclose(out, 0.0)


def test_gksl_identity_state_traceless():
    rng = np.random.default_rng(2)
    D0 = np.array([[0.8, 0.1 - 0.2j], [0.1 + 0.2j, 0.5]])
    out = hilbert.gksl_apply(D0, (random_hermitian(rng, 3), random_hermitian(rng, 3)), np.eye(3))
    assert abs(np.trace(out)) < 1e-12


def test_gksl_dephasing_example():
    # D0 = diag(1, 0), L1 = sz, W = |+><+|: result is -2 (W - diag W)
    W = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    out = hilbert.gksl_apply(np.diag([1.0, 0.0]), (SZ, SY), W)
    expected = -2.0 * (W - np.diag(np.diag(W)))
    assert np.allclose(out, expected)


def test_gksl_rejects_nonhermitian_d0():
    with pytest.raises(HermiticityError):
        hilbert.gksl_apply(np.array([[1.0, 1.0], [0.0, 1.0]]), (SX, SY), I2)


def test_gksl_trace_annihilating_and_hermiticity_randomized():
    # randomized property: 100 seeds, output traceless and Hermitian
    for seed in range(100):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 5))
        W = random_hermitian(rng, d)
        L1, L2 = random_hermitian(rng, d), random_hermitian(rng, d)
        z = rng.standard_normal() + 1j * rng.standard_normal()
        D0 = np.array([[abs(rng.standard_normal()) + 0.5, z], [np.conj(z), abs(rng.standard_normal()) + 0.5]])
        out = hilbert.gksl_apply(D0, (L1, L2), W)
        scale = max(np.abs(out).max(), 1e-300)
        assert abs(np.trace(out)) <= 1e-12 * max(scale, np.abs(W).max())
        assert hilbert.hermiticity_defect(out) <= 1e-12


def test_min_eigenvalue():
    assert hilbert.min_eigenvalue(I2) == pytest.approx(1.0)
    assert hilbert.min_eigenvalue(np.diag([3.0, -2.0])) == pytest.approx(-2.0)
    # characteristic polynomial of sigma_x: l^2 - 1 = 0
    assert hilbert.min_eigenvalue(SX) == pytest.approx(-1.0)
    with pytest.raises(HermiticityError):
        hilbert.min_eigenvalue(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_operator_json_roundtrip():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    data = hilbert.operator_to_json(A)
    assert data[0][1] == [pytest.approx(A[0, 1].real), pytest.approx(A[0, 1].imag)]
    back = hilbert.operator_from_json(data)
    assert np.allclose(back, A)


def test_as_operator_rejects_nonfinite():
    with pytest.raises(ValueError):
        hilbert.as_operator(np.array([[np.nan, 0.0], [0.0, 1.0]]))
