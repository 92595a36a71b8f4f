import numpy as np
import pytest

from cqsim import hilbert
from cqsim.cq_coeffs import ModelConfig, assemble, hybrid_from_blocks, to_oppenheim
from cqsim.errors import KernelConsistencyError
from cqsim.kernels import LocalMoments

SX, SZ = hilbert.PAULI_X, hilbert.PAULI_Z


def qubit_model(lambda1=1.0, hbar=1.0, omega_c=1.0):
    return ModelConfig(hbar=hbar, lambda1=lambda1, H_psi=0.5 * SZ, F2=SX, omega_c=omega_c)


def test_cubic_model_hybrid_coefficients():
    # mixed moments vanish: nu = kappa = mu = 0, gamma = lambda1 / 2
    c = assemble(LocalMoments(N22=0.25, N33=0.25), qubit_model(lambda1=0.8))
    assert c.nu == 0.0 and c.kappa == 0.0 and c.mu == 0.0
    assert c.gamma == pytest.approx(0.4)
    assert np.allclose(c.d_pi, [0.4, 0.0])
    assert np.allclose(c.d_h, [0.0, 0.0])


def test_decoupled_limit():
    c = assemble(LocalMoments(), qubit_model(lambda1=0.0, omega_c=1.3))
    assert np.allclose(c.H_base, 0.5 * SZ)
    assert np.allclose(c.H_h, 0.0) and np.allclose(c.H_pi, 0.0)
    assert c.drift(1.0, 0.5) == pytest.approx(-1.3**2)
    assert np.allclose(c.D0, 0.0)


def test_gamma_shift_from_d32():
    hbar = 0.7
    lam1 = 0.9
    c = assemble(LocalMoments(D32=hbar * lam1), qubit_model(lambda1=lam1, hbar=hbar))
    assert c.gamma == pytest.approx(lam1)  # lambda1/2 + D32/(2 hbar) = lambda1


def test_hybrid_coefficient_formulas():
    hbar = 2.0
    m = LocalMoments(N23=0.3, N32=0.3, N23_2=0.12, N32_2=0.12, D32=0.5, D32_1=0.4)
    c = assemble(m, qubit_model(lambda1=1.0, hbar=hbar))
    assert c.gamma == pytest.approx(0.5 + 0.5 / (2 * hbar))
    assert c.nu == pytest.approx(2 * 0.3 / hbar)
    assert c.kappa == pytest.approx(0.4 / (2 * hbar))
    assert c.mu == pytest.approx(2 * 0.12 / hbar)
    assert np.allclose(c.d_pi, [c.gamma - 1j * c.nu, c.kappa])
    assert np.allclose(c.d_h, [0.0, 1j * c.mu])


def test_mixed_symmetry_violation_rejected():
    with pytest.raises(KernelConsistencyError):
        assemble(LocalMoments(N23=0.3, N32=0.2), qubit_model())


def test_d0_matrix_and_hermiticity():
    hbar = 1.5
    m = LocalMoments(N22=0.5, N22_2=0.2, D22_1=0.3)
    c = assemble(m, qubit_model(hbar=hbar))
    expected = (2.0 / hbar**2) * np.array([[0.5, -0.075j], [0.075j, 0.2]])
    assert np.allclose(c.D0, expected)
    assert np.abs(c.D0 - c.D0.conj().T).max() <= 1e-14


def test_heff_assembly():
    hbar = 1.0
    m = LocalMoments(D22=0.4, D22_1=0.2, D23=-0.3, D23_1=0.1)
    model = qubit_model(lambda1=0.6, hbar=hbar)
    c = assemble(m, model)
    R2 = hilbert.heisenberg_rate(model.H_psi, SX, hbar)
    assert np.allclose(c.R2, R2)
    H_base = 0.5 * SZ + 0.2 * (SX @ SX) - 0.05 * hilbert.anticommutator(SX, R2)
    assert np.allclose(c.H_base, H_base)
    assert np.allclose(c.H_h, (0.6 + 0.3) * SX)
    assert np.allclose(c.H_pi, -0.1 * SX)
    # pointwise evaluation is affine
    assert np.allclose(c.heff(0.5, -2.0), H_base + 0.5 * c.H_h - 2.0 * c.H_pi)


def test_drift_assembly():
    m = LocalMoments(D33=0.2, D33_1=0.5)
    c = assemble(m, qubit_model(hbar=2.0, omega_c=1.5))
    assert c.drift_h == pytest.approx(-(1.5**2) - 0.2 / 2.0)
    assert c.drift_pi == pytest.approx(-0.5 / 2.0)
    assert c.drift(2.0, -1.0) == pytest.approx(2.0 * c.drift_h - c.drift_pi)


def test_to_oppenheim_dictionary():
    m = LocalMoments(N22=0.4, N33=0.3, N33_2=0.15, N23=0.1, N32=0.1, N23_2=0.05, N32_2=0.05)
    c = assemble(m, qubit_model(lambda1=1.0))
    blocks = to_oppenheim(c)
    assert np.allclose(blocks.D2_00, np.diag([0.15, 0.3]))
    assert np.allclose(blocks.d_pi, c.d_pi)
    assert np.allclose(blocks.d_h, c.d_h)
    assert np.allclose(blocks.D0, c.D0)
    assert blocks.drift_h_coeffs == (0.0, 1.0)  # D1_00 h-component is pi itself
    assert blocks.drift_pi_coeffs == (c.drift_h, c.drift_pi)


def test_cubic_dictionary_values():
    # D1_pi = (lambda1/2, 0), D1_h = (0, 0) for the cubic model
    blocks = to_oppenheim(assemble(LocalMoments(N22=0.25, N33=0.25), qubit_model(lambda1=1.0)))
    assert np.allclose(blocks.d_pi, [0.5, 0.0])
    assert np.allclose(blocks.d_h, [0.0, 0.0])


def test_mu_dictionary_value():
    # N23_2 = 1.5 hbar -> mu = 3 -> D1_h = (0, 3i)
    hbar = 1.0
    m = LocalMoments(N23_2=1.5 * hbar, N32_2=1.5 * hbar)
    blocks = to_oppenheim(assemble(m, qubit_model(hbar=hbar)))
    assert np.allclose(blocks.d_h, [0.0, 3.0j])


def test_roundtrip_hybrid_recovery():
    rng = np.random.default_rng(4)
    for _ in range(20):
        m = LocalMoments(
            N22=rng.uniform(0.1, 1.0),
            N22_2=rng.uniform(0.0, 1.0),
            N33=rng.uniform(0.1, 1.0),
            N33_2=rng.uniform(0.0, 1.0),
            N23=rng.uniform(-0.5, 0.5),
            N32=0.0,
            N23_2=rng.uniform(-0.5, 0.5),
            N32_2=0.0,
            D32=rng.uniform(-1, 1),
            D32_1=rng.uniform(-1, 1),
        )
        m = LocalMoments(**{**m.to_dict(), "N32": m.N23, "N32_2": m.N23_2})
        c = assemble(m, qubit_model(lambda1=rng.uniform(-1, 1), hbar=rng.uniform(0.5, 2)))
        back = hybrid_from_blocks(to_oppenheim(c))
        assert back["gamma"] == pytest.approx(c.gamma, abs=1e-15)
        assert back["nu"] == pytest.approx(c.nu, abs=1e-15)
        assert back["kappa"] == pytest.approx(c.kappa, abs=1e-15)
        assert back["mu"] == pytest.approx(c.mu, abs=1e-15)


def test_coupling_scaling_linearity():
    m = LocalMoments(N22=0.25, N33=0.25)
    g1 = assemble(m, qubit_model(lambda1=0.5)).gamma
    g2 = assemble(m, qubit_model(lambda1=1.5)).gamma
    assert g2 == pytest.approx(3.0 * g1)
    # the omega_c^2 part of the drift is coupling-independent
    d1 = assemble(m, qubit_model(lambda1=0.5)).drift_h
    d2 = assemble(m, qubit_model(lambda1=1.5)).drift_h
    assert d1 == d2


def test_serialization():
    c = assemble(LocalMoments(N22=0.25, N33=0.25), qubit_model())
    d = c.to_dict()
    assert d["gamma"] == pytest.approx(0.5)
    assert d["moments"]["N22"] == 0.25
    assert hilbert.operator_from_json(d["D0"]).shape == (2, 2)
