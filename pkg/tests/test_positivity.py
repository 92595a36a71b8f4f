import numpy as np
import pytest

from cqsim import hilbert
from cqsim.cq_coeffs import ModelConfig, OppenheimBlocks, assemble, to_oppenheim
from cqsim.errors import KernelConsistencyError, PositivityError
from cqsim.kernels import LocalMoments, NonlocalKernel, lag_grid, thermal_mode_correlator, build_cubic_kernels
from cqsim.positivity import (
    build_CM,
    check_markov_cp,
    check_nonmarkov_kernel,
    check_tradeoff,
)

from .oracles import brute_force_min_eig


def qubit_model(lambda1=1.0, hbar=1.0):
    return ModelConfig(hbar=hbar, lambda1=lambda1, H_psi=0.5 * hilbert.PAULI_Z, F2=hilbert.PAULI_X, omega_c=1.0)


def cubic_coeffs(n22, n33, lambda1=1.0, hbar=1.0):
    return assemble(LocalMoments(N22=n22, N33=n33), qubit_model(lambda1, hbar))


# ---------------------------------------------------------------------------
# build_CM


def test_cm_cubic_white_closed_form():
    # C_M = diag(2 N22/hbar^2 - lambda1^2/(8 N33), 0)
    c = cubic_coeffs(0.3, 0.2, lambda1=0.9)
    CM = build_CM(c)
    expected = np.diag([2 * 0.3 - 0.9**2 / (8 * 0.2), 0.0])
    assert np.allclose(CM, expected)


def test_cm_no_hybrid_is_d0():
    c = assemble(LocalMoments(N22=0.4, N22_2=0.1, D22_1=0.2, N33=0.5, N33_2=0.3), qubit_model(lambda1=0.0))
    assert np.allclose(build_CM(c), c.D0)


def test_cm_subtraction_outer_product():
    # d_pi = (1, 0), N33 = 1/2: subtraction is [[1, 0], [0, 0]]
    c = cubic_coeffs(10.0, 0.5, lambda1=2.0)  # gamma = 1 -> d_pi = (1, 0)
    CM = build_CM(c)
    assert np.allclose(c.D0 - CM, [[1.0, 0.0], [0.0, 0.0]])


def test_cm_negative_diffusion_rejected():
    c = assemble(LocalMoments(N22=0.4, N33=0.5), qubit_model())
    object.__setattr__(c, "N33", -0.1)
    with pytest.raises(PositivityError):
        build_CM(c)


# ---------------------------------------------------------------------------
# check_markov_cp


def test_markov_cp_at_saturation():
    c = cubic_coeffs(0.25, 0.25, lambda1=1.0)  # N22 N33 = 1/16 exactly
    rep = check_markov_cp(c)
    assert rep.passed
    assert rep.cm_report.min_eigenvalue == pytest.approx(0.0, abs=1e-12)
    assert rep.cm_report.margin == pytest.approx(0.0, abs=1e-12)


def test_markov_cp_below_saturation_fails():
    c = cubic_coeffs(0.99 * 0.25, 0.25, lambda1=1.0)
    rep = check_markov_cp(c)
    assert not rep.passed
    # closed-form 2x2 eigenvalue: min eig = 2*0.99*0.25 - 1/(8*0.25) < 0
    assert rep.cm_report.min_eigenvalue == pytest.approx(2 * 0.99 * 0.25 - 0.5, abs=1e-12)


def test_markov_cp_zero_couplings_pass():
    rep = check_markov_cp(assemble(LocalMoments(), qubit_model(lambda1=0.0)))
    assert rep.passed


def test_markov_cp_unsupported_direction():
    # N33 = 0 with gamma != 0: no finite C_M exists
    c = assemble(LocalMoments(N22=0.4), qubit_model(lambda1=1.0))
    rep = check_markov_cp(c)
    assert not rep.passed
    assert "unsupported" in rep.cm_report.reason


def test_markov_classical_negative_diffusion_fails():
    c = assemble(LocalMoments(N22=0.4, N33=0.5, N33_2=0.1), qubit_model(lambda1=0.0))
    object.__setattr__(c, "N33_2", -0.2)
    rep = check_markov_cp(c)
    assert not rep.classical_report.passed
    assert not rep.cm_report.passed  # build_CM refuses negative diffusion
    assert "negative" in rep.cm_report.reason


def test_witness_pairs_with_min_eigenvalue():
    c = cubic_coeffs(0.2, 0.25, lambda1=1.0)
    rep = check_markov_cp(c)
    w, M = rep.cm_report.witness, rep.cm_report.matrix
    val = (w.conj() @ M @ w).real / (w.conj() @ w).real
    assert val == pytest.approx(rep.cm_report.min_eigenvalue, abs=1e-10)
    assert rep.cm_report.min_eigenvalue == pytest.approx(brute_force_min_eig(M), abs=1e-9)


# ---------------------------------------------------------------------------
# check_tradeoff


def test_tradeoff_equivalence_cubic():
    for n22 in (0.2, 0.25, 0.3):
        c = cubic_coeffs(n22, 0.25, lambda1=1.0)
        mk = check_markov_cp(c)
        to = check_tradeoff(to_oppenheim(c))
        assert mk.passed == to.passed
        assert mk.cm_report.margin == pytest.approx(to.margin, abs=1e-9)


def test_tradeoff_zero_hybrid_passes():
    blocks = OppenheimBlocks(
        D2_00=np.diag([0.3, 0.7]),
        d_h=np.zeros(2, complex),
        d_pi=np.zeros(2, complex),
        D0=np.array([[0.5, 0.1j], [-0.1j, 0.4]]),
        drift_h_coeffs=(0.0, 1.0),
        drift_pi_coeffs=(-1.0, 0.0),
    )
    rep = check_tradeoff(blocks)
    assert rep.passed
    assert rep.min_eigenvalue == pytest.approx(0.6)  # 2 * 0.3


def test_tradeoff_support_condition():
    # rank-1 D0 along e1, hybrid vector along e2: support violated
    blocks = OppenheimBlocks(
        D2_00=np.diag([1.0, 1.0]),
        d_h=np.zeros(2, complex),
        d_pi=np.array([0.0, 0.5 + 0.0j]),
        D0=np.diag([1.0, 0.0]).astype(complex),
        drift_h_coeffs=(0.0, 1.0),
        drift_pi_coeffs=(-1.0, 0.0),
    )
    rep = check_tradeoff(blocks)
    assert not rep.passed
    assert "support" in rep.reason


def test_tradeoff_invalid_gksl_block():
    blocks = OppenheimBlocks(
        D2_00=np.diag([1.0, 1.0]),
        d_h=np.zeros(2, complex),
        d_pi=np.zeros(2, complex),
        D0=np.diag([1.0, -0.2]).astype(complex),
        drift_h_coeffs=(0.0, 1.0),
        drift_pi_coeffs=(-1.0, 0.0),
    )
    with pytest.raises(PositivityError, match="invalid GKSL"):
        check_tradeoff(blocks)


def test_randomized_dictionary_equivalence():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n22 = rng.uniform(0.05, 1.0)
        n22_2 = rng.uniform(0.0, 0.8)
        d22_1 = rng.uniform(-1.0, 1.0) * 4.0 * np.sqrt(n22 * n22_2)
        n33 = rng.uniform(0.01, 0.8)
        n33_2 = rng.uniform(0.0, 0.6)
        n23 = rng.uniform(-0.3, 0.3)
        n23_2 = rng.uniform(-0.3, 0.3) * (1.0 if n33_2 > 1e-3 else 0.0)
        m = LocalMoments(
            N22=n22, N22_2=n22_2, D22_1=d22_1, N33=n33, N33_2=n33_2,
            N23=n23, N32=n23, N23_2=n23_2, N32_2=n23_2,
            D32=rng.uniform(-0.5, 0.5), D32_1=rng.uniform(-0.5, 0.5),
            D23=rng.uniform(-0.5, 0.5), D33=rng.uniform(-0.2, 0.2),
            D33_1=rng.uniform(0, 0.5),
        )
        model = ModelConfig(
            hbar=rng.uniform(0.5, 2.0), lambda1=rng.uniform(-1.5, 1.5),
            H_psi=0.5 * hilbert.PAULI_Z, F2=hilbert.PAULI_X, omega_c=1.0,
        )
        coeffs = assemble(m, model)
        mk = check_markov_cp(coeffs)
        to = check_tradeoff(to_oppenheim(coeffs))
        assert mk.passed == to.passed
        assert abs(mk.cm_report.margin - to.margin) <= 1e-9 * max(1.0, abs(to.margin))


def test_scale_consistency():
    # kernels scale by s (so all moments do) together with the tree-level
    # coupling lambda1: every certified eigenvalue scales by s, verdicts fixed
    for s in (1e-3, 1.0, 1e4):
        m = LocalMoments(N22=0.2 * s, N33=0.25 * s)
        c = assemble(m, qubit_model(lambda1=s))
        rep = check_markov_cp(c)
        assert not rep.passed
        assert rep.cm_report.min_eigenvalue == pytest.approx(s * (2 * 0.2 - 0.5), rel=1e-12)


# ---------------------------------------------------------------------------
# check_nonmarkov_kernel


def white_kernels(n22, n33, window=3.0, dtau=0.05):
    tau = lag_grid(window, dtau)
    delta = np.zeros_like(tau)
    delta[tau == 0] = 1.0 / dtau
    return {
        "N22": NonlocalKernel(tau, 2 * n22 * delta, "22", retarded=False),
        "N33R": NonlocalKernel(tau, 2 * n33 * delta, "33", retarded=False),
        "D22": None, "N23": None, "N32": None, "D32": None,
    }


def test_nonmarkov_white_matches_markov_bound():
    # grid-delta inputs reproduce the algebraic trade-off exactly
    for n22, expect in ((0.3, True), (0.25, True), (0.2, False)):
        rep = check_nonmarkov_kernel(white_kernels(n22, 0.25), lambda1=1.0, hbar=1.0)
        assert rep.passed is expect
        assert rep.kernel_report.min_eigenvalue == pytest.approx(2 * n22 - 0.5, abs=1e-12)


def test_nonmarkov_thermal_passes_without_coupling():
    corr = thermal_mode_correlator(omega=1.0, temperature=0.5, linewidth=0.2, window=20.0, dtau=0.05)
    ck = build_cubic_kernels(corr, lambda2=0.8, lambda3=0.5)
    kernels = {"N22": ck.N22, "D22": ck.D22, "N23": None, "N32": None, "D32": None, "N33R": ck.N33}
    rep = check_nonmarkov_kernel(kernels, lambda1=0.0, hbar=1.0, n_time=150)
    assert rep.kernel_report.passed
    assert rep.classical_report.passed


def test_nonmarkov_identity_noise_tradeoff():
    # N22 = c * grid-delta, lambda1 strong enough that lambda1^2/(8 N33) > 2 c: fail
    rep = check_nonmarkov_kernel(white_kernels(0.1, 0.1), lambda1=1.0, hbar=1.0)
    assert not rep.passed
    rep2 = check_nonmarkov_kernel(white_kernels(2.0, 0.1), lambda1=1.0, hbar=1.0)
    assert rep2.passed


def test_nonmarkov_zero_coupling_psd_noise_passes():
    rep = check_nonmarkov_kernel(white_kernels(0.5, 0.0), lambda1=0.0, hbar=1.0)
    assert rep.kernel_report.passed


def test_nonmarkov_negative_n33_fails_classical():
    k = white_kernels(0.5, 0.3)
    k["N33R"] = NonlocalKernel(k["N33R"].tau, -np.asarray(k["N33R"].values), "33", retarded=False)
    rep = check_nonmarkov_kernel(k, lambda1=0.0, hbar=1.0)
    assert not rep.classical_report.passed


def test_nonmarkov_mixed_kernel_consistency_enforced():
    tau = lag_grid(3.0, 0.05)
    bump = np.exp(-((tau - 0.2) ** 2) / 0.02)
    sym = 0.5 * (bump + bump[::-1])
    k = white_kernels(0.5, 0.3)
    k["N32"] = NonlocalKernel(tau, sym, "32", retarded=False)
    k["N23"] = NonlocalKernel(tau, sym, "23", retarded=False)  # should be reversed
    # sym is symmetric, so this actually passes; distort to break N23(tau) = N32(-tau)
    asym = np.roll(sym, 3)
    asym = 0.5 * (asym + asym[::-1])
    k["N23"] = NonlocalKernel(tau, asym, "23", retarded=False)
    with pytest.raises(KernelConsistencyError, match="inconsistency"):
        check_nonmarkov_kernel(k, lambda1=1.0, hbar=1.0)


def test_nonmarkov_scale_consistency():
    base = white_kernels(0.2, 0.25)
    r1 = check_nonmarkov_kernel(base, lambda1=1.0, hbar=1.0)
    scaled = {k: (v.scaled(10.0) if v is not None else None) for k, v in base.items()}
    r2 = check_nonmarkov_kernel(scaled, lambda1=10.0, hbar=1.0)
    assert r1.passed == r2.passed
    assert r2.kernel_report.min_eigenvalue == pytest.approx(10.0 * r1.kernel_report.min_eigenvalue, rel=1e-10)
