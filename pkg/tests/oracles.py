"""Independent oracles used by the test suite.

Everything here is deliberately implemented through a different route
than the package: dense superoperator exponentials for Lindblad dynamics,
ODE integration of the Ornstein-Uhlenbeck moment equations, direct
quadrature of correlators, and Hurwitz-zeta closed forms for the Ohmic
bath. None of it shares code with cqsim internals.
"""

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm


def dag(A):
    return A.conj().T


def lindblad_superoperator(H, D0, ops, hbar=1.0):
    """Dense superoperator of dW/dt = -(i/hbar)[H, W] + sum_ab D0_ab (...).

    Row-major vectorization: vec(A W B) = (A kron B^T) vec(W).
    """
    d = H.shape[0]
    eye = np.eye(d)
    L = -1j / hbar * (np.kron(H, eye) - np.kron(eye, H.T))
    n = len(ops)
    for a in range(n):
        for b in range(n):
            La, Lbd = ops[a], dag(ops[b])
            anti = Lbd @ La
            L += D0[a, b] * (
                np.kron(La, Lbd.T)
                - 0.5 * np.kron(anti, eye)
                - 0.5 * np.kron(eye, anti.T)
            )
    return L


def lindblad_propagate(H, D0, ops, rho0, t, hbar=1.0):
    """Matrix-exponential solution of the GKSL master equation."""
    d = rho0.shape[0]
    sup = lindblad_superoperator(H, D0, ops, hbar)
    vec = expm(sup * t) @ rho0.reshape(-1)
    return vec.reshape(d, d)


def ou_moments(mean0, cov0, omega2, damping, diff_h, diff_pi, t, rtol=1e-11, atol=1e-13):
    """Mean and covariance of the Kramers process at time t.

    dX = A X dt + noise, A = [[0, 1], [-omega2, -damping]],
    d Sigma/dt = A Sigma + Sigma A^T + 2 diag(diff_h, diff_pi).
    """
    A = np.array([[0.0, 1.0], [-omega2, -damping]])
    D2 = 2.0 * np.diag([diff_h, diff_pi])

    def rhs(_, y):
        m = y[:2]
        S = y[2:].reshape(2, 2)
        dm = A @ m
        dS = A @ S + S @ A.T + D2
        return np.concatenate([dm, dS.reshape(-1)])

    y0 = np.concatenate([np.asarray(mean0, float), np.asarray(cov0, float).reshape(-1)])
    sol = solve_ivp(rhs, (0.0, t), y0, rtol=rtol, atol=atol, dense_output=False)
    yf = sol.y[:, -1]
    return yf[:2], yf[2:].reshape(2, 2)


def gaussian_kernel_moments(amplitude, sigma):
    """Analytic (integral, tau^2-integral) of A exp(-tau^2/2 sigma^2)."""
    mass = amplitude * sigma * np.sqrt(2.0 * np.pi)
    second = amplitude * sigma**3 * np.sqrt(2.0 * np.pi)
    return mass, second


def quad_kernel_moment(f, weight, upper, lower=None):
    """Adaptive quadrature of weight(tau) * f(tau) over a finite window."""
    lower = -upper if lower is None else lower
    val, _ = quad(lambda t: weight(t) * f(t), lower, upper, limit=400)
    return val


def thermal_mode_gf(tau, omega, temperature, hbar=1.0, linewidth=0.0):
    """Damped thermal-mode correlator, straightforward evaluation."""
    if temperature > 0:
        c = 1.0 / np.tanh(hbar * omega / (2.0 * temperature))
    else:
        c = 1.0
    return (
        (hbar / (2.0 * omega))
        * (c * np.cos(omega * tau) - 1j * np.sin(omega * tau))
        * np.exp(-linewidth * abs(tau))
    )


def ohmic_gf_hurwitz(tau, cutoff, temperature, eta=1.0, hbar=1.0):
    """Ohmic correlator via the Hurwitz-zeta closed form (mpmath).

    G(tau) = eta/2 [ 1/(a + i tau)^2
                     + 2 Re (1/(2b)^2) zeta(2, 1 + (a + i tau)/(2b)) ],
    a = 1/cutoff, b = hbar/(2 T). Independent of the package's partial-sum
    plus Euler-Maclaurin evaluation.
    """
    import mpmath as mp

    a = 1.0 / cutoff
    z = mp.mpc(a, tau)
    vac = 1.0 / (z * z)
    if temperature > 0:
        b = hbar / (2.0 * temperature)
        thermal = 2.0 * mp.re(mp.zeta(2, 1 + z / (2 * b)) / (4 * b * b))
    else:
        thermal = 0.0
    val = 0.5 * eta * (vac + thermal)
    return complex(val)


def brute_force_min_eig(A):
    """Minimum of <v|A|v> over random unit vectors plus analytic 2x2 check."""
    A = np.asarray(A, dtype=complex)
    if A.shape == (2, 2):
        tr = A[0, 0].real + A[1, 1].real
        det = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]).real
        disc = max(tr * tr / 4.0 - det, 0.0)
        return tr / 2.0 - np.sqrt(disc)
    rng = np.random.default_rng(7)
    best = np.inf
    for _ in range(4000):
        v = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
        v /= np.linalg.norm(v)
        best = min(best, float((v.conj() @ A @ v).real))
    return best
