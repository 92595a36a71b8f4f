"""cqsim: classical-quantum hybrid dynamics and positivity certificates.

Builds the Markovian CQ generator coefficients from nonlocal influence
kernels, evolves an operator-valued phase-space state, certifies the
complete-positivity conditions (local trade-off and discretized nonlocal
kernel), and validates a stochastic unraveling against the deterministic
evolution.
"""

__version__ = "0.1.0"

from .cq_coeffs import CQCoefficients, ModelConfig, OppenheimBlocks, assemble, to_oppenheim
from .cq_master import EvolutionConfig, cfl_limit, evolve, generator
from .errors import (
    BoundaryLeakError,
    CFLError,
    ConfigError,
    CQSimError,
    DimensionMismatchError,
    HermiticityError,
    KernelConsistencyError,
    NumericalAbortError,
    PositivityError,
    UnsupportedDirectionError,
)
from .hilbert import (
    anticommutator,
    commutator,
    gksl_apply,
    heisenberg_rate,
    min_eigenvalue,
)
from .kernels import (
    CubicKernels,
    EnvironmentCorrelator,
    FdrReport,
    LocalMoments,
    NonlocalKernel,
    build_cubic_kernels,
    cubic_moments,
    extract_moments,
    fdr_check,
    moments_from_kernels,
    ohmic_correlator,
    thermal_mode_correlator,
)
from .positivity import (
    CertReport,
    build_CM,
    check_markov_cp,
    check_nonmarkov_kernel,
    check_tradeoff,
)
from .scenarios import PRESETS, Scenario, build_scenario
from .semi_wigner import (
    PhaseSpaceGrid,
    SemiWignerState,
    init_gaussian_product,
    init_point_mass,
    marginals,
    partial2_h,
    partial2_pi,
    partial_h,
    partial_pi,
)
from .unraveling import (
    EnsembleResult,
    GaussianInitial,
    NoiseSpec,
    Trajectory,
    deposit_state,
    ensemble_average,
    run_ensemble,
    sample_noise,
    trajectory_rng,
    trajectory_step,
)
