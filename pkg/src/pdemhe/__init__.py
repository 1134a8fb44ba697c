"""Explicit moving-horizon estimators for 1-D hyperbolic and parabolic PDEs.

The estimators map a sliding window of boundary measurements and inputs
directly to a full state estimate through backstepping kernels, with no
online PDE integration. Observer-PDE integrators and plant simulators are
included as ground truth.
"""

from .accel import NUMBA_ENABLED, backend_name
from .coeffs import (
    CoefficientSet,
    HYPERBOLIC,
    PARABOLIC,
    chebyshev,
    constant,
    constant2d,
    hyperbolic_coeffs,
    parabolic_coeffs,
    polynomial,
)
from .config import ScenarioConfig, SinusoidTerm, load as load_config
from .core import (
    ConfigError,
    ConvergenceError,
    Grid,
    OutOfWindowError,
    PdeMheError,
    Profile,
    l2_norm,
)
from .harness import (
    benchmark_cost,
    build_pipeline,
    check_contraction,
    compare_mhe_vs_observer,
    run_scenario,
)
from .kernels import (
    GainVector,
    KernelTable,
    invert_kernel,
    observer_gain_hyperbolic,
    observer_gain_parabolic,
    solve_hyperbolic_kernel,
    solve_parabolic_kernel,
    theta_kernel,
)
from .mhe import (
    HyperbolicMheContext,
    ParabolicMheContext,
    contraction_threshold,
    hyperbolic_overshoot,
    parabolic_overshoot,
)
from .observer import ObserverState
from .plant import (
    HyperbolicPlantState,
    NoiseModel,
    ParabolicPlantState,
    measure_hyperbolic,
    measure_parabolic,
    parabolic_dt_bound,
)

__version__ = "0.1.0"
