"""sc1d: 1D wave-packet dynamics with stochastic, entropy-budgeted localization."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    Grid1D,
    ModelParams,
    Potential,
    WaveFunction,
    ensemble_spread,
    gaussian_packet,
    make_grid,
    observables,
)
from .propagator import PropagatorConfig, evolve, step_unitary  # noqa: F401
from .localization import (  # noqa: F401
    NoSplit,
    SplitBasis,
    ThetaField,
    center_condition,
    energy_cost,
    energy_cost_general,
    entropy_gain,
    entropy_support_width_oracle,
    lambda_from_constraint,
    optimize_split,
    overlap_p,
    pendulum_analytic,
    pendulum_entropy,
    ramp_weight_q,
    s_prime_product_factorization,
    trial_pair,
    weights,
)
from .collapse import (  # noqa: F401
    CollapseEvent,
    CountingRNG,
    TrajectoryRecord,
    apply_branch,
    force_collapse,
    maybe_collapse,
    occupation_left,
    run_ensemble,
    run_trajectory,
)
from .densmat import (  # noqa: F401
    DeltaKernel,
    DensityMatrixGrid,
    collapse_map,
    delta_kernel,
    evolve_master,
    pure_state_matrix,
    thermal_state,
)
from .scenarios import (  # noqa: F401
    ScenarioConfig,
    preset,
    read_density_csv,
    read_meta_json,
    run,
    run_ensemble_to_disk,
)
