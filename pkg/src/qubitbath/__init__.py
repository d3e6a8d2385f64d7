"""Exact single-excitation dynamics of a qubit coupled to large randomized
oscillator baths, directly or through a cavity, with closed-form decay laws
and a preset experiment runner.
"""

from .analytics import (
    DecayLawParams,
    Law,
    RateFit,
    chi,
    crossover_time,
    exponential_population,
    first_extremum_time,
    fit_decay_rate,
    internal_coupling_rate,
    linear_population,
    longtime_amplitude,
    overlay_laws,
    zeno_population,
)
from .bath import (
    BathRealization,
    BathSpec,
    CircuitParams,
    couplings_from_circuit,
    gamma0_of,
    gamma_max_for_target_rate,
    lambda0_of,
    load_realization,
    nu0_of,
    sample_bath,
    save_realization,
)
from .config import ExperimentConfig, load_config, parse_config, render_config
from .dynamics import (
    AmplitudeState,
    ExpectedBehavior,
    TimeGrid,
    Trajectory,
    bath_energies,
    build_matrix,
    check_expectation,
    evolve,
    initial_excited,
    norm_error,
    qubit_energy,
    revival_preset,
    rhs,
    stability_bound,
)
from .errors import (
    ConfigError,
    DegenerateBathError,
    MemoryGuardError,
    NormDriftError,
    QubitBathError,
    StabilityError,
)
from .hybrid import (
    HybridEigensystem,
    HybridSpec,
    HybridTrajectory,
    evolve_hybrid,
    global_populations,
    global_rates,
    ground_rate_initial,
    hybrid_eigensystem,
    isolated_populations,
    local_rate,
)
from .runner import RunPlan, RunReport, resolve_plan, run

__version__ = "0.1.0"
