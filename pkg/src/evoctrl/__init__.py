"""Equilibrium selection control for a five-strategy evolutionary game.

Library layout:

- `game`: payoff matrix, Nash verification, strategy relabeling
- `dynamics`: replicator field, Jacobians, spectra, RK4 integration
- `control`: pole-assignment gain design and round-level reward/tax
- `agents`: finite-population round engine and session logs
- `measure`: distributions, distance curves, angular momentum, cycles
- `server`: live round-based session host (HTTP + event stream)
- `cli`: batch entry points over all of the above
"""

from .game import (
    CANONICAL_PERMUTATION_CODES,
    EQUILIBRIA,
    NASH_1,
    NASH_2,
    PAYOFF_MATRIX,
    UNIFORM,
    StrategyPermutation,
    apply_permutation,
    expected_payoffs,
    is_nash,
    load_game,
    mean_payoff,
    round_payoffs,
    to_simplex,
)
from .dynamics import (
    BlowUp,
    JacobianMatrix,
    Spectrum,
    VectorField,
    eigs,
    integrate,
    jacobian,
    renormalized_field,
    replicator_field,
    replicator_velocity,
    save_trajectory,
    tangent_spectrum,
)
from .control import (
    CHANNEL,
    STABILITY_MARGIN,
    ConjugationViolation,
    ControlDesign,
    ControlMode,
    Uncontrollable,
    closed_loop_field,
    closed_loop_jacobian,
    closed_loop_max_real,
    control_payoffs,
    controlled_velocity,
    design_controller,
    design_report,
    permute_design,
    place_poles,
    stability_boundary,
    target_spectrum,
)
from .agents import (
    TREATMENT_SESSIONS,
    TREATMENTS,
    AgentPolicy,
    RoundRecord,
    SessionConfig,
    SessionLog,
    SessionState,
    load_log,
    resolve_round,
    run_session,
    run_treatment,
    save_counts_csv,
    save_log,
    step_round,
    treatment_label,
)
from .measure import (
    FACE_PAIRS,
    PAIRS,
    AngularMomentumSet,
    ConvergenceCurve,
    DistributionSummary,
    EigencycleSet,
    MeasurementReport,
    StateSeries,
    aggregate_treatment,
    angular_momentum,
    cycle_strength,
    distance_curve,
    eigencycle,
    first_crossing,
    log_series,
    mean_distribution,
    write_figure_tables,
)

# server and cli stay import-on-demand: they pull in the HTTP stack.

__version__ = "0.1.0"
