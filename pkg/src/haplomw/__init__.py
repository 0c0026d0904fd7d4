"""Haploid population dynamics and their multiplicative-weights learners.

The package simulates k-locus haploid selection/recombination dynamics,
mirrors them with polynomial-weights learners on the induced identical-
interest game, machine-checks the marginal equivalences and the no-regret
bound, and runs random-instance convergence sweeps and counterexamples.
"""

from .core import (
    DegenerateUpdate,
    DimensionMismatch,
    FitnessLandscape,
    GameMatrix,
    IndexVector,
    JointDistribution,
    MarginalProfile,
    UnsupportedAllele,
    average_fitness,
    conditional_marginal,
    distance,
    linkage_disequilibrium,
    marginal,
    marginals,
    selection_strength,
    wright_projection,
)
from .dynamics import (
    CONVERGENCE_THRESHOLD,
    DynamicsKind,
    Trajectory,
    apply_step,
    is_stable_state,
    recombination_step,
    rs_normalizer,
    rs_step,
    selection_step,
    simulate,
    sr_step,
    sr_step_k,
)
from .equivalence import (
    EquivalenceReport,
    check_rs_marginal,
    check_sr_marginal,
    check_trajectory,
)
from .learners import (
    LearnerConfig,
    alpha_utilities,
    conditional_utilities,
    cosimulate_learners,
    hedge_update,
    independent_pw_simulate,
    independent_utilities,
    pw_update,
    utility_alpha,
    utility_conditional,
    utility_independent,
)
from .regret import RegretLedger, RegretReport, build_ledger, check_regret_bound, differential_quantities
from .experiments import (
    SweepConfig,
    SweepRecord,
    SweepSummary,
    counterexample_convergence,
    counterexample_wright,
    is_pure_nash,
    ks_distance,
    random_landscape,
    run_sweep,
    subgame_restrict,
)

__version__ = "0.1.0"
