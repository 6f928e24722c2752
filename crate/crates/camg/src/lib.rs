//! Solver library for the co-action minority game: N agents (odd) pick one
//! of two restaurants each day, minority wins, and every agent in the same
//! occupancy state jointly tunes the same jump probability to maximize her
//! discounted future payoff.
//!
//! The crate computes:
//!
//! - the agent-centric Markov chain of a strategy profile and its exact
//!   2^N joint-configuration oracle ([`markov`]),
//! - discounted and steady-state payoffs, the random baseline, and the
//!   inefficiency parameter ([`payoff`]),
//! - co-action equilibria with their staged random / edge / interior phase
//!   structure, critical discounts where the optimal strategy switches, and
//!   the trapping-state diagnostic for the single-deviator analysis
//!   ([`equilibrium`]),
//! - the large-N reduced 3-state chain, its exact eigensystem, and the
//!   scaled transition boundary ([`large_n`]),
//! - seeded Monte Carlo runs validating the analytic results ([`sim`]).
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, and the `camg` binary for file-oriented batch use.

pub mod equilibrium;
pub mod error;
pub mod game;
pub mod large_n;
pub mod markov;
pub mod payoff;
pub mod sim;

pub use error::{Error, Result};
pub use game::{AgentState, GameConfig, PayoffVector, StrategyProfile};
pub use markov::{
    build_full_matrix, build_transition_matrix, block_diagonalize, eigen3_analytic,
    marginalize_to_agent, steady_state, BlockDecomposition, FullConfigMatrix, SteadyState,
    TransitionMatrix,
};
pub use payoff::{
    average_payoff, discounted_payoffs, inefficiency, payoff_report, w_max, w_rand,
    AveragePayoff, PayoffReport,
};
pub use equilibrium::{
    best_response, best_response_curves, cubic_root_n3, nash_trap_diagnostic, solve_coaction,
    threshold_scan, BestResponseCurves, EquilibriumSolution, Landmarks, PairPhase, Phase,
    Threshold, TransitionKind, TrapReport,
};
pub use large_n::{
    asymptotic_payoff_e2, b_max, eigen_triple, lambda_c1_estimate, reduced_matrix, solve_a_star,
    AStarSolution, EigenTriple, PayoffExpansion, ScaledParams,
};
pub use sim::{
    empirical_discounted_payoff, empirical_sigma2, simulate, Estimate, SimulationRecord,
};
