//! Search over the normalized rule space: Bayesian optimization with
//! acquisition-based game budgets, plus random-search and (1+1)-ES
//! baselines. All three share the trial record format and run log.

pub mod acquisition;
pub mod baselines;
pub mod bo;
pub mod gp;
pub mod nelder_mead;
pub mod runlog;

pub use acquisition::{adaptive_games, expected_improvement, propose, propose_from, BudgetPolicy, Proposal};
pub use baselines::{best_by_loss, incumbent, run_one_plus_one_es, run_random_search, DEFAULT_STEP_SIGMA};
pub use bo::{run_bo, BoSettings, RunContext, Sink};
pub use gp::{fit_gp, fit_gp_with, gp_posterior, matern52, FitOptions, GpModel, HyperBounds, Hyperparams};
pub use runlog::{read_log, Method, RunLog, TrialRecord};

/// Games consumed by a history.
pub fn total_games(history: &[TrialRecord]) -> u64 {
    history.iter().map(|r| u64::from(r.n_games)).sum()
}

/// Running minimum of the observed loss, one entry per record.
pub fn running_best(history: &[TrialRecord]) -> Vec<f64> {
    history
        .iter()
        .scan(f64::INFINITY, |best, r| {
            *best = best.min(r.eval.loss);
            Some(*best)
        })
        .collect()
}
