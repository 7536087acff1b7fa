use rand_distr::{Distribution, Normal};

use super::bo::{run_trial, uniform_unit, RunContext, Sink, Trial};
use super::runlog::{check_history, Method, TrialRecord};
use crate::rule_space::{denormalize, unit_of_raw, DIM};
use crate::seeding::derived_rng;
use crate::{Error, Result};

/// Independent uniform proposals, each evaluated with `n_games`.
pub fn run_random_search(
    iterations: u32,
    n_games: u32,
    ctx: &RunContext,
    mut history: Vec<TrialRecord>,
    sink: Sink,
) -> Result<Vec<TrialRecord>> {
    check_history(&history, Method::Random)?;
    for t in history.len() as u32 + 1..=iterations {
        let mut rng = derived_rng(ctx.seed, "random", u64::from(t));
        let raw = denormalize(&uniform_unit(&mut rng)).expect("uniform draw in range");
        let record = run_trial(ctx, Method::Random, t, Trial { raw, acquisition: None, n_games, accepted: None });
        sink(&record)?;
        history.push(record);
    }
    Ok(history)
}

pub const DEFAULT_STEP_SIGMA: f64 = 0.1;

/// (1+1) evolution strategy in the unit cube.
///
/// Iteration 1 evaluates a uniform starting point, which becomes the
/// incumbent. Later iterations perturb the incumbent with isotropic Gaussian
/// noise, clamp to the cube and replace the incumbent only on a strictly
/// lower loss. The incumbent is always recovered from the records, so a
/// resumed run follows the same trajectory.
pub fn run_one_plus_one_es(
    iterations: u32,
    n_games: u32,
    step_sigma: f64,
    ctx: &RunContext,
    mut history: Vec<TrialRecord>,
    sink: Sink,
) -> Result<Vec<TrialRecord>> {
    if !(step_sigma > 0.0 && step_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("step sigma must be positive, got {step_sigma}")));
    }
    check_history(&history, Method::Es)?;
    let noise = Normal::new(0.0, step_sigma).expect("valid sigma");
    for t in history.len() as u32 + 1..=iterations {
        let mut rng = derived_rng(ctx.seed, "es", u64::from(t));
        let (unit, accepted) = match incumbent(&history) {
            None => (uniform_unit(&mut rng), None),
            Some(inc) => {
                let base = unit_of_raw(&inc.raw);
                let mut u = [0.0; DIM];
                for (v, b) in u.iter_mut().zip(base) {
                    *v = (b + noise.sample(&mut rng)).clamp(0.0, 1.0);
                }
                (u, Some(inc.eval.loss))
            }
        };
        let raw = denormalize(&unit).expect("clamped into range");
        let mut record = run_trial(ctx, Method::Es, t, Trial { raw, acquisition: None, n_games, accepted: None });
        record.accepted = Some(accepted.is_none_or(|inc_loss| record.eval.loss < inc_loss));
        sink(&record)?;
        history.push(record);
    }
    Ok(history)
}

/// The most recently accepted record.
pub fn incumbent(history: &[TrialRecord]) -> Option<&TrialRecord> {
    history.iter().rev().find(|r| r.accepted == Some(true))
}

/// The lowest-loss record; the earliest wins ties.
pub fn best_by_loss(history: &[TrialRecord]) -> Option<&TrialRecord> {
    history.iter().reduce(|best, r| if r.eval.loss < best.eval.loss { r } else { best })
}
