use std::time::Instant;

use rand::Rng;

use super::acquisition::{propose, BudgetPolicy, DEFAULT_CANDIDATES};
use super::gp::{fit_gp_with, FitOptions};
use super::runlog::{check_history, Method, TrialRecord};
use crate::evaluator::Objective;
use crate::rule_space::Design;
use crate::rule_space::{denormalize, normalize, project, RawVector, RuleConfig, DIM};
use crate::seeding::{derive_seed, derived_rng};
use crate::{Error, Result};

/// What every optimizer needs besides its own settings.
pub struct RunContext<'a> {
    pub objective: &'a dyn Objective,
    pub design: Design,
    pub seed: u64,
}

/// Receives each record as soon as it exists, e.g. to append it to a log.
pub type Sink<'s> = &'s mut dyn FnMut(&TrialRecord) -> Result<()>;

pub(crate) fn uniform_unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; DIM] {
    std::array::from_fn(|_| rng.random::<f64>())
}

pub(crate) struct Trial {
    pub raw: RawVector,
    pub acquisition: Option<f64>,
    pub n_games: u32,
    pub accepted: Option<bool>,
}

/// Projects, evaluates and records one proposal.
pub(crate) fn run_trial(ctx: &RunContext, method: Method, iteration: u32, trial: Trial) -> TrialRecord {
    let config: RuleConfig = project(&trial.raw, ctx.design);
    let base_seed = derive_seed(ctx.seed, "games", u64::from(iteration));
    let start = Instant::now();
    let eval = ctx.objective.evaluate(&config, trial.n_games, base_seed);
    TrialRecord {
        method,
        iteration,
        raw: trial.raw,
        config,
        acquisition: trial.acquisition,
        n_games: trial.n_games,
        base_seed,
        eval,
        accepted: trial.accepted,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

#[derive(Clone, Debug)]
pub struct BoSettings {
    pub method: Method,
    pub iterations: u32,
    /// Uniform random evaluations before the first surrogate fit.
    pub init_count: u32,
    pub policy: BudgetPolicy,
    pub candidates: usize,
    pub fit: FitOptions,
}

impl BoSettings {
    pub fn adaptive(iterations: u32, n_min: u32, n_max: u32) -> Self {
        BoSettings {
            method: Method::BoAdaptive,
            iterations,
            init_count: 10,
            policy: BudgetPolicy::new(n_min, n_max),
            candidates: DEFAULT_CANDIDATES,
            fit: FitOptions::default(),
        }
    }

    pub fn fixed(iterations: u32, n_games: u32) -> Self {
        BoSettings { method: Method::BoFixed, policy: BudgetPolicy::fixed(n_games), ..Self::adaptive(iterations, 1, 1) }
    }
}

/// Bayesian optimization with acquisition-based game budgets.
///
/// `history` holds records from an earlier, interrupted run with the same
/// settings and seed; the loop resumes at the next iteration and produces
/// the same records an uninterrupted run would.
pub fn run_bo(
    settings: &BoSettings,
    ctx: &RunContext,
    mut history: Vec<TrialRecord>,
    sink: Sink,
) -> Result<Vec<TrialRecord>> {
    if settings.init_count < 2 {
        return Err(Error::InvalidArgument("the warm-up needs at least 2 evaluations".into()));
    }
    check_history(&history, settings.method)?;
    let mut policy = settings.policy;
    for r in &history {
        if let Some(ei) = r.acquisition {
            policy.allocate(ei);
        }
    }

    for t in history.len() as u32 + 1..=settings.iterations {
        let mut rng = derived_rng(ctx.seed, "bo", u64::from(t));
        let warm_up = t <= settings.init_count;
        let fitted = if warm_up {
            None
        } else {
            let x: Vec<Vec<f64>> = history.iter().map(|r| normalize(&r.config).to_vec()).collect();
            let y: Vec<f64> = history.iter().map(|r| r.eval.loss).collect();
            match fit_gp_with(&x, &y, &settings.fit) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("iteration {t}: surrogate failed ({e}); proposing at random");
                    None
                }
            }
        };
        let trial = match fitted {
            Some(model) => {
                let p = propose(&model, &mut rng, settings.candidates);
                let n_games = policy.allocate(p.ei);
                Trial { raw: p.raw, acquisition: Some(p.ei), n_games, accepted: None }
            }
            None => Trial {
                raw: denormalize(&uniform_unit(&mut rng)).expect("uniform draw in range"),
                acquisition: None,
                n_games: policy.n_min,
                accepted: None,
            },
        };
        let record = run_trial(ctx, settings.method, t, trial);
        log::info!(
            "{} {t}/{}: loss {:.4} over {} games",
            settings.method,
            settings.iterations,
            record.eval.loss,
            record.n_games
        );
        sink(&record)?;
        history.push(record);
    }
    Ok(history)
}
