//! A cheap stand-in objective with a known balance surface.
//!
//! The Empire win probability is a logistic function of the time-to-kill gap
//! and an economy gap, so the balanced set is known in closed form and every
//! optimizer can be scored by the true loss of the configuration it selects.
//! Games are Bernoulli draws keyed by game seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::compute_ttk;
use crate::evaluator::{Counts, EvalResult, Objective};
use crate::rule_space::RuleConfig;
use crate::seeding::derived_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticObjective {
    /// Weight on `ttk_E->N - ttk_N->E`; negative because needing more hits
    /// to kill weakens the Empire.
    pub a: f64,
    /// Weight on [`economy_gap`].
    pub b: f64,
}

impl Default for SyntheticObjective {
    fn default() -> Self {
        SyntheticObjective { a: -0.5, b: 0.3 }
    }
}

/// Units each side can field early, Empire minus Nomads: starting stock
/// plus four gathers over unit cost, against starting stock plus two kill
/// rewards over unit cost.
pub fn economy_gap(c: &RuleConfig) -> f64 {
    let empire = f64::from(c.initial_resources + 4 * c.empire_farmer_gather) / f64::from(c.empire_unit_cost);
    let nomads = f64::from(c.initial_resources + 2 * c.nomads_kill_gain) / f64::from(c.nomads_unit_cost);
    empire - nomads
}

impl SyntheticObjective {
    pub fn logit(&self, c: &RuleConfig) -> f64 {
        let (nomads_to_kill_soldier, empire_to_kill_cavalry) = compute_ttk(c);
        let gap = f64::from(empire_to_kill_cavalry) - f64::from(nomads_to_kill_soldier);
        self.a * gap + self.b * economy_gap(c)
    }

    pub fn p_empire(&self, c: &RuleConfig) -> f64 {
        1.0 / (1.0 + (-self.logit(c)).exp())
    }

    /// Balance loss in the limit of infinitely many games.
    pub fn true_loss(&self, c: &RuleConfig) -> f64 {
        2.0 * (self.p_empire(c) - 0.5).abs()
    }
}

impl Objective for SyntheticObjective {
    fn evaluate(&self, config: &RuleConfig, n_games: u32, base_seed: u64) -> EvalResult {
        assert!(n_games >= 1, "evaluate needs at least one game");
        let p = self.p_empire(config);
        let mut counts = Counts::default();
        for i in 0..u64::from(n_games) {
            let u: f64 = derived_rng(base_seed.wrapping_add(i), "synthetic", 0).random();
            if u < p {
                counts.empire += 1;
            } else {
                counts.nomads += 1;
            }
        }
        EvalResult::from_counts(counts, Vec::new())
    }

    fn describe(&self) -> String {
        format!("synthetic a={} b={}", self.a, self.b)
    }
}
