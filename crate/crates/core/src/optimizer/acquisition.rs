use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::gp::GpModel;
use crate::rule_space::{denormalize, snap_unit, RawVector, DIM};

/// Expected improvement below `y_best` for a Gaussian prediction.
pub fn expected_improvement(mu: f64, sigma: f64, y_best: f64) -> f64 {
    let d = y_best - mu;
    if sigma <= 0.0 {
        return d.max(0.0);
    }
    let z = d / sigma;
    let n = Normal::standard();
    (d * n.cdf(z) + sigma * n.pdf(z)).max(0.0)
}

pub const DEFAULT_CANDIDATES: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub raw: RawVector,
    pub unit: [f64; DIM],
    pub ei: f64,
}

/// Scores `candidates` uniform draws, each snapped to the grid, by EI in
/// standardized units and returns the best.
pub fn propose<R: Rng + ?Sized>(model: &GpModel, rng: &mut R, candidates: usize) -> Proposal {
    let draws: Vec<[f64; DIM]> =
        (0..candidates.max(1)).map(|_| snap_unit(&std::array::from_fn(|_| rng.random::<f64>()))).collect();
    propose_from(model, draws)
}

/// The candidate with the highest EI; the first of equal scores wins.
pub fn propose_from(model: &GpModel, candidates: impl IntoIterator<Item = [f64; DIM]>) -> Proposal {
    let y_best = model.best_standardized();
    let mut best: Option<([f64; DIM], f64)> = None;
    for u in candidates {
        let (mu, sigma) = model.predict_standardized(&u);
        let ei = expected_improvement(mu, sigma, y_best);
        if best.is_none_or(|(_, b)| ei > b) {
            best = Some((u, ei));
        }
    }
    let (unit, ei) = best.expect("at least one candidate");
    Proposal { raw: denormalize(&unit).expect("candidate in the unit cube"), unit, ei }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPolicy {
    pub n_min: u32,
    pub n_max: u32,
    pub running_max_ei: f64,
}

impl Default for BudgetPolicy {
    fn default() -> Self {
        BudgetPolicy::new(16, 64)
    }
}

impl BudgetPolicy {
    pub fn new(n_min: u32, n_max: u32) -> Self {
        assert!(n_min >= 1 && n_min <= n_max, "need 1 <= n_min <= n_max");
        BudgetPolicy { n_min, n_max, running_max_ei: 0.0 }
    }

    pub fn fixed(n: u32) -> Self {
        BudgetPolicy::new(n, n)
    }

    /// Folds `ei` into the running maximum, then interpolates linearly
    /// between `n_min` and `n_max` by `ei / running_max`, rounding half away
    /// from zero.
    pub fn allocate(&mut self, ei: f64) -> u32 {
        let ei = if ei.is_finite() { ei.max(0.0) } else { 0.0 };
        self.running_max_ei = self.running_max_ei.max(ei);
        if self.running_max_ei <= 0.0 {
            return self.n_min;
        }
        let span = f64::from(self.n_max - self.n_min);
        let n = (f64::from(self.n_min) + span * ei / self.running_max_ei).round();
        (n as u32).clamp(self.n_min, self.n_max)
    }
}

pub fn adaptive_games(ei: f64, policy: BudgetPolicy) -> (u32, BudgetPolicy) {
    let mut p = policy;
    let n = p.allocate(ei);
    (n, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::gp::fit_gp;
    use crate::seeding::derived_rng;

    #[test]
    fn ei_examples() {
        assert!((expected_improvement(0.0, 1.0, 0.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert_eq!(expected_improvement(1.0, 0.0, 0.5), 0.0);
        assert_eq!(expected_improvement(0.25, 0.0, 0.5), 0.25);
    }

    #[test]
    fn budget_examples() {
        let mut p = BudgetPolicy::default();
        assert_eq!(p.allocate(0.0), 16);
        assert_eq!(p.allocate(2.0), 64);
        assert_eq!(p.allocate(1.0), 40);
        assert_eq!(p.allocate(0.0), 16);
        assert_eq!(p.running_max_ei, 2.0);
        let (n, q) = adaptive_games(4.0, p);
        assert_eq!((n, q.running_max_ei), (64, 4.0));
        assert_eq!(BudgetPolicy::fixed(64).allocate(0.3), 64);
    }

    fn model() -> GpModel {
        let mut rng = derived_rng(1, "test", 0);
        let x: Vec<Vec<f64>> =
            (0..15).map(|_| snap_unit(&std::array::from_fn(|_| rng.random::<f64>())).to_vec()).collect();
        let y: Vec<f64> = x.iter().map(|v| v.iter().map(|a| (a - 0.5).powi(2)).sum()).collect();
        fit_gp(&x, &y).unwrap()
    }

    #[test]
    fn proposals_are_seeded_and_on_grid() {
        let m = model();
        let a = propose(&m, &mut derived_rng(9, "p", 0), 256);
        let b = propose(&m, &mut derived_rng(9, "p", 0), 256);
        assert_eq!(a, b);
        assert_eq!(snap_unit(&a.unit), a.unit);
        assert!(a.ei >= 0.0);
    }

    #[test]
    fn first_of_equal_candidates_wins() {
        // Mirror images about the only training point score identically.
        let centre = vec![0.5; DIM];
        let h = crate::optimizer::gp::Hyperparams { lengthscale: 0.4, signal_var: 1.0, noise_var: 1e-4 };
        let m = GpModel::with_hyperparams(&[centre], &[0.2], h).unwrap();
        let mut a = [0.5; DIM];
        let mut b = [0.5; DIM];
        a[0] = 0.625;
        b[0] = 0.375;
        assert_eq!(propose_from(&m, [a, b]).unit, a);
        assert_eq!(propose_from(&m, [b, a]).unit, b);
        assert_eq!(propose_from(&m, [a, b]).ei, propose_from(&m, [b, a]).ei);
    }
}
