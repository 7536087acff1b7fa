//! Exact Gaussian-process regression with an isotropic Matérn 5/2 kernel.
//!
//! Targets are standardized before fitting; hyperparameters maximise the log
//! marginal likelihood by Nelder-Mead in log space from several seeded
//! starts. Predictions come back in the caller's units.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nelder_mead::NelderMead;
use crate::seeding::derived_rng;
use crate::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn 5/2 as a function of the scaled distance `r`.
pub fn matern52_r(r: f64, signal_var: f64) -> f64 {
    let s = SQRT5 * r;
    signal_var * (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()
}

pub fn matern52(x: &[f64], x2: &[f64], lengthscale: f64, signal_var: f64) -> f64 {
    let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    matern52_r(d2.sqrt() / lengthscale, signal_var)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lengthscale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
}

impl Hyperparams {
    fn from_log(v: &[f64], b: &HyperBounds) -> Self {
        let clamp = |x: f64, (lo, hi): (f64, f64)| x.exp().clamp(lo, hi);
        Hyperparams {
            lengthscale: clamp(v[0], b.lengthscale),
            signal_var: clamp(v[1], b.signal_var),
            noise_var: clamp(v[2], b.noise_var),
        }
    }
}

/// Inclusive search ranges; a degenerate range pins the value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_var: (f64, f64),
    pub noise_var: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        HyperBounds { lengthscale: (0.05, 5.0), signal_var: (0.1, 10.0), noise_var: (1e-4, 1.0) }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub bounds: HyperBounds,
    pub starts: usize,
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { bounds: HyperBounds::default(), starts: 8, max_evals: 150, seed: 0x6a09_e667 }
    }
}

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    hyper: Hyperparams,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    /// `(K + noise I)^-1 y_standardized`.
    alpha: DVector<f64>,
    lml: f64,
}

fn standardization(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

fn sq_dists(x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Cholesky of `K + noise I`, adding jitter on failure. Returns the factor
/// and the jitter that was needed.
fn factorize(d2: &DMatrix<f64>, h: &Hyperparams) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = d2.nrows();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let v = matern52_r(d2[(i, j)].sqrt() / h.lengthscale, h.signal_var);
        if i == j {
            v + h.noise_var
        } else {
            v
        }
    });
    if let Some(c) = Cholesky::new(k.clone()) {
        return Some((c, 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

fn log_marginal(chol: &Cholesky<f64, Dyn>, ys: &DVector<f64>) -> (f64, DVector<f64>) {
    let alpha = chol.solve(ys);
    let n = ys.len() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    let lml = -0.5 * ys.dot(&alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln();
    (lml, alpha)
}

impl GpModel {
    /// A model with fixed hyperparameters. `y` is in caller units.
    pub fn with_hyperparams(x: &[Vec<f64>], y: &[f64], hyper: Hyperparams) -> Result<Self> {
        check_data(x, y, 1)?;
        let d2 = sq_dists(x);
        Self::build(x, y, &d2, hyper)
    }

    fn build(x: &[Vec<f64>], y: &[f64], d2: &DMatrix<f64>, hyper: Hyperparams) -> Result<Self> {
        let (y_mean, y_scale) = standardization(y);
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
        let (chol, jitter) = factorize(d2, &hyper).ok_or_else(|| {
            Error::Surrogate(format!("kernel matrix not positive definite even with jitter {JITTER_MAX}"))
        })?;
        let (lml, alpha) = log_marginal(&chol, &ys);
        Ok(GpModel { x: x.to_vec(), y: y.to_vec(), y_mean, y_scale, hyper, jitter, chol, alpha, lml })
    }

    pub fn hyperparams(&self) -> Hyperparams {
        self.hyper
    }

    /// Diagonal jitter that had to be added to factorize the kernel matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn standardize(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_scale
    }

    /// Lowest training target, standardized.
    pub fn best_standardized(&self) -> f64 {
        self.y.iter().map(|&v| self.standardize(v)).fold(f64::INFINITY, f64::min)
    }

    /// Posterior mean and standard deviation of the latent function, in
    /// standardized units.
    pub fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let h = &self.hyper;
        let k =
            DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| matern52(x, xi, h.lengthscale, h.signal_var)));
        let mu = k.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&k).expect("Cholesky factor has a positive diagonal");
        let var = h.signal_var - v.dot(&v);
        (mu, var.max(0.0).sqrt())
    }
}

fn check_data(x: &[Vec<f64>], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("{} inputs but {} targets", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::InvalidArgument(format!("need at least {min} observations")));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidArgument("inputs have mixed dimensions".into()));
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite training data".into()));
    }
    Ok(())
}

/// Posterior mean and standard deviation at `x`, in loss units.
pub fn gp_posterior(model: &GpModel, x: &[f64]) -> (f64, f64) {
    let (mu, sigma) = model.predict_standardized(x);
    (model.y_mean + model.y_scale * mu, model.y_scale * sigma)
}

pub fn fit_gp(x: &[Vec<f64>], y: &[f64]) -> Result<GpModel> {
    fit_gp_with(x, y, &FitOptions::default())
}

pub fn fit_gp_with(x: &[Vec<f64>], y: &[f64], opts: &FitOptions) -> Result<GpModel> {
    check_data(x, y, 2)?;
    let b = opts.bounds;
    let d2 = sq_dists(x);
    let (y_mean, y_scale) = standardization(y);
    let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
    let neg_lml = |v: &[f64]| -> f64 {
        let h = Hyperparams::from_log(v, &b);
        match factorize(&d2, &h) {
            Some((chol, _)) => -log_marginal(&chol, &ys).0,
            None => f64::INFINITY,
        }
    };

    let ranges = [b.lengthscale, b.signal_var, b.noise_var].map(|(lo, hi)| (lo.ln(), hi.ln()));
    let step: Vec<f64> = ranges.iter().map(|(lo, hi)| 0.1 * (hi - lo).max(1e-9)).collect();
    let nm = NelderMead { max_evals: opts.max_evals, f_tol: 1e-9, step };
    let mut rng = derived_rng(opts.seed, "gp-starts", 0);
    let mut best: Option<(f64, Hyperparams)> = None;
    for _ in 0..opts.starts.max(1) {
        let x0: Vec<f64> =
            ranges.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect();
        let m = nm.minimize(neg_lml, &x0);
        let h = Hyperparams::from_log(&m.x, &b);
        if best.is_none_or(|(v, _)| m.value < v) {
            best = Some((m.value, h));
        }
    }
    let (value, hyper) = best.expect("at least one start");
    if !value.is_finite() {
        return Err(Error::Surrogate("no hyperparameter setting gave a factorizable kernel".into()));
    }
    GpModel::build(x, y, &d2, hyper)
}
