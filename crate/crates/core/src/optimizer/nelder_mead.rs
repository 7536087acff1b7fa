//! Derivative-free Nelder-Mead minimisation for low-dimensional problems.

pub struct NelderMead {
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Initial simplex edge along each axis.
    pub step: Vec<f64>,
}

pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

impl NelderMead {
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        assert_eq!(self.step.len(), n);
        let evals = std::cell::Cell::new(0usize);
        let eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.step[i];
            let v = eval(&x);
            simplex.push((x, v));
        }

        let combine =
            |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[n].1);
            if evals.get() >= self.max_evals || (worst - best).abs() <= self.f_tol {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let worst_x = simplex[n].0.clone();
            let reflected = combine(&centroid, &worst_x, -1.0);
            let fr = eval(&reflected);
            if fr < best {
                let expanded = combine(&centroid, &worst_x, -2.0);
                let fe = eval(&expanded);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let (contracted, fc) = if fr < worst {
                    let c = combine(&centroid, &reflected, 0.5);
                    let v = eval(&c);
                    (c, v)
                } else {
                    let c = combine(&centroid, &worst_x, 0.5);
                    let v = eval(&c);
                    (c, v)
                };
                if fc < worst.min(fr) {
                    simplex[n] = (contracted, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let x = combine(&anchor, &entry.0, 0.5);
                        let v = eval(&x);
                        *entry = (x, v);
                    }
                }
            }
        }
        let (x, value) = simplex.swap_remove(0);
        Minimum { x, value, evals: evals.get() }
    }
}
