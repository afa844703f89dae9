//! Sums of real decaying exponentials fitted to sampled data, used for the
//! zero-frequency (Matsubara) pseudomodes.

use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct ExpFit {
    /// Amplitudes g^2_k (sign-unrestricted).
    pub g2: Vec<f64>,
    /// Decay rates Gamma_k > 0.
    pub gamma: Vec<f64>,
    /// Max absolute residual over the samples.
    pub max_residual: f64,
}

impl ExpFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.g2.iter().zip(&self.gamma).map(|(g, r)| g * (-r * t.abs()).exp()).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExpFitConfig {
    /// Frequency scale; starting rates are log-spaced in [0.1, 10] times this.
    pub omega0: f64,
    pub max_iter: usize,
    /// Max residual accepted as converged.
    pub tolerance: f64,
}

impl Default for ExpFitConfig {
    fn default() -> Self {
        ExpFitConfig { omega0: 1.0, max_iter: 200, tolerance: f64::INFINITY }
    }
}

fn basis(ts: &[f64], rates: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(ts.len(), rates.len(), |i, k| (-rates[k] * ts[i]).exp())
}

/// Linear amplitudes for fixed rates and the resulting residual vector.
fn project(ts: &[f64], ys: &DVector<f64>, log_rates: &[f64]) -> Option<(DVector<f64>, DVector<f64>)> {
    let rates: Vec<f64> = log_rates.iter().map(|l| l.exp()).collect();
    let a = basis(ts, &rates);
    let svd = a.clone().svd(true, true);
    let amp = svd.solve(ys, 1e-13).ok()?;
    let r = ys - a * &amp;
    if r.iter().all(|v| v.is_finite()) {
        Some((amp, r))
    } else {
        None
    }
}

fn cost(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Levenberg-Marquardt on log-rates with the amplitudes projected out.
fn refine(ts: &[f64], ys: &DVector<f64>, start: Vec<f64>, max_iter: usize) -> Option<(Vec<f64>, DVector<f64>, f64)> {
    let k = start.len();
    let mut p = start;
    let (_, mut r) = project(ts, ys, &p)?;
    let mut c = cost(&r);
    let mut mu = 1e-3;
    for _ in 0..max_iter {
        let h = 1e-7;
        let mut jac = DMatrix::zeros(ts.len(), k);
        for j in 0..k {
            let mut q = p.clone();
            q[j] += h;
            let (_, rq) = project(ts, ys, &q)?;
            jac.set_column(j, &((rq - &r) / h));
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for d in 0..k {
                a[(d, d)] += mu * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let q: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| (a + b).clamp(-30.0, 30.0)).collect();
            if let Some((_, rq)) = project(ts, ys, &q) {
                let cq = cost(&rq);
                if cq < c {
                    let rel = (c - cq) / c.max(1e-300);
                    p = q;
                    r = rq;
                    c = cq;
                    mu = (mu / 3.0).max(1e-12);
                    improved = true;
                    if rel < 1e-14 {
                        return Some((p, r, c));
                    }
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some((p, r, c))
}

/// Fits `sum_k g2_k exp(-Gamma_k t)` to `(t, y)` samples with multi-start
/// Gauss-Newton (Levenberg-Marquardt damped). With `n_mats = 0` the fit is empty.
pub fn fit_matsubara_modes(samples: &[(f64, f64)], n_mats: usize, cfg: &ExpFitConfig) -> Result<ExpFit> {
    if samples.is_empty() {
        return Err(invalid("exponential fit needs samples"));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    if n_mats == 0 {
        let max_residual = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        return Ok(ExpFit { g2: vec![], gamma: vec![], max_residual });
    }
    let grid_n = (n_mats + 4).max(6);
    let lo = (0.1 * cfg.omega0).ln();
    let hi = (10.0 * cfg.omega0).ln();
    let grid: Vec<f64> = (0..grid_n).map(|i| lo + (hi - lo) * i as f64 / (grid_n - 1) as f64).collect();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for stride in 1..=(grid_n / n_mats).max(1) {
        for first in 0..grid_n {
            let idx: Vec<usize> = (0..n_mats).map(|k| first + k * stride).collect();
            if idx.iter().all(|&i| i < grid_n) {
                starts.push(idx.iter().map(|&i| grid[i]).collect());
            }
        }
    }
    starts.truncate(24);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        if let Some((p, _, c)) = refine(&ts, &ys, s, cfg.max_iter) {
            if best.as_ref().is_none_or(|b| c < b.1) {
                best = Some((p, c));
            }
        }
    }
    let (p, _) = best.ok_or(Error::FitNonConvergence { residual: f64::INFINITY })?;
    let (amp, r) = project(&ts, &ys, &p).ok_or(Error::FitNonConvergence { residual: f64::INFINITY })?;
    let max_residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pairs: Vec<(f64, f64)> = p.iter().map(|l| l.exp()).zip(amp.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fit = ExpFit { gamma: pairs.iter().map(|p| p.0).collect(), g2: pairs.iter().map(|p| p.1).collect(), max_residual };
    if max_residual > cfg.tolerance {
        return Err(Error::FitNonConvergence { residual: max_residual });
    }
    Ok(fit)
}
