//! Adaptive Dormand-Prince 5(4) integration of linear systems with
//! complex state vectors.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { rtol: 1e-8, atol: 1e-10, h_min: 1e-12, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rms_norm(v: &[C64], scale: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = v.iter().enumerate().map(|(i, z)| (z.norm() / scale(i)).powi(2)).sum();
    (s / v.len().max(1) as f64).sqrt()
}

/// Integrates from `t0` through every time in `t_out` (non-decreasing, all
/// `>= t0`), calling `observe(k, t_out[k], y)` exactly at each of them.
pub fn integrate<S, O>(sys: &S, mut y: Vec<C64>, t0: f64, t_out: &[f64], cfg: &IntegratorConfig, mut observe: O) -> Result<IntegrationStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let n = sys.dim();
    assert_eq!(y.len(), n, "state length does not match the system");
    let mut stats = IntegrationStats::default();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut t = t0;
    sys.rhs(t, &y, &mut k[0]);
    stats.evaluations += 1;

    let span = t_out.last().map_or(0.0, |&e| e - t0);
    let mut h = {
        let d0 = rms_norm(&y, |i| cfg.atol + cfg.rtol * y[i].norm());
        let d1 = rms_norm(&k[0], |i| cfg.atol + cfg.rtol * y[i].norm());
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(span.max(cfg.h_min)).min(cfg.h_max).max(cfg.h_min)
    };

    for (idx, &target) in t_out.iter().enumerate() {
        if target < t {
            return Err(Error::InvalidParameter(format!("output time {target} precedes {t}")));
        }
        while target - t > 1e-13 * target.abs().max(1.0) {
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(Error::MaxSteps { t });
            }
            let clipped = h >= target - t;
            let step = if clipped { target - t } else { h };
            for s in 1..7 {
                tmp.copy_from_slice(&y);
                for (j, &a) in A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        let ha = step * a;
                        for (x, kj) in tmp.iter_mut().zip(&k[j]) {
                            *x += kj * ha;
                        }
                    }
                }
                sys.rhs(t + C[s] * step, &tmp, &mut k[s]);
            }
            stats.evaluations += 6;
            // tmp holds the 5th-order solution (the last stage argument).
            let err = {
                let scale = |i: usize| cfg.atol + cfg.rtol * y[i].norm().max(tmp[i].norm());
                let mut acc = 0.0;
                for i in 0..n {
                    let mut ei = C64::new(0.0, 0.0);
                    for (j, &c) in E.iter().enumerate() {
                        if c != 0.0 {
                            ei += k[j][i] * c;
                        }
                    }
                    acc += (ei.norm() * step / scale(i)).powi(2);
                }
                (acc / n.max(1) as f64).sqrt()
            };
            if !err.is_finite() {
                if tmp.iter().any(|v| !v.is_finite()) && step <= cfg.h_min {
                    return Err(Error::NonFinite { t });
                }
                stats.rejected += 1;
                h = step * 0.1;
                if h < cfg.h_min {
                    return Err(Error::NonFinite { t });
                }
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.accepted += 1;
                t = if clipped { target } else { t + step };
                std::mem::swap(&mut y, &mut tmp);
                k.swap(0, 6);
                if !clipped || factor < 1.0 {
                    h = (step * factor).min(cfg.h_max);
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
                if h < cfg.h_min {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        observe(idx, target, &y)?;
    }
    Ok(stats)
}
