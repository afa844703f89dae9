//! Complex Gaussian stochastic drive built from a cosine series, its
//! real/imaginary decomposition and regularization, and ensemble statistics.

use crate::error::{invalid, Error, Result};
use crate::params::xi_map;
use crate::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// c_0 ..= c_{n_xi}, any sign.
    pub coeffs: Vec<f64>,
    pub horizon_t: f64,
    pub seed: u64,
}

impl FieldSpec {
    pub fn new(coeffs: Vec<f64>, horizon_t: f64, seed: u64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("field spec needs at least c_0"));
        }
        if !(horizon_t > 0.0) {
            return Err(invalid(format!("field horizon must be positive (got {horizon_t})")));
        }
        Ok(FieldSpec { coeffs, horizon_t, seed })
    }

    pub fn n_xi(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// True when no coefficient is negative, i.e. every realization is real.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|&c| c >= 0.0)
    }

    /// Correlation of the real component, `sum_{c_n > 0}`.
    pub fn real_correlation(&self, t: f64) -> f64 {
        series(&self.coeffs, self.horizon_t, t, |c| c.max(0.0))
    }

    /// Correlation of the imaginary component's amplitude, `sum_{c_n < 0} |c_n|`.
    pub fn imag_correlation(&self, t: f64) -> f64 {
        series(&self.coeffs, self.horizon_t, t, |c| (-c).max(0.0))
    }

    /// `E[xi(t) xi(0)] = c_0 + 2 sum c_n cos(n pi t / T)`.
    pub fn target_correlation(&self, t: f64) -> f64 {
        series(&self.coeffs, self.horizon_t, t, |c| c)
    }
}

fn series(coeffs: &[f64], horizon: f64, t: f64, f: impl Fn(f64) -> f64) -> f64 {
    let step = C64::from_polar(1.0, PI * t / horizon);
    let mut z = step;
    let mut s = f(coeffs[0]);
    for &c in &coeffs[1..] {
        s += 2.0 * f(c) * z.re;
        z *= step;
    }
    s
}

/// Independent random stream for a trajectory. `slot` separates several
/// fields that belong to the same trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub trajectory: u64,
    pub slot: u32,
}

impl StreamId {
    pub fn new(trajectory: u64) -> Self {
        StreamId { trajectory, slot: 0 }
    }

    pub fn with_slot(trajectory: u64, slot: u32) -> Self {
        StreamId { trajectory, slot }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Counter-based generator keyed on (seed, slot) with the trajectory index as
/// the ChaCha stream, so draws do not depend on execution order.
pub fn stream_rng(seed: u64, id: StreamId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(id.slot as u64 + 1)));
    rng.set_stream(id.trajectory);
    rng
}

/// One sampled realization. The component series are stored as cosine/sine
/// amplitudes; `xi = xi_real_part + i xi_imag_part`.
#[derive(Clone, Debug)]
pub struct FieldTrajectory {
    /// The 2 n_xi + 1 unit normals, ordered xi_0, xi_1, xi_-1, xi_2, xi_-2, ...
    pub draws: Vec<f64>,
    horizon_t: f64,
    re0: f64,
    im0: f64,
    // (cos amplitude, sin amplitude) for n >= 1
    re: Vec<(f64, f64)>,
    im: Vec<(f64, f64)>,
}

impl FieldTrajectory {
    /// Real and imaginary components at `t`.
    pub fn components(&self, t: f64) -> (f64, f64) {
        let step = C64::from_polar(1.0, PI * t / self.horizon_t);
        let mut z = step;
        let (mut r, mut i) = (self.re0, self.im0);
        for (a, b) in self.re.iter().zip(&self.im) {
            r += a.0 * z.re + a.1 * z.im;
            i += b.0 * z.re + b.1 * z.im;
            z *= step;
        }
        (r, i)
    }

    pub fn xi(&self, t: f64) -> C64 {
        let (r, i) = self.components(t);
        C64::new(r, i)
    }

    pub fn xi_real_part(&self, t: f64) -> f64 {
        self.components(t).0
    }

    pub fn xi_imag_part(&self, t: f64) -> f64 {
        self.components(t).1
    }

    /// `xi_R(t) + w xi_I(t)` for an arbitrary weight `w`.
    pub fn weighted(&self, t: f64, w: C64) -> C64 {
        let (r, i) = self.components(t);
        w * i + r
    }
}

pub fn sample_field(spec: &FieldSpec, stream: StreamId) -> FieldTrajectory {
    let mut rng = stream_rng(spec.seed, stream);
    let draws: Vec<f64> = (0..2 * spec.n_xi() + 1).map(|_| StandardNormal.sample(&mut rng)).collect();
    let c0 = spec.coeffs[0];
    let (re0, im0) = if c0 > 0.0 {
        (c0.sqrt() * draws[0], 0.0)
    } else if c0 < 0.0 {
        (0.0, (-c0).sqrt() * draws[0])
    } else {
        (0.0, 0.0)
    };
    let mut re = Vec::with_capacity(spec.n_xi());
    let mut im = Vec::with_capacity(spec.n_xi());
    for n in 1..=spec.n_xi() {
        let c = spec.coeffs[n];
        let a = (2.0 * c.abs()).sqrt();
        let pair = (a * draws[2 * n - 1], a * draws[2 * n]);
        if c > 0.0 {
            re.push(pair);
            im.push((0.0, 0.0));
        } else if c < 0.0 {
            re.push((0.0, 0.0));
            im.push(pair);
        } else {
            re.push((0.0, 0.0));
            im.push((0.0, 0.0));
        }
    }
    FieldTrajectory { draws, horizon_t: spec.horizon_t, re0, im0, re, im }
}

/// `t -> xi_R(t) + Xi(Lambda) xi_I(t)`.
pub fn regularized_field(traj: &FieldTrajectory, lambda: C64) -> impl Fn(f64) -> C64 + '_ {
    let w = xi_map(lambda);
    move |t| traj.weighted(t, w)
}

/// Mean of `xi(t) xi(0)` across the ensemble and its standard error.
pub fn empirical_autocorrelation(ensemble: &[FieldTrajectory], t_grid: &[f64]) -> Result<(Vec<C64>, Vec<f64>)> {
    if ensemble.len() < 2 {
        return Err(invalid("autocorrelation needs at least two trajectories"));
    }
    let n = ensemble.len() as f64;
    let mut mean = vec![C64::new(0.0, 0.0); t_grid.len()];
    let mut sq = vec![0.0; t_grid.len()];
    let x0: Vec<C64> = ensemble.iter().map(|tr| tr.xi(0.0)).collect();
    let mut prods = vec![C64::new(0.0, 0.0); ensemble.len()];
    for (k, &t) in t_grid.iter().enumerate() {
        for (p, (tr, x)) in prods.iter_mut().zip(ensemble.iter().zip(&x0)) {
            *p = tr.xi(t) * x;
        }
        let m = prods.iter().sum::<C64>() / n;
        let var = prods.iter().map(|p| (p - m).norm_sqr()).sum::<f64>() / (n - 1.0);
        mean[k] = m;
        sq[k] = (var / n).sqrt();
    }
    Ok((mean, sq))
}

/// Coefficient-wise `c(beta') - c(beta)`: the spec of the restructuring field.
pub fn difference_field_spec(c_beta_prime: &[f64], c_beta: &[f64], horizon_t: f64, seed: u64) -> Result<FieldSpec> {
    if c_beta_prime.len() != c_beta.len() {
        return Err(Error::LengthMismatch(format!(
            "coefficient lists have {} and {} entries",
            c_beta_prime.len(),
            c_beta.len()
        )));
    }
    FieldSpec::new(c_beta_prime.iter().zip(c_beta).map(|(a, b)| a - b).collect(), horizon_t, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spec_gives_zero_field() {
        let s = FieldSpec::new(vec![0.0; 5], 4.0, 1).unwrap();
        let tr = sample_field(&s, StreamId::new(0));
        assert_eq!(tr.draws.len(), 9);
        for t in [0.0, 0.7, 3.9] {
            assert_eq!(tr.xi(t), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn constant_term_only() {
        let s = FieldSpec::new(vec![1.0, 0.0, 0.0], 2.0, 9).unwrap();
        let tr = sample_field(&s, StreamId::new(3));
        for t in [0.0, 0.5, 1.9] {
            assert!((tr.xi(t) - C64::new(tr.draws[0], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn negative_coefficient_routes_to_imaginary_part() {
        let s = FieldSpec::new(vec![0.0, -0.5], 2.0, 4).unwrap();
        let tr = sample_field(&s, StreamId::new(0));
        for t in [0.1, 0.8, 1.5] {
            assert_eq!(tr.xi_real_part(t), 0.0);
            let w = PI * t / 2.0;
            let want = tr.draws[1] * w.cos() + tr.draws[2] * w.sin();
            assert!((tr.xi_imag_part(t) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn seeds_and_streams() {
        let s = FieldSpec::new(vec![0.3, 0.2, -0.1], 5.0, 42).unwrap();
        let a = sample_field(&s, StreamId::new(7));
        let b = sample_field(&s, StreamId::new(7));
        assert_eq!(a.draws, b.draws);
        let c = sample_field(&s, StreamId::new(8));
        assert_ne!(a.draws, c.draws);
        let d = sample_field(&s, StreamId::with_slot(7, 1));
        assert_ne!(a.draws, d.draws);
    }

    #[test]
    fn regularized_field_endpoints() {
        let s = FieldSpec::new(vec![0.2, -0.3, 0.1, -0.05], 3.0, 5).unwrap();
        let tr = sample_field(&s, StreamId::new(1));
        let t = 1.1;
        let (r, i) = tr.components(t);
        assert!((regularized_field(&tr, C64::new(-1.0, 0.0))(t) - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((regularized_field(&tr, C64::new(1.0, 0.0))(t) - C64::new(r + i, 0.0)).norm() < 1e-15);
        assert!((regularized_field(&tr, C64::new(-1.0, 2.0))(t) - tr.xi(t)).norm() < 1e-15);
    }

    #[test]
    fn difference_spec() {
        let d = difference_field_spec(&[1.0, 0.0], &[0.4, 0.0], 1.0, 0).unwrap();
        assert!((d.coeffs[0] - 0.6).abs() < 1e-15 && d.coeffs[1] == 0.0);
        assert!(difference_field_spec(&[1.0], &[1.0, 2.0], 1.0, 0).is_err());
    }

    #[test]
    fn constant_field_autocorrelation_converges() {
        let s = FieldSpec::new(vec![1.0], 1.0, 11).unwrap();
        let ens: Vec<_> = (0..4000).map(|k| sample_field(&s, StreamId::new(k))).collect();
        let (m, se) = empirical_autocorrelation(&ens, &[0.0, 0.5]).unwrap();
        assert!((m[0].re - 1.0).abs() < 4.0 * se[0]);
        let zeros: Vec<_> = (0..3).map(|k| sample_field(&FieldSpec::new(vec![0.0], 1.0, 0).unwrap(), StreamId::new(k))).collect();
        let (m, se) = empirical_autocorrelation(&zeros, &[0.0, 1.0]).unwrap();
        assert!(m.iter().all(|v| v.norm() == 0.0) && se.iter().all(|&v| v == 0.0));
    }
}
