//! Chebyshev least-squares fits over real sweep points, continuation to a
//! complex target, and bias/stability error bounds.

use crate::error::{invalid, Error, Result};
use crate::C64;
use nalgebra::{DMatrix, DVector};

const ONE: C64 = C64::new(1.0, 0.0);

/// Observable values on a real parameter grid.
///
/// `values[l][t][o]` is observable `o` at time `t_grid[t]` and `lambda_grid[l]`;
/// `stderr` has the same shape (zeros for noiseless data).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub lambda_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub observables: Vec<String>,
    pub values: Vec<Vec<Vec<f64>>>,
    pub stderr: Vec<Vec<Vec<f64>>>,
}

impl SweepTable {
    pub fn validate(&self) -> Result<()> {
        let g = &self.lambda_grid;
        if g.is_empty() || g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|l| !(-1.0..=1.0).contains(l)) {
            return Err(invalid("lambda grid must be strictly increasing within [-1, 1]"));
        }
        let shape_ok = |v: &Vec<Vec<Vec<f64>>>| {
            v.len() == g.len() && v.iter().all(|r| r.len() == self.t_grid.len() && r.iter().all(|c| c.len() == self.observables.len()))
        };
        if !shape_ok(&self.values) || !shape_ok(&self.stderr) {
            return Err(Error::LengthMismatch("sweep table shape does not match its grids".into()));
        }
        Ok(())
    }

    /// Values of one (time, observable) cell across the grid.
    pub fn column(&self, t: usize, obs: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[t][obs]).collect()
    }

    pub fn max_stderr(&self, t: usize, obs: usize) -> f64 {
        self.stderr.iter().map(|r| r[t][obs]).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationResult {
    pub coeffs: Vec<f64>,
    pub value_at_target: C64,
    pub order_m: usize,
    /// Present when a Bernstein parameter and bound `Q_rho` were supplied.
    pub err_bias: Option<f64>,
    pub err_stability: f64,
    pub min_sv: f64,
    pub residual: f64,
}

pub fn chebyshev_t(m: usize, z: C64) -> C64 {
    let (mut a, mut b) = (ONE, z);
    if m == 0 {
        return a;
    }
    for _ in 1..m {
        let c = z * b * 2.0 - a;
        a = b;
        b = c;
    }
    b
}

pub fn design_matrix(lambda_grid: &[f64], order_m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(lambda_grid.len(), order_m + 1, |r, m| chebyshev_t(m, lambda_grid[r].into()).re)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresFit {
    pub coeffs: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual: f64,
}

/// Least-squares Chebyshev coefficients by Householder QR.
pub fn least_squares_fit(lambda_grid: &[f64], values: &[f64], order_m: usize) -> Result<LeastSquaresFit> {
    if values.len() != lambda_grid.len() {
        return Err(Error::LengthMismatch("values and grid differ in length".into()));
    }
    if order_m + 1 > lambda_grid.len() {
        return Err(invalid(format!("order {order_m} needs at least {} grid points", order_m + 1)));
    }
    let t = design_matrix(lambda_grid, order_m);
    let f = DVector::from_column_slice(values);
    let qr = t.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-13 * diag_max) {
        return Err(Error::RankDeficient);
    }
    let qtf = qr.q().transpose() * &f;
    let c = r.solve_upper_triangular(&qtf).ok_or(Error::RankDeficient)?;
    let residual = (&t * &c - f).norm();
    Ok(LeastSquaresFit { coeffs: c.iter().copied().collect(), residual })
}

/// Clenshaw summation of `sum c_m T_m(z)`.
pub fn evaluate_at(coeffs: &[f64], z: C64) -> C64 {
    let mut b1 = C64::new(0.0, 0.0);
    let mut b2 = C64::new(0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = z * b1 * 2.0 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    let c0 = coeffs.first().copied().unwrap_or(0.0);
    z * b1 - b2 + c0
}

/// The two values of `z + sqrt(z^2 - 1)`; their product is 1.
pub fn bernstein_branches(z: C64) -> (C64, C64) {
    let s = (z * z - 1.0).sqrt();
    (z + s, z - s)
}

pub fn bernstein_rho(z: C64) -> f64 {
    let (a, b) = bernstein_branches(z);
    a.norm().max(b.norm())
}

pub fn min_singular_value(t: &DMatrix<f64>) -> f64 {
    t.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Lower bounds on the smallest singular value of the equispaced design matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularValueBounds {
    pub tight: f64,
    pub relaxed: f64,
}

/// `None` when the oversampling condition `N >= 2M` fails.
pub fn min_singular_lower_bound(n: usize, m: usize) -> Option<SingularValueBounds> {
    if n < 2 * m {
        return None;
    }
    let (nf, mf) = (n as f64, m as f64);
    let tight = ((nf - mf * mf / 2.0) / (2.0 * mf + 1.0) - 27.0 * nf.sqrt() / (32.0 * std::f64::consts::PI)) / 25.0;
    let relaxed = 2.0 * nf / (125.0 * (2.0 * mf + 1.0));
    Some(SingularValueBounds { tight: tight.max(0.0).sqrt(), relaxed: relaxed.sqrt() })
}

pub fn is_equispaced(lambda_grid: &[f64]) -> bool {
    let n = lambda_grid.len();
    n >= 2 && lambda_grid.iter().enumerate().all(|(r, l)| (l - (-1.0 + 2.0 * r as f64 / (n - 1) as f64)).abs() < 1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasInputs {
    pub order_m: usize,
    /// Convention: the grid has N+1 points.
    pub n: usize,
    pub rho: f64,
    pub q_rho: f64,
    pub z: C64,
    pub min_sv: f64,
}

fn geometric(rho_z: f64, m: usize) -> f64 {
    if (rho_z - 1.0).abs() < 1e-14 {
        (m + 1) as f64
    } else {
        (1.0 - rho_z.powi(m as i32 + 1)) / (1.0 - rho_z)
    }
}

/// Bias bound; infinite when `rho <= rho_z` or `rho <= 1`.
pub fn bias_bound(b: &BiasInputs) -> f64 {
    let rz = bernstein_rho(b.z);
    if b.rho <= rz || b.rho <= 1.0 {
        return f64::INFINITY;
    }
    let q = rz / b.rho;
    let first = (b.n as f64 + 1.0).sqrt() / b.min_sv * b.rho.powi(-(b.order_m as i32)) * geometric(rz, b.order_m) / (b.rho - 1.0);
    let second = q.powi(b.order_m as i32 + 1) / (1.0 - q);
    2.0 * b.q_rho * (first + second)
}

/// The looser closed form of the bias bound.
pub fn bias_bound_relaxed(b: &BiasInputs) -> f64 {
    let rz = bernstein_rho(b.z);
    if b.rho <= rz || b.rho <= 1.0 {
        return f64::INFINITY;
    }
    let q = rz / b.rho;
    let m = b.order_m as f64;
    2.0 * b.q_rho * q.powi(b.order_m as i32) * ((m + 1.0) * (b.n as f64 + 1.0).sqrt() / b.min_sv + q / (1.0 - q))
}

/// Propagation of iid noise of size `sigma` through the fit to `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityBound {
    /// `sigma sqrt(sum_j sum_m |P_mj|^2 |T_m(z)|^2)` with `P` the pseudoinverse.
    pub coefficientwise: f64,
    /// Exact rms error `sigma ||w||`, `w_j = sum_m P_mj T_m(z)`.
    pub rms: f64,
    /// `sigma sqrt(N+1) sqrt(M+1) / min_sv * (1 - rho_z^{M+1}) / (1 - rho_z)`.
    pub analytic: f64,
}

pub fn stability_bound(t: &DMatrix<f64>, z: C64, sigma: f64) -> Result<StabilityBound> {
    let svd = t.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::RankDeficient);
    }
    let p = svd.pseudo_inverse(0.0).map_err(|_| Error::RankDeficient)?;
    let m1 = t.ncols();
    let tz: Vec<C64> = (0..m1).map(|m| chebyshev_t(m, z)).collect();
    let mut coefficientwise = 0.0;
    let mut rms = 0.0;
    for j in 0..t.nrows() {
        let mut w = C64::new(0.0, 0.0);
        for m in 0..m1 {
            coefficientwise += p[(m, j)].powi(2) * tz[m].norm_sqr();
            w += tz[m] * p[(m, j)];
        }
        rms += w.norm_sqr();
    }
    let analytic = sigma * (t.nrows() as f64).sqrt() * (m1 as f64).sqrt() / smin * geometric(bernstein_rho(z), m1 - 1);
    Ok(StabilityBound { coefficientwise: sigma * coefficientwise.sqrt(), rms: sigma * rms.sqrt(), analytic })
}

/// Fit, continue to `z`, and attach bounds. `bias` is `(rho, Q_rho)`.
pub fn extrapolate(lambda_grid: &[f64], values: &[f64], order_m: usize, z: C64, sigma: f64, bias: Option<(f64, f64)>) -> Result<ExtrapolationResult> {
    let fit = least_squares_fit(lambda_grid, values, order_m)?;
    let t = design_matrix(lambda_grid, order_m);
    let min_sv = min_singular_value(&t);
    let stab = stability_bound(&t, z, sigma)?;
    let err_bias = bias.map(|(rho, q_rho)| {
        bias_bound(&BiasInputs { order_m, n: lambda_grid.len() - 1, rho, q_rho, z, min_sv })
    });
    Ok(ExtrapolationResult {
        value_at_target: evaluate_at(&fit.coeffs, z),
        coeffs: fit.coeffs,
        order_m,
        err_bias,
        err_stability: stab.coefficientwise,
        min_sv,
        residual: fit.residual,
    })
}

/// Default scan of Bernstein parameters for bias reports.
pub fn default_rho_scan(z: C64) -> [f64; 3] {
    let rz = bernstein_rho(z);
    [1.5 * rz, 2.0 * rz, 4.0 * rz]
}

pub fn equispaced_grid(points: usize) -> Vec<f64> {
    let n = points.saturating_sub(1).max(1) as f64;
    (0..points).map(|r| -1.0 + 2.0 * r as f64 / n).collect()
}
