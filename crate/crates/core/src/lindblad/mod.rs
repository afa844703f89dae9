//! System plus pseudomode dynamics under the (possibly complex-parameter)
//! Lindblad generator.

mod basis;
mod generator;
mod ode;

pub use basis::ModeBasis;
pub use generator::{build_generator, Drive, Driven, LindbladGenerator, Truncation};
pub use ode::{integrate, IntegrationStats, IntegratorConfig, OdeSystem};

use crate::error::{Error, Result};
use crate::params::{Mode, PseudomodeSet};
use crate::C64;
use generator::Parts;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// 2x2 complex matrix, row-major.
pub type Mat2 = [C64; 4];

pub const SIGMA_X: Mat2 = [ZERO, ONE, ONE, ZERO];
pub const SIGMA_Y: Mat2 = [ZERO, C64::new(0.0, -1.0), I, ZERO];
pub const SIGMA_Z: Mat2 = [ONE, ZERO, ZERO, C64::new(-1.0, 0.0)];
/// `|up><up|`, the +1 eigenstate of sigma_z.
pub const SPIN_UP: Mat2 = [ONE, ZERO, ZERO, ZERO];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingOp {
    SigmaX,
    SigmaZ,
    Custom(Mat2),
}

impl CouplingOp {
    pub fn matrix(&self) -> Mat2 {
        match self {
            CouplingOp::SigmaX => SIGMA_X,
            CouplingOp::SigmaZ => SIGMA_Z,
            CouplingOp::Custom(m) => *m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    SigmaX,
    SigmaY,
    SigmaZ,
    Custom(Mat2),
}

impl Observable {
    pub const PAULI: [Observable; 3] = [Observable::SigmaX, Observable::SigmaY, Observable::SigmaZ];

    pub fn matrix(&self) -> Mat2 {
        match self {
            Observable::SigmaX => SIGMA_X,
            Observable::SigmaY => SIGMA_Y,
            Observable::SigmaZ => SIGMA_Z,
            Observable::Custom(m) => *m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::SigmaX => "sx",
            Observable::SigmaY => "sy",
            Observable::SigmaZ => "sz",
            Observable::Custom(_) => "custom",
        }
    }
}

/// Two-level system `H_S = (omega_s/2) sigma_z + (delta/2) sigma_x + (omega_y/2) sigma_y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    pub omega_s: f64,
    pub delta: f64,
    /// Used by y-axis gates; zero otherwise.
    pub omega_y: f64,
    pub coupling: CouplingOp,
    pub initial_state: Mat2,
}

impl SystemSpec {
    pub fn new(omega_s: f64, delta: f64, coupling: CouplingOp) -> Self {
        SystemSpec { omega_s, delta, omega_y: 0.0, coupling, initial_state: SPIN_UP }
    }

    pub fn hamiltonian(&self) -> Mat2 {
        let mut h = [ZERO; 4];
        for i in 0..4 {
            h[i] = SIGMA_Z[i] * (self.omega_s / 2.0) + SIGMA_X[i] * (self.delta / 2.0) + SIGMA_Y[i] * (self.omega_y / 2.0);
        }
        h
    }

    pub fn coupling_matrix(&self) -> Result<Mat2> {
        let s = self.coupling.matrix();
        if !is_hermitian(&s, 1e-12) {
            return Err(Error::NonHermitianCoupling);
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.coupling_matrix()?;
        let r = &self.initial_state;
        let tr = r[0] + r[3];
        if !is_hermitian(r, 1e-12) || (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidParameter("initial state must be Hermitian with unit trace".into()));
        }
        let det = (r[0] * r[3] - r[1] * r[2]).re;
        if r[0].re < -1e-12 || r[3].re < -1e-12 || det < -1e-12 {
            return Err(Error::InvalidParameter("initial state must be positive semidefinite".into()));
        }
        Ok(())
    }
}

fn is_hermitian(m: &Mat2, tol: f64) -> bool {
    m[0].im.abs() <= tol && m[3].im.abs() <= tol && (m[1] - m[2].conj()).norm() <= tol
}

/// State of system plus modes; `data` is row-major with index `s * mode_dim + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    sys_dim: usize,
    mode_dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub(crate) fn from_parts(sys_dim: usize, mode_dim: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), (sys_dim * mode_dim).pow(2));
        DensityMatrix { sys_dim, mode_dim, data }
    }

    pub fn dim(&self) -> usize {
        self.sys_dim * self.mode_dim
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn mode_dim(&self) -> usize {
        self.mode_dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim() + c]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut e: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                e = e.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        e
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |r, c| (self.get(r, c) + self.get(c, r).conj()) * 0.5);
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scale_add(&self, a: C64, other: &DensityMatrix, b: C64) -> DensityMatrix {
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        DensityMatrix { data, ..*self }
    }
}

/// Partial trace over all modes.
pub fn reduce(rho: &DensityMatrix) -> Mat2 {
    reduce_raw(&rho.data, rho.sys_dim, rho.mode_dim)
}

fn reduce_raw(data: &[C64], ds: usize, n_ms: usize) -> Mat2 {
    assert_eq!(ds, 2, "reduction to a 2x2 state needs a two-level system");
    let d = ds * n_ms;
    let mut out = [ZERO; 4];
    for s in 0..2 {
        for s2 in 0..2 {
            out[s * 2 + s2] = (0..n_ms).map(|m| data[(s * n_ms + m) * d + s2 * n_ms + m]).sum();
        }
    }
    out
}

pub fn expectation(rho_s: &Mat2, obs: &Observable) -> C64 {
    let o = obs.matrix();
    o[0] * rho_s[0] + o[1] * rho_s[2] + o[2] * rho_s[1] + o[3] * rho_s[3]
}

/// Initial product state of system and mode reference states.
pub fn initial_state(gen: &LindbladGenerator, sys: &SystemSpec, set: &PseudomodeSet) -> Result<DensityMatrix> {
    gen.product_state(&sys.initial_state, set)
}

/// Propagates `rho0` and hands every output state to `observe`.
pub fn propagate_observe<O>(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    drive: Option<Drive<'_>>,
    t_grid: &[f64],
    opts: &IntegratorConfig,
    mut observe: O,
) -> Result<IntegrationStats>
where
    O: FnMut(usize, f64, &DensityMatrix) -> Result<()>,
{
    if rho0.dim() != gen.dim() {
        return Err(Error::LengthMismatch(format!("state dimension {} vs generator {}", rho0.dim(), gen.dim())));
    }
    let t0 = t_grid.first().copied().unwrap_or(0.0);
    let sys = Driven { generator: gen, drive };
    let (ds, nm) = (rho0.sys_dim, rho0.mode_dim);
    integrate(&sys, rho0.data.clone(), t0, t_grid, opts, |k, t, y| {
        observe(k, t, &DensityMatrix::from_parts(ds, nm, y.to_vec()))
    })
}

pub fn propagate(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    drive: Option<Drive<'_>>,
    t_grid: &[f64],
    opts: &IntegratorConfig,
) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(t_grid.len());
    propagate_observe(gen, rho0, drive, t_grid, opts, |_, _, r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Reduced-state expectations `[t][obs]` along a propagation.
pub fn observe_system(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    drive: Option<Drive<'_>>,
    t_grid: &[f64],
    obs: &[Observable],
    opts: &IntegratorConfig,
) -> Result<Vec<Vec<C64>>> {
    let t0 = t_grid.first().copied().unwrap_or(0.0);
    let sys = Driven { generator: gen, drive };
    let (ds, nm) = (rho0.sys_dim, rho0.mode_dim);
    let mut out = Vec::with_capacity(t_grid.len());
    integrate(&sys, rho0.data.clone(), t0, t_grid, opts, |_, _, y| {
        let r = reduce_raw(y, ds, nm);
        out.push(obs.iter().map(|o| expectation(&r, o)).collect());
        Ok(())
    })?;
    Ok(out)
}

/// Closed-form correlation of a set: modes plus the field's cosine series.
pub fn pm_correlation_analytic(set: &PseudomodeSet, t: f64) -> C64 {
    let modes: C64 = set.modes.iter().map(|m| m.correlation(t)).sum();
    modes + set.field.as_ref().map_or(ZERO, |f| f.correlation(t))
}

/// Fock cutoff adequate for the correlation of one mode: exact (2) at zero
/// occupation, else enough levels for the thermal weights to fall below 1e-10.
fn correlation_cutoff(mode: &Mode) -> Result<usize> {
    if mode.nbar == ZERO {
        return Ok(2);
    }
    let r = (mode.nbar / (mode.nbar + 1.0)).norm();
    if !(r < 1.0) {
        return Err(Error::InvalidParameter(format!("occupation {} has no normalizable reference state", mode.nbar)));
    }
    let f = (1e-10f64.ln() / r.ln()).ceil() as usize + 2;
    if f > 400 {
        return Err(Error::DimensionCap { dim: f, cap: 400 });
    }
    Ok(f.max(2))
}

/// Correlation `Tr[X e^{Lt}(X rho_eq)]` from propagation of the mode-only
/// generator. Modes are independent in the reference state, so cross terms
/// vanish and each mode is propagated on its own with unit coupling and
/// weighted by its `g2`.
pub fn pm_correlation_dynamic(set: &PseudomodeSet, t_grid: &[f64], opts: &IntegratorConfig) -> Result<Vec<C64>> {
    if set.field.is_some() {
        return Err(Error::InvalidParameter("dynamic correlation is defined for modes only".into()));
    }
    let mut total = vec![ZERO; t_grid.len()];
    for mode in &set.modes {
        let f = correlation_cutoff(mode)?;
        let single = PseudomodeSet::new("", vec![Mode { fock_dim: f, g2: ONE, ..mode.clone() }], None);
        let gen = LindbladGenerator::assemble(
            Parts { sys_dim: 1, h_sys: &[ZERO], coupling: &[ONE], couple_modes: false },
            &single,
            &Truncation { max_excitations: None, dim_cap: usize::MAX },
        )?;
        let eq = gen.product_state(&[ONE], &single)?;
        let x = |m: usize, n: usize| -> f64 {
            if n == m + 1 {
                (n as f64).sqrt()
            } else if m == n + 1 {
                (m as f64).sqrt()
            } else {
                0.0
            }
        };
        let mut sigma = vec![ZERO; f * f];
        for r in 0..f {
            for c in 0..f {
                sigma[r * f + c] = (0..f).map(|k| eq.get(k, c) * x(r, k)).sum();
            }
        }
        let sigma = DensityMatrix::from_parts(1, f, sigma);
        let t0 = t_grid.first().copied().unwrap_or(0.0);
        let shift: Vec<f64> = t_grid.iter().map(|t| t - t0).collect();
        propagate_observe(&gen, &sigma, None, &shift, opts, |k, _, s| {
            let tr: C64 = (0..f).flat_map(|r| (0..f).map(move |c| (r, c))).map(|(r, c)| x(c, r) * s.get(r, c)).sum();
            total[k] += mode.g2 * tr;
            Ok(())
        })?;
    }
    Ok(total)
}

/// Pointwise mean and standard error over trajectories.
pub fn ensemble_average(samples: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = samples.first() else {
        return Err(Error::InvalidParameter("ensemble needs at least one trajectory".into()));
    };
    let n = samples.len() as f64;
    let len = first.len();
    if samples.iter().any(|s| s.len() != len) {
        return Err(Error::LengthMismatch("trajectories differ in length".into()));
    }
    let mut mean = vec![0.0; len];
    let mut err = vec![0.0; len];
    for k in 0..len {
        let m = samples.iter().map(|s| s[k]).sum::<f64>() / n;
        mean[k] = m;
        if samples.len() > 1 {
            let var = samples.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
            err[k] = (var / n).sqrt();
        }
    }
    Ok((mean, err))
}

/// Closed-form `<sigma_z>(t)` of the isolated two-level system started in `|up>`.
pub fn rabi_sigma_z(omega_s: f64, delta: f64, t: f64) -> f64 {
    let w = (omega_s * omega_s + delta * delta).sqrt();
    if w == 0.0 {
        return 1.0;
    }
    1.0 - 2.0 * (delta / w).powi(2) * (w * t / 2.0).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;

    fn grid(end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| end * i as f64 / n as f64).collect()
    }

    #[test]
    fn isolated_rabi() {
        let sys = SystemSpec::new(1.0, 1.0, CouplingOp::SigmaX);
        let set = PseudomodeSet::default();
        let gen = build_generator(&sys, &set, &Truncation::default()).unwrap();
        let rho0 = initial_state(&gen, &sys, &set).unwrap();
        let ts = grid(10.0, 50);
        // Global error accumulates over several periods; tighten the local tolerance.
        let tight = IntegratorConfig { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let out = observe_system(&gen, &rho0, None, &ts, &[Observable::SigmaZ], &tight).unwrap();
        for (t, v) in ts.iter().zip(&out) {
            assert!((v[0].re - rabi_sigma_z(1.0, 1.0, *t)).abs() < 1e-8, "t={t} {} {}", v[0].re, rabi_sigma_z(1.0, 1.0, *t));
        }
    }

    #[test]
    fn number_decay_of_uncoupled_mode() {
        let sys = SystemSpec::new(0.0, 0.0, CouplingOp::SigmaX);
        let set = PseudomodeSet::new("", vec![Mode::real(1.0, 0.0, 0.3, 0.0, 5)], None);
        let gen = build_generator(&sys, &set, &Truncation::default()).unwrap();
        let d = gen.dim();
        let mut data = vec![ZERO; d * d];
        // |up> (x) |2>
        data[2 * d + 2] = ONE;
        let rho0 = DensityMatrix::from_parts(2, 5, data);
        let ts = grid(4.0, 8);
        let states = propagate(&gen, &rho0, None, &ts, &IntegratorConfig::default()).unwrap();
        for (t, r) in ts.iter().zip(&states) {
            let n: f64 = (0..5).map(|m| m as f64 * r.get(m, m).re).sum();
            assert!((n - 2.0 * (-0.6 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn reduce_product_state() {
        let sys = SystemSpec::new(0.3, 0.1, CouplingOp::SigmaZ);
        let set = PseudomodeSet::new("", vec![Mode::real(1.0, 0.1, 0.3, 0.0, 3), Mode::real(0.5, 0.1, 0.3, 0.7, 4)], None);
        let gen = build_generator(&sys, &set, &Truncation::default()).unwrap();
        let s0 = [C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)];
        let rho = gen.product_state(&s0, &set).unwrap();
        let r = reduce(&rho);
        for i in 0..4 {
            assert!((r[i] - s0[i]).norm() < 1e-14);
        }
        assert!((rho.trace() - ONE).norm() < 1e-14);
    }

    #[test]
    fn expectation_values() {
        assert_eq!(expectation(&SPIN_UP, &Observable::SigmaZ), ONE);
        let mixed = [C64::new(0.5, 0.0), ZERO, ZERO, C64::new(0.5, 0.0)];
        for o in Observable::PAULI {
            assert_eq!(expectation(&mixed, &o), ZERO);
        }
    }

    #[test]
    fn generator_preserves_trace() {
        let sys = SystemSpec::new(0.4, 0.7, CouplingOp::SigmaX);
        let set = PseudomodeSet::new("", vec![Mode::real(1.0, 0.2, 0.3, 0.4, 3), Mode::real(0.0, 0.05, 0.6, 0.0, 2)], None);
        let gen = build_generator(&sys, &set, &Truncation::default()).unwrap();
        let l = gen.superoperator_matrix(C64::new(0.3, 0.0)).unwrap();
        let d = gen.dim();
        for col in 0..d * d {
            let tr: C64 = (0..d).map(|i| l[(i * d + i, col)]).sum();
            assert!(tr.norm() < 1e-12);
        }
    }

    #[test]
    fn superoperator_matches_apply() {
        let sys = SystemSpec::new(0.4, 0.7, CouplingOp::SigmaZ);
        let set = PseudomodeSet::new("", vec![Mode::new(C64::new(1.0, 0.2), C64::new(0.2, -0.1), C64::new(0.3, 0.4), C64::new(0.1, 0.1), 3)], None);
        let gen = build_generator(&sys, &set, &Truncation::default()).unwrap();
        let d = gen.dim();
        let l = gen.superoperator_matrix(C64::new(0.0, 0.5)).unwrap();
        let x: Vec<C64> = (0..d * d).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut y = vec![ZERO; d * d];
        gen.apply(&x, C64::new(0.0, 0.5), &mut y);
        let yv = &l * nalgebra::DVector::from_vec(x);
        for i in 0..d * d {
            assert!((y[i] - yv[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn dynamic_correlation_single_mode() {
        let set = PseudomodeSet::new("", vec![Mode::real(1.0, 0.04, 0.3, 0.0, 6)], None);
        let ts = grid(10.0, 100);
        let dynamic = pm_correlation_dynamic(&set, &ts, &IntegratorConfig::default()).unwrap();
        for (t, c) in ts.iter().zip(&dynamic) {
            assert!((c - pm_correlation_analytic(&set, *t)).norm() < 1e-6);
        }
    }

    #[test]
    fn dynamic_correlation_complex_rate_and_occupation() {
        let set = PseudomodeSet::new(
            "",
            vec![
                Mode::new(ZERO, C64::new(-0.1, 0.0), C64::new(0.3, -0.5), ZERO, 2),
                Mode::new(C64::new(1.0, 0.0), C64::new(0.05, 0.02), C64::new(0.2, 0.1), C64::new(0.4, 0.1), 2),
            ],
            None,
        );
        let ts = grid(10.0, 50);
        let dynamic = pm_correlation_dynamic(&set, &ts, &IntegratorConfig::default()).unwrap();
        assert!((dynamic[0] - (C64::new(-0.1, 0.0) + C64::new(0.05, 0.02) * C64::new(1.8, 0.2))).norm() < 1e-8);
        for (t, c) in ts.iter().zip(&dynamic) {
            assert!((c - pm_correlation_analytic(&set, *t)).norm() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn dimension_cap() {
        let sys = SystemSpec::new(1.0, 0.0, CouplingOp::SigmaX);
        let set = PseudomodeSet::new("", vec![Mode::real(1.0, 0.1, 0.1, 0.0, 50); 3], None);
        let e = build_generator(&sys, &set, &Truncation::default()).unwrap_err();
        assert!(matches!(e, Error::DimensionCap { .. }));
        let custom = SystemSpec::new(1.0, 0.0, CouplingOp::Custom([ZERO, ONE, ZERO, ZERO]));
        assert!(matches!(build_generator(&custom, &PseudomodeSet::default(), &Truncation::default()), Err(Error::NonHermitianCoupling)));
    }

    #[test]
    fn ensemble_statistics() {
        let (m, e) = ensemble_average(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!((m, e), (vec![1.0, 2.0], vec![0.0, 0.0]));
        let (m, e) = ensemble_average(&[vec![1.0, 3.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!((m, e), (vec![1.0, 3.0], vec![0.0, 0.0]));
    }
}
