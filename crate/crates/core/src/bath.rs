//! Underdamped Brownian bath: spectral density, correlation functions,
//! the classical/quantum split with its Matsubara series, and spectra.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{composite_rule, integrate, integrate_tail, QuadratureConfig};
use crate::C64;
use std::f64::consts::PI;

/// Inverse temperature. Zero temperature is a separate variant because it
/// takes a different code path (integral form instead of a Matsubara series).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Beta::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathSpec {
    pub omega0: f64,
    pub gamma: f64,
    pub lam: f64,
    pub beta: Beta,
}

impl BathSpec {
    pub fn new(omega0: f64, gamma: f64, lam: f64, beta: Beta) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(omega0) || !ok(gamma) || !ok(lam) {
            return Err(invalid(format!("bath needs omega0, gamma, lam > 0 (got {omega0}, {gamma}, {lam})")));
        }
        if let Beta::Finite(b) = beta {
            if !ok(b) {
                return Err(invalid(format!("beta must be positive or infinite (got {b})")));
            }
        }
        if omega0 * omega0 - gamma * gamma / 4.0 <= 0.0 {
            return Err(invalid(format!("bath is not underdamped: omega0 = {omega0}, gamma = {gamma}")));
        }
        Ok(BathSpec { omega0, gamma, lam, beta })
    }

    /// Builds the bath from the dimensionless strength `alpha = lam^2 gamma / omega0^4`.
    pub fn from_alpha(omega0: f64, gamma: f64, alpha: f64, beta: Beta) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(invalid(format!("alpha must be positive (got {alpha})")));
        }
        BathSpec::new(omega0, gamma, (alpha * omega0.powi(4) / gamma).sqrt(), beta)
    }

    pub fn with_beta(&self, beta: Beta) -> Self {
        BathSpec { beta, ..*self }
    }

    /// Resonant frequency Omega.
    pub fn big_omega(&self) -> f64 {
        (self.omega0 * self.omega0 - self.gamma * self.gamma / 4.0).sqrt()
    }

    /// Resonant decay rate Gamma = gamma / 2.
    pub fn big_gamma(&self) -> f64 {
        self.gamma / 2.0
    }

    pub fn alpha(&self) -> f64 {
        self.lam * self.lam * self.gamma / self.omega0.powi(4)
    }

    fn lam2(&self) -> f64 {
        self.lam * self.lam
    }

    /// `coth(beta (Omega + i Gamma) / 2)`, or 1 at zero temperature.
    pub fn resonant_coth(&self) -> C64 {
        match self.beta {
            Beta::Infinite => C64::new(1.0, 0.0),
            Beta::Finite(b) => coth(C64::new(self.big_omega(), self.big_gamma()) * (b / 2.0)),
        }
    }
}

/// Complex hyperbolic cotangent, evaluated without overflow for large |Re z|.
pub fn coth(z: C64) -> C64 {
    if z.re < 0.0 {
        return -coth(-z);
    }
    let e = (-2.0 * z).exp();
    (1.0 + e) / (1.0 - e)
}

pub fn brownian_spectral_density(w: f64, bath: &BathSpec) -> f64 {
    let d = w * w - bath.omega0 * bath.omega0;
    bath.gamma * bath.lam2() * w / (d * d + bath.gamma * bath.gamma * w * w)
}

/// `J(w) coth(beta w / 2)`, finite as w -> 0.
fn j_coth(w: f64, bath: &BathSpec) -> f64 {
    let j = brownian_spectral_density(w, bath);
    match bath.beta {
        Beta::Infinite => j,
        Beta::Finite(b) => j / (0.5 * b * w).tanh(),
    }
}

/// Full bath correlation by direct quadrature of the spectral integral.
pub fn bath_correlation(t: f64, bath: &BathSpec, quad: &QuadratureConfig) -> Result<C64> {
    let wmax = quad.omega_max_factor * bath.omega0;
    let tol = 0.5 * quad.abs_tol;
    let re_main = integrate(|w| j_coth(w, bath) * (w * t).cos() / PI, 0.0, wmax, tol, quad.max_subdivisions)?;
    let im_main = if t == 0.0 {
        0.0
    } else {
        -integrate(|w| brownian_spectral_density(w, bath) * (w * t).sin() / PI, 0.0, wmax, tol, quad.max_subdivisions)?
            .value
    };
    let (mut re, mut im) = (re_main.value, im_main);
    if quad.include_tail {
        re += integrate_tail(|w| j_coth(w, bath) * (w * t).cos() / PI, wmax, tol, quad.max_subdivisions)?.value;
        if t != 0.0 {
            im -= integrate_tail(|w| brownian_spectral_density(w, bath) * (w * t).sin() / PI, wmax, tol, quad.max_subdivisions)?
                .value;
        }
    }
    Ok(C64::new(re, im))
}

fn matsubara_weight(x: f64, bath: &BathSpec) -> f64 {
    let s = x * x + bath.omega0 * bath.omega0;
    x / (s * s - bath.gamma * bath.gamma * x * x)
}

/// Zero-temperature Matsubara contribution M(t) (real and negative).
pub fn matsubara_zero_t(t: f64, bath: &BathSpec, quad: &QuadratureConfig) -> Result<f64> {
    let t = t.abs();
    let pref = -bath.lam2() * bath.gamma / PI;
    // Absolute tolerance on the bare integral, so that the result meets abs_tol.
    let tol = 0.5 * quad.abs_tol / (bath.lam2() * bath.gamma / PI);
    let xmax = quad.omega_max_factor * bath.omega0;
    let mut v = integrate(|x| matsubara_weight(x, bath) * (-x * t).exp(), 0.0, xmax, tol, quad.max_subdivisions)?.value;
    if (xmax * t) < 700.0 {
        v += integrate_tail(|x| matsubara_weight(x, bath) * (-x * t).exp(), xmax, tol, quad.max_subdivisions)?.value;
    }
    Ok(pref * v)
}

/// Classical (time-symmetric) and quantum parts of the bath correlation.
#[derive(Clone, Debug)]
pub struct CorrelationSplit {
    pub bath: BathSpec,
    /// Matsubara terms kept in the finite-temperature series (0 at zero temperature).
    pub k_matsubara: usize,
    pub quad: QuadratureConfig,
    mats: Vec<(f64, f64)>,
}

impl CorrelationSplit {
    pub fn c_q(&self, t: f64) -> C64 {
        let b = &self.bath;
        let w = b.big_omega();
        C64::new(-b.big_gamma() * t.abs(), -w * t).exp() * (b.lam2() / (2.0 * w))
    }

    /// Resonant part of the classical correlation,
    /// `(lam^2/2 Omega) [(R_B - 1) cos(Omega t) - I_B sin(Omega |t|)] e^{-Gamma |t|}`.
    pub fn resonant_class(&self, t: f64) -> f64 {
        let b = &self.bath;
        let w = b.big_omega();
        let c = b.resonant_coth();
        let ta = t.abs();
        b.lam2() / (2.0 * w) * ((c.re - 1.0) * (w * ta).cos() - c.im * (w * ta).sin()) * (-b.big_gamma() * ta).exp()
    }

    /// The non-resonant (Matsubara) part: a truncated series at finite
    /// temperature, the integral M(t) at zero temperature.
    pub fn matsubara_part(&self, t: f64) -> Result<f64> {
        match self.bath.beta {
            Beta::Infinite => matsubara_zero_t(t, &self.bath, &self.quad),
            Beta::Finite(_) => {
                let ta = t.abs();
                Ok(self.mats.iter().map(|&(c, nu)| c * (-nu * ta).exp()).sum())
            }
        }
    }

    pub fn c_class(&self, t: f64) -> Result<C64> {
        Ok(C64::new(self.resonant_class(t) + self.matsubara_part(t)?, 0.0))
    }

    /// Real-valued classical correlation (the imaginary part vanishes identically).
    pub fn c_class_re(&self, t: f64) -> Result<f64> {
        Ok(self.resonant_class(t) + self.matsubara_part(t)?)
    }

    /// `(amplitude, rate)` of every retained Matsubara exponential.
    pub fn matsubara_terms(&self) -> &[(f64, f64)] {
        &self.mats
    }
}

/// Amplitude of the k-th Matsubara exponential, `(2i/beta) J(i nu_k)`, which is real.
fn matsubara_term(k: usize, beta: f64, bath: &BathSpec) -> (f64, f64) {
    let nu = 2.0 * PI * k as f64 / beta;
    let s = nu * nu + bath.omega0 * bath.omega0;
    let amp = -2.0 / beta * bath.gamma * bath.lam2() * nu / (s * s - bath.gamma * bath.gamma * nu * nu);
    (amp, nu)
}

/// Default series length: the smallest k with |J(i nu_k)/beta| below
/// `1e-8 |c_class(0)|`, capped at 100000 terms.
pub fn default_k_matsubara(bath: &BathSpec) -> usize {
    let Some(beta) = bath.beta.finite() else { return 0 };
    const CAP: usize = 100_000;
    let res0 = {
        let c = bath.resonant_coth();
        bath.lam2() / (2.0 * bath.big_omega()) * (c.re - 1.0)
    };
    let reference: f64 = res0 + (1..=CAP).map(|k| matsubara_term(k, beta, bath).0).sum::<f64>();
    let thresh = 1e-8 * reference.abs();
    for k in 1..=CAP {
        // |J(i nu)/beta| is half the term amplitude.
        if 0.5 * matsubara_term(k, beta, bath).0.abs() < thresh {
            return k;
        }
    }
    CAP
}

/// Builds the classical/quantum split. `k_mats = None` selects the default truncation.
pub fn brownian_correlation_split(bath: &BathSpec, k_mats: Option<usize>) -> CorrelationSplit {
    brownian_correlation_split_with(bath, k_mats, QuadratureConfig::default())
}

pub fn brownian_correlation_split_with(bath: &BathSpec, k_mats: Option<usize>, quad: QuadratureConfig) -> CorrelationSplit {
    let k = match bath.beta {
        Beta::Infinite => 0,
        Beta::Finite(_) => k_mats.unwrap_or_else(|| default_k_matsubara(bath)),
    };
    let mats = match bath.beta {
        Beta::Infinite => Vec::new(),
        Beta::Finite(b) => (1..=k).map(|j| matsubara_term(j, b, bath)).collect(),
    };
    CorrelationSplit { bath: *bath, k_matsubara: k, quad, mats }
}

/// Spectrum of the quantum part, `(lam^2 Gamma/Omega) / ((Omega + w)^2 + Gamma^2)`.
pub fn quantum_spectrum(w: f64, bath: &BathSpec) -> f64 {
    let om = bath.big_omega();
    let g = bath.big_gamma();
    bath.lam2() * g / om / ((om + w) * (om + w) + g * g)
}

/// Spectrum of the full bath correlation (Fourier convention `e^{-i w t}`).
pub fn bath_spectrum(w: f64, bath: &BathSpec) -> Result<f64> {
    let beta = bath.beta.finite().ok_or_else(|| invalid("bath spectrum needs a finite beta"))?;
    if w == 0.0 {
        return Ok(2.0 / beta * bath.gamma * bath.lam2() / bath.omega0.powi(4));
    }
    let x = 0.5 * beta * w.abs();
    let j = brownian_spectral_density(w.abs(), bath);
    // coth(x) - 1 = 2 / (e^{2x} - 1)
    let thermal = 2.0 / (2.0 * x).exp_m1();
    Ok(if w > 0.0 { j * thermal } else { j * (2.0 + thermal) })
}

/// Classical spectrum `S_B - S_Q`; real and even in `w`.
pub fn classical_spectrum(w: f64, bath: &BathSpec) -> Result<f64> {
    Ok(bath_spectrum(w, bath)? - quantum_spectrum(w, bath))
}

/// Closed-form zero of `S_class[0]` in beta: `beta* omega0 = 2 sqrt(4 - (gamma/omega0)^2)`.
pub fn crossover_beta_formula(bath: &BathSpec) -> f64 {
    let r = bath.gamma / bath.omega0;
    2.0 * (4.0 - r * r).sqrt() / bath.omega0
}

/// Root of `S_class[0](beta)` by bisection.
pub fn crossover_beta_bisection(bath: &BathSpec) -> Result<f64> {
    let f = |b: f64| classical_spectrum(0.0, &bath.with_beta(Beta::Finite(b)));
    let mut lo = 1e-3 / bath.omega0;
    let mut hi = 1e3 / bath.omega0;
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Inconsistent("S_class[0] does not change sign in the search bracket".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)?.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Crossover inverse temperature, cross-checked against the bisection root.
pub fn crossover_beta(bath: &BathSpec) -> Result<f64> {
    let closed = crossover_beta_formula(bath);
    let root = crossover_beta_bisection(bath)?;
    if ((root - closed) / closed).abs() > 1e-6 {
        return Err(Error::Inconsistent(format!("crossover root {root} differs from closed form {closed}")));
    }
    Ok(closed)
}

/// Cosine-series coefficients of a classical correlation over `[-T, T]`.
#[derive(Clone, Debug)]
pub struct FieldCoefficients {
    pub coeffs: Vec<f64>,
    pub horizon_t: f64,
    /// Max |c_class(t) - (c_0 + 2 sum c_n cos(n pi t / T))| over a check grid on [0, T].
    pub max_residual: f64,
}

/// `c_n = (1/2T) int_{-T}^{T} cos(n pi tau / T) c_class(tau) dtau` for n = 0..=n_xi,
/// evaluated with a composite Gauss-Legendre rule on [0, T] (c_class is even).
pub fn field_coefficients<F>(c_class: F, horizon_t: f64, n_xi: usize) -> Result<FieldCoefficients>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(horizon_t > 0.0) || n_xi < 1 {
        return Err(invalid("field coefficients need horizon_T > 0 and n_xi >= 1"));
    }
    let panels = n_xi.max(64);
    let (nodes, weights) = composite_rule(0.0, horizon_t, panels, 16);
    let mut coeffs = vec![0.0; n_xi + 1];
    let theta = PI / horizon_t;
    for (x, w) in nodes.iter().zip(&weights) {
        let fw = c_class(*x)? * w / horizon_t;
        let step = C64::from_polar(1.0, theta * x);
        let mut z = C64::new(1.0, 0.0);
        for c in coeffs.iter_mut() {
            *c += fw * z.re;
            z *= step;
        }
    }
    let n_check = (2 * n_xi + 1).clamp(201, 4001);
    let mut max_residual: f64 = 0.0;
    for i in 0..n_check {
        let t = horizon_t * i as f64 / (n_check - 1) as f64;
        let r = reconstruct_series(&coeffs, horizon_t, t);
        max_residual = max_residual.max((c_class(t)? - r).abs());
    }
    Ok(FieldCoefficients { coeffs, horizon_t, max_residual })
}

/// `c_0 + 2 sum_{n>=1} c_n cos(n pi t / T)`.
pub fn reconstruct_series(coeffs: &[f64], horizon_t: f64, t: f64) -> f64 {
    let step = C64::from_polar(1.0, PI * t / horizon_t);
    let mut z = step;
    let mut s = coeffs.first().copied().unwrap_or(0.0);
    for c in coeffs.iter().skip(1) {
        s += 2.0 * c * z.re;
        z *= step;
    }
    s
}

/// Field coefficients of the bath's classical correlation.
pub fn bath_field_coefficients(bath: &BathSpec, horizon_t: f64, n_xi: usize) -> Result<FieldCoefficients> {
    let split = brownian_correlation_split(bath, None);
    field_coefficients(|t| split.c_class_re(t), horizon_t, n_xi)
}
