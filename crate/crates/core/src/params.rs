//! Pseudomode parameter sets, the Xi regularization map, antimodes,
//! restructuring, and the canonical Brownian mappings.

use crate::bath::{bath_field_coefficients, brownian_correlation_split, Beta, BathSpec, FieldCoefficients};
use crate::error::{invalid, Result};
use crate::expfit::{fit_matsubara_modes, ExpFit, ExpFitConfig};
use crate::field::FieldSpec;
use crate::C64;
use serde::{Deserialize, Serialize};

/// The critical point where the regularization is undone: Xi(Lambda_c) = i.
pub const LAMBDA_C: C64 = C64::new(-1.0, 2.0);

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: C64,
    /// Coupling squared. The Hamiltonian uses its principal square root.
    pub g2: C64,
    pub gamma: C64,
    pub nbar: C64,
    pub fock_dim: usize,
}

impl Mode {
    pub fn new(omega: C64, g2: C64, gamma: C64, nbar: C64, fock_dim: usize) -> Self {
        Mode { omega, g2, gamma, nbar, fock_dim }
    }

    /// Real-parameter mode.
    pub fn real(omega: f64, g2: f64, gamma: f64, nbar: f64, fock_dim: usize) -> Self {
        Mode::new(omega.into(), g2.into(), gamma.into(), nbar.into(), fock_dim)
    }

    pub fn is_physical(&self) -> bool {
        [self.omega, self.g2, self.gamma, self.nbar].iter().all(|z| z.im == 0.0 && z.re >= 0.0)
    }

    /// `g2 [(n+1) e^{-i Omega t} + n e^{i Omega t}] e^{-Gamma |t|}`.
    pub fn correlation(&self, t: f64) -> C64 {
        let e = (-I * self.omega * t).exp();
        let ei = (I * self.omega * t).exp();
        self.g2 * ((self.nbar + 1.0) * e + self.nbar * ei) * (-self.gamma * t.abs()).exp()
    }
}

/// A field attached to a set, realized as `xi_R + weight * xi_I`.
/// Unregularized fields have weight `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetField {
    pub spec: FieldSpec,
    pub weight: C64,
}

impl SetField {
    pub fn new(spec: FieldSpec) -> Self {
        SetField { spec, weight: I }
    }

    pub fn correlation(&self, t: f64) -> C64 {
        self.weight * self.weight * self.spec.imag_correlation(t) + self.spec.real_correlation(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct PseudomodeSet {
    pub label: String,
    pub modes: Vec<Mode>,
    pub field: Option<SetField>,
}

impl PseudomodeSet {
    pub fn new(label: impl Into<String>, modes: Vec<Mode>, field: Option<FieldSpec>) -> Self {
        PseudomodeSet { label: label.into(), modes, field: field.map(SetField::new) }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("set serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| crate::Error::Parse(e.to_string()))
    }

    /// Drops pairs of modes that are exact antimodes of each other: their
    /// correlations cancel identically.
    pub fn prune_cancelling_pairs(&self) -> PseudomodeSet {
        let mut keep = vec![true; self.modes.len()];
        for i in 0..self.modes.len() {
            if !keep[i] {
                continue;
            }
            for j in i + 1..self.modes.len() {
                let (a, b) = (&self.modes[i], &self.modes[j]);
                if keep[j] && a.omega == b.omega && a.gamma == b.gamma && a.nbar == b.nbar && a.g2 == -b.g2 {
                    keep[i] = false;
                    keep[j] = false;
                    break;
                }
            }
        }
        let modes = self.modes.iter().zip(&keep).filter(|(_, k)| **k).map(|(m, _)| m.clone()).collect();
        PseudomodeSet { label: self.label.clone(), modes, field: self.field.clone() }
    }
}

pub fn xi_map(lambda: C64) -> C64 {
    (lambda + 1.0) / 2.0
}

fn f_lambda(x: f64, xi2: C64) -> C64 {
    if x >= 0.0 {
        C64::new(x, 0.0)
    } else {
        xi2 * x.abs()
    }
}

/// `Xi_j(Lambda) = F(Re eta) + Xi(Lambda) F(Im eta)` with
/// `F(x) = x` for `x >= 0` and `Xi^2(Lambda) |x|` otherwise.
pub fn regularize_param(eta: C64, lambda: C64) -> C64 {
    let xi = xi_map(lambda);
    let xi2 = xi * xi;
    f_lambda(eta.re, xi2) + xi * f_lambda(eta.im, xi2)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModeMask {
    All,
    Indices(Vec<usize>),
}

/// Which entries of a set are treated as unphysical and regularized.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSelector {
    pub modes: ModeMask,
    pub omega: bool,
    pub g2: bool,
    pub gamma: bool,
    pub nbar: bool,
    pub field: bool,
}

impl ParamSelector {
    pub fn all() -> Self {
        ParamSelector { modes: ModeMask::All, omega: true, g2: true, gamma: true, nbar: true, field: true }
    }

    pub fn none() -> Self {
        ParamSelector { modes: ModeMask::Indices(vec![]), omega: false, g2: false, gamma: false, nbar: false, field: false }
    }

    fn includes(&self, k: usize) -> bool {
        match &self.modes {
            ModeMask::All => true,
            ModeMask::Indices(v) => v.contains(&k),
        }
    }
}

/// Physically regularized set at `lambda`. Field coefficients are mapped
/// through F, which amounts to weighting the imaginary component by Xi(Lambda).
pub fn regularize_set(set: &PseudomodeSet, lambda: C64, which: &ParamSelector) -> PseudomodeSet {
    let mut out = set.clone();
    for (k, m) in out.modes.iter_mut().enumerate() {
        if !which.includes(k) {
            continue;
        }
        if which.omega {
            m.omega = regularize_param(m.omega, lambda);
        }
        if which.g2 {
            m.g2 = regularize_param(m.g2, lambda);
        }
        if which.gamma {
            m.gamma = regularize_param(m.gamma, lambda);
        }
        if which.nbar {
            m.nbar = regularize_param(m.nbar, lambda);
        }
    }
    if which.field {
        if let Some(f) = out.field.as_mut() {
            f.weight = f.weight * xi_map(lambda) / I;
        }
    }
    out
}

/// Negates every coupling squared and every field coefficient.
pub fn antimode_set(set: &PseudomodeSet) -> PseudomodeSet {
    let modes = set.modes.iter().map(|m| Mode { g2: -m.g2, ..m.clone() }).collect();
    let field = set.field.as_ref().map(|f| SetField {
        spec: FieldSpec { coeffs: f.spec.coeffs.iter().map(|c| -c).collect(), ..f.spec.clone() },
        weight: f.weight,
    });
    PseudomodeSet { label: format!("anti({})", set.label), modes, field }
}

fn merge_fields(a: Option<&SetField>, b: Option<&SetField>) -> Result<Option<SetField>> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(f), None) | (None, Some(f)) => Ok(Some(f.clone())),
        (Some(f), Some(g)) => {
            if f.spec.horizon_t != g.spec.horizon_t || f.weight != g.weight {
                return Err(invalid("merged fields need the same horizon and weight"));
            }
            let n = f.spec.coeffs.len().max(g.spec.coeffs.len());
            let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
            let coeffs = (0..n).map(|i| at(&f.spec.coeffs, i) + at(&g.spec.coeffs, i)).collect();
            Ok(Some(SetField { spec: FieldSpec { coeffs, ..f.spec.clone() }, weight: f.weight }))
        }
    }
}

/// `target` together with the antimode of `original`; fields on a common
/// cosine grid are merged coefficient-wise.
pub fn restructure_set(target: &PseudomodeSet, original: &PseudomodeSet) -> Result<PseudomodeSet> {
    let anti = antimode_set(original);
    let mut modes = target.modes.clone();
    modes.extend(anti.modes);
    let field = merge_fields(target.field.as_ref(), anti.field.as_ref())?;
    Ok(PseudomodeSet { label: format!("{}-{}", target.label, original.label), modes, field })
}

/// Single zero-temperature resonant mode plus the classical field.
#[derive(Clone, Debug)]
pub struct HybridPm {
    pub set: PseudomodeSet,
    pub coefficients: FieldCoefficients,
}

pub fn resonant_mode(bath: &BathSpec, fock_dim: usize) -> Mode {
    let w = bath.big_omega();
    Mode::real(w, bath.lam * bath.lam / (2.0 * w), bath.big_gamma(), 0.0, fock_dim)
}

pub fn brownian_hybrid_pm(bath: &BathSpec, horizon_t: f64, n_xi: usize, seed: u64, fock_dim: usize) -> Result<HybridPm> {
    let coefficients = bath_field_coefficients(bath, horizon_t, n_xi)?;
    let spec = FieldSpec::new(coefficients.coeffs.clone(), horizon_t, seed)?;
    let set = PseudomodeSet::new(format!("hybrid(beta={})", bath.beta), vec![resonant_mode(bath, fock_dim)], Some(spec));
    Ok(HybridPm { set, coefficients })
}

#[derive(Clone, Copy, Debug)]
pub struct DeterministicOptions {
    pub n_mats: usize,
    /// Fit window for the Matsubara modes.
    pub horizon: f64,
    pub fock_dim: usize,
    pub mats_fock_dim: usize,
    pub samples: usize,
}

impl Default for DeterministicOptions {
    fn default() -> Self {
        DeterministicOptions { n_mats: 2, horizon: 10.0, fock_dim: 6, mats_fock_dim: 4, samples: 201 }
    }
}

#[derive(Clone, Debug)]
pub struct DeterministicPm {
    pub set: PseudomodeSet,
    pub fit: ExpFit,
}

/// Fully deterministic mapping: resonant modes (one at zero temperature,
/// three at finite temperature) and fitted zero-frequency Matsubara modes.
///
/// At finite temperature the second and third resonant modes carry
/// `g2 = +-i I_B lam^2 / (4 Omega)`, so that their combined correlation is the
/// real term `-(lam^2 / 2 Omega) I_B sin(Omega |t|) e^{-Gamma |t|}`.
pub fn brownian_deterministic_pm(bath: &BathSpec, opts: &DeterministicOptions) -> Result<DeterministicPm> {
    let split = brownian_correlation_split(bath, None);
    let w = bath.big_omega();
    let g = bath.big_gamma();
    let lam2 = bath.lam * bath.lam;
    let mut modes = Vec::new();
    match bath.beta {
        Beta::Infinite => modes.push(resonant_mode(bath, opts.fock_dim)),
        Beta::Finite(_) => {
            let c = bath.resonant_coth();
            let nbar = (c.re - 1.0) / 2.0;
            let fock = opts.fock_dim;
            modes.push(Mode::new(w.into(), (lam2 / (2.0 * w)).into(), g.into(), nbar.into(), fock));
            let g2 = I * (c.im * lam2 / (4.0 * w));
            modes.push(Mode::new(0.0.into(), g2, C64::new(g, -w), 0.0.into(), opts.mats_fock_dim));
            modes.push(Mode::new(0.0.into(), -g2, C64::new(g, w), 0.0.into(), opts.mats_fock_dim));
        }
    }
    let samples: Vec<(f64, f64)> = (0..opts.samples)
        .map(|i| {
            let t = opts.horizon * i as f64 / (opts.samples - 1).max(1) as f64;
            split.matsubara_part(t).map(|m| (t, m))
        })
        .collect::<Result<_>>()?;
    let fit = fit_matsubara_modes(&samples, opts.n_mats, &ExpFitConfig { omega0: bath.omega0, ..Default::default() })?;
    for (g2, rate) in fit.g2.iter().zip(&fit.gamma) {
        modes.push(Mode::real(0.0, *g2, *rate, 0.0, opts.mats_fock_dim));
    }
    Ok(DeterministicPm { set: PseudomodeSet::new(format!("deterministic(beta={})", bath.beta), modes, None), fit })
}
