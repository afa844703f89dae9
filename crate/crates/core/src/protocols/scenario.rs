//! Assembly of the fixed (base) and engineered pseudo-environments of each
//! protocol, and their realization at a given Lambda.

use super::preset::{ExperimentPreset, FieldTreatment, ProtocolMode};
use crate::bath::{BathSpec, Beta};
use crate::error::{Error, Result};
use crate::expfit::{fit_matsubara_modes, ExpFitConfig};
use crate::field::{difference_field_spec, FieldSpec};
use crate::params::{
    antimode_set, brownian_deterministic_pm, brownian_hybrid_pm, regularize_set, DeterministicOptions, Mode, ParamSelector,
    PseudomodeSet,
};
use crate::C64;

/// Base environment (left untouched) plus an engineered environment that is
/// physically regularized at every Lambda.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub base: PseudomodeSet,
    pub engineered: PseudomodeSet,
}

/// A field in a realized environment: realized as `xi_R + weight xi_I` from
/// random stream `slot`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveField {
    pub spec: FieldSpec,
    pub weight: C64,
    pub slot: u32,
}

/// The environment at one Lambda: modes plus independent fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub modes: PseudomodeSet,
    pub fields: Vec<ActiveField>,
}

pub const BASE_SLOT: u32 = 0;
pub const ENGINEERED_SLOT: u32 = 1;

impl Scenario {
    pub fn at(&self, lambda: C64) -> Realization {
        let eng = regularize_set(&self.engineered, lambda, &ParamSelector::all());
        let mut modes = self.base.modes.clone();
        modes.extend(eng.modes);
        let mut fields = Vec::new();
        if let Some(f) = &self.base.field {
            fields.push(ActiveField { spec: f.spec.clone(), weight: f.weight, slot: BASE_SLOT });
        }
        if let Some(f) = &eng.field {
            fields.push(ActiveField { spec: f.spec.clone(), weight: f.weight, slot: ENGINEERED_SLOT });
        }
        Realization { modes: PseudomodeSet { label: format!("{}+{}", self.base.label, eng.label), modes, field: None }, fields }
    }

    /// True when no Lambda dependence can arise: the engineered part has no
    /// unphysical entries.
    pub fn is_lambda_independent(&self) -> bool {
        self.engineered.modes.iter().all(Mode::is_physical) && self.engineered.field.as_ref().is_none_or(|f| f.spec.is_real())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioBuild {
    pub scenario: Scenario,
    /// Max residual of the cosine-series fits used for fields.
    pub field_residual: f64,
    /// Max residual of the exponential fits used for Matsubara and equivalent modes.
    pub fit_residual: f64,
    /// Highest field frequency kept after band truncation.
    pub band_cutoff: Option<f64>,
}

pub(crate) fn deterministic_options(p: &ExperimentPreset) -> DeterministicOptions {
    DeterministicOptions {
        n_mats: p.pm.n_mats,
        horizon: p.sweep.t_end,
        fock_dim: p.pm.fock_dim,
        mats_fock_dim: p.pm.mats_fock_dim,
        samples: 201,
    }
}

/// Coefficients up to (excluding) the first negative one.
pub fn nonnegative_band(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().copied().take_while(|c| *c >= 0.0).collect()
}

/// Replaces a set's field by zero-frequency modes fitted to the correlations
/// of its real and imaginary components. The imaginary component enters with
/// `g2 = -G`, so regularization maps it to `Xi^2 G` like the field weight.
pub fn equivalent_modes(set: &PseudomodeSet, window: f64, n_modes: usize, fock_dim: usize, omega0: f64) -> Result<(PseudomodeSet, f64)> {
    let Some(field) = &set.field else {
        return Ok((set.clone(), 0.0));
    };
    if field.weight != C64::new(0.0, 1.0) {
        return Err(Error::Inconsistent("equivalent modes need an unregularized field".into()));
    }
    let mut modes = set.modes.clone();
    let mut residual: f64 = 0.0;
    let ts: Vec<f64> = (0..201).map(|i| window * i as f64 / 200.0).collect();
    let parts: [(&dyn Fn(f64) -> f64, f64); 2] =
        [(&|t| field.spec.real_correlation(t), 1.0), (&|t| field.spec.imag_correlation(t), -1.0)];
    for (corr, sign) in parts {
        let samples: Vec<(f64, f64)> = ts.iter().map(|&t| (t, corr(t))).collect();
        if samples.iter().all(|s| s.1 == 0.0) {
            continue;
        }
        let fit = fit_matsubara_modes(&samples, n_modes.max(1), &ExpFitConfig { omega0, ..Default::default() })?;
        if fit.g2.iter().any(|g| *g < 0.0) {
            return Err(Error::Inconsistent(format!("field component is not a positive mixture of exponentials: {:?}", fit.g2)));
        }
        residual = residual.max(fit.max_residual);
        for (g, r) in fit.g2.iter().zip(&fit.gamma) {
            modes.push(Mode::real(0.0, sign * g, *r, 0.0, fock_dim));
        }
    }
    Ok((PseudomodeSet { label: format!("eq({})", set.label), modes, field: None }, residual))
}

fn coefficients(bath: &BathSpec, p: &ExperimentPreset) -> Result<crate::bath::FieldCoefficients> {
    crate::bath::bath_field_coefficients(bath, p.field.horizon, p.field.n_xi)
}

pub fn build_scenario(p: &ExperimentPreset) -> Result<ScenarioBuild> {
    let bath = &p.bath;
    let field_residual: f64;
    let mut fit_residual: f64 = 0.0;
    let mut band_cutoff = None;
    let hybrid = |b: &BathSpec| brownian_hybrid_pm(b, p.field.horizon, p.field.n_xi, p.seed, p.pm.fock_dim);
    let (base, engineered) = match p.mode {
        ProtocolMode::Mitigate => {
            let det = brownian_deterministic_pm(bath, &deterministic_options(p))?;
            fit_residual = det.fit.max_residual;
            let h = hybrid(bath)?;
            field_residual = h.coefficients.max_residual;
            (det.set, antimode_set(&h.set))
        }
        ProtocolMode::Restructure => {
            let target = p.target_beta.ok_or_else(|| Error::Config(vec!["bath.target_beta: required for restructure".into()]))?;
            let h = hybrid(bath)?;
            let c_target = coefficients(&bath.with_beta(target), p)?;
            field_residual = h.coefficients.max_residual.max(c_target.max_residual);
            let diff = difference_field_spec(&c_target.coeffs, &h.coefficients.coeffs, p.field.horizon, p.seed)?;
            let eng = PseudomodeSet::new(format!("delta({}->{})", bath.beta, target), vec![], Some(diff));
            (h.set, eng)
        }
        ProtocolMode::Simulate => {
            let h = hybrid(bath)?;
            field_residual = h.coefficients.max_residual;
            (PseudomodeSet::default(), h.set)
        }
        ProtocolMode::Direct => {
            let mut h = hybrid(bath)?;
            field_residual = h.coefficients.max_residual;
            if p.field.nonnegative_band {
                let f = h.set.field.as_mut().expect("hybrid sets carry a field");
                f.spec.coeffs = nonnegative_band(&f.spec.coeffs);
                band_cutoff = Some((f.spec.coeffs.len().saturating_sub(1)) as f64 * std::f64::consts::PI / p.field.horizon);
            }
            (h.set, PseudomodeSet::default())
        }
    };
    let (base, engineered) = match p.field.treatment {
        FieldTreatment::Sampled => (base, engineered),
        FieldTreatment::Equivalent => {
            let (b, rb) = equivalent_modes(&base, p.sweep.t_end, p.pm.n_mats, p.pm.mats_fock_dim, bath.omega0)?;
            let (e, re) = equivalent_modes(&engineered, p.sweep.t_end, p.pm.n_mats, p.pm.mats_fock_dim, bath.omega0)?;
            fit_residual = fit_residual.max(rb).max(re);
            (b, e)
        }
    };
    Ok(ScenarioBuild { scenario: Scenario { base, engineered }, field_residual, fit_residual, band_cutoff })
}

/// Deterministic pseudomode model of the bath at `beta`, used as the oracle.
pub fn oracle_set(p: &ExperimentPreset, beta: Beta) -> Result<PseudomodeSet> {
    Ok(brownian_deterministic_pm(&p.bath.with_beta(beta), &deterministic_options(p))?.set)
}
