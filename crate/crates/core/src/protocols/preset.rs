//! Experiment presets: a TOML document with sections `[system]`, `[bath]`,
//! `[pseudomodes]`, `[field]`, `[sweep]`, `[extrapolation]`, `[integrator]`,
//! `[output]` and, for gate studies, `[gate]`.

use crate::bath::{BathSpec, Beta};
use crate::error::{Error, Result};
use crate::lindblad::{CouplingOp, IntegratorConfig, Mat2, SystemSpec, Truncation, SPIN_UP};
use crate::C64;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolMode {
    Simulate,
    Mitigate,
    Restructure,
    Direct,
}

impl ProtocolMode {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolMode::Simulate => "simulate",
            ProtocolMode::Mitigate => "mitigate",
            ProtocolMode::Restructure => "restructure",
            ProtocolMode::Direct => "direct",
        }
    }
}

/// How stochastic fields enter a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldTreatment {
    /// Trajectories of sampled fields, averaged.
    Sampled,
    /// Each field component replaced by zero-frequency modes fitted to its
    /// correlation; no sampling noise.
    Equivalent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateAxis {
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOptions {
    pub angle: f64,
    pub axis: GateAxis,
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmOptions {
    pub fock_dim: usize,
    pub mats_fock_dim: usize,
    pub n_mats: usize,
    pub truncation: Truncation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptions {
    pub n_xi: usize,
    pub horizon: f64,
    pub treatment: FieldTreatment,
    pub n_traj: usize,
    /// Keep only the leading run of non-negative coefficients.
    pub nonnegative_band: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub n_exp: usize,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationOptions {
    pub order: usize,
    pub noise_sigma: f64,
    pub probe_time: f64,
    pub resamples: usize,
    pub orders: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub mode: ProtocolMode,
    pub seed: u64,
    pub system: SystemSpec,
    pub bath: BathSpec,
    pub target_beta: Option<Beta>,
    pub pm: PmOptions,
    pub field: FieldOptions,
    pub sweep: SweepOptions,
    pub extrapolation: ExtrapolationOptions,
    pub integrator: IntegratorConfig,
    pub gate: Option<GateOptions>,
    pub output_dir: Option<String>,
    /// The document the preset was parsed from.
    pub source: String,
}

impl ExperimentPreset {
    pub fn t_grid(&self) -> Vec<f64> {
        let n = (self.sweep.t_end / self.sweep.dt).round() as usize;
        (0..=n).map(|i| self.sweep.dt * i as f64).collect()
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        crate::extrapolation::equispaced_grid(self.sweep.n_exp)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))?;
        raw.validate(text)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let text = builtin_text(name).ok_or_else(|| Error::Config(vec![format!("unknown preset `{name}`")]))?;
        Self::parse(text)
    }
}

pub const BUILTIN_PRESETS: &[(&str, &str)] = &[
    ("mitigation", include_str!("../../presets/mitigation.toml")),
    ("gate-z", include_str!("../../presets/gate-z.toml")),
    ("gate-y", include_str!("../../presets/gate-y.toml")),
    ("thermal-mitigation", include_str!("../../presets/thermal-mitigation.toml")),
    ("restructure", include_str!("../../presets/restructure.toml")),
    ("simulation", include_str!("../../presets/simulation.toml")),
    ("order-study", include_str!("../../presets/order-study.toml")),
    ("direct", include_str!("../../presets/direct.toml")),
];

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTIN_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
enum BetaValue {
    Num(f64),
    Text(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: Option<String>,
    mode: Option<String>,
    seed: Option<u64>,
    system: Option<RawSystem>,
    bath: Option<RawBath>,
    #[serde(default)]
    pseudomodes: RawPm,
    #[serde(default)]
    field: RawField,
    sweep: Option<RawSweep>,
    #[serde(default)]
    extrapolation: RawExtrap,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    output: RawOutput,
    gate: Option<RawGate>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    omega_s: Option<f64>,
    delta: Option<f64>,
    coupling: Option<String>,
    initial_state: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBath {
    omega0: Option<f64>,
    gamma: Option<f64>,
    lam: Option<f64>,
    alpha: Option<f64>,
    beta: Option<BetaValue>,
    target_beta: Option<BetaValue>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPm {
    fock_dim: Option<usize>,
    mats_fock_dim: Option<usize>,
    n_mats: Option<usize>,
    max_excitations: Option<usize>,
    dim_cap: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawField {
    n_xi: Option<usize>,
    horizon: Option<f64>,
    treatment: Option<String>,
    n_traj: Option<usize>,
    nonnegative_band: Option<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    n_exp: Option<usize>,
    t_end: Option<f64>,
    dt: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExtrap {
    order: Option<usize>,
    noise_sigma: Option<f64>,
    probe_time: Option<f64>,
    resamples: Option<usize>,
    orders: Option<Vec<usize>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    rtol: Option<f64>,
    atol: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGate {
    angle: Option<f64>,
    axis: Option<String>,
    times: Option<Vec<f64>>,
}

struct Collect(Vec<String>);

impl Collect {
    fn need<T: Clone>(&mut self, v: &Option<T>, path: &str) -> Option<T> {
        if v.is_none() {
            self.0.push(format!("{path}: missing required field"));
        }
        v.clone()
    }

    fn positive(&mut self, v: Option<f64>, path: &str) -> Option<f64> {
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                self.0.push(format!("{path}: must be positive and finite, got {x}"));
                None
            }
            other => other,
        }
    }

    fn beta(&mut self, v: &Option<BetaValue>, path: &str) -> Option<Beta> {
        match v {
            None => None,
            Some(BetaValue::Num(b)) if *b > 0.0 && b.is_finite() => Some(Beta::Finite(*b)),
            Some(BetaValue::Text(s)) if s == "inf" => Some(Beta::Infinite),
            Some(other) => {
                self.0.push(format!("{path}: expected a positive number or \"inf\", got {other:?}"));
                None
            }
        }
    }
}

fn initial_state(name: &str) -> Option<Mat2> {
    let h = C64::new(0.5, 0.0);
    let z = C64::new(0.0, 0.0);
    Some(match name {
        "up" => SPIN_UP,
        "down" => [z, z, z, C64::new(1.0, 0.0)],
        "plus" => [h, h, h, h],
        "minus" => [h, -h, -h, h],
        "mixed" => [h, z, z, h],
        _ => return None,
    })
}

impl Raw {
    fn validate(self, text: &str) -> Result<ExperimentPreset> {
        let mut c = Collect(Vec::new());
        let name = self.name.clone().unwrap_or_else(|| "unnamed".into());
        let mode = match self.mode.as_deref() {
            Some("simulate") => Some(ProtocolMode::Simulate),
            Some("mitigate") => Some(ProtocolMode::Mitigate),
            Some("restructure") => Some(ProtocolMode::Restructure),
            Some("direct") => Some(ProtocolMode::Direct),
            Some(other) => {
                c.0.push(format!("mode: unknown mode `{other}`"));
                None
            }
            None => {
                c.0.push("mode: missing required field".into());
                None
            }
        };

        let sys = self.system.unwrap_or_else(|| {
            c.0.push("system: missing section".into());
            RawSystem::default()
        });
        let omega_s = c.need(&sys.omega_s, "system.omega_s");
        let delta = sys.delta.unwrap_or(0.0);
        let coupling = match sys.coupling.as_deref().unwrap_or("sx") {
            "sx" => Some(CouplingOp::SigmaX),
            "sz" => Some(CouplingOp::SigmaZ),
            other => {
                c.0.push(format!("system.coupling: expected \"sx\" or \"sz\", got `{other}`"));
                None
            }
        };
        let init_name = sys.initial_state.as_deref().unwrap_or("up");
        let init = initial_state(init_name);
        if init.is_none() {
            c.0.push(format!("system.initial_state: unknown state `{init_name}`"));
        }

        let rb = self.bath.unwrap_or_else(|| {
            c.0.push("bath: missing section".into());
            RawBath::default()
        });
        let omega0 = { let v = c.need(&rb.omega0, "bath.omega0"); c.positive(v, "bath.omega0") };
        let gamma = { let v = c.need(&rb.gamma, "bath.gamma"); c.positive(v, "bath.gamma") };
        if rb.lam.is_some() == rb.alpha.is_some() {
            c.0.push("bath: exactly one of `lam` and `alpha` is required".into());
        }
        let lam = c.positive(rb.lam, "bath.lam");
        let alpha = c.positive(rb.alpha, "bath.alpha");
        let beta = c.beta(&rb.beta, "bath.beta");
        if rb.beta.is_none() {
            c.0.push("bath.beta: missing required field".into());
        }
        let target_beta = c.beta(&rb.target_beta, "bath.target_beta");
        if mode == Some(ProtocolMode::Restructure) && rb.target_beta.is_none() {
            c.0.push("bath.target_beta: required for restructure".into());
        }

        let pm = &self.pseudomodes;
        let fock_dim = pm.fock_dim.unwrap_or(6);
        let mats_fock_dim = pm.mats_fock_dim.unwrap_or(4);
        if fock_dim < 2 || mats_fock_dim < 2 {
            c.0.push("pseudomodes: fock dimensions must be at least 2".into());
        }

        let sw = self.sweep.unwrap_or_else(|| {
            c.0.push("sweep: missing section".into());
            RawSweep::default()
        });
        let t_end = { let v = c.need(&sw.t_end, "sweep.t_end"); c.positive(v, "sweep.t_end") };
        let dt = c.positive(sw.dt.or(Some(0.1)), "sweep.dt");
        let n_exp = sw.n_exp.unwrap_or(12);
        if n_exp < 2 {
            c.0.push("sweep.n_exp: at least 2 points are needed".into());
        }

        let f = &self.field;
        let treatment = match f.treatment.as_deref().unwrap_or("sampled") {
            "sampled" => Some(FieldTreatment::Sampled),
            "equivalent" => Some(FieldTreatment::Equivalent),
            other => {
                c.0.push(format!("field.treatment: expected \"sampled\" or \"equivalent\", got `{other}`"));
                None
            }
        };
        let horizon = c.positive(f.horizon.or(t_end.map(|t| 2.0 * t)), "field.horizon");
        if let (Some(h), Some(t)) = (horizon, t_end) {
            if h < t {
                c.0.push(format!("field.horizon: {h} is shorter than sweep.t_end {t}"));
            }
        }
        let n_traj = f.n_traj.unwrap_or(2000);
        if n_traj < 1 {
            c.0.push("field.n_traj: at least one trajectory is needed".into());
        }

        let ex = &self.extrapolation;
        let order = ex.order.unwrap_or(10);
        if order + 1 > n_exp {
            c.0.push(format!("extrapolation.order: {order} needs at least {} sweep points", order + 1));
        }
        let noise_sigma = ex.noise_sigma.unwrap_or(0.0);
        if !(noise_sigma >= 0.0) {
            c.0.push("extrapolation.noise_sigma: must be non-negative".into());
        }
        let probe_time = ex.probe_time.unwrap_or(5.0);
        let orders = ex.orders.clone().unwrap_or_else(|| (2..=16.min(n_exp.saturating_sub(1))).collect());
        if orders.iter().any(|&m| m + 1 > n_exp) {
            c.0.push("extrapolation.orders: every order needs at least order + 1 sweep points".into());
        }

        let integ = IntegratorConfig {
            rtol: c.positive(self.integrator.rtol.or(Some(1e-8)), "integrator.rtol").unwrap_or(1e-8),
            atol: c.positive(self.integrator.atol.or(Some(1e-10)), "integrator.atol").unwrap_or(1e-10),
            ..Default::default()
        };

        let gate = self.gate.map(|g| {
            let axis = match g.axis.as_deref().unwrap_or("z") {
                "x" => GateAxis::X,
                "y" => GateAxis::Y,
                "z" => GateAxis::Z,
                other => {
                    c.0.push(format!("gate.axis: expected x, y or z, got `{other}`"));
                    GateAxis::Z
                }
            };
            let times = c.need(&g.times, "gate.times").unwrap_or_default();
            if times.iter().any(|t| !(*t > 0.0)) {
                c.0.push("gate.times: gate times must be positive".into());
            }
            GateOptions { angle: c.need(&g.angle, "gate.angle").unwrap_or(0.0), axis, times }
        });

        let bath = match (omega0, gamma, beta) {
            (Some(w), Some(g), Some(b)) => {
                let built = match (lam, alpha) {
                    (Some(l), None) => Some(BathSpec::new(w, g, l, b)),
                    (None, Some(a)) => Some(BathSpec::from_alpha(w, g, a, b)),
                    _ => None,
                };
                match built {
                    Some(Ok(b)) => Some(b),
                    Some(Err(e)) => {
                        c.0.push(format!("bath: {e}"));
                        None
                    }
                    None => None,
                }
            }
            _ => None,
        };

        if !c.0.is_empty() {
            return Err(Error::Config(c.0));
        }
        let mut system = SystemSpec::new(omega_s.unwrap(), delta, coupling.unwrap());
        system.initial_state = init.unwrap();
        system.validate()?;
        Ok(ExperimentPreset {
            name,
            mode: mode.unwrap(),
            seed: self.seed.unwrap_or(0),
            system,
            bath: bath.unwrap(),
            target_beta,
            pm: PmOptions {
                fock_dim,
                mats_fock_dim,
                n_mats: pm.n_mats.unwrap_or(2),
                truncation: Truncation { max_excitations: pm.max_excitations, dim_cap: pm.dim_cap.unwrap_or(4096) },
            },
            field: FieldOptions {
                n_xi: f.n_xi.unwrap_or(100),
                horizon: horizon.unwrap(),
                treatment: treatment.unwrap(),
                n_traj,
                nonnegative_band: f.nonnegative_band.unwrap_or(false),
            },
            sweep: SweepOptions { n_exp, t_end: t_end.unwrap(), dt: dt.unwrap() },
            extrapolation: ExtrapolationOptions { order, noise_sigma, probe_time, resamples: ex.resamples.unwrap_or(200), orders },
            integrator: integ,
            gate,
            output_dir: self.output.dir.clone(),
            source: text.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (name, _) in BUILTIN_PRESETS {
            let p = ExperimentPreset::builtin(name).unwrap();
            assert_eq!(&p.name, name);
        }
    }

    #[test]
    fn errors_are_aggregated() {
        let text = "mode = \"mitigate\"\n[system]\nomega_s = 1.0\n[bath]\ngamma = 0.6\nalpha = 0.02\n[sweep]\nt_end = 10.0\n";
        let Err(Error::Config(errs)) = ExperimentPreset::parse(text) else { panic!("expected config error") };
        assert!(errs.iter().any(|e| e.starts_with("bath.omega0")));
        assert!(errs.iter().any(|e| e.starts_with("bath.beta")));
        assert_eq!(errs.len(), 2, "{errs:?}");
    }

    #[test]
    fn restructure_needs_target() {
        let text = "mode = \"restructure\"\n[system]\nomega_s = 1.0\n[bath]\nomega0 = 1.0\ngamma = 0.3\nlam = 0.1\nbeta = 1.0\n[sweep]\nt_end = 10.0\n";
        let Err(Error::Config(errs)) = ExperimentPreset::parse(text) else { panic!() };
        assert_eq!(errs, vec!["bath.target_beta: required for restructure".to_string()]);
    }
}
