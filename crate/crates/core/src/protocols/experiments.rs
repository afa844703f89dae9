//! The comparison studies: mitigation, simulation, restructuring, direct
//! simulation, gate fidelity and reconstruction error against order.

use super::preset::{ExperimentPreset, GateAxis, ProtocolMode};
use super::scenario::{build_scenario, oracle_set, Scenario, ScenarioBuild};
use super::sweep::{run_ensembles, run_lambda_sweep, EnsembleConfig, EnsembleResult};
use super::{inject_noise, phys_reg, reconstruct, ReconstructionBundle};
use crate::bath::Beta;
use crate::error::{invalid, Result};
use crate::extrapolation::{evaluate_at, least_squares_fit, SweepTable};
use crate::lindblad::{
    build_generator, expectation, initial_state, observe_system, IntegratorConfig, Mat2, Observable, SystemSpec, SIGMA_X, SIGMA_Y,
    SIGMA_Z,
};
use crate::params::{PseudomodeSet, LAMBDA_C};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deviation {
    pub max_abs: f64,
    pub mean_abs: f64,
}

pub fn deviation(a: &[f64], b: &[f64]) -> Deviation {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    Deviation { max_abs: d.iter().copied().fold(0.0, f64::max), mean_abs: d.iter().sum::<f64>() / d.len().max(1) as f64 }
}

fn config<'a>(p: &'a ExperimentPreset, sys: &'a SystemSpec, t_grid: &'a [f64]) -> EnsembleConfig<'a> {
    EnsembleConfig { system: sys, truncation: &p.pm.truncation, integrator: &p.integrator, t_grid, n_traj: p.field.n_traj }
}

/// `<sigma_z>` of the isolated system.
pub fn free_dynamics(sys: &SystemSpec, t_grid: &[f64], integ: &IntegratorConfig) -> Result<Vec<[f64; 3]>> {
    let empty = PseudomodeSet::default();
    let gen = build_generator(sys, &empty, &Default::default())?;
    let rho0 = initial_state(&gen, sys, &empty)?;
    let out = observe_system(&gen, &rho0, None, t_grid, &Observable::PAULI, integ)?;
    Ok(out.iter().map(|v| [v[0].re, v[1].re, v[2].re]).collect())
}

/// Deterministic propagation of a set without fields.
pub fn deterministic_run(p: &ExperimentPreset, sys: &SystemSpec, set: &PseudomodeSet, t_grid: &[f64]) -> Result<EnsembleResult> {
    let scenario = Scenario { base: set.clone(), engineered: PseudomodeSet::default() };
    Ok(run_ensembles(&scenario, &[C64::new(0.0, 0.0)], &config(p, sys, t_grid))?.remove(0))
}

/// The scenario evaluated directly at the critical point, fields sampled as
/// complex trajectories.
pub fn critical_point_run(p: &ExperimentPreset, scenario: &Scenario, t_grid: &[f64]) -> Result<EnsembleResult> {
    Ok(run_ensembles(scenario, &[LAMBDA_C], &config(p, &p.system, t_grid))?.remove(0))
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub build: ScenarioBuild,
    pub table: SweepTable,
    pub bundle: ReconstructionBundle,
    /// Largest imaginary part of any ensemble mean in the sweep.
    pub max_imag: f64,
}

/// Builds the scenario, sweeps Lambda and reconstructs at the preset order.
pub fn sweep_and_reconstruct(p: &ExperimentPreset) -> Result<SweepRun> {
    let build = build_scenario(p)?;
    let t_grid = p.t_grid();
    let (table, max_imag) = run_lambda_sweep(&build.scenario, &p.lambda_grid(), &config(p, &p.system, &t_grid))?;
    let bundle = reconstruct(&table, p.extrapolation.order, p.extrapolation.noise_sigma)?;
    Ok(SweepRun { build, table, bundle, max_imag })
}

#[derive(Clone, Debug)]
pub struct MitigationReport {
    pub run: SweepRun,
    pub free: Vec<f64>,
    pub dissipative: Vec<f64>,
    pub mitigated: Deviation,
    pub unmitigated: Deviation,
}

pub fn mitigation_experiment(p: &ExperimentPreset) -> Result<MitigationReport> {
    if p.mode != ProtocolMode::Mitigate {
        return Err(invalid("mitigation needs a mitigate preset"));
    }
    let run = sweep_and_reconstruct(p)?;
    let t_grid = p.t_grid();
    let free: Vec<f64> = free_dynamics(&p.system, &t_grid, &p.integrator)?.iter().map(|v| v[2]).collect();
    let dissipative = deterministic_or_sampled(p, &run.build.scenario.base, &t_grid)?.sigma_z();
    let mitigated = deviation(&run.bundle.sigma_z(), &free);
    let unmitigated = deviation(&dissipative, &free);
    Ok(MitigationReport { run, free, dissipative, mitigated, unmitigated })
}

fn deterministic_or_sampled(p: &ExperimentPreset, set: &PseudomodeSet, t_grid: &[f64]) -> Result<EnsembleResult> {
    let scenario = Scenario { base: set.clone(), engineered: PseudomodeSet::default() };
    Ok(run_ensembles(&scenario, &[C64::new(0.0, 0.0)], &config(p, &p.system, t_grid))?.remove(0))
}

#[derive(Clone, Debug)]
pub struct SimulationReport {
    pub run: SweepRun,
    /// Deterministic pseudomode model of the simulated bath.
    pub oracle: Vec<f64>,
    /// Engineered environment realized at the critical point with complex fields.
    pub oracle_sampled: Vec<f64>,
    /// Engineered modes alone, without the field.
    pub no_field: Vec<f64>,
    pub vs_oracle: Deviation,
    pub vs_sampled: Deviation,
    pub lambda_independent: bool,
}

pub fn simulation_experiment(p: &ExperimentPreset) -> Result<SimulationReport> {
    if p.mode != ProtocolMode::Simulate {
        return Err(invalid("simulation needs a simulate preset"));
    }
    let run = sweep_and_reconstruct(p)?;
    let t_grid = p.t_grid();
    let oracle = deterministic_run(p, &p.system, &oracle_set(p, p.bath.beta)?, &t_grid)?.sigma_z();
    let oracle_sampled = critical_point_run(p, &run.build.scenario, &t_grid)?.sigma_z();
    let modes_only = PseudomodeSet { field: None, ..run.build.scenario.engineered.clone() };
    let no_field = deterministic_run(p, &p.system, &modes_only, &t_grid)?.sigma_z();
    let rec = run.bundle.sigma_z();
    Ok(SimulationReport {
        vs_oracle: deviation(&rec, &oracle),
        vs_sampled: deviation(&rec, &oracle_sampled),
        lambda_independent: run.build.scenario.is_lambda_independent(),
        run,
        oracle,
        oracle_sampled,
        no_field,
    })
}

#[derive(Clone, Debug)]
pub struct RestructuringReport {
    pub run: SweepRun,
    /// Deterministic pseudomode model at the target temperature.
    pub oracle: Vec<f64>,
    /// Base and engineered environments at the critical point, sampled.
    pub oracle_sampled: Vec<f64>,
    /// The untouched base environment.
    pub original: Vec<f64>,
    pub vs_oracle: Deviation,
    pub vs_sampled: Deviation,
    /// All difference coefficients non-negative: no continuation needed.
    pub physical_difference: bool,
}

pub fn restructuring_experiment(p: &ExperimentPreset) -> Result<RestructuringReport> {
    if p.mode != ProtocolMode::Restructure {
        return Err(invalid("restructuring needs a restructure preset"));
    }
    let target = p.target_beta.ok_or_else(|| invalid("restructuring needs a target temperature"))?;
    let run = sweep_and_reconstruct(p)?;
    let t_grid = p.t_grid();
    let oracle = deterministic_run(p, &p.system, &oracle_set(p, target)?, &t_grid)?.sigma_z();
    let oracle_sampled = critical_point_run(p, &run.build.scenario, &t_grid)?.sigma_z();
    let original = deterministic_or_sampled(p, &run.build.scenario.base, &t_grid)?.sigma_z();
    let rec = run.bundle.sigma_z();
    Ok(RestructuringReport {
        vs_oracle: deviation(&rec, &oracle),
        vs_sampled: deviation(&rec, &oracle_sampled),
        physical_difference: run.build.scenario.is_lambda_independent(),
        run,
        oracle,
        oracle_sampled,
        original,
    })
}

#[derive(Clone, Debug)]
pub struct DirectReport {
    pub build: ScenarioBuild,
    pub result: EnsembleResult,
    pub oracle: Vec<f64>,
    pub vs_oracle: Deviation,
    /// Every field coefficient is non-negative, so no continuation is used.
    pub all_coefficients_nonnegative: bool,
}

pub fn direct_experiment(p: &ExperimentPreset) -> Result<DirectReport> {
    if p.mode != ProtocolMode::Direct {
        return Err(invalid("direct simulation needs a direct preset"));
    }
    let build = build_scenario(p)?;
    let all_nonneg = build.scenario.base.field.as_ref().is_none_or(|f| f.spec.is_real()) && build.scenario.is_lambda_independent();
    if !all_nonneg {
        return Err(crate::Error::Inconsistent("field has negative coefficients; direct simulation would need continuation".into()));
    }
    let t_grid = p.t_grid();
    // Every entry is physical, so the realization at any Lambda is the model itself.
    let result = run_ensembles(&build.scenario, &[C64::new(1.0, 0.0)], &config(p, &p.system, &t_grid))?.remove(0);
    let oracle = deterministic_run(p, &p.system, &oracle_set(p, p.bath.beta)?, &t_grid)?.sigma_z();
    let vs_oracle = deviation(&result.sigma_z(), &oracle);
    Ok(DirectReport { build, result, oracle, vs_oracle, all_coefficients_nonnegative: all_nonneg })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateRow {
    pub gate_time: f64,
    pub unmitigated: f64,
    pub mitigated: f64,
}

#[derive(Clone, Debug)]
pub struct GateReport {
    pub rows: Vec<GateRow>,
    /// Gate time at which the drive is resonant with the bath, `angle / Omega`.
    pub resonance_time: f64,
}

fn rotation_target(rho0: &Mat2, angle: f64, axis: GateAxis) -> Mat2 {
    let s = match axis {
        GateAxis::X => SIGMA_X,
        GateAxis::Y => SIGMA_Y,
        GateAxis::Z => SIGMA_Z,
    };
    let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let i = C64::new(0.0, 1.0);
    let id = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let mut u = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        u[k] = id[k] * c - i * s[k] * sn;
    }
    let mul = |a: &Mat2, b: &Mat2| -> Mat2 {
        [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]]
    };
    let udag = [u[0].conj(), u[2].conj(), u[1].conj(), u[3].conj()];
    mul(&mul(&u, rho0), &udag)
}

/// `Tr[rho_target rho]`, the fidelity against a pure target.
fn overlap(target: &Mat2, rho: &Mat2) -> f64 {
    expectation(rho, &crate::lindblad::Observable::Custom(*target)).re
}

pub fn gate_fidelity_experiment(p: &ExperimentPreset) -> Result<GateReport> {
    if p.mode != ProtocolMode::Mitigate {
        return Err(invalid("gate studies need a mitigate preset"));
    }
    let gate = p.gate.as_ref().ok_or_else(|| invalid("gate studies need a [gate] section"))?;
    let build = build_scenario(p)?;
    let target = rotation_target(&p.system.initial_state, gate.angle, gate.axis);
    let mut rows = Vec::with_capacity(gate.times.len());
    for &tg in &gate.times {
        let w = gate.angle / tg;
        let mut sys = SystemSpec { omega_s: 0.0, delta: 0.0, omega_y: 0.0, ..p.system };
        match gate.axis {
            GateAxis::X => sys.delta = w,
            GateAxis::Y => sys.omega_y = w,
            GateAxis::Z => sys.omega_s = w,
        }
        let t_grid = [0.0, tg];
        let cfg = config(p, &sys, &t_grid);
        let (table, _) = run_lambda_sweep(&build.scenario, &p.lambda_grid(), &cfg)?;
        let bundle = reconstruct(&table, p.extrapolation.order, p.extrapolation.noise_sigma)?;
        let noisy = run_ensembles(&Scenario { base: build.scenario.base.clone(), engineered: PseudomodeSet::default() }, &[C64::new(0.0, 0.0)], &cfg)?.remove(0);
        let noisy_bloch = [noisy.mean[1][0].re, noisy.mean[1][1].re, noisy.mean[1][2].re];
        rows.push(GateRow {
            gate_time: tg,
            unmitigated: overlap(&target, &super::bloch_to_state(&noisy_bloch)),
            mitigated: overlap(&target, &bundle.rho_reg(1)),
        });
    }
    Ok(GateReport { rows, resonance_time: gate.angle / p.bath.big_omega() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderRow {
    pub order_m: usize,
    /// Mean error over noise resamples.
    pub mean_error: f64,
    pub noiseless_error: f64,
}

/// Error at the probe time of the regularized reconstruction against a
/// reference `<sigma_z>`, for each order, averaged over noise resamples.
pub fn error_vs_order_from_table(table: &SweepTable, probe: usize, reference: f64, sigma: f64, orders: &[usize], resamples: usize, seed: u64) -> Result<Vec<OrderRow>> {
    let z_of = |t: &SweepTable, m: usize| -> Result<f64> {
        let mut v = [C64::new(0.0, 0.0); 3];
        for (o, slot) in v.iter_mut().enumerate() {
            let fit = least_squares_fit(&t.lambda_grid, &t.column(probe, o), m)?;
            *slot = evaluate_at(&fit.coeffs, LAMBDA_C);
        }
        Ok(phys_reg(&v)[2])
    };
    let noisy: Vec<SweepTable> = (0..resamples).map(|r| inject_noise(table, sigma, seed, r as u64)).collect();
    let mut rows = Vec::with_capacity(orders.len());
    for &m in orders {
        let noiseless_error = (z_of(table, m)? - reference).abs();
        let mut acc = 0.0;
        for t in &noisy {
            acc += (z_of(t, m)? - reference).abs();
        }
        rows.push(OrderRow { order_m: m, mean_error: if resamples == 0 { noiseless_error } else { acc / resamples as f64 }, noiseless_error });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct OrderStudy {
    pub table: SweepTable,
    pub reference: f64,
    pub rows: Vec<OrderRow>,
}

impl OrderStudy {
    pub fn best_order(&self) -> usize {
        best_order(&self.rows)
    }
}

pub fn best_order(rows: &[OrderRow]) -> usize {
    rows.iter().min_by(|a, b| a.mean_error.total_cmp(&b.mean_error)).map_or(0, |r| r.order_m)
}

/// Sweep at `[0, probe]` only, then the order study against free dynamics.
pub fn error_vs_order_study(p: &ExperimentPreset, sigma: f64) -> Result<OrderStudy> {
    if p.mode != ProtocolMode::Mitigate {
        return Err(invalid("the order study needs a mitigate preset"));
    }
    let build = build_scenario(p)?;
    let t_grid = [0.0, p.extrapolation.probe_time];
    let (table, _) = run_lambda_sweep(&build.scenario, &p.lambda_grid(), &config(p, &p.system, &t_grid))?;
    let reference = free_dynamics(&p.system, &t_grid, &p.integrator)?[1][2];
    let rows = error_vs_order_from_table(&table, 1, reference, sigma, &p.extrapolation.orders, p.extrapolation.resamples, p.seed)?;
    Ok(OrderStudy { table, reference, rows })
}

/// The zero-temperature deterministic model of the preset's bath.
pub fn zero_temperature_oracle(p: &ExperimentPreset) -> Result<PseudomodeSet> {
    oracle_set(p, Beta::Infinite)
}
