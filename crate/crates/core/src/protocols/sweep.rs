//! Ensemble propagation over Lambda grids. Trajectory `j` uses the same random
//! draws at every Lambda, so each trajectory's observables are a smooth
//! function of Lambda.

use super::scenario::{Realization, Scenario};
use crate::error::{Error, Result};
use crate::extrapolation::SweepTable;
use crate::field::{sample_field, StreamId};
use crate::lindblad::{build_generator, initial_state, observe_system, IntegratorConfig, Observable, SystemSpec, Truncation};
use crate::C64;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct EnsembleConfig<'a> {
    pub system: &'a SystemSpec,
    pub truncation: &'a Truncation,
    pub integrator: &'a IntegratorConfig,
    pub t_grid: &'a [f64],
    pub n_traj: usize,
}

/// Ensemble mean of the Pauli expectations, `[t][x, y, z]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub mean: Vec<[C64; 3]>,
    /// Standard error of the real parts.
    pub stderr: Vec<[f64; 3]>,
    pub trajectories: usize,
}

impl EnsembleResult {
    pub fn sigma_z(&self) -> Vec<f64> {
        self.mean.iter().map(|v| v[2].re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.mean.iter().flat_map(|v| v.iter().map(|z| z.im.abs())).fold(0.0, f64::max)
    }
}

fn lambda_label(l: C64) -> String {
    if l.im == 0.0 {
        format!("{}", l.re)
    } else {
        format!("{}{:+}i", l.re, l.im)
    }
}

fn trajectory(real: &Realization, cfg: &EnsembleConfig<'_>, gen: &crate::lindblad::LindbladGenerator, rho0: &crate::lindblad::DensityMatrix, j: usize) -> Result<Vec<Vec<C64>>> {
    let samples: Vec<_> = real.fields.iter().map(|f| (sample_field(&f.spec, StreamId::with_slot(j as u64, f.slot)), f.weight)).collect();
    let drive = move |t: f64| samples.iter().map(|(tr, w)| tr.weighted(t, *w)).sum::<C64>();
    let drive_ref: &(dyn Fn(f64) -> C64 + Sync) = &drive;
    let has_field = !real.fields.is_empty();
    observe_system(gen, rho0, has_field.then_some(drive_ref), cfg.t_grid, &Observable::PAULI, cfg.integrator)
}

fn reduce(runs: Vec<Vec<Vec<C64>>>, n_t: usize) -> EnsembleResult {
    let n = runs.len() as f64;
    let mut mean = vec![[C64::new(0.0, 0.0); 3]; n_t];
    let mut stderr = vec![[0.0; 3]; n_t];
    for k in 0..n_t {
        for o in 0..3 {
            let m = runs.iter().map(|r| r[k][o]).sum::<C64>() / n;
            mean[k][o] = m;
            if runs.len() > 1 {
                let var = runs.iter().map(|r| (r[k][o].re - m.re).powi(2)).sum::<f64>() / (n - 1.0);
                stderr[k][o] = (var / n).sqrt();
            }
        }
    }
    EnsembleResult { mean, stderr, trajectories: runs.len() }
}

/// Runs the environment realized at each of `lambdas`. Without fields a single
/// deterministic propagation is made per Lambda.
pub fn run_ensembles(scenario: &Scenario, lambdas: &[C64], cfg: &EnsembleConfig<'_>) -> Result<Vec<EnsembleResult>> {
    let mut prepared = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let real = scenario.at(l);
        let gen = build_generator(cfg.system, &real.modes, cfg.truncation)?;
        let rho0 = initial_state(&gen, cfg.system, &real.modes)?;
        let n = if real.fields.is_empty() { 1 } else { cfg.n_traj };
        prepared.push((l, real, gen, rho0, n));
    }
    let items: Vec<(usize, usize)> = prepared.iter().enumerate().flat_map(|(i, p)| (0..p.4).map(move |j| (i, j))).collect();
    let results: Vec<Result<Vec<Vec<C64>>>> = items
        .par_iter()
        .map(|&(i, j)| {
            let (l, real, gen, rho0, _) = &prepared[i];
            trajectory(real, cfg, gen, rho0, j).map_err(|e| Error::Propagation { lambda: lambda_label(*l), trajectory: j, source: Box::new(e) })
        })
        .collect();
    let mut iter = results.into_iter();
    let mut out = Vec::with_capacity(prepared.len());
    for p in &prepared {
        let runs = iter.by_ref().take(p.4).collect::<Result<Vec<_>>>()?;
        out.push(reduce(runs, cfg.t_grid.len()));
    }
    Ok(out)
}

pub const PAULI_NAMES: [&str; 3] = ["sx", "sy", "sz"];

/// Sweep over a real Lambda grid, recorded as real parts.
pub fn run_lambda_sweep(scenario: &Scenario, lambda_grid: &[f64], cfg: &EnsembleConfig<'_>) -> Result<(SweepTable, f64)> {
    let lambdas: Vec<C64> = lambda_grid.iter().map(|&l| C64::new(l, 0.0)).collect();
    let runs = run_ensembles(scenario, &lambdas, cfg)?;
    let max_imag = runs.iter().map(EnsembleResult::max_imag).fold(0.0, f64::max);
    let table = SweepTable {
        lambda_grid: lambda_grid.to_vec(),
        t_grid: cfg.t_grid.to_vec(),
        observables: PAULI_NAMES.iter().map(|s| s.to_string()).collect(),
        values: runs.iter().map(|r| r.mean.iter().map(|v| v.iter().map(|z| z.re).collect()).collect()).collect(),
        stderr: runs.iter().map(|r| r.stderr.iter().map(|v| v.to_vec()).collect()).collect(),
    };
    Ok((table, max_imag))
}
