//! End-to-end protocols: Lambda sweeps of physically regularized ensembles,
//! reconstruction at the critical point, and the comparison studies built on
//! them.

mod experiments;
mod preset;
mod scenario;
mod sweep;

pub use experiments::*;
pub use preset::{
    builtin_text, ExperimentPreset, ExtrapolationOptions, FieldOptions, FieldTreatment, GateAxis, GateOptions, PmOptions, ProtocolMode,
    SweepOptions, BUILTIN_PRESETS,
};
pub use scenario::{build_scenario, equivalent_modes, nonnegative_band, oracle_set, ActiveField, Realization, Scenario, ScenarioBuild};
pub use sweep::{run_ensembles, run_lambda_sweep, EnsembleConfig, EnsembleResult, PAULI_NAMES};

use crate::error::Result;
use crate::extrapolation::{extrapolate, ExtrapolationResult, SweepTable};
use crate::field::{stream_rng, StreamId};
use crate::lindblad::{Mat2, SIGMA_X, SIGMA_Y, SIGMA_Z};
use crate::params::LAMBDA_C;
use crate::C64;
use rand_distr::{Distribution, Normal};

/// Reconstruction of every (time, Pauli) cell at the critical point.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionBundle {
    pub t_grid: Vec<f64>,
    pub order_m: usize,
    pub n_points: usize,
    /// Continued values `[t][x, y, z]`, imaginary parts kept for reporting.
    pub values: Vec<[C64; 3]>,
    /// Bloch vectors of the regularized states.
    pub bloch: Vec<[f64; 3]>,
    pub cells: Vec<Vec<ExtrapolationResult>>,
}

impl ReconstructionBundle {
    pub fn sigma_z(&self) -> Vec<f64> {
        self.bloch.iter().map(|b| b[2]).collect()
    }

    pub fn rho_reg(&self, k: usize) -> Mat2 {
        bloch_to_state(&self.bloch[k])
    }
}

/// Regularization of a continued Bloch vector: real parts divided by
/// `Z = max(1, sum_i Re<sigma_i>^2)`.
pub fn phys_reg(v: &[C64; 3]) -> [f64; 3] {
    let r = [v[0].re, v[1].re, v[2].re];
    let z = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).max(1.0);
    [r[0] / z, r[1] / z, r[2] / z]
}

pub fn bloch_to_state(b: &[f64; 3]) -> Mat2 {
    let mut m = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        m[i] = (SIGMA_X[i] * b[0] + SIGMA_Y[i] * b[1] + SIGMA_Z[i] * b[2]) * 0.5;
    }
    m[0] += 0.5;
    m[3] += 0.5;
    m
}

/// Per-cell fits at `order_m` continued to the critical point. The noise
/// level attached to each cell is the larger of `sigma` and the table's
/// standard errors.
pub fn reconstruct(table: &SweepTable, order_m: usize, sigma: f64) -> Result<ReconstructionBundle> {
    table.validate()?;
    let mut values = Vec::with_capacity(table.t_grid.len());
    let mut cells = Vec::with_capacity(table.t_grid.len());
    for k in 0..table.t_grid.len() {
        let mut row = Vec::with_capacity(table.observables.len());
        for o in 0..table.observables.len() {
            let s = sigma.max(table.max_stderr(k, o));
            row.push(extrapolate(&table.lambda_grid, &table.column(k, o), order_m, LAMBDA_C, s, None)?);
        }
        values.push([row[0].value_at_target, row[1].value_at_target, row[2].value_at_target]);
        cells.push(row);
    }
    let bloch = values.iter().map(phys_reg).collect();
    Ok(ReconstructionBundle { t_grid: table.t_grid.clone(), order_m, n_points: table.lambda_grid.len(), values, bloch, cells })
}

/// Adds iid `N(0, sigma^2)` to every value and records `sigma` as the
/// standard error.
pub fn inject_noise(table: &SweepTable, sigma: f64, seed: u64, stream: u64) -> SweepTable {
    let mut out = table.clone();
    if sigma == 0.0 {
        return out;
    }
    let mut rng = stream_rng(seed, StreamId::with_slot(stream, NOISE_SLOT));
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    for row in out.values.iter_mut() {
        for cell in row.iter_mut() {
            for v in cell.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    for row in out.stderr.iter_mut() {
        for cell in row.iter_mut() {
            cell.fill(sigma);
        }
    }
    out
}

const NOISE_SLOT: u32 = 7;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrapolation::equispaced_grid;

    fn table(f: impl Fn(f64) -> [f64; 3]) -> SweepTable {
        let g = equispaced_grid(12);
        SweepTable {
            lambda_grid: g.clone(),
            t_grid: vec![0.0],
            observables: PAULI_NAMES.iter().map(|s| s.to_string()).collect(),
            values: g.iter().map(|&l| vec![f(l).to_vec()]).collect(),
            stderr: g.iter().map(|_| vec![vec![0.0; 3]]).collect(),
        }
    }

    #[test]
    fn phys_reg_examples() {
        let inside = [C64::new(0.3, 0.1), C64::new(0.2, 0.0), C64::new(-0.5, 2.0)];
        assert_eq!(phys_reg(&inside), [0.3, 0.2, -0.5]);
        let b = phys_reg(&[C64::new(1.2, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((b[0] - 1.2 / 1.44).abs() < 1e-15);
        let rho = bloch_to_state(&b);
        assert!((rho[0] + rho[3] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn polynomial_table_reconstructs_exactly() {
        let t = table(|l| [0.1 * l * l, 0.2 - 0.3 * l, 0.05 * l.powi(3) - 0.1]);
        let b = reconstruct(&t, 5, 0.0).unwrap();
        let z = LAMBDA_C;
        let want = [z * z * 0.1, -z * 0.3 + 0.2, z.powu(3) * 0.05 - 0.1];
        for o in 0..3 {
            assert!((b.values[0][o] - want[o]).norm() < 1e-10);
        }
    }

    #[test]
    fn noise_injection() {
        let t = table(|_| [0.0; 3]);
        assert_eq!(inject_noise(&t, 0.0, 1, 0), t);
        let n = inject_noise(&t, 0.5, 1, 0);
        assert!(n.stderr.iter().all(|r| r[0].iter().all(|s| *s == 0.5)));
        assert_ne!(n.values, t.values);
        assert_eq!(inject_noise(&t, 0.5, 1, 0), n);
        let mut sum = 0.0;
        let mut count = 0.0;
        for s in 0..300 {
            let n = inject_noise(&t, 0.5, 9, s);
            for r in &n.values {
                sum += r[0].iter().sum::<f64>();
                count += 3.0;
            }
        }
        assert!((sum / count).abs() < 3.0 * 0.5 / count.sqrt());
    }
}
