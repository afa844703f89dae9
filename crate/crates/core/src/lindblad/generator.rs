//! Matrix-free action of the generalized Lindblad generator on a dense
//! row-major density matrix.

use super::basis::ModeBasis;
use super::ode::OdeSystem;
use super::{DensityMatrix, SystemSpec};
use crate::error::{Error, Result};
use crate::params::PseudomodeSet;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    /// Cap on the total number of mode excitations.
    pub max_excitations: Option<usize>,
    /// Largest total Hilbert dimension accepted.
    pub dim_cap: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { max_excitations: None, dim_cap: 4096 }
    }
}

/// Row-wise sparse complex matrix.
#[derive(Clone, Debug, Default)]
struct Sparse {
    rows: Vec<Vec<(usize, C64)>>,
}

impl Sparse {
    fn new(n: usize) -> Self {
        Sparse { rows: vec![Vec::new(); n] }
    }

    fn add(&mut self, r: usize, c: usize, v: C64) {
        if v == ZERO {
            return;
        }
        match self.rows[r].iter_mut().find(|e| e.0 == c) {
            Some(e) => e.1 += v,
            None => self.rows[r].push((c, v)),
        }
    }

    fn transpose(&self) -> Sparse {
        let mut t = Sparse::new(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                t.rows[c].push((r, v));
            }
        }
        t
    }
}

/// One dissipative channel `rate * J rho J^T` with a real ladder matrix `J`
/// stored as `(row, source, amplitude)` triples.
#[derive(Clone, Debug)]
struct Jump {
    rate: C64,
    ladder: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    sys_dim: usize,
    basis: ModeBasis,
    dim: usize,
    k_left: Sparse,
    k_right_cols: Sparse,
    drive: Sparse,
    drive_cols: Sparse,
    jumps: Vec<Jump>,
}

/// The hook for the time-dependent drive `-i xi(t) [s, .]`.
pub type Drive<'a> = &'a (dyn Fn(f64) -> C64 + Sync);

pub(crate) struct Parts<'a> {
    pub sys_dim: usize,
    pub h_sys: &'a [C64],
    pub coupling: &'a [C64],
    pub couple_modes: bool,
}

impl LindbladGenerator {
    pub(crate) fn assemble(parts: Parts<'_>, set: &PseudomodeSet, trunc: &Truncation) -> Result<Self> {
        let ds = parts.sys_dim;
        let cutoffs: Vec<usize> = set.modes.iter().map(|m| m.fock_dim).collect();
        if let Some(m) = set.modes.iter().find(|m| m.fock_dim < 2) {
            return Err(Error::InvalidParameter(format!("fock_dim must be at least 2, got {}", m.fock_dim)));
        }
        let n_ms = ModeBasis::count(&cutoffs, trunc.max_excitations);
        let dim = ds.saturating_mul(n_ms);
        if dim > trunc.dim_cap {
            return Err(Error::DimensionCap { dim, cap: trunc.dim_cap });
        }
        let basis = ModeBasis::new(&cutoffs, trunc.max_excitations);
        let idx = |s: usize, m: usize| s * n_ms + m;

        let mut h = Sparse::new(dim);
        let mut anti = vec![ZERO; dim];
        let mut drive = Sparse::new(dim);
        for s in 0..ds {
            for m in 0..n_ms {
                let i = idx(s, m);
                for s2 in 0..ds {
                    h.add(i, idx(s2, m), parts.h_sys[s * ds + s2]);
                    drive.add(i, idx(s2, m), parts.coupling[s * ds + s2]);
                }
                for (k, mode) in set.modes.iter().enumerate() {
                    let occ = basis.occupation(m, k) as f64;
                    let up = basis.up(k, m);
                    h.add(i, i, mode.omega * occ);
                    let gp = (mode.nbar + 1.0) * mode.gamma;
                    let gm = mode.nbar * mode.gamma;
                    anti[i] += gp * occ + if up.is_some() { gm * (occ + 1.0) } else { ZERO };
                    if parts.couple_modes {
                        let g = mode.g2.sqrt();
                        for s2 in 0..ds {
                            let sc = parts.coupling[s * ds + s2] * g;
                            if sc == ZERO {
                                continue;
                            }
                            // <m| a |up(m)> and <m| a^dag |down(m)>
                            if let Some(u) = up {
                                h.add(i, idx(s2, u), sc * (occ + 1.0).sqrt());
                            }
                            if let Some(d) = basis.down(k, m) {
                                h.add(i, idx(s2, d), sc * occ.sqrt());
                            }
                        }
                    }
                }
            }
        }
        let mut k_left = h.clone();
        let mut k_right = h;
        for (i, a) in anti.iter().enumerate() {
            k_left.add(i, i, -I * a);
            k_right.add(i, i, I * a);
        }

        let mut jumps = Vec::new();
        for (k, mode) in set.modes.iter().enumerate() {
            let gp = (mode.nbar + 1.0) * mode.gamma * 2.0;
            let gm = mode.nbar * mode.gamma * 2.0;
            let mut lower = Vec::new();
            let mut raise = Vec::new();
            for s in 0..ds {
                for m in 0..n_ms {
                    let occ = basis.occupation(m, k) as f64;
                    if let Some(u) = basis.up(k, m) {
                        lower.push((idx(s, m), idx(s, u), (occ + 1.0).sqrt()));
                    }
                    if let Some(d) = basis.down(k, m) {
                        raise.push((idx(s, m), idx(s, d), occ.sqrt()));
                    }
                }
            }
            if gp != ZERO {
                jumps.push(Jump { rate: gp, ladder: lower });
            }
            if gm != ZERO {
                jumps.push(Jump { rate: gm, ladder: raise });
            }
        }

        Ok(LindbladGenerator {
            sys_dim: ds,
            basis,
            dim,
            k_left,
            k_right_cols: k_right.transpose(),
            drive_cols: drive.transpose(),
            drive,
            jumps,
        })
    }

    /// Hilbert-space dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    /// `out = L[rho] - i xi [s, rho]`.
    pub fn apply(&self, rho: &[C64], xi: C64, out: &mut [C64]) {
        let d = self.dim;
        out.fill(ZERO);
        let ixi = -I * xi;
        for i in 0..d {
            let orow = &mut out[i * d..(i + 1) * d];
            for &(j, v) in &self.k_left.rows[i] {
                let c = -I * v;
                for (o, r) in orow.iter_mut().zip(&rho[j * d..(j + 1) * d]) {
                    *o += c * r;
                }
            }
            if ixi != ZERO {
                for &(j, v) in &self.drive.rows[i] {
                    let c = ixi * v;
                    for (o, r) in orow.iter_mut().zip(&rho[j * d..(j + 1) * d]) {
                        *o += c * r;
                    }
                }
            }
            let rrow = &rho[i * d..(i + 1) * d];
            for (c, o) in orow.iter_mut().enumerate() {
                let mut acc = ZERO;
                for &(k, v) in &self.k_right_cols.rows[c] {
                    acc += rrow[k] * v;
                }
                let mut dacc = ZERO;
                if ixi != ZERO {
                    for &(k, v) in &self.drive_cols.rows[c] {
                        dacc += rrow[k] * v;
                    }
                }
                *o += I * acc - ixi * dacc;
            }
        }
        for jump in &self.jumps {
            for &(i, si, ai) in &jump.ladder {
                let c = jump.rate * ai;
                let orow = i * d;
                let srow = si * d;
                for &(col, sc, ac) in &jump.ladder {
                    out[orow + col] += c * ac * rho[srow + sc];
                }
            }
        }
    }

    /// Dense D^2 x D^2 superoperator in row-major vectorization. Intended for
    /// tests on small systems.
    pub fn superoperator_matrix(&self, xi: C64) -> Result<nalgebra::DMatrix<C64>> {
        let n = self.dim * self.dim;
        if self.dim > 64 {
            return Err(Error::DimensionCap { dim: self.dim, cap: 64 });
        }
        let mut m = nalgebra::DMatrix::zeros(n, n);
        let mut e = vec![ZERO; n];
        let mut out = vec![ZERO; n];
        for col in 0..n {
            e[col] = C64::new(1.0, 0.0);
            self.apply(&e, xi, &mut out);
            for (row, v) in out.iter().enumerate() {
                m[(row, col)] = *v;
            }
            e[col] = ZERO;
        }
        Ok(m)
    }

    /// Stationary state of the uncoupled modes (a truncated thermal product
    /// state, complex occupations allowed) tensored with `rho_s`.
    pub fn product_state(&self, rho_s: &[C64], set: &PseudomodeSet) -> Result<DensityMatrix> {
        let ds = self.sys_dim;
        if rho_s.len() != ds * ds {
            return Err(Error::LengthMismatch(format!("system state needs {} entries", ds * ds)));
        }
        let n_ms = self.basis.len();
        let mut p = vec![C64::new(1.0, 0.0); n_ms];
        for (k, mode) in set.modes.iter().enumerate() {
            let r = mode.nbar / (mode.nbar + 1.0);
            for (m, pm) in p.iter_mut().enumerate() {
                *pm *= r.powu(self.basis.occupation(m, k) as u32);
            }
        }
        let z: C64 = p.iter().sum();
        if !(z.norm() > 0.0) || !z.is_finite() {
            return Err(Error::Inconsistent("mode reference state is not normalizable".into()));
        }
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for s in 0..ds {
            for s2 in 0..ds {
                for (m, pm) in p.iter().enumerate() {
                    data[(s * n_ms + m) * d + s2 * n_ms + m] = rho_s[s * ds + s2] * pm / z;
                }
            }
        }
        Ok(DensityMatrix::from_parts(ds, n_ms, data))
    }
}

/// The generator with a drive attached, as an ODE right-hand side.
pub struct Driven<'a> {
    pub generator: &'a LindbladGenerator,
    pub drive: Option<Drive<'a>>,
}

impl OdeSystem for Driven<'_> {
    fn dim(&self) -> usize {
        self.generator.dim * self.generator.dim
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let xi = self.drive.map_or(ZERO, |f| f(t));
        self.generator.apply(y, xi, dy);
    }
}

pub fn build_generator(sys: &SystemSpec, set: &PseudomodeSet, trunc: &Truncation) -> Result<LindbladGenerator> {
    let h = sys.hamiltonian();
    let s = sys.coupling_matrix()?;
    LindbladGenerator::assemble(Parts { sys_dim: 2, h_sys: &h, coupling: &s, couple_modes: true }, set, trunc)
}
