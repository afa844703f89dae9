//! CSV tables. Numbers are written with 17 significant digits so every value
//! round-trips exactly.

use crate::error::{Error, Result};
use crate::extrapolation::SweepTable;
use crate::protocols::ReconstructionBundle;
use crate::C64;
use std::io::{Read, Write};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("{what}: `{s}` is not a number")))
}

/// Writes a header row and then each row as given.
pub fn write_rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

/// `t, re, im`
pub fn write_complex_series<W: Write>(w: W, t: &[f64], v: &[C64]) -> Result<()> {
    write_rows(w, &["t", "re", "im"], t.iter().zip(v).map(|(t, c)| vec![num(*t), num(c.re), num(c.im)]))
}

/// `omega, value`
pub fn write_real_series<W: Write>(w: W, omega: &[f64], v: &[f64]) -> Result<()> {
    write_rows(w, &["omega", "value"], omega.iter().zip(v).map(|(o, x)| vec![num(*o), num(*x)]))
}

/// `t, re_mean, im_mean, stderr`
pub fn write_ensemble_stats<W: Write>(w: W, t: &[f64], mean: &[C64], stderr: &[f64]) -> Result<()> {
    let rows = t.iter().zip(mean).zip(stderr).map(|((t, m), s)| vec![num(*t), num(m.re), num(m.im), num(*s)]);
    write_rows(w, &["t", "re_mean", "im_mean", "stderr"], rows)
}

pub const SWEEP_HEADER: [&str; 7] = ["t", "lambda_re", "lambda_im", "obs", "re", "im", "stderr"];

/// `t, lambda_re, lambda_im, obs, re, im, stderr`, ordered by Lambda, then
/// time, then observable. Sweep points are real, so `lambda_im` and `im` are 0.
pub fn write_sweep<W: Write>(w: W, table: &SweepTable) -> Result<()> {
    table.validate()?;
    let mut rows = Vec::new();
    for (l, lam) in table.lambda_grid.iter().enumerate() {
        for (k, t) in table.t_grid.iter().enumerate() {
            for (o, name) in table.observables.iter().enumerate() {
                rows.push(vec![num(*t), num(*lam), num(0.0), name.clone(), num(table.values[l][k][o]), num(0.0), num(table.stderr[l][k][o])]);
            }
        }
    }
    write_rows(w, &SWEEP_HEADER, rows)
}

/// Reads a sweep table back. Grids are taken in order of first appearance.
pub fn read_sweep<R: Read>(r: R) -> Result<SweepTable> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != SWEEP_HEADER {
        return Err(Error::Parse(format!("sweep header must be `{}`, got `{}`", SWEEP_HEADER.join(","), header.join(","))));
    }
    let mut recs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| parse(&rec[i], &format!("line {row}, column {}", SWEEP_HEADER[i]));
        if f(2)? != 0.0 {
            return Err(Error::Parse(format!("line {row}: sweep points must be real")));
        }
        recs.push((f(0)?, f(1)?, rec[3].trim().to_string(), f(4)?, f(6)?));
    }
    fn index_of<T: PartialEq + Clone>(v: &mut Vec<T>, x: &T) -> usize {
        v.iter().position(|y| y == x).unwrap_or_else(|| {
            v.push(x.clone());
            v.len() - 1
        })
    }
    let (mut lg, mut tg, mut obs) = (Vec::new(), Vec::new(), Vec::new());
    for r in &recs {
        index_of(&mut lg, &r.1);
        index_of(&mut tg, &r.0);
        index_of(&mut obs, &r.2);
    }
    let blank = vec![vec![vec![f64::NAN; obs.len()]; tg.len()]; lg.len()];
    let (mut values, mut stderr) = (blank.clone(), blank);
    for r in &recs {
        let (l, k, o) = (index_of(&mut lg, &r.1), index_of(&mut tg, &r.0), index_of(&mut obs, &r.2));
        values[l][k][o] = r.3;
        stderr[l][k][o] = r.4;
    }
    if values.iter().flatten().flatten().any(|v| v.is_nan()) {
        return Err(Error::Parse("sweep table is missing cells".into()));
    }
    let table = SweepTable { lambda_grid: lg, t_grid: tg, observables: obs, values, stderr };
    table.validate()?;
    Ok(table)
}

/// `t, obs, re_reconstructed, im_reconstructed, err_bias, err_stability, min_sv, M, N`.
/// `err_bias` is empty when no Bernstein bound was requested.
pub fn write_reconstruction<W: Write>(w: W, b: &ReconstructionBundle, observables: &[String]) -> Result<()> {
    let mut rows = Vec::new();
    for (k, t) in b.t_grid.iter().enumerate() {
        for (o, name) in observables.iter().enumerate() {
            let c = &b.cells[k][o];
            rows.push(vec![
                num(*t),
                name.clone(),
                num(c.value_at_target.re),
                num(c.value_at_target.im),
                c.err_bias.map(num).unwrap_or_default(),
                num(c.err_stability),
                num(c.min_sv),
                b.order_m.to_string(),
                b.n_points.to_string(),
            ]);
        }
    }
    write_rows(w, &["t", "obs", "re_reconstructed", "im_reconstructed", "err_bias", "err_stability", "min_sv", "M", "N"], rows)
}
