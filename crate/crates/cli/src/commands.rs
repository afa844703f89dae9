use crate::output::{sha256_hex, OutputDir, Stages};
use crate::{Command, RunArgs, OUT_DIR_ENV};
use pseudomode_core::bath::{bath_correlation, bath_spectrum, brownian_correlation_split, classical_spectrum, quantum_spectrum};
use pseudomode_core::extrapolation::{
    bernstein_rho, bias_bound, bias_bound_relaxed, default_rho_scan, design_matrix, equispaced_grid, min_singular_lower_bound, min_singular_value,
    stability_bound, BiasInputs,
};
use pseudomode_core::io::{num, read_sweep, write_complex_series, write_real_series, write_reconstruction, write_rows, write_sweep};
use pseudomode_core::protocols::*;
use pseudomode_core::quadrature::QuadratureConfig;
use pseudomode_core::{Error, ExperimentPreset, Result, C64, LAMBDA_C};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

fn load_preset(spec: &str) -> Result<ExperimentPreset> {
    let path = Path::new(spec);
    if path.exists() {
        ExperimentPreset::from_path(path)
    } else if builtin_text(spec).is_some() {
        ExperimentPreset::builtin(spec)
    } else {
        Err(Error::Config(vec![format!("preset `{spec}` is neither a file nor a built-in preset")]))
    }
}

fn grid(end: f64, step: f64) -> Result<Vec<f64>> {
    if !(end > 0.0 && step > 0.0) {
        return Err(Error::Config(vec!["grid end and step must be positive".into()]));
    }
    let n = (end / step).round() as usize;
    Ok((0..=n).map(|i| step * i as f64).collect())
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// The protocol a run executes.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Run {
    Sweep,
    Mitigate,
    Simulate,
    Restructure,
    Gate,
    Errstudy { sigma: Option<f64> },
}

impl Run {
    fn name(&self) -> &'static str {
        match self {
            Run::Sweep => "sweep",
            Run::Mitigate => "mitigate",
            Run::Simulate => "simulate",
            Run::Restructure => "restructure",
            Run::Gate => "gate",
            Run::Errstudy { .. } => "errstudy",
        }
    }

    fn from_name(name: &str, sigma: Option<f64>) -> Option<Run> {
        Some(match name {
            "sweep" => Run::Sweep,
            "mitigate" => Run::Mitigate,
            "simulate" => Run::Simulate,
            "restructure" => Run::Restructure,
            "gate" => Run::Gate,
            "errstudy" => Run::Errstudy { sigma },
            _ => return None,
        })
    }
}

/// Everything a run depends on besides the preset text.
struct Job {
    run: Run,
    preset: ExperimentPreset,
    seed: u64,
    traj: Option<usize>,
}

impl Job {
    fn effective_preset(&self) -> ExperimentPreset {
        let mut p = self.preset.clone();
        p.seed = self.seed;
        if let Some(n) = self.traj {
            p.field.n_traj = n;
        }
        p
    }
}

fn resolve_out_dir(explicit: Option<PathBuf>, p: &ExperimentPreset, run: Run) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(format!("{}-{}", p.name, run.name()))))
        .or_else(|| p.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{}", p.name, run.name())))
}

fn run_from_args(run: Run, args: RunArgs) -> Result<()> {
    let preset = load_preset(&args.preset)?;
    if args.seed.len() > 1 {
        eprintln!("warning: --seed given {} times; using the last value {}", args.seed.len(), args.seed[args.seed.len() - 1]);
    }
    let seed = args.seed.last().copied().unwrap_or(preset.seed);
    let out = resolve_out_dir(args.out_dir, &preset, run);
    execute(Job { run, preset, seed, traj: args.traj }, &out, args.overwrite)
}

fn comparison(dir: &mut OutputDir, t: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut header = vec!["t"];
    header.extend(columns.iter().map(|c| c.0));
    let rows = t.iter().enumerate().map(|(k, t)| std::iter::once(num(*t)).chain(columns.iter().map(|c| num(c.1[k]))).collect());
    write_rows(dir.writer("comparison.csv")?, &header, rows)
}

fn sweep_outputs(dir: &mut OutputDir, run: &SweepRun) -> Result<()> {
    write_sweep(dir.writer("sweep.csv")?, &run.table)?;
    write_reconstruction(dir.writer("reconstruction.csv")?, &run.bundle, &run.table.observables)
}

fn execute(job: Job, out: &Path, overwrite: bool) -> Result<()> {
    let p = job.effective_preset();
    let mut dir = OutputDir::create(out, overwrite)?;
    let mut stages = Stages::default();
    let t = p.t_grid();
    match job.run {
        Run::Sweep => {
            let build = stages.time("build", || build_scenario(&p))?;
            let (table, max_imag) = stages.time("sweep", || {
                let cfg = EnsembleConfig { system: &p.system, truncation: &p.pm.truncation, integrator: &p.integrator, t_grid: &t, n_traj: p.field.n_traj };
                run_lambda_sweep(&build.scenario, &p.lambda_grid(), &cfg)
            })?;
            write_sweep(dir.writer("sweep.csv")?, &table)?;
            println!("sweep: {} Lambda points x {} times; max |Im| of ensemble means {max_imag:.2e}", table.lambda_grid.len(), t.len());
        }
        Run::Mitigate => {
            let r = stages.time("mitigate", || mitigation_experiment(&p))?;
            sweep_outputs(&mut dir, &r.run)?;
            comparison(&mut dir, &t, &[("free", &r.free), ("dissipative", &r.dissipative), ("mitigated", &r.run.bundle.sigma_z())])?;
            println!("max |d<sz>| vs free dynamics: mitigated {:.3e}, unmitigated {:.3e}", r.mitigated.max_abs, r.unmitigated.max_abs);
        }
        Run::Simulate if p.mode == ProtocolMode::Direct => {
            let r = stages.time("direct", || direct_experiment(&p))?;
            let stderr: Vec<f64> = r.result.stderr.iter().map(|s| s[2]).collect();
            comparison(&mut dir, &t, &[("oracle", &r.oracle), ("simulated", &r.result.sigma_z()), ("stderr", &stderr)])?;
            println!("direct simulation with a real field (band up to omega = {:.4}); max |d<sz>| vs oracle {:.3e}", r.build.band_cutoff.unwrap_or(f64::INFINITY), r.vs_oracle.max_abs);
        }
        Run::Simulate => {
            let r = stages.time("simulate", || simulation_experiment(&p))?;
            sweep_outputs(&mut dir, &r.run)?;
            let rec = r.run.bundle.sigma_z();
            comparison(&mut dir, &t, &[("oracle", &r.oracle), ("oracle_sampled", &r.oracle_sampled), ("no_field", &r.no_field), ("simulated", &rec)])?;
            println!("max |d<sz>|: vs oracle {:.3e}, vs critical-point run {:.3e}", r.vs_oracle.max_abs, r.vs_sampled.max_abs);
        }
        Run::Restructure => {
            let r = stages.time("restructure", || restructuring_experiment(&p))?;
            sweep_outputs(&mut dir, &r.run)?;
            let rec = r.run.bundle.sigma_z();
            comparison(&mut dir, &t, &[("oracle", &r.oracle), ("oracle_sampled", &r.oracle_sampled), ("original", &r.original), ("restructured", &rec)])?;
            println!("max |d<sz>|: vs target oracle {:.3e}, vs critical-point run {:.3e}", r.vs_oracle.max_abs, r.vs_sampled.max_abs);
        }
        Run::Gate => {
            let r = stages.time("gate", || gate_fidelity_experiment(&p))?;
            let rows = r.rows.iter().map(|g| vec![num(g.gate_time), num(g.unmitigated), num(g.mitigated)]);
            write_rows(dir.writer("gate.csv")?, &["gate_time", "unmitigated", "mitigated"], rows)?;
            println!("resonance at gate time {:.4}", r.resonance_time);
            for g in &r.rows {
                println!("  T = {:>6.3}  fidelity {:.6} -> {:.6}", g.gate_time, g.unmitigated, g.mitigated);
            }
        }
        Run::Errstudy { sigma } => {
            let sigma = sigma.unwrap_or(p.extrapolation.noise_sigma);
            let s = stages.time("errstudy", || error_vs_order_study(&p, sigma))?;
            write_sweep(dir.writer("sweep.csv")?, &s.table)?;
            let rows = s.rows.iter().map(|r| vec![r.order_m.to_string(), num(r.mean_error), num(r.noiseless_error)]);
            write_rows(dir.writer("errstudy.csv")?, &["M", "mean_error", "noiseless_error"], rows)?;
            println!("best order M = {} at sigma = {sigma:e}", s.best_order());
        }
    }
    let mut m = toml::Table::new();
    m.insert("tool".into(), "pseudomode".into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("command".into(), job.run.name().into());
    m.insert("seed".into(), toml::Value::Integer(job.seed as i64));
    if let Some(n) = job.traj {
        m.insert("traj".into(), toml::Value::Integer(n as i64));
    }
    if let Run::Errstudy { sigma: Some(s) } = job.run {
        m.insert("sigma".into(), toml::Value::Float(s));
    }
    m.insert("workers".into(), toml::Value::Integer(rayon::current_num_threads() as i64));
    m.insert("preset_sha256".into(), sha256_hex(job.preset.source.as_bytes()).into());
    m.insert("preset".into(), job.preset.source.clone().into());
    m.insert("wall_seconds".into(), toml::Value::Table(stages.table()));
    let hashes: toml::Table = dir.file_hashes()?.into_iter().map(|(k, v)| (k, toml::Value::String(v))).collect();
    m.insert("outputs".into(), toml::Value::Table(hashes));
    dir.write_text("manifest.toml", &toml::to_string(&m).map_err(|e| Error::Parse(e.to_string()))?)?;
    let done = dir.commit()?;
    println!("wrote {}", done.display());
    Ok(())
}

fn replay(manifest: &Path, out: &Path, overwrite: bool) -> Result<()> {
    let text = std::fs::read_to_string(manifest)?;
    let m: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(format!("{}: {}", manifest.display(), e.message())))?;
    let field = |k: &str| m.get(k).ok_or_else(|| Error::Config(vec![format!("manifest: missing `{k}`")]));
    let command = field("command")?.as_str().unwrap_or_default();
    let sigma = m.get("sigma").and_then(|v| v.as_float());
    let run = Run::from_name(command, sigma).ok_or_else(|| Error::Config(vec![format!("manifest: unknown command `{command}`")]))?;
    let source = field("preset")?.as_str().unwrap_or_default();
    if let Some(h) = m.get("preset_sha256").and_then(|v| v.as_str()) {
        if h != sha256_hex(source.as_bytes()) {
            return Err(Error::Config(vec!["manifest: preset snapshot does not match its hash".into()]));
        }
    }
    let seed = field("seed")?.as_integer().ok_or_else(|| Error::Config(vec!["manifest: `seed` must be an integer".into()]))? as u64;
    let traj = m.get("traj").and_then(|v| v.as_integer()).map(|n| n as usize);
    execute(Job { run, preset: ExperimentPreset::parse(source)?, seed, traj }, out, overwrite)
}

fn bounds(n: usize, m: usize, sigma: f64, q: Option<f64>) -> Result<()> {
    if m > n {
        return Err(Error::Config(vec![format!("M = {m} needs at least M + 1 grid points, N = {n} gives {}", n + 1)]));
    }
    let grid = equispaced_grid(n + 1);
    let t = design_matrix(&grid, m);
    let smin = min_singular_value(&t);
    let stab = stability_bound(&t, LAMBDA_C, sigma)?;
    println!("N = {n} ({} points), M = {m}, sigma = {sigma:e}, z = {LAMBDA_C}", n + 1);
    println!("rho_z                      {:.6}", bernstein_rho(LAMBDA_C));
    println!("sigma_min(T)               {smin:.6e}");
    match min_singular_lower_bound(n, m) {
        Some(b) => println!("sigma_min lower bounds     tight {:.6e}  relaxed {:.6e}", b.tight, b.relaxed),
        None => println!("sigma_min lower bounds     n/a (needs N >= 2M)"),
    }
    println!("stability error            {:.6e}", stab.analytic);
    println!("  coefficient-wise sum     {:.6e}", stab.coefficientwise);
    println!("  exact rms                {:.6e}", stab.rms);
    if let Some(q_rho) = q {
        for rho in default_rho_scan(LAMBDA_C) {
            let b = BiasInputs { order_m: m, n, rho, q_rho, z: LAMBDA_C, min_sv: smin };
            println!("bias bound at rho = {rho:.4}  {:.6e}  (relaxed {:.6e})", bias_bound(&b), bias_bound_relaxed(&b));
        }
    }
    Ok(())
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Correlation { bath, tmax, dt, part, out } => {
            let b = load_preset(&bath)?.bath;
            let ts = grid(tmax, dt)?;
            let split = brownian_correlation_split(&b, None);
            let quad = QuadratureConfig::default();
            let values = ts
                .iter()
                .map(|&t| match part.as_str() {
                    "total" => bath_correlation(t, &b, &quad),
                    "quantum" => Ok(split.c_q(t)),
                    "classical" => split.c_class(t),
                    other => Err(Error::Config(vec![format!("--part: expected total, quantum or classical, got `{other}`")])),
                })
                .collect::<Result<Vec<C64>>>()?;
            write_complex_series(create_file(&out)?, &ts, &values)
        }
        Command::Spectrum { bath, wmax, dw, kind, out } => {
            let b = load_preset(&bath)?.bath;
            let ws = grid(wmax, dw)?;
            let values = ws
                .iter()
                .map(|&w| match kind.as_str() {
                    "classical" => classical_spectrum(w, &b),
                    "quantum" => Ok(quantum_spectrum(w, &b)),
                    "total" => bath_spectrum(w, &b),
                    other => Err(Error::Config(vec![format!("--kind: expected classical, quantum or total, got `{other}`")])),
                })
                .collect::<Result<Vec<f64>>>()?;
            write_real_series(create_file(&out)?, &ws, &values)
        }
        Command::Reconstruct { input, order, sigma, out } => {
            let table = read_sweep(File::open(&input)?)?;
            let bundle = reconstruct(&table, order, sigma)?;
            write_reconstruction(create_file(&out)?, &bundle, &table.observables)
        }
        Command::Bounds { n, m, sigma, q } => bounds(n, m, sigma, q),
        Command::Sweep(a) => run_from_args(Run::Sweep, a),
        Command::Mitigate(a) => run_from_args(Run::Mitigate, a),
        Command::Simulate(a) => run_from_args(Run::Simulate, a),
        Command::Restructure(a) => run_from_args(Run::Restructure, a),
        Command::Gate(a) => run_from_args(Run::Gate, a),
        Command::Errstudy { run, sigma } => run_from_args(Run::Errstudy { sigma }, run),
        Command::Replay { manifest, out_dir, overwrite } => replay(&manifest, &out_dir, overwrite),
    }
}
