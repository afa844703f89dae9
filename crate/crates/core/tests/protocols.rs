use pseudomode_core::protocols::*;
use pseudomode_core::*;

fn preset(name: &str) -> ExperimentPreset {
    ExperimentPreset::builtin(name).unwrap()
}

#[test]
fn every_builtin_builds() {
    for (name, _) in BUILTIN_PRESETS {
        let p = preset(name);
        let b = build_scenario(&p).unwrap();
        match p.mode {
            ProtocolMode::Mitigate => assert!(!b.scenario.is_lambda_independent(), "{name}"),
            ProtocolMode::Direct => assert!(b.scenario.is_lambda_independent(), "{name}"),
            _ => {}
        }
    }
}

#[test]
fn zero_temperature_restructuring_needs_an_imaginary_component() {
    let b = build_scenario(&preset("restructure")).unwrap();
    let diff = &b.scenario.engineered.field.as_ref().unwrap().spec;
    assert!(diff.coeffs.iter().any(|c| *c < 0.0));
    assert!(!diff.is_real());
}

#[test]
fn direct_mode_refuses_negative_coefficients() {
    let mut p = preset("direct");
    p.field.nonnegative_band = false;
    assert!(matches!(direct_experiment(&p), Err(Error::Inconsistent(_))));
}

#[test]
fn mitigation_cancels_at_the_critical_point() {
    let mut p = preset("mitigation");
    p.sweep.t_end = 3.0;
    let t = p.t_grid();
    let b = build_scenario(&p).unwrap();
    let z = critical_point_run(&p, &b.scenario, &t).unwrap().sigma_z();
    let free: Vec<f64> = free_dynamics(&p.system, &t, &p.integrator).unwrap().iter().map(|v| v[2]).collect();
    let untouched = deterministic_run(&p, &p.system, &b.scenario.base, &t).unwrap().sigma_z();
    assert!(deviation(&z, &free).max_abs < 5e-4);
    assert!(deviation(&untouched, &free).max_abs > 1e-2);
}

#[test]
fn ensembles_are_reproducible() {
    let mut p = preset("simulation");
    p.sweep.t_end = 1.0;
    p.field.n_traj = 8;
    p.field.n_xi = 40;
    let t = p.t_grid();
    let b = build_scenario(&p).unwrap();
    let cfg = EnsembleConfig { system: &p.system, truncation: &p.pm.truncation, integrator: &p.integrator, t_grid: &t, n_traj: p.field.n_traj };
    let lambdas = [C64::new(-0.5, 0.0), C64::new(0.5, 0.0)];
    let first = run_ensembles(&b.scenario, &lambdas, &cfg).unwrap();
    assert_eq!(first, run_ensembles(&b.scenario, &lambdas, &cfg).unwrap());
    assert_ne!(first[0], first[1]);
}

#[test]
fn simulation_matches_critical_point_ensemble() {
    let mut p = preset("simulation");
    p.sweep.t_end = 2.0;
    p.field.n_traj = 40;
    p.field.n_xi = 60;
    p.field.horizon = 4.0;
    let r = simulation_experiment(&p).unwrap();
    assert!(!r.lambda_independent);
    // Common random numbers make the continued sweep track the same draws.
    assert!(r.vs_sampled.max_abs < 1e-2, "{:?}", r.vs_sampled);
    assert!(r.run.max_imag < 1e-12);
}

#[test]
fn mitigated_gate_is_at_least_as_good() {
    let mut p = preset("gate-z");
    p.gate.as_mut().unwrap().times = vec![2.0];
    let r = gate_fidelity_experiment(&p).unwrap();
    let row = r.rows[0];
    assert!(row.mitigated >= row.unmitigated && row.mitigated > 0.99, "{row:?}");
    assert!((r.resonance_time - std::f64::consts::PI / p.bath.big_omega()).abs() < 1e-12);
}
