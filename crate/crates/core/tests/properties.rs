use proptest::prelude::*;
use pseudomode_core::extrapolation::{equispaced_grid, evaluate_at, least_squares_fit};
use pseudomode_core::io::{read_sweep, write_sweep};
use pseudomode_core::lindblad::{build_generator, initial_state, pm_correlation_analytic, propagate, reduce, CouplingOp};
use pseudomode_core::params::{antimode_set, regularize_param, regularize_set, ParamSelector};
use pseudomode_core::protocols::{bloch_to_state, phys_reg};
use pseudomode_core::*;

fn c64() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn mode(complex: bool) -> impl Strategy<Value = Mode> {
    let z = move |lo: f64, hi: f64| (lo..hi, -1.0..1.0f64).prop_map(move |(r, i)| C64::new(r, if complex { i } else { 0.0 }));
    (z(0.0, 2.0), z(-1.0, 1.0), z(0.05, 1.0), z(0.0, 1.0)).prop_map(|(omega, g2, gamma, nbar)| Mode::new(omega, g2, gamma, nbar, 2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn regularization_is_physical_on_the_real_segment(eta in c64(), l in -1.0..=1.0f64) {
        let r = regularize_param(eta, C64::new(l, 0.0));
        prop_assert_eq!(r.im, 0.0);
        prop_assert!(r.re >= 0.0);
    }

    #[test]
    fn regularization_is_undone_at_the_critical_point(eta in c64()) {
        prop_assert!((regularize_param(eta, LAMBDA_C) - eta).norm() <= 1e-14 * (1.0 + eta.norm()));
    }

    #[test]
    fn regularized_sets_are_physical(modes in prop::collection::vec(mode(true), 1..5), l in -1.0..=1.0f64) {
        let set = PseudomodeSet::new("r", modes, None);
        let reg = regularize_set(&set, C64::new(l, 0.0), &ParamSelector::all());
        prop_assert!(reg.modes.iter().all(Mode::is_physical));
    }

    #[test]
    fn antimodes_cancel(modes in prop::collection::vec(mode(true), 5), t in 0.0..10.0f64) {
        let set = PseudomodeSet::new("s", modes, None);
        let mut both = set.clone();
        both.modes.extend(antimode_set(&set).modes);
        let scale = 1.0 + pm_correlation_analytic(&set, t).norm();
        prop_assert!(pm_correlation_analytic(&both, t).norm() <= 1e-14 * scale);
    }

    #[test]
    fn regularized_bloch_vectors_are_states(v in prop::array::uniform3(c64())) {
        let b = phys_reg(&v);
        prop_assert!(b.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
        let rho = bloch_to_state(&b);
        prop_assert!((rho[0] + rho[3] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn fits_reproduce_low_degree_polynomials(coeffs in prop::collection::vec(-1.0..1.0f64, 1..6), extra in 0usize..3) {
        let grid = equispaced_grid(12);
        let m = coeffs.len() - 1 + extra;
        let values: Vec<f64> = grid.iter().map(|&l| evaluate_at(&coeffs, l.into()).re).collect();
        let fit = least_squares_fit(&grid, &values, m).unwrap();
        let want = evaluate_at(&coeffs, LAMBDA_C);
        prop_assert!((evaluate_at(&fit.coeffs, LAMBDA_C) - want).norm() <= 1e-11 * (1.0 + want.norm()));
    }

    #[test]
    fn sweep_tables_round_trip(vals in prop::collection::vec(-1e3..1e3f64, 12)) {
        let g = equispaced_grid(4);
        let t = SweepTable {
            lambda_grid: g.clone(),
            t_grid: vec![0.0, 0.5, 1.0],
            observables: vec!["sz".into()],
            values: (0..4).map(|l| (0..3).map(|k| vec![vals[3 * l + k]]).collect()).collect(),
            stderr: (0..4).map(|l| (0..3).map(|k| vec![vals[3 * l + k].abs() * 1e-7]).collect()).collect(),
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &t).unwrap();
        prop_assert_eq!(read_sweep(buf.as_slice()).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Physical parameters give a completely positive, trace-preserving evolution.
    #[test]
    fn physical_sets_keep_states_physical(
        modes in prop::collection::vec(mode(false), 1..3),
        omega_s in 0.0..2.0f64,
        delta in 0.0..2.0f64,
        sz in any::<bool>(),
    ) {
        let modes: Vec<Mode> = modes.into_iter().map(|m| Mode { fock_dim: 3, g2: C64::new(m.g2.re.abs(), 0.0), ..m }).collect();
        let set = PseudomodeSet::new("p", modes, None);
        let sys = SystemSpec::new(omega_s, delta, if sz { CouplingOp::SigmaZ } else { CouplingOp::SigmaX });
        let gen = build_generator(&sys, &set, &Truncation::default()).unwrap();
        let rho0 = initial_state(&gen, &sys, &set).unwrap();
        let states = propagate(&gen, &rho0, None, &[0.0, 1.0, 3.0], &IntegratorConfig::default()).unwrap();
        for r in &states {
            prop_assert!((r.trace() - 1.0).norm() < 1e-8);
            prop_assert!(r.hermiticity_error() < 1e-8);
            prop_assert!(r.min_eigenvalue() > -1e-7);
            let s = reduce(r);
            prop_assert!((s[0] + s[3] - 1.0).norm() < 1e-8);
        }
    }
}
