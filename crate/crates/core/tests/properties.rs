//! Property tests for the library invariants: hysteresis operators, energy
//! densities, discrete calculus, the stationary solver and the stepper.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hystdiff::diagnostics::{energy_report, sigma};
use hystdiff::energy::{CoefficientField, EnergyModel};
use hystdiff::grid::{Field, Grid1D};
use hystdiff::hysteresis::{HysteresisModel, ScalarString};
use hystdiff::load::{Load, Profile, TimeFactor};
use hystdiff::stationary::{solve_stationary, StationaryOptions};
use hystdiff::stepper::{run, NodeHysteresis, Problem, StepConfig};

fn any_model() -> impl Strategy<Value = HysteresisModel> {
    let play = (0.01f64..2.0, -1.0f64..1.0)
        .prop_map(|(r, w0)| HysteresisModel::play_with_initial(r, w0).unwrap());
    let stop = (0.01f64..2.0).prop_map(|r| HysteresisModel::stop(r).unwrap());
    let preisach = (1usize..6, 1usize..6)
        .prop_map(|(a, b)| HysteresisModel::preisach_grid((-1.0, 0.0), (0.0, 1.0), a, b, 0.05, false).unwrap());
    let leaf = prop_oneof![play, stop, preisach, Just(HysteresisModel::zero())];
    prop_oneof![
        3 => leaf.clone(),
        1 => prop::collection::vec((0.0f64..3.0, leaf), 1..4)
            .prop_map(|terms| HysteresisModel::weighted_sum(terms).unwrap()),
    ]
}

fn any_string(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rate_independence(model in any_model(), v in any_string(200), gaps in prop::collection::vec(1e-3f64..5.0, 200)) {
        let uniform: Vec<f64> = (0..v.len()).map(|k| k as f64).collect();
        let mut t = 0.0;
        let warped: Vec<f64> = gaps[..v.len()].iter().map(|g| { t += g; t }).collect();
        prop_assert_eq!(model.evaluate_path(&uniform, &v).unwrap(), model.evaluate_path(&warped, &v).unwrap());
    }

    #[test]
    fn dissipation_is_nonnegative(model in any_model(), v in any_string(200)) {
        let s = ScalarString::new(v).unwrap();
        prop_assert!(model.dissipation_gap(&s).unwrap() >= -1e-14);
    }

    #[test]
    fn affine_growth_bound(model in any_model(), v in any_string(200)) {
        let (k0, g0) = model.affine_bound();
        let s = ScalarString::new(v).unwrap();
        let w = model.evaluate_string(&s).unwrap();
        prop_assert!(w.abs() <= k0 + g0 * s.sup_norm() + 1e-14);
    }

    #[test]
    fn increments_within_bound(model in any_model(), v in any_string(100), dt in 1e-3f64..2.0) {
        let times: Vec<f64> = (0..v.len()).map(|k| k as f64 * dt).collect();
        let w = model.evaluate_path(&times, &v).unwrap();
        for k in 1..v.len() {
            let bound = model.increment_bound(v[k - 1], v[k], dt);
            prop_assert!((w[k] - w[k - 1]).abs() <= bound + 1e-14);
        }
    }

    #[test]
    fn semigroup(model in any_model(), s in any_string(60), t in any_string(60)) {
        let s = ScalarString::new(s).unwrap();
        let t = ScalarString::new(t).unwrap();
        let whole = model.evaluate_string(&s.concat(&t)).unwrap();
        let mut state = model.memory_after(&s).unwrap();
        let mut w = f64::NAN;
        for &v in t.values() {
            w = model.advance(&mut state, v).unwrap();
        }
        prop_assert_eq!(whole, w);
    }

    #[test]
    fn last_value_is_nondecreasing(model in any_model(), prefix in any_string(40)) {
        let s = ScalarString::new(prefix).unwrap();
        let state = model.memory_after(&s).unwrap();
        let map = model.last_value_map(&state).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=600 {
            let v = -4.0 + 8.0 * k as f64 / 600.0;
            let (_, w) = model.update(&state, v).unwrap();
            prop_assert!(w >= prev);
            prop_assert!((map.eval(v) - w).abs() <= 1e-12 * (1.0 + w.abs()));
            prev = w;
        }
    }
}

fn any_energy() -> impl Strategy<Value = EnergyModel> {
    prop_oneof![
        (2.0f64..5.0, 0.1f64..2.0).prop_map(|(p, s)| EnergyModel::ppower(p, s).unwrap()),
        (2.0f64..5.0, 0.1f64..2.0, 0.01f64..1.0).prop_map(|(p, s, d)| EnergyModel::regularized_ppower(p, s, d).unwrap()),
        (0.1f64..5.0, 0.1f64..5.0)
            .prop_map(|(a, b)| EnergyModel::quadratic(CoefficientField::piecewise(vec![(0.0, a), (0.5, b)]).unwrap())),
    ]
}

fn slope_away_from_zero() -> impl Strategy<Value = f64> {
    (1e-2f64..10.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flux_matches_value_differences(e in any_energy(), lam in slope_away_from_zero(), x in 0.0f64..1.0) {
        let step = 1e-6 * (1.0 + lam.abs());
        let fd = (e.value_1d(x, lam + step) - e.value_1d(x, lam - step)) / (2.0 * step);
        let a = e.flux_1d(x, lam);
        prop_assert!((a - fd).abs() <= 1e-6 * a.abs());
        let fd_slope = (e.flux_1d(x, lam + step) - e.flux_1d(x, lam - step)) / (2.0 * step);
        let s = e.flux_slope_1d(x, lam);
        prop_assert!((s - fd_slope).abs() <= 1e-6 * s.abs());
    }

    #[test]
    fn convex_along_segments(e in any_energy(), l1 in -10.0f64..10.0, l2 in -10.0f64..10.0, t in 0.0f64..1.0, x in 0.0f64..1.0) {
        let (j1, j2) = (e.value_1d(x, l1), e.value_1d(x, l2));
        let mid = e.value_1d(x, t * l1 + (1.0 - t) * l2);
        prop_assert!(mid <= t * j1 + (1.0 - t) * j2 + 1e-12 * (1.0 + j1.abs() + j2.abs()));
    }

    #[test]
    fn subgradient_inequality(e in any_energy(), l in -10.0f64..10.0, mu in -10.0f64..10.0, x in 0.0f64..1.0) {
        let (jl, jm) = (e.value_1d(x, l), e.value_1d(x, mu));
        let lin = e.flux_1d(x, mu) * (l - mu);
        prop_assert!(jl - jm >= lin - 1e-12 * (1.0 + jl.abs() + jm.abs()));
    }

    #[test]
    fn strict_monotonicity(e in any_energy(), l in -10.0f64..10.0, mu in -10.0f64..10.0, x in 0.0f64..1.0) {
        let gap = (e.flux_1d(x, l) - e.flux_1d(x, mu)) * (l - mu);
        prop_assert!(gap >= 0.0);
        if (l - mu).abs() > 1e-3 {
            prop_assert!(gap > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_energy_gradient(
        e in any_energy(),
        seed in any::<u64>(),
        n in 4usize..40,
    ) {
        let grid = Grid1D::new(n, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = vec![0.0; n + 1];
        let mut phi = vec![0.0; n + 1];
        for i in 1..n {
            u[i] = rng.gen_range(-1.0..1.0);
            phi[i] = rng.gen_range(-1.0..1.0);
        }
        let field = Field::dirichlet(u.clone()).unwrap();
        let r = grid.assemble_residual(&e, &field, &vec![0.0; n + 1]).unwrap();
        let lhs: f64 = r.iter().zip(&phi[1..n]).map(|(a, b)| a * b).sum();
        let gu = grid.gradient(&field).unwrap();
        let gphi = grid.gradient(&Field::dirichlet(phi.clone()).unwrap()).unwrap();
        let terms: Vec<f64> = (0..n).map(|c| e.flux_1d(grid.midpoint(c), gu[c]) * gphi[c] * grid.dx()).collect();
        let rhs: f64 = terms.iter().sum();
        let magnitude: f64 = 1.0 + terms.iter().map(|t| t.abs()).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * magnitude);

        // directional derivative of the stored energy
        let eps = 1e-6;
        let shifted = |s: f64| -> Vec<f64> { u.iter().zip(&phi).map(|(a, b)| a + s * b).collect() };
        let fd = (grid.stored_energy(&e, &shifted(eps)) - grid.stored_energy(&e, &shifted(-eps))) / (2.0 * eps);
        prop_assert!((fd - lhs).abs() <= 1e-6 * magnitude);
    }

    #[test]
    fn lumped_mass_is_symmetric_positive(seed in any::<u64>(), n in 2usize..40) {
        let grid = Grid1D::new(n, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.1..3.0)).collect();
        let a: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ma = grid.lumped_mass_apply(&c, &Field::free(a.clone()).unwrap()).unwrap();
        let mb = grid.lumped_mass_apply(&c, &Field::free(b.clone()).unwrap()).unwrap();
        let ab: f64 = ma.iter().zip(&b[1..]).map(|(x, y)| x * y).sum();
        let ba: f64 = mb.iter().zip(&a[1..]).map(|(x, y)| x * y).sum();
        prop_assert!((ab - ba).abs() <= 1e-14 * (1.0 + ab.abs()));
        let aa: f64 = ma.iter().zip(&a[1..]).map(|(x, y)| x * y).sum();
        prop_assert!(aa >= 0.0);
    }

    #[test]
    fn stationary_minimizer_certificate(p in 2.0f64..4.0, amp in 0.1f64..5.0, seed in any::<u64>()) {
        let grid = Grid1D::new(60, 1.0).unwrap();
        let e = EnergyModel::ppower(p, 1.0 / p).unwrap();
        let g: Vec<f64> = grid.nodes().iter().map(|&x| amp * (1.0 + x)).collect();
        let sol = solve_stationary(&grid, &e, &g, None, &StationaryOptions::default()).unwrap();
        let base = grid.discrete_energy(&e, &sol.u, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let v: Vec<f64> = (0..=60).map(|i| if i == 0 || i == 60 { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
            for eps in [1e-4, -1e-4] {
                let moved: Vec<f64> = sol.u.values().iter().zip(&v).map(|(a, b)| a + eps * b).collect();
                let other = grid.discrete_energy(&e, &Field::dirichlet(moved).unwrap(), &g).unwrap();
                prop_assert!(base <= other);
            }
        }
    }

    #[test]
    fn stationary_scaling(p in 2.0f64..4.0, s in 0.1f64..10.0) {
        let grid = Grid1D::new(80, 1.0).unwrap();
        let e = EnergyModel::ppower(p, 1.0 / p).unwrap();
        let g: Vec<f64> = grid.nodes().iter().map(|&x| (PI * x).sin() + 0.5).collect();
        let sg: Vec<f64> = g.iter().map(|v| s * v).collect();
        let opts = StationaryOptions::default();
        let u1 = solve_stationary(&grid, &e, &g, None, &opts).unwrap();
        let u2 = solve_stationary(&grid, &e, &sg, None, &opts).unwrap();
        let factor = s.powf(1.0 / (p - 1.0));
        let sup = u2.u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in u1.u.values().iter().zip(u2.u.values()) {
            prop_assert!((factor * a - b).abs() <= 1e-6 * sup);
        }
    }
}

#[test]
fn stationary_mesh_convergence() {
    let e = EnergyModel::ppower(3.0, 1.0 / 3.0).unwrap();
    let exact = |x: f64| (2.0 / 3.0) * (0.5f64.powf(1.5) - (x - 0.5).abs().powf(1.5));
    let mut errors = Vec::new();
    for n in [50, 100, 200, 400] {
        let grid = Grid1D::new(n, 1.0).unwrap();
        let sol = solve_stationary(&grid, &e, &vec![1.0; n + 1], None, &StationaryOptions::default()).unwrap();
        let err = sol
            .u
            .values()
            .iter()
            .zip(grid.nodes())
            .fold(0.0f64, |m, (u, x)| m.max((u - exact(x)).abs()));
        errors.push(err);
    }
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
        assert!((w[0] / w[1]).log2() >= 1.0, "{errors:?}");
    }
}

fn smooth_problem(ell: usize) -> Problem {
    let grid = Grid1D::new(100, 1.0).unwrap();
    let u0 = Field::dirichlet_from_fn(&grid, |x| (PI * x).sin());
    Problem::new(
        grid,
        EnergyModel::regularized_ppower(3.0, 1.0 / 3.0, 0.5).unwrap(),
        vec![1.0; 101],
        NodeHysteresis::uniform(HysteresisModel::zero(), 101),
        Load::separable(Profile::Constant(1.0), TimeFactor::Sin { omega: 2.0 * PI, phase: 0.0 }).unwrap(),
        u0,
        StepConfig::new(ell, 0.5).unwrap(),
    )
    .unwrap()
}

#[test]
fn step_doubling_first_order() {
    let finals: Vec<Vec<f64>> = [20, 40, 80, 160]
        .iter()
        .map(|&ell| run(&smooth_problem(ell)).unwrap().records.last().unwrap().u.clone())
        .collect();
    let grid = Grid1D::new(100, 1.0).unwrap();
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| grid.l2(&w[0].iter().zip(&w[1]).map(|(a, b)| a - b).collect::<Vec<_>>()))
        .collect();
    for d in diffs.windows(2) {
        let order = (d[0] / d[1]).log2();
        assert!(order >= 1.0, "differences {diffs:?}, order {order}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn recorded_fields_respect_sigma_bounds(amp in 0.0f64..2.0, mode in 1u32..4, ell in 5usize..40) {
        let grid = Grid1D::new(40, 1.0).unwrap();
        let e = EnergyModel::ppower(3.0, 1.0 / 3.0).unwrap();
        let u0 = Field::dirichlet_from_fn(&grid, |x| amp * (mode as f64 * PI * x).sin());
        let problem = Problem::new(
            grid.clone(),
            e.clone(),
            vec![1.0; 41],
            NodeHysteresis::uniform(HysteresisModel::play(0.1).unwrap(), 41),
            Load::separable(Profile::Constant(1.0), TimeFactor::Constant).unwrap(),
            u0,
            StepConfig::new(ell, 0.2).unwrap(),
        ).unwrap();
        let trace = run(&problem).unwrap();
        prop_assert_eq!(trace.records.len(), ell + 1);
        for r in &trace.records {
            let field = Field::dirichlet(r.u.clone()).unwrap();
            let s = sigma(&grid, &e, &field).unwrap();
            let grad_pow = grid.gradient_lp_pow(&r.u, 3.0);
            // alpha1 |grad u|^p equals sigma for a pure power, so compare relatively
            prop_assert!(e.alpha1() * grad_pow <= s + 1e-14 * (1.0 + s));
            prop_assert!(s <= e.alpha2() * (grid.length() + grad_pow) + 1e-14 * (1.0 + s));
        }
        let rep = energy_report(&trace).unwrap();
        prop_assert!(rep.passed(1e-8));
        prop_assert!(trace.records.windows(2).all(|w| w[1].time > w[0].time));
    }
}
