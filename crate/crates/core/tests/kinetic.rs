use std::f64::consts::PI;

use carleman_core::kinetic::{self, step, KineticConfig};
use carleman_core::model::l2_norm_sq;
use carleman_core::{BoundaryData, Grid1D, InitPreset, InitialData, KineticState, TimeFn};
use proptest::prelude::*;

fn cfg(
    alpha: f64,
    eps: f64,
    nx: usize,
    t_end: f64,
    bc: BoundaryData,
    init: InitialData,
) -> KineticConfig {
    KineticConfig::new(alpha, eps, Grid1D::new(nx).unwrap(), t_end, bc, init)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_keeps_states_nonnegative(
        u in prop::collection::vec(0.0f64..5.0, 16),
        v in prop::collection::vec(0.0f64..5.0, 16),
        alpha_idx in 0usize..5,
        eps in 0.01f64..1.0,
        cfl in 0.05f64..1.0,
    ) {
        let alpha = [-1.0, -0.5, 0.0, 0.5, 1.0][alpha_idx];
        let bc = BoundaryData::constant(0.7, 1.9, 1.0);
        let mut c = cfg(alpha, eps, 16, 1.0, bc, InitialData::new(u.clone(), v.clone()).unwrap());
        c.cfl = cfl;
        let mut s = KineticState::new(0.0, u, v).unwrap();
        for _ in 0..5 {
            s = step(&s, c.dt(), &c).unwrap().state;
            prop_assert!(s.is_nonnegative());
        }
    }
}

/// For alpha = 0 the stationary kinetic problem is linear: u - v is constant
/// and rho is affine, with an O(eps) offset from the inflow values.
fn kinetic_steady_alpha0(eps: f64, left: f64, right: f64, x: f64) -> f64 {
    let j = -(right - left) / (1.0 + eps);
    let rho0 = 2.0 * left - eps * j;
    rho0 - 2.0 * j * x
}

#[test]
fn long_run_reaches_exact_kinetic_steady_state() {
    let eps = 0.1;
    let bc = BoundaryData::constant(1.0, 2.0, 6.0);
    let c = cfg(
        0.0,
        eps,
        100,
        6.0,
        bc,
        InitialData::from_preset(
            &InitPreset::Constant { u: 1.0, v: 1.0 },
            &Grid1D::new(100).unwrap(),
        ),
    );
    let run = kinetic::run(&c).unwrap();
    let grid = c.grid;
    let exact = grid.sample(|x| kinetic_steady_alpha0(eps, 1.0, 2.0, x));
    let diff: Vec<f64> = run
        .final_state
        .rho()
        .iter()
        .zip(&exact)
        .map(|(a, b)| a - b)
        .collect();
    let err = l2_norm_sq(&diff, &grid).sqrt();
    // The discrete scheme carries a small O(dx) bias at unit CFL.
    assert!(err < 2e-3, "err = {err}");
}

#[test]
fn splitting_is_second_order_on_smooth_data() {
    // One step of dt against two of dt/2, at CFL one half.
    let grid = Grid1D::new(64).unwrap();
    let u = grid.sample(|x| 1.5 + 0.3 * (2.0 * PI * x).sin());
    let v = grid.sample(|x| 1.5 - 0.2 * (2.0 * PI * x).cos());
    let bc = BoundaryData::constant(1.5, 1.4, 1.0);
    let mut c = cfg(
        0.5,
        1.0,
        64,
        1.0,
        bc,
        InitialData::new(u.clone(), v.clone()).unwrap(),
    );
    c.cfl = 0.5;
    let s0 = KineticState::new(0.0, u, v).unwrap();
    let mut diffs = Vec::new();
    for h in [0.4, 0.2, 0.1] {
        let dt = h * c.dt();
        let one = step(&s0, dt, &c).unwrap().state;
        let half = step(&step(&s0, 0.5 * dt, &c).unwrap().state, 0.5 * dt, &c)
            .unwrap()
            .state;
        // Compare away from the inflow cells.
        let d = (10..54)
            .map(|i| {
                (one.u[i] - half.u[i])
                    .abs()
                    .max((one.v[i] - half.v[i]).abs())
            })
            .fold(0.0, f64::max);
        diffs.push(d);
    }
    // The local defect shrinks at least quadratically in dt.
    assert!(diffs[1] < 0.3 * diffs[0], "{diffs:?}");
    assert!(diffs[2] < 0.3 * diffs[1], "{diffs:?}");
}

#[test]
fn runs_are_bitwise_deterministic() {
    let grid = Grid1D::new(40).unwrap();
    let bc = BoundaryData::new(
        TimeFn::Sinusoid {
            a: 1.5,
            b: 0.5,
            omega: 2.0 * PI,
        },
        TimeFn::Constant { c: 1.0 },
        0.3,
    );
    let init = InitialData::from_preset(&InitPreset::Random { seed: 3, max: 2.0 }, &grid);
    let mut c = cfg(-0.5, 0.1, 40, 0.3, bc, init);
    c.ledger_betas = vec![carleman_core::entropy::ConvexIndex::new(0.0).unwrap()];
    let a = kinetic::run(&c).unwrap();
    let b = kinetic::run(&c).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.ledgers, b.ledgers);
}

#[test]
fn time_dependent_inflow_keeps_mass_balance() {
    let grid = Grid1D::new(50).unwrap();
    let bc = BoundaryData::new(
        TimeFn::Ramp { a: 0.5, b: 2.0 },
        TimeFn::Sinusoid {
            a: 1.0,
            b: 0.5,
            omega: 3.0,
        },
        0.7,
    );
    let init = InitialData::from_preset(
        &InitPreset::Bump {
            base: 1.0,
            amplitude: 0.5,
        },
        &grid,
    );
    let run = kinetic::run(&cfg(1.0, 0.05, 50, 0.7, bc, init)).unwrap();
    assert!(run.mass.relative_defect() < 1e-12);
    assert!((run.final_state.t - 0.7).abs() < 1e-15);
}

#[test]
fn vacuum_data_with_negative_alpha_is_handled() {
    let bc = BoundaryData::constant(1.0, 1.0, 0.2);
    let init = InitialData::new(vec![0.0; 20], vec![0.0; 20]).unwrap();
    let run = kinetic::run(&cfg(-1.0, 0.1, 20, 0.2, bc, init)).unwrap();
    assert!(run.final_state.is_finite());
    assert!(run.final_state.is_nonnegative());
}

#[test]
fn inadmissible_configuration_is_rejected() {
    let grid = Grid1D::new(20).unwrap();
    let bc = BoundaryData::new(
        TimeFn::Sinusoid {
            a: 1.0,
            b: 1.0,
            omega: 1.0,
        },
        TimeFn::Constant { c: 1.0 },
        10.0,
    );
    let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &grid);
    let err = kinetic::run(&cfg(2.0, 0.1, 20, 10.0, bc, init)).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("alpha in [-1,1]"), "{msg}");
    assert!(msg.contains("positivity"), "{msg}");
}
