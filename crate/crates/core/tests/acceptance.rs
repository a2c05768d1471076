//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use carleman_core::audit::{run_property_audit, AUDIT_BETAS};
use carleman_core::diffusion::{self, stationary_residual, steady_state, DiffusionConfig};
use carleman_core::harness::{
    heat_oracle, restrict, run_sweep, ConvergenceReport, SweepConfig, UNIFORMITY_RATIO,
};
use carleman_core::kinetic::{self, relaxation_substep, KineticConfig};
use carleman_core::model::l2_norm_sq;
use carleman_core::{BoundaryData, Grid1D, InitPreset, InitialData, KineticState, TimeFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHAS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const LADDER: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(4)
}

fn l2_diff(a: &[f64], b: &[f64], grid: &Grid1D) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm_sq(&d, grid).sqrt()
}

fn mixed_sweep(alpha: f64, left: TimeFn, relaxation: bool) -> ConvergenceReport {
    let grid = Grid1D::new(200).unwrap();
    let bc = BoundaryData::new(left, TimeFn::Constant { c: 2.0 }, 1.0);
    let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &grid);
    let mut cfg = SweepConfig::new(alpha, bc, init, 1.0, LADDER.to_vec(), grid);
    cfg.relaxation = relaxation;
    cfg.jobs = jobs();
    run_sweep(&cfg).expect("sweep configuration is valid")
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let summary = run_property_audit(42, 1000);
    let secs = start.elapsed().as_secs_f64();
    let failing: Vec<String> = summary
        .checks
        .iter()
        .filter(|c| !c.ok())
        .map(|c| c.to_string())
        .collect();
    let passed: usize = summary.checks.iter().map(|c| c.passed).sum();
    let total: usize = summary.checks.iter().map(|c| c.samples).sum();
    Verdict::new(
        failing.is_empty() && secs < 5.0,
        format!(
            "{passed}/{total} samples over {} checks, betas {AUDIT_BETAS:?}, {secs:.2}s{}",
            summary.checks.len(),
            if failing.is_empty() {
                String::new()
            } else {
                format!("; failing {failing:?}")
            }
        ),
    )
}

/// Reference solution of the local relaxation ODE by tiny RK4 steps.
fn relaxation_oracle(u: f64, v: f64, dt: f64, epsilon: f64, alpha: f64) -> (f64, f64) {
    let k = (u + v).powf(alpha) / (epsilon * epsilon);
    let f = |u: f64, v: f64| (k * (v - u), k * (u - v));
    let n = 20_000;
    let h = dt / n as f64;
    let (mut u, mut v) = (u, v);
    for _ in 0..n {
        let (a1, b1) = f(u, v);
        let (a2, b2) = f(u + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = f(u + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = f(u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    (u, v)
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let grid = Grid1D::new(64).unwrap();

    // Positivity and mass balance on random data.
    let mut worst_mass: f64 = 0.0;
    let mut min_seen = f64::INFINITY;
    for (k, &alpha) in ALPHAS.iter().enumerate() {
        for (s, &cfl) in [1.0, 0.7, 0.3].iter().enumerate() {
            let seed = (10 * k + s) as u64;
            let init = InitialData::from_preset(&InitPreset::Random { seed, max: 3.0 }, &grid);
            let bc = BoundaryData::new(
                TimeFn::Sinusoid {
                    a: 1.5,
                    b: 0.5,
                    omega: 2.0 * PI,
                },
                TimeFn::Ramp { a: 0.5, b: 1.0 },
                0.5,
            );
            let mut cfg = KineticConfig::new(alpha, 0.1, grid, 0.5, bc, init);
            cfg.cfl = cfl;
            cfg.snapshot_stride = Some(1);
            let run = kinetic::run(&cfg).unwrap();
            for snap in &run.snapshots {
                for (&u, &v) in snap.state.u.iter().zip(&snap.state.v) {
                    min_seen = min_seen.min(u.min(v));
                }
            }
            worst_mass = worst_mass.max(run.mass.relative_defect());
        }
    }
    ok &= min_seen >= 0.0 && worst_mass <= 1e-12;
    notes.push(format!(
        "min density {min_seen:.3e}, mass defect {worst_mass:.2e}"
    ));

    // Relaxation: rho invariance and the exact exponential factor.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut rho_dev, mut ode_dev): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let alpha = ALPHAS[rng.random_range(0..5)];
        let u = rng.random_range(0.05..4.0);
        let v = rng.random_range(0.05..4.0);
        let eps = rng.random_range(0.05..1.0);
        let dt = rng.random_range(0.1..1.0) * eps * eps;
        let s = KineticState::new(0.0, vec![u], vec![v]).unwrap();
        let out = relaxation_substep(&s, dt, eps, alpha);
        rho_dev = rho_dev.max(((out.u[0] + out.v[0]) - (u + v)).abs() / (u + v));
        let (ou, ov) = relaxation_oracle(u, v, dt, eps, alpha);
        ode_dev = ode_dev
            .max((out.u[0] - ou).abs() / ou.abs())
            .max((out.v[0] - ov).abs() / ov.abs());
    }
    ok &= rho_dev <= 4.0 * f64::EPSILON && ode_dev <= 1e-8;
    notes.push(format!(
        "rho drift {rho_dev:.1e}, ODE oracle deviation {ode_dev:.1e}"
    ));

    // Equilibrium fixed point.
    let mut eq_dev: f64 = 0.0;
    for &alpha in &ALPHAS {
        let bc = BoundaryData::constant(1.3, 1.3, 1.0);
        let init = InitialData::from_preset(&InitPreset::Constant { u: 1.3, v: 1.3 }, &grid);
        let run = kinetic::run(&KineticConfig::new(alpha, 0.05, grid, 1.0, bc, init)).unwrap();
        for (&u, &v) in run.final_state.u.iter().zip(&run.final_state.v) {
            eq_dev = eq_dev.max((u - 1.3).abs()).max((v - 1.3).abs());
        }
    }
    ok &= eq_dev <= 1e-14;
    notes.push(format!("equilibrium drift {eq_dev:.1e}"));

    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    notes.push(format!("{secs:.2}s"));
    Verdict::new(ok, notes.join(", "))
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    // Heat oracle at alpha = 0.
    let coarse = Grid1D::new(200).unwrap();
    let fine = Grid1D::new(400).unwrap();
    let bc = BoundaryData::constant(1.0, 2.0, 1.0);
    let rho0 =
        |g: &Grid1D| g.sample(|x| 2.0 + 2.0 * x + (PI * x).sin() + 0.5 * (3.0 * PI * x).sin());
    let run = |g: Grid1D, dt: f64| {
        let cfg = DiffusionConfig::new(0.0, g, dt, 1.0, bc, rho0(&g));
        diffusion::solve(&cfg).unwrap().trajectory.last().to_vec()
    };
    let a = run(coarse, 1e-4);
    let b = restrict(&run(fine, 5e-5), 2);
    let oracle = heat_oracle(2.0, 4.0, &rho0(&coarse), &coarse, 1.0, 64);
    let err = l2_diff(&a, &oracle, &coarse);
    let self_conv = l2_diff(&a, &b, &coarse);
    // Halving dx and dt removes at least half of a first-order error.
    let bound = (2.0 * self_conv).min(1e-3);
    ok &= err <= bound;
    notes.push(format!(
        "heat L2 error {err:.2e} (self-convergence bound {bound:.2e})"
    ));

    // Closed-form steady states.
    let mut steady_res: f64 = 0.0;
    for &alpha in &ALPHAS {
        let g = Grid1D::new(200).unwrap();
        let rho = g.sample(|x| steady_state(alpha, 1.0, 2.0, x));
        let r = stationary_residual(alpha, &rho, &bc, 0.0);
        steady_res = steady_res.max(r.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    ok &= steady_res <= 1e-12;
    notes.push(format!("steady residual {steady_res:.1e}"));

    // Discrete maximum principle on random data.
    let g = Grid1D::new(50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let alpha = ALPHAS[k % 5];
        let (l, r): (f64, f64) = (rng.random_range(0.5..2.5), rng.random_range(0.5..2.5));
        let rho0: Vec<f64> = (0..50).map(|_| rng.random_range(0.2..6.0)).collect();
        let lo = rho0.iter().cloned().fold(2.0 * l.min(r), f64::min);
        let hi = rho0.iter().cloned().fold(2.0 * l.max(r), f64::max);
        let cfg = DiffusionConfig::new(
            alpha,
            g,
            1e-3,
            0.05,
            BoundaryData::constant(l, r, 1.0),
            rho0,
        );
        let out = diffusion::solve(&cfg).unwrap();
        for rho in &out.trajectory.rho {
            for &v in rho {
                worst = worst.max(lo - v).max(v - hi);
            }
        }
    }
    ok &= worst <= 1e-10;
    notes.push(format!("max-principle overshoot {:.1e}", worst.max(0.0)));

    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    notes.push(format!("{secs:.2}s"));
    Verdict::new(ok, notes.join(", "))
}

fn fmt_errs(v: &[f64]) -> String {
    v.iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(" > ")
}

fn criterion_4(sweeps: &[(f64, ConvergenceReport, f64)]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (alpha, rep, secs) in sweeps {
        let f = rep.flags;
        let pass = f.all_runs_ok
            && f.l2_strictly_decreasing
            && f.l2_halved
            && f.boundary_left_decreasing
            && f.boundary_right_decreasing
            && *secs < 300.0;
        ok &= pass;
        notes.push(format!(
            "alpha {alpha}: l2 {} [{}] ({secs:.1}s)",
            fmt_errs(&rep.l2_errors()),
            if pass { "ok" } else { "fail" }
        ));
    }
    Verdict::new(ok, notes.join("; "))
}

fn criterion_5(sweeps: &[(f64, ConvergenceReport, f64)]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (alpha, rep, _) in sweeps {
        let worst = rep.audit.iter().map(|r| r.max_over_min).fold(0.0, f64::max);
        ok &= rep.audit.iter().all(|r| r.uniform);
        notes.push(format!("alpha {alpha}: worst ratio {worst:.3}"));
    }
    let control = mixed_sweep(0.0, TimeFn::Constant { c: 1.0 }, false);
    let j2 = control.audit[0].max_over_min;
    ok &= j2 > 10.0 && !control.audit[0].uniform;
    notes.push(format!(
        "no-relaxation control j^2 ratio {j2:.1} (limit {UNIFORMITY_RATIO} for uniform)"
    ));
    Verdict::new(ok, notes.join("; "))
}

fn criterion_6(sweeps: &[(f64, ConvergenceReport, f64)]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (alpha, rep, _) in sweeps {
        let mut worst_frac: f64 = 1.0;
        let mut worst_ratio: f64 = f64::NEG_INFINITY;
        for row in &rep.rows {
            for s in &row.residual_stats {
                ok &= s.passes();
                worst_frac = worst_frac.min(s.fraction());
                worst_ratio = worst_ratio.max(s.max_residual / s.tol);
            }
        }
        ok &= rep.flags.entropy_inequality;
        notes.push(format!(
            "alpha {alpha}: min fraction within tol {worst_frac:.4}, max residual/tol {worst_ratio:.2}"
        ));
    }
    Verdict::new(ok, notes.join("; "))
}

fn criterion_7() -> Verdict {
    let grid = Grid1D::new(200).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    let results: Vec<(f64, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = [-1.0, 0.0, 1.0]
            .into_iter()
            .map(|alpha| {
                s.spawn(move || {
                    let bc = BoundaryData::constant(1.0, 2.0, 20.0);
                    let init =
                        InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &grid);
                    let run = kinetic::run(&KineticConfig::new(alpha, 0.05, grid, 20.0, bc, init))
                        .unwrap();
                    let exact = grid.sample(|x| steady_state(alpha, 1.0, 2.0, x));
                    (alpha, l2_diff(&run.final_state.rho(), &exact, &grid))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (alpha, err) in results {
        ok &= err <= 5e-3;
        notes.push(format!("alpha {alpha}: L2 {err:.3e}"));
    }
    Verdict::new(ok, format!("{} (limit 5e-3)", notes.join(", ")))
}

fn criterion_8() -> Verdict {
    let rep = mixed_sweep(
        0.0,
        TimeFn::Sinusoid {
            a: 1.5,
            b: 0.5,
            omega: 2.0 * PI,
        },
        true,
    );
    let f = rep.flags;
    let pass = f.all_runs_ok
        && f.l2_strictly_decreasing
        && f.l2_halved
        && f.boundary_left_decreasing
        && f.boundary_right_decreasing;
    let bl: Vec<f64> = rep.rows.iter().map(|r| r.boundary_err_left).collect();
    Verdict::new(
        pass,
        format!(
            "l2 {}, left trace {}",
            fmt_errs(&rep.l2_errors()),
            fmt_errs(&bl)
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, v: Verdict| {
        if !v.passed {
            failures += 1;
        }
        println!(
            "criterion {id} {}: {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    };

    report(1, "convex-analysis properties", criterion_1());
    report(2, "kinetic solver properties", criterion_2());
    report(3, "diffusion solver oracles", criterion_3());

    let sweeps: Vec<(f64, ConvergenceReport, f64)> = ALPHAS
        .iter()
        .map(|&alpha| {
            let start = Instant::now();
            let rep = mixed_sweep(alpha, TimeFn::Constant { c: 1.0 }, true);
            (alpha, rep, start.elapsed().as_secs_f64())
        })
        .collect();
    report(4, "diffusion-limit sweep", criterion_4(&sweeps));
    report(5, "uniform bounds audit", criterion_5(&sweeps));
    report(6, "entropy inequality", criterion_6(&sweeps));
    report(7, "long-time steady state", criterion_7());
    report(8, "time-dependent boundary data", criterion_8());

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
