//! Seeded randomized property checks of the convex-analysis layer.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entropy::{
    big_phi, big_phi_prime, coercivity_constant, phi, phi_dual, production, relative_entropy,
    ConvexIndex, Profile,
};
use crate::model::{l2_norm_sq, BoundaryData, EntropyParams, Grid1D, KineticState, TimeFn};

pub const AUDIT_BETAS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    pub passed: usize,
    /// Largest violation margin seen (positive means failure).
    pub worst: f64,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            passed: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    /// Records a sample whose violation margin is `margin` (`<= 0` passes).
    fn record(&mut self, margin: f64) {
        self.samples += 1;
        if margin <= 0.0 {
            self.passed += 1;
        }
        if margin.is_nan() {
            self.worst = f64::NAN;
        } else if !self.worst.is_nan() {
            self.worst = self.worst.max(margin);
        }
    }

    pub fn ok(&self) -> bool {
        self.samples > 0 && self.passed == self.samples
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {:>6}/{:<6} {} (worst margin {:.3e})",
            self.name,
            self.passed,
            self.samples,
            if self.ok() { "ok" } else { "FAILED" },
            self.worst
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl AuditSummary {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckResult::ok)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Grid search for `sup_{y >= 0} (xi y - phi(y))`, independent of the closed
/// form. The range starts at `[0, 100]` and doubles while the maximizer sits
/// on its upper end; the bracket around the best node is then refined.
pub fn brute_force_dual(beta: ConvexIndex, xi: f64) -> f64 {
    let obj = |y: f64| xi * y - phi(beta, y);
    const NODES: usize = 2000;
    let mut upper = 100.0;
    let (mut lo, mut hi);
    loop {
        let h = upper / NODES as f64;
        let k = (0..=NODES)
            .max_by(|&a, &b| obj(a as f64 * h).total_cmp(&obj(b as f64 * h)))
            .unwrap();
        if k == NODES && upper < 1e12 {
            upper *= 2.0;
            continue;
        }
        lo = (k.saturating_sub(1)) as f64 * h;
        hi = ((k + 1).min(NODES)) as f64 * h;
        break;
    }
    let mut best = obj(lo).max(obj(hi));
    for _ in 0..6 {
        let h = (hi - lo) / NODES as f64;
        let k = (0..=NODES)
            .max_by(|&a, &b| obj(lo + a as f64 * h).total_cmp(&obj(lo + b as f64 * h)))
            .unwrap();
        best = best.max(obj(lo + k as f64 * h));
        let (nlo, nhi) = (
            lo + k.saturating_sub(1) as f64 * h,
            lo + (k + 1).min(NODES) as f64 * h,
        );
        lo = nlo;
        hi = nhi;
        if hi - lo < 1e-13 * (1.0 + hi) {
            break;
        }
    }
    best
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> KineticState {
    let mut draw = || lo + (hi - lo) * rng.random::<f64>();
    let u = (0..n).map(|_| draw()).collect();
    let v = (0..n).map(|_| draw()).collect();
    KineticState { t: 0.0, u, v }
}

fn rel_margin(lhs: f64, rhs: f64, tol: f64) -> f64 {
    (lhs - rhs).abs() / rhs.abs().max(1e-300) - tol
}

/// Runs every property check with `samples` draws each.
pub fn run_property_audit(seed: u64, samples: usize) -> AuditSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let betas: Vec<ConvexIndex> = AUDIT_BETAS
        .iter()
        .map(|&b| ConvexIndex::new(b).unwrap())
        .collect();
    let mut checks = Vec::new();

    let mut young = CheckResult::new("young_inequality");
    for _ in 0..samples {
        let y = 20.0 * (1.0 - rng.random::<f64>());
        let xi = 20.0 * (1.0 - rng.random::<f64>());
        for &b in &betas {
            young.record(xi * y - (phi(b, y) + phi_dual(b, xi)) - 1e-12);
        }
    }
    checks.push(young);

    let mut dual = CheckResult::new("dual_brute_force");
    for _ in 0..samples {
        let xi = 0.1 + 9.9 * rng.random::<f64>();
        for &b in &betas {
            dual.record(rel_margin(phi_dual(b, xi), brute_force_dual(b, xi), 1e-4));
        }
    }
    checks.push(dual);

    let mut shifted = CheckResult::new("shifted_lower_bound");
    for _ in 0..samples {
        let nu = [0.5, 1.0, 3.0][rng.random_range(0..3)];
        let params = EntropyParams {
            nu,
            phi_m: nu.min(1.0),
        };
        let y = 30.0 * nu * rng.random::<f64>();
        for &b in &betas {
            let lhs = big_phi(b, y, &params) - big_phi_prime(b, nu) * y;
            shifted.record(y - lhs - 1e-12 * (1.0 + lhs.abs()));
        }
    }
    checks.push(shifted);

    let grid = Grid1D::new(16).unwrap();
    let beta0 = ConvexIndex::new(0.0).unwrap();
    let mut h0 = CheckResult::new("h0_identity");
    let mut hpos = CheckResult::new("entropy_nonnegative");
    for _ in 0..samples {
        let bc = BoundaryData::new(
            TimeFn::constant(0.2 + 3.0 * rng.random::<f64>()),
            TimeFn::constant(0.2 + 3.0 * rng.random::<f64>()),
            1.0,
        );
        let profile = Profile::new(bc);
        let state = random_state(&mut rng, grid.nx(), 0.0, 5.0);
        let f = profile.sample(0.0, &grid);
        let du: Vec<f64> = state.u.iter().zip(&f).map(|(a, b)| a - b).collect();
        let dv: Vec<f64> = state.v.iter().zip(&f).map(|(a, b)| a - b).collect();
        let direct = 0.5 * (l2_norm_sq(&du, &grid) + l2_norm_sq(&dv, &grid));
        h0.record(rel_margin(
            relative_entropy(beta0, &state, &profile, &grid),
            direct,
            1e-12,
        ));
        for &b in &betas {
            hpos.record(-relative_entropy(b, &state, &profile, &grid) - 1e-12);
        }
    }
    checks.push(h0);
    checks.push(hpos);

    let mut pnn = CheckResult::new("production_nonnegative");
    let mut pzero = CheckResult::new("production_zero_iff_eq");
    for _ in 0..samples {
        let alpha = -1.0 + 2.0 * rng.random::<f64>();
        let state = random_state(&mut rng, grid.nx(), 0.05, 5.0);
        let mut eq = state.clone();
        eq.v = eq.u.clone();
        for &b in &betas {
            pnn.record(-production(b, alpha, &state, &grid));
            pzero.record(production(b, alpha, &eq, &grid).abs());
            // strictly positive and not equal => strictly positive production
            pzero.record(if production(b, alpha, &state, &grid) > 0.0 {
                0.0
            } else {
                1.0
            });
        }
    }
    checks.push(pnn);
    checks.push(pzero);

    let mut coer = CheckResult::new("coercivity");
    for _ in 0..samples {
        let eps = 10f64.powf(-2.0 + 2.0 * rng.random::<f64>());
        let state = random_state(&mut rng, grid.nx(), 0.01, 5.0);
        let j2: f64 = state
            .u
            .iter()
            .zip(&state.v)
            .map(|(u, v)| ((u - v) / eps).powi(2))
            .sum::<f64>()
            * grid.dx();
        for &a in &AUDIT_BETAS {
            let ca = coercivity_constant(a).unwrap();
            let lhs = production(ConvexIndex::new(a).unwrap(), a, &state, &grid) / (eps * eps);
            coer.record(ca * j2 - lhs - 1e-12 * lhs.abs());
        }
    }
    checks.push(coer);

    AuditSummary { seed, checks }
}
