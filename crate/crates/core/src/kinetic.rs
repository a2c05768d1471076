//! Time integration of the diffusively scaled two-speed system
//!
//! ```text
//! eps² ∂t u + eps ∂x u = (u+v)^alpha (v-u)
//! eps² ∂t v - eps ∂x v = (u+v)^alpha (u-v)
//! ```
//!
//! with inflow data `u(t,0) = phi-(t)`, `v(t,1) = phi+(t)`. Each step is the
//! Strang composition relax(dt/2) ∘ transport(dt) ∘ relax(dt/2). Transport
//! is first-order upwind at speed `1/eps`; relaxation keeps `rho = u + v`
//! fixed and integrates `d = u - v` exactly, so the only step restriction is
//! the transport CFL condition `dt <= eps dx`.

use crate::entropy::{
    boundary_dissipation, entropy_residual_with, production, relative_entropy, ConvexIndex,
    Cumulative, EntropyLedger, LedgerRow, Profile, ResidualInputs,
};
use crate::error::{Error, Result};
use crate::model::{
    entropy_params, validate_admissible, BoundaryData, Grid1D, InitialData, KineticState, Side,
};

/// Below this density the relaxation sets `u = v` outright.
pub const RHO_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone)]
pub struct KineticConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub grid: Grid1D,
    pub cfl: f64,
    pub t_end: f64,
    pub bc: BoundaryData,
    pub init: InitialData,
    pub ledger_betas: Vec<ConvexIndex>,
    /// Young-splitting parameter for the residual; `None` means `C_alpha / 2`.
    pub gamma: Option<f64>,
    /// Ledger row every `ledger_stride` steps (the final step is always recorded).
    pub ledger_stride: usize,
    /// Keep a state snapshot every `n` steps.
    pub snapshot_stride: Option<usize>,
    /// Diagnostic switch; disabling relaxation leaves pure transport.
    pub relaxation: bool,
}

impl KineticConfig {
    pub fn new(
        alpha: f64,
        epsilon: f64,
        grid: Grid1D,
        t_end: f64,
        bc: BoundaryData,
        init: InitialData,
    ) -> Self {
        Self {
            alpha,
            epsilon,
            grid,
            cfl: 1.0,
            t_end,
            bc,
            init,
            ledger_betas: Vec::new(),
            gamma: None,
            ledger_stride: 1,
            snapshot_stride: None,
            relaxation: true,
        }
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.epsilon * self.grid.dx()
    }

    pub fn gamma(&self) -> Result<f64> {
        match self.gamma {
            Some(g) => Ok(g),
            None => EntropyLedger::default_gamma(self.alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut report = validate_admissible(&self.bc, &self.init, self.alpha);
        let v = &mut report.violations;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            v.push(format!("epsilon = {} must be > 0", self.epsilon));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            v.push(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            v.push(format!("t_end = {} must be finite and > 0", self.t_end));
        } else if self.t_end > self.bc.horizon {
            v.push(format!(
                "t_end = {} exceeds the boundary data horizon {}",
                self.t_end, self.bc.horizon
            ));
        }
        if self.init.u.len() != self.grid.nx() {
            v.push(format!(
                "initial data has {} cells, grid has {}",
                self.init.u.len(),
                self.grid.nx()
            ));
        }
        if self.ledger_stride == 0 {
            v.push("ledger stride must be >= 1".into());
        }
        if self.snapshot_stride == Some(0) {
            v.push("snapshot stride must be >= 1".into());
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                v.push(format!("gamma = {g} must lie in (0, 1)"));
            }
        }
        report.into_result()
    }

    /// Number of steps and the length of the last (possibly shortened) one.
    pub fn schedule(&self) -> (usize, f64) {
        let dt = self.dt();
        let n = ((self.t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        // Rounding in (n - 1) * dt must not push the last step past the CFL limit.
        let last = (self.t_end - (n - 1) as f64 * dt).min(dt);
        (n, last)
    }
}

/// Boundary fluxes of one transport substep, in units of density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFlux {
    /// `phi-(t) + phi+(t)`
    pub inflow: f64,
    /// `u` at the last cell plus `v` at the first cell, before the update.
    pub outflow: f64,
}

impl BoundaryFlux {
    /// Mass change `∫ρ dx` implied by these fluxes over a substep of length `dt`.
    pub fn mass_change(&self, dt: f64, epsilon: f64) -> f64 {
        dt / epsilon * (self.inflow - self.outflow)
    }
}

fn courant(dt: f64, epsilon: f64, grid: &Grid1D) -> Result<f64> {
    let c = dt / (epsilon * grid.dx());
    if c > 1.0 + 1e-12 {
        return Err(Error::Input(format!(
            "transport CFL violated: dt / (eps dx) = {c} > 1"
        )));
    }
    Ok(c.min(1.0))
}

/// Upwind transport with inflow ghost values sampled at `state.t`.
/// Time is not advanced.
pub fn transport_substep(
    state: &KineticState,
    dt: f64,
    epsilon: f64,
    bc: &BoundaryData,
    grid: &Grid1D,
) -> Result<(KineticState, BoundaryFlux)> {
    let c = courant(dt, epsilon, grid)?;
    let n = state.len();
    let left = bc.at(Side::Left, state.t);
    let right = bc.at(Side::Right, state.t);
    let (u, v) = (&state.u, &state.v);

    let new_u = (0..n)
        .map(|i| {
            let upstream = if i == 0 { left } else { u[i - 1] };
            if c == 1.0 {
                upstream
            } else {
                u[i] + c * (upstream - u[i])
            }
        })
        .collect();
    let new_v = (0..n)
        .map(|i| {
            let upstream = if i + 1 == n { right } else { v[i + 1] };
            if c == 1.0 {
                upstream
            } else {
                v[i] + c * (upstream - v[i])
            }
        })
        .collect();

    let flux = BoundaryFlux {
        inflow: left + right,
        outflow: u[n - 1] + v[0],
    };
    Ok((
        KineticState {
            t: state.t,
            u: new_u,
            v: new_v,
        },
        flux,
    ))
}

/// Exact solution of the cellwise relaxation ODE over `dt`: `rho` is kept,
/// `u - v` decays by `exp(-2 rho^alpha dt / eps²)`. Time is not advanced.
pub fn relaxation_substep(state: &KineticState, dt: f64, epsilon: f64, alpha: f64) -> KineticState {
    let rate = 2.0 * dt / (epsilon * epsilon);
    let mut u = Vec::with_capacity(state.len());
    let mut v = Vec::with_capacity(state.len());
    for (&ui, &vi) in state.u.iter().zip(&state.v) {
        let rho = ui + vi;
        let d = if rho <= RHO_FLOOR {
            0.0
        } else {
            (ui - vi) * (-rate * rho.powf(alpha)).exp()
        };
        u.push(0.5 * (rho + d));
        v.push(0.5 * (rho - d));
    }
    KineticState { t: state.t, u, v }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: KineticState,
    pub flux: BoundaryFlux,
}

impl StepOutcome {
    pub fn mass_change(&self, dt: f64, epsilon: f64) -> f64 {
        self.flux.mass_change(dt, epsilon)
    }
}

/// One Strang step; advances `t` by `dt`.
pub fn step(state: &KineticState, dt: f64, cfg: &KineticConfig) -> Result<StepOutcome> {
    let eps = cfg.epsilon;
    let (mut next, flux) = if cfg.relaxation {
        let half = relaxation_substep(state, 0.5 * dt, eps, cfg.alpha);
        let (moved, flux) = transport_substep(&half, dt, eps, &cfg.bc, &cfg.grid)?;
        (relaxation_substep(&moved, 0.5 * dt, eps, cfg.alpha), flux)
    } else {
        transport_substep(state, dt, eps, &cfg.bc, &cfg.grid)?
    };
    next.t = state.t + dt;
    Ok(StepOutcome { state: next, flux })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: KineticState,
}

/// Bookkeeping of `∫ρ dx` over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBalance {
    pub initial: f64,
    pub last: f64,
    /// Sum over steps of the boundary-flux mass change.
    pub boundary_flux: f64,
}

impl MassBalance {
    /// `|Δmass - flux| / max(|Δmass|, |flux|, mass)`.
    pub fn relative_defect(&self) -> f64 {
        let change = self.last - self.initial;
        let scale = change
            .abs()
            .max(self.boundary_flux.abs())
            .max(self.initial.abs())
            .max(f64::MIN_POSITIVE);
        (change - self.boundary_flux).abs() / scale
    }
}

#[derive(Debug, Clone)]
pub struct KineticRun {
    pub final_state: KineticState,
    pub ledgers: Vec<EntropyLedger>,
    pub snapshots: Vec<Snapshot>,
    pub cumulative: Cumulative,
    pub mass: MassBalance,
    pub steps: usize,
    pub dt: f64,
}

struct LedgerTracker<'a> {
    ledger: EntropyLedger,
    inputs: ResidualInputs<'a>,
    last_h: f64,
}

/// Integrates to `t_end`, recording the entropy ledgers and snapshots.
pub fn run(cfg: &KineticConfig) -> Result<KineticRun> {
    cfg.validate()?;
    let grid = cfg.grid;
    let eps = cfg.epsilon;
    let dt = cfg.dt();
    let (n_steps, last_dt) = cfg.schedule();
    let params = entropy_params(&cfg.bc);
    let profile = Profile::new(cfg.bc);
    let gamma = cfg.gamma()?;

    let mut state = KineticState::from_initial(&cfg.init);
    let mut cumulative = Cumulative::default();
    let mut densities = Cumulative::densities(&state, eps, cfg.alpha, &grid);
    let initial_mass = state.rho().iter().sum::<f64>() * grid.dx();
    let mut flux_mass = 0.0;

    let mut trackers: Vec<LedgerTracker<'_>> = cfg
        .ledger_betas
        .iter()
        .map(|&beta| {
            let inputs = ResidualInputs {
                beta,
                alpha: cfg.alpha,
                epsilon: eps,
                profile: &profile,
                params: &params,
                gamma,
                grid: &grid,
            };
            let h = relative_entropy(beta, &state, &profile, &grid);
            let mut ledger = EntropyLedger::new(beta, gamma);
            ledger.rows.push(LedgerRow {
                step: 0,
                t: 0.0,
                h,
                p: production(beta, cfg.alpha, &state, &grid),
                boundary_term: boundary_dissipation(beta, &state, &profile, eps),
                residual: 0.0,
                raw_residual: 0.0,
                cumulative,
            });
            LedgerTracker {
                ledger,
                inputs,
                last_h: h,
            }
        })
        .collect();

    let mut snapshots = Vec::new();
    if cfg.snapshot_stride.is_some() {
        snapshots.push(Snapshot {
            step: 0,
            state: state.clone(),
        });
    }

    for k in 1..=n_steps {
        let h_dt = if k == n_steps { last_dt } else { dt };
        let outcome = step(&state, h_dt, cfg)?;
        let mut next = outcome.state;
        next.t = if k == n_steps {
            cfg.t_end
        } else {
            k as f64 * dt
        };
        if !next.is_finite() {
            return Err(Error::NumericalAbort {
                step: k,
                t: next.t,
                reason: "non-finite density".into(),
            });
        }
        flux_mass += outcome.flux.mass_change(h_dt, eps);

        let next_densities = Cumulative::densities(&next, eps, cfg.alpha, &grid);
        cumulative.accumulate(&densities, &next_densities, h_dt);
        densities = next_densities;

        let record = k % cfg.ledger_stride == 0 || k == n_steps;
        for tr in trackers.iter_mut() {
            let beta = tr.inputs.beta;
            let h = relative_entropy(beta, &next, &profile, &grid);
            if record {
                let res = entropy_residual_with(&state, &next, h_dt, tr.last_h, h, &tr.inputs);
                tr.ledger.rows.push(LedgerRow {
                    step: k,
                    t: next.t,
                    h,
                    p: production(beta, cfg.alpha, &next, &grid),
                    boundary_term: boundary_dissipation(beta, &next, &profile, eps),
                    residual: res.normalized(),
                    raw_residual: res.raw(),
                    cumulative,
                });
            }
            tr.last_h = h;
        }

        if let Some(s) = cfg.snapshot_stride {
            if k % s == 0 || k == n_steps {
                snapshots.push(Snapshot {
                    step: k,
                    state: next.clone(),
                });
            }
        }
        state = next;
    }

    let last_mass = state.rho().iter().sum::<f64>() * grid.dx();
    Ok(KineticRun {
        final_state: state,
        ledgers: trackers.into_iter().map(|t| t.ledger).collect(),
        snapshots,
        cumulative,
        mass: MassBalance {
            initial: initial_mass,
            last: last_mass,
            boundary_flux: flux_mass,
        },
        steps: n_steps,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitPreset, TimeFn};

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n).unwrap()
    }

    #[test]
    fn transport_keeps_matching_constant() {
        let g = grid(16);
        let bc = BoundaryData::constant(1.7, 1.7, 1.0);
        let s = KineticState::new(0.0, vec![1.7; 16], vec![1.7; 16]).unwrap();
        for c in [1.0, 0.5, 0.1] {
            let (out, _) = transport_substep(&s, c * 0.1 * g.dx(), 0.1, &bc, &g).unwrap();
            assert_eq!(out, s);
        }
    }

    #[test]
    fn unit_cfl_is_exact_shift() {
        let g = grid(8);
        let bc = BoundaryData::constant(9.0, 7.0, 1.0);
        let u: Vec<f64> = (0..8).map(|i| i as f64 + 0.5).collect();
        let v: Vec<f64> = (0..8).map(|i| 2.0 * i as f64).collect();
        let s = KineticState::new(0.0, u.clone(), v.clone()).unwrap();
        let eps = 0.2;
        let (out, _) = transport_substep(&s, eps * g.dx(), eps, &bc, &g).unwrap();
        assert_eq!(out.u[0], 9.0);
        assert_eq!(&out.u[1..], &u[..7]);
        assert_eq!(out.v[7], 7.0);
        assert_eq!(&out.v[..7], &v[1..]);
    }

    #[test]
    fn transport_rejects_cfl_violation() {
        let g = grid(8);
        let bc = BoundaryData::constant(1.0, 1.0, 1.0);
        let s = KineticState::new(0.0, vec![1.0; 8], vec![1.0; 8]).unwrap();
        assert!(transport_substep(&s, 1.01 * 0.1 * g.dx(), 0.1, &bc, &g).is_err());
    }

    #[test]
    fn transport_mass_telescopes() {
        let g = grid(32);
        let bc = BoundaryData::constant(1.3, 0.4, 1.0);
        let init = InitialData::from_preset(&InitPreset::Random { seed: 3, max: 2.0 }, &g);
        let s = KineticState::from_initial(&init);
        let eps = 0.05;
        let dt = 0.6 * eps * g.dx();
        let (out, flux) = transport_substep(&s, dt, eps, &bc, &g).unwrap();
        let before: f64 = s.rho().iter().sum::<f64>() * g.dx();
        let after: f64 = out.rho().iter().sum::<f64>() * g.dx();
        assert!(((after - before) - flux.mass_change(dt, eps)).abs() < 1e-14);
    }

    #[test]
    fn relaxation_examples() {
        let s = KineticState::new(0.0, vec![0.75], vec![0.25]).unwrap();
        let out = relaxation_substep(&s, 0.5, 1.0, 0.0);
        let ratio = (out.u[0] - out.v[0]) / 0.5;
        assert!((ratio - (-1f64).exp()).abs() < 1e-15);

        let s = KineticState::new(0.0, vec![1.5], vec![0.5]).unwrap();
        let out = relaxation_substep(&s, 0.01, 0.1, 1.0);
        let ratio = (out.u[0] - out.v[0]) / 1.0;
        assert!((ratio / (-4f64).exp() - 1.0).abs() < 1e-14);

        let eq = KineticState::new(0.0, vec![2.0, 0.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(relaxation_substep(&eq, 1.0, 0.01, -1.0), eq);
    }

    #[test]
    fn relaxation_vacuum_floor() {
        let s = KineticState::new(0.0, vec![1e-31], vec![0.0]).unwrap();
        let out = relaxation_substep(&s, 1e-6, 1.0, -1.0);
        assert_eq!(out.u[0], out.v[0]);
    }

    #[test]
    fn schedule_lands_on_t_end() {
        let g = grid(10);
        let bc = BoundaryData::constant(1.0, 1.0, 1.0);
        let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &g);
        let mut cfg = KineticConfig::new(0.0, 0.3, g, 0.1, bc, init);
        cfg.cfl = 0.7;
        let (n, last) = cfg.schedule();
        let dt = cfg.dt();
        assert!(last > 0.0 && last <= dt * (1.0 + 1e-12));
        assert!(((n - 1) as f64 * dt + last - 0.1).abs() < 1e-15);
        let out = run(&cfg).unwrap();
        assert_eq!(out.final_state.t, 0.1);
    }

    #[test]
    fn equilibrium_run_is_fixed() {
        let g = grid(20);
        let bc = BoundaryData::constant(1.0, 1.0, 1.0);
        let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &g);
        let mut cfg = KineticConfig::new(0.0, 0.1, g, 0.2, bc, init);
        cfg.ledger_betas = vec![ConvexIndex::new(0.0).unwrap()];
        let out = run(&cfg).unwrap();
        assert!(out
            .final_state
            .u
            .iter()
            .chain(&out.final_state.v)
            .all(|&x| x == 1.0));
        assert!(out.ledgers[0].step_rows().all(|r| r.residual <= 0.0));
        assert_eq!(out.cumulative.j2, 0.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = grid(10);
        let bc = BoundaryData::new(
            TimeFn::Sinusoid {
                a: 1.0,
                b: 1.0,
                omega: 1.0,
            },
            TimeFn::constant(1.0),
            1.0,
        );
        let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &g);
        let cfg = KineticConfig::new(2.0, 0.1, g, 2.0, bc, init);
        match run(&cfg) {
            Err(Error::Inadmissible(v)) => assert_eq!(v.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
