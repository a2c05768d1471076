//! Backward-Euler finite-volume solver for the limiting equation
//! `∂t ρ = ∂xx G(ρ)` with `G(ρ) = ρ^(1-α) / (2(1-α))` for `α < 1` and
//! `G(ρ) = ln(ρ) / 2` for `α = 1`, under Dirichlet data `ρ = 2 φ±`.
//!
//! The unknown is `ρ` itself. The wall values enter through ghost cells whose
//! `G`-value is mirrored about the wall: `G_ghost = 2 G(2φ) - G(ρ_edge)`.

use crate::error::{Error, Result};
use crate::model::{alpha_violation, BoundaryData, Grid1D, Side};

/// Positivity floor required of initial data for the logarithmic case.
pub const RHO_MIN_LOG: f64 = 1e-8;

pub fn nonlinearity(alpha: f64, rho: f64) -> Result<f64> {
    if alpha == 1.0 {
        if rho <= 0.0 {
            return Err(Error::Input(format!("ln requires rho > 0, got {rho}")));
        }
        Ok(0.5 * rho.ln())
    } else if rho < 0.0 {
        Err(Error::Input(format!("rho = {rho} is negative")))
    } else {
        Ok(g(alpha, rho))
    }
}

#[inline]
fn g(alpha: f64, rho: f64) -> f64 {
    if alpha == 1.0 {
        0.5 * rho.ln()
    } else {
        let m = 1.0 - alpha;
        rho.powf(m) / (2.0 * m)
    }
}

#[inline]
fn g_prime(alpha: f64, rho: f64) -> f64 {
    if alpha == 1.0 {
        0.5 / rho
    } else {
        0.5 * rho.powf(-alpha)
    }
}

/// Stationary solution for constant inflow values: `G(ρ)` is affine in `x`.
pub fn steady_state(alpha: f64, phi_minus: f64, phi_plus: f64, x: f64) -> f64 {
    let (l, r) = (2.0 * phi_minus, 2.0 * phi_plus);
    if alpha == 1.0 {
        l.powf(1.0 - x) * r.powf(x)
    } else {
        let m = 1.0 - alpha;
        ((1.0 - x) * l.powf(m) + x * r.powf(m)).powf(1.0 / m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonParams {
    pub max_iter: usize,
    /// Max-norm tolerance on the nonlinear residual.
    pub tol: f64,
    /// Scaling of every Newton update, in `(0, 1]`.
    pub damping: f64,
    /// Added to the Jacobian diagonal where `G'` vanishes (porous-medium vacuum).
    pub regularization: f64,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-12,
            damping: 1.0,
            regularization: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiffusionConfig {
    pub alpha: f64,
    pub grid: Grid1D,
    pub dt_par: f64,
    pub t_end: f64,
    pub bc: BoundaryData,
    pub rho0: Vec<f64>,
    pub newton: NewtonParams,
    /// Record every `stride` steps (the final step is always recorded).
    pub stride: usize,
}

impl DiffusionConfig {
    pub fn new(
        alpha: f64,
        grid: Grid1D,
        dt_par: f64,
        t_end: f64,
        bc: BoundaryData,
        rho0: Vec<f64>,
    ) -> Self {
        Self {
            alpha,
            grid,
            dt_par,
            t_end,
            bc,
            rho0,
            newton: NewtonParams::default(),
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v: Vec<String> = alpha_violation(self.alpha).into_iter().collect();
        v.extend(self.bc.violations());
        if self.rho0.len() != self.grid.nx() {
            v.push(format!(
                "rho0 has {} cells, grid has {}",
                self.rho0.len(),
                self.grid.nx()
            ));
        }
        let floor = if self.alpha == 1.0 { RHO_MIN_LOG } else { 0.0 };
        if let Some(i) = self
            .rho0
            .iter()
            .position(|&r| !(r >= floor) || !r.is_finite())
        {
            v.push(format!(
                "rho0[{i}] = {} violates rho0 >= {floor}",
                self.rho0[i]
            ));
        }
        if !(self.dt_par > 0.0 && self.dt_par.is_finite()) {
            v.push(format!("dt_par = {} must be > 0", self.dt_par));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            v.push(format!("t_end = {} must be > 0", self.t_end));
        } else if self.t_end > self.bc.horizon {
            v.push(format!(
                "t_end = {} exceeds the boundary data horizon {}",
                self.t_end, self.bc.horizon
            ));
        }
        let nw = &self.newton;
        if nw.max_iter == 0 || !(nw.tol > 0.0) || !(nw.damping > 0.0 && nw.damping <= 1.0) {
            v.push("newton parameters need max_iter >= 1, tol > 0, damping in (0, 1]".into());
        }
        if self.stride == 0 {
            v.push("output stride must be >= 1".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Inadmissible(v))
        }
    }
}

/// Dirichlet values `G(2 φ∓)` at the two walls.
#[derive(Debug, Clone, Copy)]
struct Walls {
    left: f64,
    right: f64,
}

impl Walls {
    fn at(alpha: f64, bc: &BoundaryData, t: f64) -> Self {
        Self {
            left: g(alpha, 2.0 * bc.at(Side::Left, t)),
            right: g(alpha, 2.0 * bc.at(Side::Right, t)),
        }
    }
}

/// Discrete operator `(L G)_i = G_{i+1} - 2 G_i + G_{i-1}` with mirrored ghosts.
fn laplacian_g(gv: &[f64], walls: Walls, out: &mut [f64]) {
    let n = gv.len();
    for i in 0..n {
        let lo = if i == 0 {
            2.0 * walls.left - gv[0]
        } else {
            gv[i - 1]
        };
        let hi = if i + 1 == n {
            2.0 * walls.right - gv[n - 1]
        } else {
            gv[i + 1]
        };
        out[i] = hi - 2.0 * gv[i] + lo;
    }
}

/// `Σ_i (L G)_i`: telescopes to the two wall fluxes.
fn wall_flux(gv: &[f64], walls: Walls) -> f64 {
    let n = gv.len();
    2.0 * ((walls.right - gv[n - 1]) - (gv[0] - walls.left))
}

/// Residual of the discrete stationary problem at the given cell values.
pub fn stationary_residual(alpha: f64, rho: &[f64], bc: &BoundaryData, t: f64) -> Vec<f64> {
    let gv: Vec<f64> = rho.iter().map(|&r| g(alpha, r)).collect();
    let mut out = vec![0.0; rho.len()];
    laplacian_g(&gv, Walls::at(alpha, bc, t), &mut out);
    out
}

/// Tridiagonal solve (Thomas algorithm); `sub[0]` and `sup[n-1]` are unused.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    /// `(dt/dx) Σ (L G)` at the new level: the mass change the wall fluxes account for.
    pub flux_mass: f64,
}

/// One backward-Euler step from `t` to `t + dt`, solved by damped Newton.
pub fn implicit_step(
    rho: &[f64],
    t: f64,
    dt: f64,
    cfg: &DiffusionConfig,
    step_index: usize,
) -> Result<(Vec<f64>, StepReport)> {
    let n = rho.len();
    let alpha = cfg.alpha;
    let dx = cfg.grid.dx();
    let lam = dt / (dx * dx);
    let walls = Walls::at(alpha, &cfg.bc, t + dt);
    let nw = cfg.newton;
    let positive_only = alpha == 1.0;

    let mut x = rho.to_vec();
    let mut gv = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let mut res = vec![0.0; n];

    let eval = |x: &[f64], gv: &mut [f64], lap: &mut [f64], res: &mut [f64]| -> f64 {
        for (gi, &xi) in gv.iter_mut().zip(x) {
            *gi = g(alpha, xi);
        }
        laplacian_g(gv, walls, lap);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            res[i] = x[i] - rho[i] - lam * lap[i];
            worst = worst.max(res[i].abs());
        }
        worst
    };

    let mut norm = eval(&x, &mut gv, &mut lap, &mut res);
    let mut iterations = 0;
    let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    while !(norm <= nw.tol) {
        if iterations >= nw.max_iter || !norm.is_finite() {
            return Err(Error::NewtonFailure {
                step: step_index,
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        for i in 0..n {
            let gp = g_prime(alpha, x[i]);
            let edge = if n == 1 {
                4.0
            } else if i == 0 || i + 1 == n {
                3.0
            } else {
                2.0
            };
            diag[i] = 1.0 + lam * edge * gp + nw.regularization;
            if i > 0 {
                sub[i] = -lam * g_prime(alpha, x[i - 1]);
            }
            if i + 1 < n {
                sup[i] = -lam * g_prime(alpha, x[i + 1]);
            }
        }
        let delta = solve_tridiagonal(&sub, &diag, &sup, &res);

        let mut scale = nw.damping;
        let mut trial: Vec<f64>;
        loop {
            trial = x
                .iter()
                .zip(&delta)
                .map(|(xi, di)| xi - scale * di)
                .collect();
            let ok = trial
                .iter()
                .all(|&r| if positive_only { r > 0.0 } else { r >= 0.0 });
            if ok {
                break;
            }
            scale *= 0.5;
            if scale < 1e-12 {
                return Err(Error::NewtonFailure {
                    step: step_index,
                    iterations,
                    residual: norm,
                });
            }
        }
        x = trial;
        norm = eval(&x, &mut gv, &mut lap, &mut res);
    }

    let flux_mass = dt / dx * wall_flux(&gv, walls);
    Ok((
        x,
        StepReport {
            iterations,
            residual: norm,
            flux_mass,
        },
    ))
}

/// Recorded states of a diffusion run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.rho.last().expect("trajectory is never empty")
    }

    /// Linear interpolation in time; clamps outside the recorded range.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return self.rho[0].clone();
        }
        if k >= self.times.len() {
            return self.last().to_vec();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        self.rho[k - 1]
            .iter()
            .zip(&self.rho[k])
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DiffusionRun {
    pub trajectory: Trajectory,
    pub steps: usize,
    pub max_newton_iterations: usize,
    /// Accumulated wall-flux mass change.
    pub flux_mass: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
}

pub fn solve(cfg: &DiffusionConfig) -> Result<DiffusionRun> {
    cfg.validate()?;
    let dx = cfg.grid.dx();
    let dt = cfg.dt_par;
    let n_steps = ((cfg.t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;

    let mut rho = cfg.rho0.clone();
    let initial_mass = rho.iter().sum::<f64>() * dx;
    let mut times = vec![0.0];
    let mut rec = vec![rho.clone()];
    let mut flux_mass = 0.0;
    let mut max_iter = 0;
    let mut t = 0.0;
    for k in 1..=n_steps {
        let h = if k == n_steps { cfg.t_end - t } else { dt };
        let (next, rep) = implicit_step(&rho, t, h, cfg, k)?;
        flux_mass += rep.flux_mass;
        max_iter = max_iter.max(rep.iterations);
        rho = next;
        t = if k == n_steps {
            cfg.t_end
        } else {
            k as f64 * dt
        };
        if k % cfg.stride == 0 || k == n_steps {
            times.push(t);
            rec.push(rho.clone());
        }
    }
    let final_mass = rho.iter().sum::<f64>() * dx;
    Ok(DiffusionRun {
        trajectory: Trajectory {
            grid: cfg.grid,
            times,
            rho: rec,
        },
        steps: n_steps,
        max_newton_iterations: max_iter,
        flux_mass,
        initial_mass,
        final_mass,
    })
}
