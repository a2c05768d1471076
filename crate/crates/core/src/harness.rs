//! Epsilon sweeps comparing the kinetic density against the limiting
//! diffusion solution, plus the audits of the uniform space-time bounds.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::diffusion::{self, DiffusionConfig, NewtonParams, Trajectory};
use crate::entropy::{ConvexIndex, Cumulative, EntropyLedger};
use crate::error::{Error, Result};
use crate::kinetic::{self, KineticConfig, KineticRun};
use crate::model::{BoundaryData, Grid1D, InitialData, Side};

/// Space-time measurement window `[t_start_frac T, T] x [delta, 1 - delta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_start_frac: f64,
    pub delta: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self {
            t_start_frac: 0.05,
            delta: 0.0,
        }
    }
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.t_start_frac) || !(0.0..0.5).contains(&self.delta) {
            return Err(Error::Input(format!(
                "window needs t_start_frac in [0,1) and delta in [0,0.5), got {} and {}",
                self.t_start_frac, self.delta
            )));
        }
        Ok(())
    }
}

/// Cell fields on a common grid at increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

impl Series {
    pub fn from_kinetic(run: &KineticRun, grid: Grid1D) -> Self {
        Self {
            grid,
            times: run.snapshots.iter().map(|s| s.state.t).collect(),
            fields: run.snapshots.iter().map(|s| s.state.rho()).collect(),
        }
    }

    /// Samples a trajectory (linear in time) at the given times.
    pub fn resample(traj: &Trajectory, times: &[f64]) -> Self {
        Self {
            grid: traj.grid,
            times: times.to_vec(),
            fields: times.iter().map(|&t| traj.at(t)).collect(),
        }
    }
}

/// Trapezoidal `∫_{t0}^{T} g dt` over sample points, with `g` linearly
/// interpolated at `t0`.
fn trapezoid_from(times: &[f64], values: &[f64], t0: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..times.len() {
        let (ta, tb) = (times[k - 1], times[k]);
        if tb <= t0 {
            continue;
        }
        let (ga, gb) = (values[k - 1], values[k]);
        if ta < t0 {
            let w = (t0 - ta) / (tb - ta);
            let g0 = (1.0 - w) * ga + w * gb;
            total += 0.5 * (tb - t0) * (g0 + gb);
        } else {
            total += 0.5 * (tb - ta) * (ga + gb);
        }
    }
    total
}

/// Space-time L² distance over the window.
pub fn space_time_l2(a: &Series, b: &Series, window: &Window) -> Result<f64> {
    if a.grid != b.grid || a.times.len() != b.times.len() {
        return Err(Error::Input(format!(
            "series mismatch: {} cells / {} times vs {} cells / {} times",
            a.grid.nx(),
            a.times.len(),
            b.grid.nx(),
            b.times.len()
        )));
    }
    if a.times
        .iter()
        .zip(&b.times)
        .any(|(s, t)| (s - t).abs() > 1e-12 * (1.0 + s.abs()))
    {
        return Err(Error::Input("series sample times differ".into()));
    }
    window.validate()?;
    let grid = a.grid;
    let cells: Vec<usize> = (0..grid.nx())
        .filter(|&i| {
            let x = grid.center(i);
            x >= window.delta && x <= 1.0 - window.delta
        })
        .collect();
    let per_time: Vec<f64> = a
        .fields
        .iter()
        .zip(&b.fields)
        .map(|(fa, fb)| cells.iter().map(|&i| (fa[i] - fb[i]).powi(2)).sum::<f64>() * grid.dx())
        .collect();
    let t_end = *a.times.last().unwrap_or(&0.0);
    Ok(trapezoid_from(&a.times, &per_time, window.t_start_frac * t_end).sqrt())
}

/// Independent solution of `∂t ρ = ½ ∂xx ρ` with constant Dirichlet values
/// `rho_left`, `rho_right` and piecewise-constant initial data: affine
/// steady part plus a truncated sine series. Sine coefficients of the
/// cellwise data are integrated exactly.
pub fn heat_oracle(
    rho_left: f64,
    rho_right: f64,
    rho0: &[f64],
    grid: &Grid1D,
    t: f64,
    modes: usize,
) -> Vec<f64> {
    let dx = grid.dx();
    let coeffs: Vec<f64> = (1..=modes)
        .map(|k| {
            let kp = k as f64 * PI;
            let data: f64 = rho0
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let (xl, xr) = (i as f64 * dx, (i + 1) as f64 * dx);
                    r * ((kp * xl).cos() - (kp * xr).cos()) / kp
                })
                .sum();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            // ∫ sin(kπx) and ∫ x sin(kπx) over (0,1)
            let int_one = (1.0 - sign) / kp;
            let int_x = -sign / kp;
            let steady = rho_left * int_one + (rho_right - rho_left) * int_x;
            2.0 * (data - steady)
        })
        .collect();
    grid.sample(|x| {
        let mut val = rho_left + (rho_right - rho_left) * x;
        for (k, c) in coeffs.iter().enumerate() {
            let kp = (k + 1) as f64 * PI;
            val += c * (-0.5 * kp * kp * t).exp() * (kp * x).sin();
        }
        val
    })
}

/// Ratio test for one monitored integral across the epsilon ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub name: &'static str,
    pub max_over_min: f64,
    pub uniform: bool,
}

/// Ratio above which a monitored integral is declared non-uniform in epsilon.
pub const UNIFORMITY_RATIO: f64 = 2.0;

pub fn bound_audit(finals: &[Cumulative]) -> Vec<AuditRow> {
    (0..5)
        .map(|k| {
            let vals: Vec<f64> = finals.iter().map(|c| c.as_array()[k]).collect();
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let ratio = if vals.is_empty() || max == 0.0 {
                1.0
            } else if min <= 0.0 || !max.is_finite() {
                f64::INFINITY
            } else {
                max / min
            };
            AuditRow {
                name: Cumulative::NAMES[k],
                max_over_min: ratio,
                uniform: ratio < UNIFORMITY_RATIO,
            }
        })
        .collect()
}

pub fn write_audit_csv<W: Write>(rows: &[AuditRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "integral_name,max_over_min_ratio,uniform")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.name, r.max_over_min, r.uniform)?;
    }
    Ok(())
}

/// `10 (dx + dt)`: allowance for quadrature and time-differencing noise
/// in the normalized entropy residual.
pub fn tol_quad(dx: f64, dt: f64) -> f64 {
    10.0 * (dx + dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub beta: f64,
    pub steps: usize,
    pub within_tol: usize,
    pub max_residual: f64,
    pub tol: f64,
}

impl ResidualStats {
    pub fn from_ledger(ledger: &EntropyLedger, tol: f64) -> Self {
        let mut steps = 0;
        let mut within = 0;
        let mut max = f64::NEG_INFINITY;
        for r in ledger.step_rows() {
            steps += 1;
            if r.residual <= tol {
                within += 1;
            }
            max = max.max(r.residual);
        }
        Self {
            beta: ledger.beta.beta(),
            steps,
            within_tol: within,
            max_residual: max,
            tol,
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            self.within_tol as f64 / self.steps as f64
        }
    }

    /// At least 99% of steps within `tol`, none beyond `10 tol`.
    pub fn passes(&self) -> bool {
        self.fraction() >= 0.99 && self.max_residual <= 10.0 * self.tol
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub alpha: f64,
    pub bc: BoundaryData,
    /// Initial densities on the kinetic grid.
    pub init: InitialData,
    pub t_end: f64,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub kinetic_grid: Grid1D,
    pub cfl: f64,
    /// Diffusion reference grid is `refine` times finer (at least 2).
    pub diffusion_refine: usize,
    /// `None` selects `eps_min * dx_ref`.
    pub dt_par: Option<f64>,
    pub newton: NewtonParams,
    pub window: Window,
    /// `None` selects `{alpha, 0}`.
    pub ledger_betas: Option<Vec<ConvexIndex>>,
    pub gamma: Option<f64>,
    /// Approximate number of kinetic output times per run.
    pub samples: usize,
    pub relaxation: bool,
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(
        alpha: f64,
        bc: BoundaryData,
        init: InitialData,
        t_end: f64,
        epsilons: Vec<f64>,
        kinetic_grid: Grid1D,
    ) -> Self {
        Self {
            alpha,
            bc,
            init,
            t_end,
            epsilons,
            kinetic_grid,
            cfl: 1.0,
            diffusion_refine: 2,
            dt_par: None,
            newton: NewtonParams::default(),
            window: Window::default(),
            ledger_betas: None,
            gamma: None,
            samples: 200,
            relaxation: true,
            jobs: 1,
        }
    }

    pub fn reference_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.kinetic_grid.nx() * self.diffusion_refine)
    }

    pub fn eps_min(&self) -> f64 {
        self.epsilons.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn dt_par(&self) -> Result<f64> {
        Ok(self
            .dt_par
            .unwrap_or(self.eps_min() * self.reference_grid()?.dx()))
    }

    pub fn betas(&self) -> Result<Vec<ConvexIndex>> {
        match &self.ledger_betas {
            Some(b) => Ok(b.clone()),
            None => {
                let mut v = vec![ConvexIndex::new(self.alpha)?];
                if self.alpha != 0.0 {
                    v.push(ConvexIndex::new(0.0)?);
                }
                Ok(v)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.epsilons.is_empty() {
            v.push("epsilon list is empty".to_string());
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            v.push("every epsilon must be finite and > 0".to_string());
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            v.push("epsilon list must be strictly decreasing".to_string());
        }
        if self.diffusion_refine < 2 {
            v.push("diffusion reference grid must be at least 2x finer".to_string());
        }
        if self.samples == 0 {
            v.push("samples must be >= 1".to_string());
        }
        if let Err(e) = self.window.validate() {
            v.push(e.to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Inadmissible(v))
        }
    }

    pub fn kinetic_config(&self, epsilon: f64) -> Result<KineticConfig> {
        let mut cfg = KineticConfig::new(
            self.alpha,
            epsilon,
            self.kinetic_grid,
            self.t_end,
            self.bc,
            self.init.clone(),
        );
        cfg.cfl = self.cfl;
        cfg.ledger_betas = self.betas()?;
        cfg.gamma = self.gamma;
        cfg.relaxation = self.relaxation;
        let (steps, _) = cfg.schedule();
        cfg.snapshot_stride = Some((steps / self.samples).max(1));
        cfg.ledger_stride = 1;
        Ok(cfg)
    }

    pub fn diffusion_config(&self) -> Result<DiffusionConfig> {
        let fine = self.reference_grid()?;
        let r = self.diffusion_refine;
        let rho0_coarse = self.init.rho();
        let rho0 = (0..fine.nx()).map(|i| rho0_coarse[i / r]).collect();
        let mut cfg =
            DiffusionConfig::new(self.alpha, fine, self.dt_par()?, self.t_end, self.bc, rho0);
        cfg.newton = self.newton;
        Ok(cfg)
    }
}

/// Cell averages of a fine field onto a grid `factor` times coarser.
pub fn restrict(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub l2_err: f64,
    pub boundary_err_left: f64,
    pub boundary_err_right: f64,
    pub cumulative: Cumulative,
    pub residual_stats: Vec<ResidualStats>,
    pub mass_defect: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepFlags {
    pub l2_strictly_decreasing: bool,
    /// Error at the smallest epsilon is at most half the error at the largest.
    pub l2_halved: bool,
    pub boundary_left_decreasing: bool,
    pub boundary_right_decreasing: bool,
    pub bounds_uniform: bool,
    pub entropy_inequality: bool,
    pub all_runs_ok: bool,
}

impl SweepFlags {
    pub fn all(&self) -> bool {
        self.l2_strictly_decreasing
            && self.l2_halved
            && self.boundary_left_decreasing
            && self.boundary_right_decreasing
            && self.bounds_uniform
            && self.entropy_inequality
            && self.all_runs_ok
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub rows: Vec<ConvergenceRow>,
    pub audit: Vec<AuditRow>,
    pub flags: SweepFlags,
    pub reference_steps: usize,
}

fn strictly_decreasing(vals: &[f64]) -> bool {
    vals.iter().all(|v| v.is_finite()) && vals.windows(2).all(|w| w[1] < w[0])
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "epsilon,l2_err,boundary_err_left,boundary_err_right,cum_j2,cum_rho2,cum_rap1_j2,cum_ram1_j2,cum_r2a_j2,uniform_flags";

    pub fn l2_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2_err).collect()
    }

    fn uniform_flags(&self) -> String {
        self.audit
            .iter()
            .map(|a| a.uniform.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        let flags = self.uniform_flags();
        for r in &self.rows {
            let c = r.cumulative;
            let tag = match &r.failure {
                Some(msg) => format!("failed: {}", msg.replace([',', '\n'], " ")),
                None => flags.clone(),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                r.l2_err,
                r.boundary_err_left,
                r.boundary_err_right,
                c.j2,
                c.rho2,
                c.rap1_j2,
                c.ram1_j2,
                c.r2a_j2,
                tag
            )?;
        }
        Ok(())
    }
}

/// Kinetic runs of a sweep, kept for artifact output.
#[derive(Debug)]
pub struct SweepArtifacts {
    pub report: ConvergenceReport,
    pub reference: Trajectory,
    pub runs: Vec<Result<KineticRun>>,
}

fn boundary_trace_error(series: &Series, bc: &BoundaryData, side: Side, window: &Window) -> f64 {
    let n = series.grid.nx();
    let vals: Vec<f64> = series
        .times
        .iter()
        .zip(&series.fields)
        .map(|(&t, f)| {
            let cell = if side == Side::Left { f[0] } else { f[n - 1] };
            (cell - 2.0 * bc.at(side, t)).powi(2)
        })
        .collect();
    let t_end = *series.times.last().unwrap_or(&0.0);
    trapezoid_from(&series.times, &vals, window.t_start_frac * t_end).sqrt()
}

/// One diffusion reference run plus one kinetic run per epsilon.
pub fn run_sweep_with_artifacts(cfg: &SweepConfig) -> Result<SweepArtifacts> {
    cfg.validate()?;
    let grid = cfg.kinetic_grid;
    let kin_cfgs = cfg
        .epsilons
        .iter()
        .map(|&e| cfg.kinetic_config(e))
        .collect::<Result<Vec<_>>>()?;
    for k in &kin_cfgs {
        k.validate()?;
    }

    let dcfg = cfg.diffusion_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;

    let (dref, runs) = pool.install(|| {
        rayon::join(
            || diffusion::solve(&dcfg),
            || kin_cfgs.par_iter().map(kinetic::run).collect::<Vec<_>>(),
        )
    });
    let dref = dref?;
    let fine = &dref.trajectory;
    let reference = Trajectory {
        grid,
        times: fine.times.clone(),
        rho: fine
            .rho
            .iter()
            .map(|r| restrict(r, cfg.diffusion_refine))
            .collect(),
    };

    let mut rows = Vec::with_capacity(runs.len());
    for (&eps, run) in cfg.epsilons.iter().zip(&runs) {
        let row = match run {
            Ok(run) => {
                let series = Series::from_kinetic(run, grid);
                let target = Series::resample(&reference, &series.times);
                let tol = tol_quad(grid.dx(), run.dt);
                ConvergenceRow {
                    epsilon: eps,
                    l2_err: space_time_l2(&series, &target, &cfg.window)?,
                    boundary_err_left: boundary_trace_error(
                        &series,
                        &cfg.bc,
                        Side::Left,
                        &cfg.window,
                    ),
                    boundary_err_right: boundary_trace_error(
                        &series,
                        &cfg.bc,
                        Side::Right,
                        &cfg.window,
                    ),
                    cumulative: run.cumulative,
                    residual_stats: run
                        .ledgers
                        .iter()
                        .map(|l| ResidualStats::from_ledger(l, tol))
                        .collect(),
                    mass_defect: run.mass.relative_defect(),
                    failure: None,
                }
            }
            Err(e) => ConvergenceRow {
                epsilon: eps,
                l2_err: f64::NAN,
                boundary_err_left: f64::NAN,
                boundary_err_right: f64::NAN,
                cumulative: Cumulative {
                    j2: f64::NAN,
                    rho2: f64::NAN,
                    rap1_j2: f64::NAN,
                    ram1_j2: f64::NAN,
                    r2a_j2: f64::NAN,
                },
                residual_stats: Vec::new(),
                mass_defect: f64::NAN,
                failure: Some(e.to_string()),
            },
        };
        rows.push(row);
    }

    let all_runs_ok = rows.iter().all(|r| r.failure.is_none());
    let finals: Vec<Cumulative> = rows
        .iter()
        .filter(|r| r.failure.is_none())
        .map(|r| r.cumulative)
        .collect();
    let audit = bound_audit(&finals);
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_err).collect();
    let left: Vec<f64> = rows.iter().map(|r| r.boundary_err_left).collect();
    let right: Vec<f64> = rows.iter().map(|r| r.boundary_err_right).collect();
    let flags = SweepFlags {
        l2_strictly_decreasing: strictly_decreasing(&l2),
        l2_halved: match (l2.first(), l2.last()) {
            (Some(a), Some(b)) => *b <= 0.5 * *a,
            _ => false,
        },
        boundary_left_decreasing: strictly_decreasing(&left),
        boundary_right_decreasing: strictly_decreasing(&right),
        bounds_uniform: all_runs_ok && audit.iter().all(|a| a.uniform),
        entropy_inequality: all_runs_ok
            && rows
                .iter()
                .flat_map(|r| &r.residual_stats)
                .all(|s| s.passes()),
        all_runs_ok,
    };

    Ok(SweepArtifacts {
        report: ConvergenceReport {
            alpha: cfg.alpha,
            rows,
            audit,
            flags,
            reference_steps: dref.steps,
        },
        reference,
        runs,
    })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<ConvergenceReport> {
    run_sweep_with_artifacts(cfg).map(|a| a.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InitPreset;

    fn series(grid: Grid1D, times: Vec<f64>, val: impl Fn(f64, f64) -> f64) -> Series {
        let fields = times.iter().map(|&t| grid.sample(|x| val(t, x))).collect();
        Series {
            grid,
            times,
            fields,
        }
    }

    #[test]
    fn l2_of_identical_series_is_zero() {
        let g = Grid1D::new(16).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let a = series(g, times, |t, x| t + x * x);
        assert_eq!(space_time_l2(&a, &a, &Window::default()).unwrap(), 0.0);
    }

    #[test]
    fn l2_of_constant_offset() {
        let g = Grid1D::new(16).unwrap();
        let times: Vec<f64> = (0..=7).map(|k| k as f64 / 7.0).collect();
        let a = series(g, times.clone(), |t, x| t * x);
        let b = series(g, times, |t, x| t * x + 0.3);
        let w = Window {
            t_start_frac: 0.05,
            delta: 0.0,
        };
        let got = space_time_l2(&a, &b, &w).unwrap();
        assert!((got - 0.3 * (0.95f64).sqrt()).abs() < 1e-13);
        // delta = 0.25 keeps the 8 central cells of 16
        let w = Window {
            t_start_frac: 0.0,
            delta: 0.25,
        };
        let got = space_time_l2(&a, &b, &w).unwrap();
        assert!((got - 0.3 * (0.5f64).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn l2_rejects_mismatch() {
        let g = Grid1D::new(16).unwrap();
        let h = Grid1D::new(8).unwrap();
        let a = series(g, vec![0.0, 1.0], |_, _| 0.0);
        let b = series(h, vec![0.0, 1.0], |_, _| 0.0);
        assert!(space_time_l2(&a, &b, &Window::default()).is_err());
        let c = series(g, vec![0.0, 0.5], |_, _| 0.0);
        assert!(space_time_l2(&a, &c, &Window::default()).is_err());
    }

    #[test]
    fn heat_oracle_limits() {
        let g = Grid1D::new(100).unwrap();
        let rho0 = g.sample(|x| 2.0 + 2.0 * x + (PI * x).sin());
        // t = 0 reproduces the data away from truncation effects
        let at0 = heat_oracle(2.0, 4.0, &rho0, &g, 0.0, 256);
        let mid = at0[50] - rho0[50];
        assert!(mid.abs() < 1e-2);
        let late = heat_oracle(2.0, 4.0, &rho0, &g, 50.0, 64);
        for (i, v) in late.iter().enumerate() {
            assert!((v - (2.0 + 2.0 * g.center(i))).abs() < 1e-12);
        }
        let at1 = heat_oracle(2.0, 4.0, &rho0, &g, 1.0, 64);
        let amp = (at1[50] - (2.0 + 2.0 * g.center(50))) / (PI * g.center(50)).sin();
        assert!((amp / (-PI * PI / 2.0).exp() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn audit_flags() {
        let c = |j2: f64, rho2: f64| Cumulative {
            j2,
            rho2,
            rap1_j2: j2,
            ram1_j2: j2,
            r2a_j2: j2,
        };
        let rows = bound_audit(&[c(0.0, 4.0), c(0.0, 4.0)]);
        assert!(rows.iter().all(|r| r.uniform));
        assert_eq!(rows[0].max_over_min, 1.0);
        let rows = bound_audit(&[c(1.0, 4.0), c(30.0, 4.0)]);
        assert!(!rows[0].uniform);
        assert_eq!(rows[0].max_over_min, 30.0);
        let rows = bound_audit(&[c(0.0, 4.0), c(1.0, 4.0)]);
        assert!(rows[0].max_over_min.is_infinite());
        let mut buf = Vec::new();
        write_audit_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("integral_name,max_over_min_ratio,uniform\ncum_j2,inf,false"));
    }

    #[test]
    fn restrict_averages_pairs() {
        assert_eq!(restrict(&[1.0, 3.0, 2.0, 2.0], 2), vec![2.0, 2.0]);
    }

    #[test]
    fn sweep_config_checks() {
        let g = Grid1D::new(10).unwrap();
        let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &g);
        let bc = BoundaryData::constant(1.0, 1.0, 1.0);
        let mut cfg = SweepConfig::new(0.0, bc, init, 1.0, vec![0.1, 0.2], g);
        assert!(cfg.validate().is_err());
        cfg.epsilons = vec![0.2, 0.1];
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.betas().unwrap().len(), 1);
        cfg.alpha = 0.5;
        assert_eq!(cfg.betas().unwrap().len(), 2);
    }

    #[test]
    fn equilibrium_sweep_has_zero_error() {
        let g = Grid1D::new(20).unwrap();
        let init = InitialData::from_preset(&InitPreset::Constant { u: 1.0, v: 1.0 }, &g);
        let bc = BoundaryData::constant(1.0, 1.0, 0.2);
        let cfg = SweepConfig::new(0.0, bc, init, 0.2, vec![0.2, 0.1], g);
        let rep = run_sweep(&cfg).unwrap();
        for r in &rep.rows {
            assert!(r.l2_err < 1e-12);
            assert_eq!(r.cumulative.j2, 0.0);
        }
        assert!(rep.audit.iter().all(|a| a.uniform));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), ConvergenceReport::CSV_HEADER);
        assert_eq!(text.lines().count(), 3);
    }
}
