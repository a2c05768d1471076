//! Grids, state containers, boundary and initial data, admissibility checks
//! and the midpoint quadrature shared by both solvers and the diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Uniform cell-centered grid on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    nx: usize,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 4;

    pub fn new(nx: usize) -> Result<Self> {
        if nx < Self::MIN_CELLS {
            return Err(Error::Input(format!(
                "grid needs at least {} cells, got {nx}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { nx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    /// Center of cell `i`, computed as `(i + 1/2) / nx` so that no
    /// accumulated `dx` enters the coordinates.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.nx as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.center(i)).collect()
    }

    /// Samples `f` at every cell center.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nx).map(|i| f(self.center(i))).collect()
    }
}

/// Midpoint quadrature of `field²` over (0,1).
pub fn l2_norm_sq(field: &[f64], grid: &Grid1D) -> f64 {
    debug_assert_eq!(field.len(), grid.nx());
    field.iter().map(|v| v * v).sum::<f64>() * grid.dx()
}

/// Midpoint quadrature of `field` over (0,1).
pub fn integrate(field: &[f64], grid: &Grid1D) -> f64 {
    field.iter().sum::<f64>() * grid.dx()
}

/// Right-moving (`u`) and left-moving (`v`) densities at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl KineticState {
    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Input(format!(
                "u has {} cells but v has {}",
                u.len(),
                v.len()
            )));
        }
        Ok(Self { t, u, v })
    }

    pub fn from_initial(init: &InitialData) -> Self {
        Self {
            t: 0.0,
            u: init.u.clone(),
            v: init.v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(u, v)| u + v).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x >= 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Cellwise average of two states; used as the time-midpoint of a step.
    pub fn midpoint(a: &Self, b: &Self) -> Self {
        Self {
            t: 0.5 * (a.t + b.t),
            u: a.u.iter().zip(&b.u).map(|(x, y)| 0.5 * (x + y)).collect(),
            v: a.v.iter().zip(&b.v).map(|(x, y)| 0.5 * (x + y)).collect(),
        }
    }
}

/// Density and current `(rho, j)` with `rho = u + v`, `eps * j = u - v`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
    pub epsilon: f64,
}

impl MacroField {
    pub fn from_kinetic(state: &KineticState, epsilon: f64) -> Self {
        let rho = state.rho();
        let j = state
            .u
            .iter()
            .zip(&state.v)
            .map(|(u, v)| (u - v) / epsilon)
            .collect();
        Self { rho, j, epsilon }
    }

    pub fn to_kinetic(&self, t: f64) -> KineticState {
        let eps = self.epsilon;
        let u = self
            .rho
            .iter()
            .zip(&self.j)
            .map(|(r, j)| 0.5 * (r + eps * j))
            .collect();
        let v = self
            .rho
            .iter()
            .zip(&self.j)
            .map(|(r, j)| 0.5 * (r - eps * j))
            .collect();
        KineticState { t, u, v }
    }
}

/// Closed-form inflow profile in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFn {
    Constant {
        c: f64,
    },
    /// `a + b t`
    Ramp {
        a: f64,
        b: f64,
    },
    /// `a + b sin(omega t)`
    Sinusoid {
        a: f64,
        b: f64,
        omega: f64,
    },
}

/// Range `[min, max]` of `sin` over the interval `[s0, s1]`.
fn sin_range(s0: f64, s1: f64) -> (f64, f64) {
    let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
    let contains = |phase: f64| {
        let k = ((lo - phase) / (2.0 * PI)).ceil();
        phase + 2.0 * PI * k <= hi
    };
    let mut min = lo.sin().min(hi.sin());
    let mut max = lo.sin().max(hi.sin());
    if contains(0.5 * PI) {
        max = 1.0;
    }
    if contains(-0.5 * PI) {
        min = -1.0;
    }
    (min, max)
}

impl TimeFn {
    pub fn constant(c: f64) -> Self {
        TimeFn::Constant { c }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFn::Constant { c } => c,
            TimeFn::Ramp { a, b } => a + b * t,
            TimeFn::Sinusoid { a, b, omega } => a + b * (omega * t).sin(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeFn::Constant { .. } => 0.0,
            TimeFn::Ramp { b, .. } => b,
            TimeFn::Sinusoid { b, omega, .. } => b * omega * (omega * t).cos(),
        }
    }

    /// Exact `[min, max]` of the value over `[0, horizon]`.
    pub fn value_range(&self, horizon: f64) -> (f64, f64) {
        match *self {
            TimeFn::Constant { c } => (c, c),
            TimeFn::Ramp { a, b } => {
                let end = a + b * horizon;
                (a.min(end), a.max(end))
            }
            TimeFn::Sinusoid { a, b, omega } => {
                let (smin, smax) = sin_range(0.0, omega * horizon);
                let (p, q) = (a + b * smin, a + b * smax);
                (p.min(q), p.max(q))
            }
        }
    }

    /// Exact `sup |d/dt|` over `[0, horizon]`.
    pub fn sup_abs_derivative(&self, horizon: f64) -> f64 {
        match *self {
            TimeFn::Constant { .. } => 0.0,
            TimeFn::Ramp { b, .. } => b.abs(),
            TimeFn::Sinusoid { b, omega, .. } => {
                let (cmin, cmax) = sin_range(0.5 * PI, 0.5 * PI + omega * horizon);
                (b * omega).abs() * cmin.abs().max(cmax.abs())
            }
        }
    }

    pub fn sup_abs(&self, horizon: f64) -> f64 {
        let (lo, hi) = self.value_range(horizon);
        lo.abs().max(hi.abs())
    }

    /// Descriptor-level positivity: the value is bounded below by a positive
    /// constant for every `t` in `[0, horizon]`.
    fn positivity_violation(&self, horizon: f64) -> Option<String> {
        match *self {
            TimeFn::Constant { c } if c <= 0.0 => Some(format!("constant value {c} is not > 0")),
            TimeFn::Ramp { a, b } if a <= 0.0 || a + b * horizon <= 0.0 => {
                Some(format!("ramp {a} + {b} t is not > 0 on [0, {horizon}]"))
            }
            TimeFn::Sinusoid { a, b, .. } if a - b.abs() <= 0.0 => Some(format!(
                "sinusoid {a} + {b} sin(.) has minimum {} which is not > 0",
                a - b.abs()
            )),
            _ => None,
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            TimeFn::Constant { c } => c.is_finite(),
            TimeFn::Ramp { a, b } => a.is_finite() && b.is_finite(),
            TimeFn::Sinusoid { a, b, omega } => a.is_finite() && b.is_finite() && omega.is_finite(),
        }
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TimeFn::Constant { c } => write!(f, "constant({c})"),
            TimeFn::Ramp { a, b } => write!(f, "ramp({a} + {b} t)"),
            TimeFn::Sinusoid { a, b, omega } => write!(f, "sinusoid({a} + {b} sin({omega} t))"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// x = 0, where `u` enters.
    Left,
    /// x = 1, where `v` enters.
    Right,
}

/// Inflow data `u(t,0) = phi_minus(t)`, `v(t,1) = phi_plus(t)` on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub phi_minus: TimeFn,
    pub phi_plus: TimeFn,
    pub horizon: f64,
}

impl BoundaryData {
    pub fn new(phi_minus: TimeFn, phi_plus: TimeFn, horizon: f64) -> Self {
        Self {
            phi_minus,
            phi_plus,
            horizon,
        }
    }

    pub fn constant(left: f64, right: f64, horizon: f64) -> Self {
        Self::new(TimeFn::constant(left), TimeFn::constant(right), horizon)
    }

    pub fn side(&self, side: Side) -> &TimeFn {
        match side {
            Side::Left => &self.phi_minus,
            Side::Right => &self.phi_plus,
        }
    }

    /// Boundary value at time `t`, without the range check of [`eval_boundary`].
    #[inline]
    pub fn at(&self, side: Side, t: f64) -> f64 {
        self.side(side).value(t)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.phi_minus, TimeFn::Constant { .. })
            && matches!(self.phi_plus, TimeFn::Constant { .. })
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(format!(
                "horizon T = {} must be finite and > 0",
                self.horizon
            ));
            return out;
        }
        for (name, f) in [("phi-", &self.phi_minus), ("phi+", &self.phi_plus)] {
            if !f.is_finite() {
                out.push(format!("{name}: non-finite descriptor parameter"));
            } else if let Some(msg) = f.positivity_violation(self.horizon) {
                out.push(format!("positivity of phi violated ({name}): {msg}"));
            }
        }
        out
    }
}

/// Checked boundary evaluation: `t` must lie in `[0, T]`.
pub fn eval_boundary(bc: &BoundaryData, side: Side, t: f64) -> Result<f64> {
    if !(0.0..=bc.horizon).contains(&t) {
        return Err(Error::Input(format!(
            "time {t} outside boundary horizon [0, {}]",
            bc.horizon
        )));
    }
    Ok(bc.at(side, t))
}

/// Constants derived from the boundary data: `nu` bounds the values plus
/// derivatives of both inflow functions, `phi_m` is their infimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyParams {
    pub nu: f64,
    pub phi_m: f64,
}

pub fn entropy_params(bc: &BoundaryData) -> EntropyParams {
    let t = bc.horizon;
    let w1inf = |f: &TimeFn| f.sup_abs(t) + f.sup_abs_derivative(t);
    let nu = w1inf(&bc.phi_minus).max(w1inf(&bc.phi_plus));
    let phi_m = bc
        .phi_minus
        .value_range(t)
        .0
        .min(bc.phi_plus.value_range(t).0);
    EntropyParams { nu, phi_m }
}

/// Named presets for the initial densities.
#[derive(Debug, Clone, PartialEq)]
pub enum InitPreset {
    Constant {
        u: f64,
        v: f64,
    },
    /// `u = v = left` on `x < 1/2`, `u = v = right` elsewhere.
    Step {
        left: f64,
        right: f64,
    },
    /// `u = v = base + amplitude * sin(pi x)`.
    Bump {
        base: f64,
        amplitude: f64,
    },
    /// Independent uniform samples in `[0, max)` for `u` and `v`.
    Random {
        seed: u64,
        max: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl InitialData {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Input(format!(
                "initial u has {} cells but v has {}",
                u.len(),
                v.len()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn from_preset(preset: &InitPreset, grid: &Grid1D) -> Self {
        let n = grid.nx();
        match *preset {
            InitPreset::Constant { u, v } => Self {
                u: vec![u; n],
                v: vec![v; n],
            },
            InitPreset::Step { left, right } => {
                let f = grid.sample(|x| if x < 0.5 { left } else { right });
                Self { u: f.clone(), v: f }
            }
            InitPreset::Bump { base, amplitude } => {
                let f = grid.sample(|x| base + amplitude * (PI * x).sin());
                Self { u: f.clone(), v: f }
            }
            InitPreset::Random { seed, max } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = (0..n).map(|_| rng.random::<f64>() * max).collect();
                let v = (0..n).map(|_| rng.random::<f64>() * max).collect();
                Self { u, v }
            }
        }
    }

    /// Parses the text format: one `u v` pair per line, exactly `nx` lines.
    pub fn parse(text: &str, grid: &Grid1D) -> Result<Self> {
        let mut u = Vec::with_capacity(grid.nx());
        let mut v = Vec::with_capacity(grid.nx());
        for (lineno, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::Input(format!(
                    "initial data line {}: expected 2 values, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::Input(format!(
                        "initial data line {}: cannot parse {s:?} as a number",
                        lineno + 1
                    ))
                })
            };
            u.push(parse(fields[0])?);
            v.push(parse(fields[1])?);
        }
        if u.len() != grid.nx() {
            return Err(Error::Input(format!(
                "initial data file has {} lines, grid has {} cells",
                u.len(),
                grid.nx()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn from_file(path: &Path, grid: &Grid1D) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, grid)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.u.iter().zip(&self.v) {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn rho(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(u, v)| u + v).collect()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.u.len() != self.v.len() {
            out.push("initial u and v have different lengths".to_string());
        }
        for (name, field) in [("u_in", &self.u), ("v_in", &self.v)] {
            if let Some(i) = field.iter().position(|x| !x.is_finite()) {
                out.push(format!("{name} is not finite at cell {i}"));
            } else if let Some(i) = field.iter().position(|&x| x < 0.0) {
                out.push(format!(
                    "nonnegativity of {name} violated at cell {i} (value {})",
                    field[i]
                ));
            }
        }
        out
    }
}

/// Outcome of [`validate_admissible`]: empty `violations` means accepted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Inadmissible(self.violations))
        }
    }
}

pub fn alpha_violation(alpha: f64) -> Option<String> {
    if (-1.0..=1.0).contains(&alpha) {
        None
    } else {
        Some(format!("alpha = {alpha} violates alpha in [-1,1]"))
    }
}

/// Collects every violated admissibility condition for the kinetic problem.
pub fn validate_admissible(bc: &BoundaryData, init: &InitialData, alpha: f64) -> ValidationReport {
    let mut violations = Vec::new();
    violations.extend(alpha_violation(alpha));
    violations.extend(bc.violations());
    violations.extend(init.violations());
    ValidationReport { violations }
}
