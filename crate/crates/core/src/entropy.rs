//! Convex family `phi_beta`, its Legendre duals, the shifted functions
//! `Phi_beta`, the affine boundary profile, relative entropy, entropy
//! production and the discrete entropy-inequality residual.
//!
//! For `beta < 1` the family is `phi(y) = y^(2-beta) / (2-beta)`, for
//! `beta = 1` it is `phi(y) = y ln y` with `phi(0) = 0`. In both cases
//! `phi''(y) = c_beta * y^(-beta)` with `c_beta = 1 - beta` (or 1 when
//! `beta = 1`), which the sup-norm formulas below rely on.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{BoundaryData, EntropyParams, Grid1D, KineticState, Side};

/// Exponent selecting a member of the convex family, `beta` in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConvexIndex(f64);

impl ConvexIndex {
    pub fn new(beta: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&beta) {
            Ok(Self(beta))
        } else {
            Err(Error::Input(format!("beta = {beta} outside [-1, 1]")))
        }
    }

    pub fn beta(self) -> f64 {
        self.0
    }

    pub fn is_log(self) -> bool {
        self.0 == 1.0
    }

    fn curvature_coeff(self) -> f64 {
        if self.is_log() {
            1.0
        } else {
            1.0 - self.0
        }
    }
}

impl fmt::Display for ConvexIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn phi(beta: ConvexIndex, y: f64) -> f64 {
    if beta.is_log() {
        if y == 0.0 {
            0.0
        } else {
            y * y.ln()
        }
    } else {
        let p = 2.0 - beta.0;
        y.powf(p) / p
    }
}

pub fn phi_prime(beta: ConvexIndex, y: f64) -> f64 {
    if beta.is_log() {
        y.ln() + 1.0
    } else {
        y.powf(1.0 - beta.0)
    }
}

pub fn phi_second(beta: ConvexIndex, y: f64) -> f64 {
    beta.curvature_coeff() * y.powf(-beta.0)
}

/// Closed-form Legendre dual `sup_{y >= 0} (xi y - phi(y))`.
///
/// Defined for every real `xi`; for the power members the supremum is 0
/// when `xi <= 0`.
pub fn phi_dual(beta: ConvexIndex, xi: f64) -> f64 {
    if beta.is_log() {
        (xi - 1.0).exp()
    } else if xi <= 0.0 {
        0.0
    } else {
        let b = beta.0;
        (1.0 - b) / (2.0 - b) * xi.powf((2.0 - b) / (1.0 - b))
    }
}

/// Additive constant turning `phi` into `Phi = phi + phi*(phi'(nu) + 1)`.
pub fn phi_shift(beta: ConvexIndex, params: &EntropyParams) -> f64 {
    phi_dual(beta, phi_prime(beta, params.nu) + 1.0)
}

pub fn big_phi(beta: ConvexIndex, y: f64, params: &EntropyParams) -> f64 {
    phi(beta, y) + phi_shift(beta, params)
}

/// `Phi' = phi'` since the shift is constant.
pub fn big_phi_prime(beta: ConvexIndex, y: f64) -> f64 {
    phi_prime(beta, y)
}

/// Bregman divergence `Phi(y) - Phi(z) - Phi'(z)(y - z)`; the shift cancels.
fn bregman(beta: ConvexIndex, y: f64, z: f64) -> f64 {
    phi(beta, y) - phi(beta, z) - phi_prime(beta, z) * (y - z)
}

/// Affine interpolation of the inflow data, `f(t,x) = (1-x) phi-(t) + x phi+(t)`.
#[derive(Debug, Clone, Copy)]
pub struct Profile {
    pub bc: BoundaryData,
}

/// Sup-in-x norms of the profile-derived factors entering the right-hand
/// side of the entropy inequality, at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileFactors {
    /// `sup_x |d/dx Phi'(f)|`
    pub dx_phi_prime: f64,
    /// `sup_x |d/dt Phi'(f)|`
    pub dt_phi_prime: f64,
    /// `sup_x |Phi''(f) d/dt f^2|`
    pub curvature_dt_f2: f64,
    /// `sup_x |Phi(f) - Phi'(f) f|`
    pub legendre_gap: f64,
}

/// `sup_{x in [0,1]} |g(x)^s (p + q x)|` for `g(x) = a + d x > 0`.
fn sup_abs_power_linear(a: f64, d: f64, s: f64, p: f64, q: f64) -> f64 {
    let h = |x: f64| ((a + d * x).powf(s) * (p + q * x)).abs();
    let mut best = h(0.0).max(h(1.0));
    if q != 0.0 && d != 0.0 && s != -1.0 {
        let xs = -(s * d * p + q * a) / (q * d * (s + 1.0));
        if xs > 0.0 && xs < 1.0 {
            best = best.max(h(xs));
        }
    }
    best
}

impl Profile {
    pub fn new(bc: BoundaryData) -> Self {
        Self { bc }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        (1.0 - x) * self.bc.at(Side::Left, t) + x * self.bc.at(Side::Right, t)
    }

    pub fn sample(&self, t: f64, grid: &Grid1D) -> Vec<f64> {
        grid.sample(|x| self.eval(t, x))
    }

    /// Closed-form sup norms over `x` at time `t`.
    pub fn factors(&self, beta: ConvexIndex, params: &EntropyParams, t: f64) -> ProfileFactors {
        let a = self.bc.phi_minus.value(t);
        let b = self.bc.phi_plus.value(t);
        let da = self.bc.phi_minus.derivative(t);
        let db = self.bc.phi_plus.derivative(t);
        let d = b - a;
        let c = beta.curvature_coeff();
        let bb = beta.beta();

        // phi''(f) is monotone in f, and f is monotone in x
        let dx_phi_prime = c * d.abs() * a.powf(-bb).max(b.powf(-bb));
        let dt_phi_prime = c * sup_abs_power_linear(a, d, -bb, da, db - da);
        let curvature_dt_f2 = 2.0 * c * sup_abs_power_linear(a, d, 1.0 - bb, da, db - da);
        // Phi(y) - Phi'(y) y is decreasing in y
        let gap = |y: f64| (big_phi(beta, y, params) - phi_prime(beta, y) * y).abs();
        let legendre_gap = gap(a).max(gap(b));

        ProfileFactors {
            dx_phi_prime,
            dt_phi_prime,
            curvature_dt_f2,
            legendre_gap,
        }
    }
}

/// Midpoint quadrature of the relative entropy of `(u, v)` with respect to
/// the profile at the state's time.
pub fn relative_entropy(
    beta: ConvexIndex,
    state: &KineticState,
    profile: &Profile,
    grid: &Grid1D,
) -> f64 {
    let sum: f64 = (0..grid.nx())
        .map(|i| {
            let f = profile.eval(state.t, grid.center(i));
            bregman(beta, state.u[i], f) + bregman(beta, state.v[i], f)
        })
        .sum();
    sum * grid.dx()
}

/// Pointwise production density `(Phi'(u) - Phi'(v)) (u+v)^alpha (u-v)`.
pub fn production_density(beta: ConvexIndex, alpha: f64, u: f64, v: f64) -> f64 {
    if u == v {
        return 0.0;
    }
    if beta.is_log() && (u == 0.0 || v == 0.0) {
        return f64::INFINITY;
    }
    (phi_prime(beta, u) - phi_prime(beta, v)) * (u + v).powf(alpha) * (u - v)
}

/// Entropy production; `+inf` flags a vacuum cell for the logarithmic member.
pub fn production(beta: ConvexIndex, alpha: f64, state: &KineticState, grid: &Grid1D) -> f64 {
    let sum: f64 = state
        .u
        .iter()
        .zip(&state.v)
        .map(|(&u, &v)| production_density(beta, alpha, u, v))
        .sum();
    sum * grid.dx()
}

pub fn coercivity_constant(alpha: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&alpha) {
        return Err(Error::Input(format!("alpha = {alpha} outside [-1, 1]")));
    }
    Ok(if alpha == 1.0 {
        1.0
    } else if alpha >= 0.0 {
        1.0 - alpha
    } else {
        2f64.powf(alpha)
    })
}

/// Nonnegative boundary bracket `(D(u|f)(1) + D(v|f)(0)) / eps`, with the
/// outgoing densities read at the edge cells.
pub fn boundary_dissipation(
    beta: ConvexIndex,
    state: &KineticState,
    profile: &Profile,
    epsilon: f64,
) -> f64 {
    let n = state.len();
    let f0 = profile.bc.at(Side::Left, state.t);
    let f1 = profile.bc.at(Side::Right, state.t);
    (bregman(beta, state.u[n - 1], f1) + bregman(beta, state.v[0], f0)) / epsilon
}

/// Scale-free residual: `(lhs - rhs) / max(1, |lhs|, |rhs|)`.
pub fn normalize_residual(lhs: f64, rhs: f64) -> f64 {
    if !lhs.is_finite() || !rhs.is_finite() {
        return f64::INFINITY;
    }
    (lhs - rhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub h_before: f64,
    pub h_after: f64,
    pub production_mid: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Residual {
    pub fn raw(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn normalized(&self) -> f64 {
        normalize_residual(self.lhs, self.rhs)
    }
}

/// Everything the entropy-inequality check needs besides the two states.
#[derive(Debug, Clone, Copy)]
pub struct ResidualInputs<'a> {
    pub beta: ConvexIndex,
    pub alpha: f64,
    pub epsilon: f64,
    pub profile: &'a Profile,
    pub params: &'a EntropyParams,
    pub gamma: f64,
    pub grid: &'a Grid1D,
}

/// Discrete entropy inequality over one step from `before` to `after`.
///
/// Left side: forward difference of `H` plus the production at the
/// cellwise-average state over `eps^2`. Right side:
/// `gamma/2 ∫j² + A_t H + A_x²/(2 gamma) + A_c + 2 A_t A_g` with the
/// profile factors evaluated at the step's mid time and `H`, `∫j²` at the
/// midpoint. A nonpositive residual certifies the inequality for the step.
pub fn entropy_residual(
    before: &KineticState,
    after: &KineticState,
    dt: f64,
    inp: &ResidualInputs<'_>,
) -> Residual {
    let h_before = relative_entropy(inp.beta, before, inp.profile, inp.grid);
    let h_after = relative_entropy(inp.beta, after, inp.profile, inp.grid);
    entropy_residual_with(before, after, dt, h_before, h_after, inp)
}

/// As [`entropy_residual`], reusing already computed entropies.
pub fn entropy_residual_with(
    before: &KineticState,
    after: &KineticState,
    dt: f64,
    h_before: f64,
    h_after: f64,
    inp: &ResidualInputs<'_>,
) -> Residual {
    let mid = KineticState::midpoint(before, after);
    let eps = inp.epsilon;
    let production_mid = production(inp.beta, inp.alpha, &mid, inp.grid);
    let lhs = (h_after - h_before) / dt + production_mid / (eps * eps);

    let j2: f64 = mid
        .u
        .iter()
        .zip(&mid.v)
        .map(|(u, v)| ((u - v) / eps).powi(2))
        .sum::<f64>()
        * inp.grid.dx();
    let fac = inp.profile.factors(inp.beta, inp.params, mid.t);
    let h_mid = 0.5 * (h_before + h_after);
    let rhs = 0.5 * inp.gamma * j2
        + fac.dt_phi_prime * h_mid
        + fac.dx_phi_prime.powi(2) / (2.0 * inp.gamma)
        + fac.curvature_dt_f2
        + 2.0 * fac.dt_phi_prime * fac.legendre_gap;

    Residual {
        h_before,
        h_after,
        production_mid,
        lhs,
        rhs,
    }
}

/// Space-time integrals monitored for uniform-in-epsilon bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cumulative {
    pub j2: f64,
    pub rho2: f64,
    /// ∫∫ rho^(alpha+1) j²
    pub rap1_j2: f64,
    /// ∫∫ rho^(alpha-1) j²
    pub ram1_j2: f64,
    /// ∫∫ rho^(2 alpha) j²
    pub r2a_j2: f64,
}

impl Cumulative {
    pub const NAMES: [&'static str; 5] = [
        "cum_j2",
        "cum_rho2",
        "cum_rap1_j2",
        "cum_ram1_j2",
        "cum_r2a_j2",
    ];

    pub fn as_array(&self) -> [f64; 5] {
        [self.j2, self.rho2, self.rap1_j2, self.ram1_j2, self.r2a_j2]
    }

    /// Spatial integrands at one time level.
    pub fn densities(state: &KineticState, epsilon: f64, alpha: f64, grid: &Grid1D) -> [f64; 5] {
        let mut acc = [0.0; 5];
        for (&u, &v) in state.u.iter().zip(&state.v) {
            let rho = u + v;
            let j2 = ((u - v) / epsilon).powi(2);
            let weighted = |p: f64| if j2 == 0.0 { 0.0 } else { rho.powf(p) * j2 };
            acc[0] += j2;
            acc[1] += rho * rho;
            acc[2] += weighted(alpha + 1.0);
            acc[3] += weighted(alpha - 1.0);
            acc[4] += weighted(2.0 * alpha);
        }
        acc.map(|a| a * grid.dx())
    }

    /// Trapezoidal accumulation over one step.
    pub fn accumulate(&mut self, before: &[f64; 5], after: &[f64; 5], dt: f64) {
        let add = |k: usize| 0.5 * dt * (before[k] + after[k]);
        self.j2 += add(0);
        self.rho2 += add(1);
        self.rap1_j2 += add(2);
        self.ram1_j2 += add(3);
        self.r2a_j2 += add(4);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    pub h: f64,
    pub p: f64,
    pub boundary_term: f64,
    /// Normalized residual of the step ending at `t`; 0 for the initial row.
    pub residual: f64,
    pub raw_residual: f64,
    pub cumulative: Cumulative,
}

/// Per-run record of the entropy diagnostics for one `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyLedger {
    pub beta: ConvexIndex,
    pub gamma: f64,
    pub rows: Vec<LedgerRow>,
}

impl EntropyLedger {
    pub const CSV_HEADER: &'static str =
        "t,H,P,boundary_term,residual,cum_j2,cum_rho2,cum_rap1_j2,cum_ram1_j2,cum_r2a_j2";

    pub fn new(beta: ConvexIndex, gamma: f64) -> Self {
        Self {
            beta,
            gamma,
            rows: Vec::new(),
        }
    }

    /// Default Young-splitting parameter `C_alpha / 2`.
    pub fn default_gamma(alpha: f64) -> Result<f64> {
        Ok(0.5 * coercivity_constant(alpha)?)
    }

    pub fn final_cumulative(&self) -> Cumulative {
        self.rows.last().map(|r| r.cumulative).unwrap_or_default()
    }

    /// Residual rows, skipping the initial row which has no preceding step.
    pub fn step_rows(&self) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(|r| r.step > 0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let c = r.cumulative;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.h,
                r.p,
                r.boundary_term,
                r.residual,
                c.j2,
                c.rho2,
                c.rap1_j2,
                c.ram1_j2,
                c.r2a_j2
            )?;
        }
        Ok(())
    }
}
