//! Flat `key=value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown keys, repeated keys and unparsable values are errors naming the
//! key and line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use carleman_core::diffusion::{DiffusionConfig, NewtonParams};
use carleman_core::entropy::ConvexIndex;
use carleman_core::harness::{SweepConfig, Window};
use carleman_core::kinetic::KineticConfig;
use carleman_core::{BoundaryData, Grid1D, InitPreset, InitialData, TimeFn};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: key `{key}`: {message}")]
    AtLine {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: malformed line (expected key=value): {text:?}")]
    Malformed { line: usize, text: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("{0}")]
    Other(String),
}

pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "epsilon",
    "epsilons",
    "nx",
    "cfl",
    "t_end",
    "dt_par",
    "bc.left.kind",
    "bc.left.a",
    "bc.left.b",
    "bc.left.omega",
    "bc.right.kind",
    "bc.right.a",
    "bc.right.b",
    "bc.right.omega",
    "init.kind",
    "init.file",
    "init.u",
    "init.v",
    "init.left",
    "init.right",
    "init.base",
    "init.amplitude",
    "init.seed",
    "init.max",
    "window.t_start_frac",
    "window.delta",
    "ledger.betas",
    "ledger.gamma",
    "output.stride",
    "newton.max_iter",
    "newton.tol",
    "newton.damping",
    "diffusion.refine",
    "sweep.samples",
];

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Preset(InitPreset),
    File(PathBuf),
}

/// Fully typed configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub epsilons: Vec<f64>,
    pub nx: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub dt_par: Option<f64>,
    pub bc_left: TimeFn,
    pub bc_right: TimeFn,
    pub init: InitSpec,
    pub window: Window,
    pub ledger_betas: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub output_stride: Option<usize>,
    pub newton: NewtonParams,
    pub diffusion_refine: usize,
    pub samples: usize,
}

struct Entry {
    line: usize,
    value: String,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line,
                    text: raw_line.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::AtLine {
                    line,
                    key,
                    message: "unknown key".into(),
                });
            }
            if let Some(prev) = entries.get(&key) {
                let prev: &Entry = prev;
                return Err(ConfigError::AtLine {
                    line,
                    key,
                    message: format!("repeated (first set on line {})", prev.line),
                });
            }
            entries.insert(key, Entry { line, value });
        }
        Ok(Self { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.line).unwrap_or(0)
    }

    fn err(&self, key: &str, message: impl fmt::Display) -> ConfigError {
        ConfigError::AtLine {
            line: self.line(key),
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get_str(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(key, format!("cannot parse {s:?}"))),
        }
    }

    fn req<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?
            .ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get_str(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        self.err(key, format!("cannot parse list item {:?}", p.trim()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn time_fn(&self, side: &str) -> Result<TimeFn, ConfigError> {
        let kind_key = format!("bc.{side}.kind");
        let a_key = format!("bc.{side}.a");
        let kind: String = self.req(&kind_key)?;
        let a: f64 = self.req(&a_key)?;
        let f = match kind.as_str() {
            "constant" => TimeFn::Constant { c: a },
            "ramp" => TimeFn::Ramp {
                a,
                b: self.req(&format!("bc.{side}.b"))?,
            },
            "sinusoid" => TimeFn::Sinusoid {
                a,
                b: self.req(&format!("bc.{side}.b"))?,
                omega: self.req(&format!("bc.{side}.omega"))?,
            },
            other => {
                return Err(self.err(
                    &kind_key,
                    format!("unknown kind {other:?} (constant, ramp or sinusoid)"),
                ))
            }
        };
        Ok(f)
    }

    fn init(&self, base: &Path) -> Result<InitSpec, ConfigError> {
        let kind: String = self.req("init.kind")?;
        let preset = match kind.as_str() {
            "constant" => InitPreset::Constant {
                u: self.req("init.u")?,
                v: self.req("init.v")?,
            },
            "step" => InitPreset::Step {
                left: self.req("init.left")?,
                right: self.req("init.right")?,
            },
            "bump" => InitPreset::Bump {
                base: self.req("init.base")?,
                amplitude: self.req("init.amplitude")?,
            },
            "random" => InitPreset::Random {
                seed: self.req("init.seed")?,
                max: self.get("init.max")?.unwrap_or(1.0),
            },
            "file" => {
                let p: String = self.req("init.file")?;
                return Ok(InitSpec::File(base.join(p)));
            }
            other => {
                return Err(self.err(
                    "init.kind",
                    format!("unknown kind {other:?} (constant, step, bump, random or file)"),
                ))
            }
        };
        Ok(InitSpec::Preset(preset))
    }
}

/// Parses configuration text; relative `init.file` paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let raw = Raw::parse(text)?;

    let alpha: f64 = raw.req("alpha")?;
    if !(-1.0..=1.0).contains(&alpha) {
        return Err(raw.err("alpha", format!("{alpha} violates alpha in [-1,1]")));
    }
    let epsilons = match (raw.get::<f64>("epsilon")?, raw.list("epsilons")?) {
        (Some(_), Some(_)) => {
            return Err(raw.err("epsilons", "give either `epsilon` or `epsilons`, not both"))
        }
        (Some(e), None) => vec![e],
        (None, Some(l)) => l,
        (None, None) => return Err(ConfigError::Missing("epsilon".into())),
    };
    let eps_key = if raw.get_str("epsilon").is_some() {
        "epsilon"
    } else {
        "epsilons"
    };
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(raw.err(eps_key, "every epsilon must be finite and > 0"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(raw.err(eps_key, "epsilon list must be strictly decreasing"));
    }

    let nx: usize = raw.req("nx")?;
    if nx < Grid1D::MIN_CELLS {
        return Err(raw.err("nx", format!("need at least {} cells", Grid1D::MIN_CELLS)));
    }
    let t_end: f64 = raw.req("t_end")?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(raw.err("t_end", "must be finite and > 0"));
    }
    let cfl = raw.get("cfl")?.unwrap_or(1.0);
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(raw.err("cfl", "must lie in (0, 1]"));
    }
    let dt_par: Option<f64> = raw.get("dt_par")?;
    if let Some(d) = dt_par {
        if !(d > 0.0) {
            return Err(raw.err("dt_par", "must be > 0"));
        }
    }

    let bc_left = raw.time_fn("left")?;
    let bc_right = raw.time_fn("right")?;
    let bc = BoundaryData::new(bc_left, bc_right, t_end);
    for (side, f) in [("left", &bc.phi_minus), ("right", &bc.phi_plus)] {
        let single = BoundaryData::new(*f, TimeFn::constant(1.0), t_end);
        if let Some(msg) = single.violations().into_iter().next() {
            return Err(raw.err(
                &format!("bc.{side}.a"),
                msg.replace("phi-", &format!("{side} boundary")),
            ));
        }
    }

    let window = Window {
        t_start_frac: raw.get("window.t_start_frac")?.unwrap_or(0.05),
        delta: raw.get("window.delta")?.unwrap_or(0.0),
    };
    if window.validate().is_err() {
        let key = if (0.0..1.0).contains(&window.t_start_frac) {
            "window.delta"
        } else {
            "window.t_start_frac"
        };
        return Err(raw.err(key, "t_start_frac must lie in [0,1) and delta in [0,0.5)"));
    }

    let ledger_betas = raw.list("ledger.betas")?;
    if let Some(b) = &ledger_betas {
        if b.iter().any(|x| !(-1.0..=1.0).contains(x)) {
            return Err(raw.err("ledger.betas", "every beta must lie in [-1,1]"));
        }
    }
    let gamma: Option<f64> = raw.get("ledger.gamma")?;
    if let Some(g) = gamma {
        if !(g > 0.0 && g < 1.0) {
            return Err(raw.err("ledger.gamma", "must lie in (0,1)"));
        }
    }
    let output_stride: Option<usize> = raw.get("output.stride")?;
    if output_stride == Some(0) {
        return Err(raw.err("output.stride", "must be >= 1"));
    }

    let defaults = NewtonParams::default();
    let newton = NewtonParams {
        max_iter: raw.get("newton.max_iter")?.unwrap_or(defaults.max_iter),
        tol: raw.get("newton.tol")?.unwrap_or(defaults.tol),
        damping: raw.get("newton.damping")?.unwrap_or(defaults.damping),
        regularization: defaults.regularization,
    };
    if newton.max_iter == 0 {
        return Err(raw.err("newton.max_iter", "must be >= 1"));
    }
    if !(newton.tol > 0.0) {
        return Err(raw.err("newton.tol", "must be > 0"));
    }
    if !(newton.damping > 0.0 && newton.damping <= 1.0) {
        return Err(raw.err("newton.damping", "must lie in (0,1]"));
    }
    let diffusion_refine = raw.get("diffusion.refine")?.unwrap_or(2);
    if diffusion_refine < 2 {
        return Err(raw.err("diffusion.refine", "must be >= 2"));
    }
    let samples = raw.get("sweep.samples")?.unwrap_or(200);
    if samples == 0 {
        return Err(raw.err("sweep.samples", "must be >= 1"));
    }

    Ok(RunConfig {
        alpha,
        epsilons,
        nx,
        cfl,
        t_end,
        dt_par,
        bc_left,
        bc_right,
        init: raw.init(base)?,
        window,
        ledger_betas,
        gamma,
        output_stride,
        newton,
        diffusion_refine,
        samples,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Default time step of the standalone diffusion run.
pub const DEFAULT_DT_PAR: f64 = 1e-4;

impl RunConfig {
    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.nx).expect("nx validated at parse time")
    }

    pub fn bc(&self) -> BoundaryData {
        BoundaryData::new(self.bc_left, self.bc_right, self.t_end)
    }

    pub fn initial_data(&self) -> carleman_core::Result<InitialData> {
        let grid = self.grid();
        match &self.init {
            InitSpec::Preset(p) => Ok(InitialData::from_preset(p, &grid)),
            InitSpec::File(path) => InitialData::from_file(path, &grid),
        }
    }

    pub fn betas(&self) -> carleman_core::Result<Vec<ConvexIndex>> {
        match &self.ledger_betas {
            Some(list) => list.iter().map(|&b| ConvexIndex::new(b)).collect(),
            None => {
                let mut v = vec![ConvexIndex::new(self.alpha)?];
                if self.alpha != 0.0 {
                    v.push(ConvexIndex::new(0.0)?);
                }
                Ok(v)
            }
        }
    }

    pub fn kinetic_config(&self) -> carleman_core::Result<KineticConfig> {
        let mut cfg = KineticConfig::new(
            self.alpha,
            self.epsilons[0],
            self.grid(),
            self.t_end,
            self.bc(),
            self.initial_data()?,
        );
        cfg.cfl = self.cfl;
        cfg.ledger_betas = self.betas()?;
        cfg.gamma = self.gamma;
        let stride = self
            .output_stride
            .unwrap_or_else(|| (cfg.schedule().0 / 20).max(1));
        cfg.ledger_stride = stride;
        cfg.snapshot_stride = Some(stride);
        Ok(cfg)
    }

    pub fn diffusion_config(&self) -> carleman_core::Result<DiffusionConfig> {
        let dt = self.dt_par.unwrap_or(DEFAULT_DT_PAR);
        let mut cfg = DiffusionConfig::new(
            self.alpha,
            self.grid(),
            dt,
            self.t_end,
            self.bc(),
            self.initial_data()?.rho(),
        );
        cfg.newton = self.newton;
        let steps = (self.t_end / dt).ceil() as usize;
        cfg.stride = self.output_stride.unwrap_or_else(|| (steps / 20).max(1));
        Ok(cfg)
    }

    pub fn sweep_config(&self) -> carleman_core::Result<SweepConfig> {
        let mut cfg = SweepConfig::new(
            self.alpha,
            self.bc(),
            self.initial_data()?,
            self.t_end,
            self.epsilons.clone(),
            self.grid(),
        );
        cfg.cfl = self.cfl;
        cfg.diffusion_refine = self.diffusion_refine;
        cfg.dt_par = self.dt_par;
        cfg.newton = self.newton;
        cfg.window = self.window;
        cfg.ledger_betas = match &self.ledger_betas {
            Some(_) => Some(self.betas()?),
            None => None,
        };
        cfg.gamma = self.gamma;
        cfg.samples = self.samples;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
alpha=0
epsilon=0.1
nx=100
t_end=1
bc.left.kind=constant
bc.left.a=1
bc.right.kind=constant
bc.right.a=1
init.kind=constant
init.u=1
init.v=1
";

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.epsilons, vec![0.1]);
        assert_eq!(c.cfl, 1.0);
        assert_eq!(c.window, Window::default());
        assert_eq!(c.diffusion_refine, 2);
        assert_eq!(c.newton, NewtonParams::default());
        assert_eq!(
            c.init,
            InitSpec::Preset(InitPreset::Constant { u: 1.0, v: 1.0 })
        );
        let k = c.kinetic_config().unwrap();
        assert!(k.validate().is_ok());
    }

    #[test]
    fn alpha_out_of_range() {
        let text = MINIMAL.replace("alpha=0", "alpha=2");
        let e = parse(&text).unwrap_err();
        assert_eq!(
            e,
            ConfigError::AtLine {
                line: 1,
                key: "alpha".into(),
                message: "2 violates alpha in [-1,1]".into()
            }
        );
    }

    #[test]
    fn sinusoid_touching_zero() {
        let text = MINIMAL.replace(
            "bc.left.kind=constant\nbc.left.a=1",
            "bc.left.kind=sinusoid\nbc.left.a=1\nbc.left.b=1\nbc.left.omega=3",
        );
        let e = parse(&text).unwrap_err().to_string();
        assert!(e.contains("bc.left.a") && e.contains("positivity"), "{e}");
    }

    #[test]
    fn unknown_and_repeated_keys() {
        let e = parse(&format!("{MINIMAL}colour=blue\n")).unwrap_err();
        assert!(matches!(e, ConfigError::AtLine { line: 12, ref key, .. } if key == "colour"));
        let e = parse(&format!("{MINIMAL}nx=20\n")).unwrap_err();
        assert!(e.to_string().contains("repeated"));
    }

    #[test]
    fn missing_and_unparsable() {
        let e = parse(&MINIMAL.replace("nx=100\n", "")).unwrap_err();
        assert_eq!(e, ConfigError::Missing("nx".into()));
        let e = parse(&MINIMAL.replace("nx=100", "nx=1e2")).unwrap_err();
        assert!(matches!(e, ConfigError::AtLine { line: 3, .. }));
        let e = parse(&MINIMAL.replace("t_end=1", "t_end")).unwrap_err();
        assert!(matches!(e, ConfigError::Malformed { line: 4, .. }));
    }

    #[test]
    fn epsilon_lists() {
        let text = MINIMAL.replace("epsilon=0.1", "epsilons=0.2, 0.1,0.05");
        assert_eq!(parse(&text).unwrap().epsilons, vec![0.2, 0.1, 0.05]);
        let text = MINIMAL.replace("epsilon=0.1", "epsilons=0.1,0.2");
        assert!(parse(&text).is_err());
        let text = MINIMAL.replace("epsilon=0.1", "epsilon=0.1\nepsilons=0.1");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!(
            "# header\n\n{}",
            MINIMAL.replace("nx=100", "nx=100   # cells")
        );
        assert_eq!(parse(&text).unwrap().nx, 100);
    }
}
