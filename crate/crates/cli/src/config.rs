//! Plain-text study configuration: one `key = value` per line, `#` starts a comment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dgms::coefficient::Coefficient;
use dgms::dg::{PenaltyMode, PenaltyRule, SolverOptions};
use dgms::mesh::{Axis, DomainSpec, Mesh};
use dgms::multiscale::{localization_radius, LogBase, Radius};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Reference,
    Msfem,
    Convergence,
    Localization,
    Decay,
    Qoi,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Reference => "reference",
            StudyKind::Msfem => "msfem",
            StudyKind::Convergence => "convergence",
            StudyKind::Localization => "localization",
            StudyKind::Decay => "decay",
            StudyKind::Qoi => "qoi",
        }
    }
}

impl FromStr for StudyKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "reference" => StudyKind::Reference,
            "msfem" => StudyKind::Msfem,
            "convergence" => StudyKind::Convergence,
            "localization" => StudyKind::Localization,
            "decay" => StudyKind::Decay,
            "qoi" => StudyKind::Qoi,
            _ => return Err(CliError::config(format!("unknown study {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainChoice {
    /// L-shape, Neumann on `y = 0` and `x = 1`, Dirichlet elsewhere.
    LShape,
    /// Unit square, Dirichlet everywhere.
    Square,
}

impl DomainChoice {
    pub fn spec(self) -> DomainSpec {
        match self {
            DomainChoice::LShape => DomainSpec::l_shape_mixed(),
            DomainChoice::Square => DomainSpec::unit_square_dirichlet(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    Constant(f64),
    Stripes {
        period: f64,
        low: f64,
        high: f64,
        axis: Axis,
    },
    Raster(PathBuf),
}

impl CoefficientSpec {
    pub fn build(&self, mesh: &Mesh) -> dgms::Result<dgms::Coefficient> {
        match self {
            CoefficientSpec::Constant(a) => Coefficient::constant(mesh, *a),
            CoefficientSpec::Stripes {
                period,
                low,
                high,
                axis,
            } => Coefficient::periodic_stripes(mesh, *period, *low, *high, *axis),
            CoefficientSpec::Raster(p) => Coefficient::load_raster(mesh, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// `1 + cos(2 pi x) cos(2 pi y)`
    Cosine,
    Constant(f64),
}

impl Forcing {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Forcing::Cosine => {
                let tau = std::f64::consts::TAU;
                1.0 + (tau * x).cos() * (tau * y).cos()
            }
            Forcing::Constant(c) => c,
        }
    }
}

/// How the patch radius is chosen for each coarse level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Localization {
    /// `L = ceil(C log(1/H))`.
    Constant(f64),
    Layers(usize),
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QoiChoice {
    /// The forcing itself.
    Forcing,
    /// Indicator of `[x0, x1] x [y0, y1]`.
    Box([f64; 4]),
}

impl QoiChoice {
    pub fn label(&self) -> String {
        match self {
            QoiChoice::Forcing => "f".into(),
            QoiChoice::Box(b) => format!("box {} {} {} {}", b[0], b[1], b[2], b[3]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub domain: DomainChoice,
    pub coefficient: CoefficientSpec,
    pub forcing: Forcing,
    pub fine_level: u32,
    pub coarse_levels: Vec<u32>,
    pub localization: Localization,
    pub log_base: LogBase,
    /// Constants of the localization sweep.
    pub sweep: Vec<f64>,
    pub sigma0: f64,
    pub penalty_mode: PenaltyMode,
    pub rtol: f64,
    pub max_iterations: usize,
    pub dense_max_level: u32,
    /// Sparse direct reference solve instead of CG.
    pub direct: bool,
    pub refinement_steps: usize,
    /// Also solve in the compressed space.
    pub compress: bool,
    pub svd_tol: f64,
    pub qoi: Vec<QoiChoice>,
    pub decay_point: [f64; 2],
    pub decay_local: usize,
    pub decay_layers: usize,
    /// Write measured runtimes to the CSV; zeros otherwise.
    pub timings: bool,
    pub global_budget: usize,
    pub force_budget: bool,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            study: StudyKind::Convergence,
            domain: DomainChoice::LShape,
            coefficient: CoefficientSpec::Constant(1.0),
            forcing: Forcing::Cosine,
            fine_level: 7,
            coarse_levels: vec![2, 3, 4, 5],
            localization: Localization::Constant(2.0),
            log_base: LogBase::Two,
            sweep: vec![1.0, 1.5, 2.0, 2.5],
            sigma0: 10.0,
            penalty_mode: PenaltyMode::CoefficientWeighted,
            rtol: 1e-10,
            max_iterations: 50_000,
            dense_max_level: 3,
            direct: true,
            refinement_steps: 2,
            compress: false,
            svd_tol: 0.0,
            qoi: vec![QoiChoice::Forcing, QoiChoice::Box([0.1, 0.45, 0.55, 0.9])],
            decay_point: [0.5, 0.5],
            decay_local: 0,
            decay_layers: 8,
            timings: true,
            global_budget: dgms::multiscale::GlobalOptions::default().budget,
            force_budget: false,
            out: PathBuf::from("out"),
            cache: None,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::config(format!("{key}: cannot parse {v:?}")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn words<const N: usize>(key: &str, v: &str) -> Result<[f64; N], CliError> {
    let xs: Vec<f64> = v
        .split_whitespace()
        .map(|w| num(key, w))
        .collect::<Result<_, _>>()?;
    xs.try_into()
        .map_err(|_| CliError::config(format!("{key}: expected {N} numbers in {v:?}")))
}

fn config_error(e: dgms::Error) -> CliError {
    match e {
        dgms::Error::Config(m) => CliError::Config(m),
        e => CliError::Config(e.to_string()),
    }
}

fn boolean(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::config(format!(
            "{key}: expected a boolean, got {v:?}"
        ))),
    }
}

fn axis(key: &str, v: &str) -> Result<Axis, CliError> {
    match v {
        "x" | "X" => Ok(Axis::X),
        "y" | "Y" => Ok(Axis::Y),
        _ => Err(CliError::config(format!("{key}: axis must be x or y"))),
    }
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| CliError::config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            CliError::config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::parse(&text)
    }

    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "study" => self.study = v.parse()?,
            "domain" => {
                self.domain = match v {
                    "lshape" | "l_shape" => DomainChoice::LShape,
                    "square" => DomainChoice::Square,
                    _ => return Err(CliError::config(format!("unknown domain {v:?}"))),
                }
            }
            "coefficient" => {
                let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
                let rest = rest.trim();
                self.coefficient = match kind {
                    "constant" => CoefficientSpec::Constant(num(key, rest)?),
                    "stripes" => {
                        let w: Vec<&str> = rest.split_whitespace().collect();
                        if w.len() != 4 {
                            return Err(CliError::config(
                                "stripes takes: period low high axis".to_string(),
                            ));
                        }
                        CoefficientSpec::Stripes {
                            period: num(key, w[0])?,
                            low: num(key, w[1])?,
                            high: num(key, w[2])?,
                            axis: axis(key, w[3])?,
                        }
                    }
                    "raster" if !rest.is_empty() => CoefficientSpec::Raster(PathBuf::from(rest)),
                    _ => return Err(CliError::config(format!("unknown coefficient {v:?}"))),
                }
            }
            "forcing" => {
                self.forcing = match v.split_once(char::is_whitespace) {
                    None if v == "cosine" => Forcing::Cosine,
                    Some(("constant", c)) => Forcing::Constant(num(key, c)?),
                    _ => return Err(CliError::config(format!("unknown forcing {v:?}"))),
                }
            }
            "fine_level" => self.fine_level = num(key, v)?,
            "coarse_levels" => self.coarse_levels = list(key, v)?,
            "C" => self.localization = Localization::Constant(num(key, v)?),
            "layers" => {
                self.localization = if v == "global" || v == "inf" {
                    Localization::Global
                } else {
                    Localization::Layers(num(key, v)?)
                }
            }
            "log_base" => self.log_base = v.parse().map_err(config_error)?,
            "sweep_C" => self.sweep = list(key, v)?,
            "sigma0" => self.sigma0 = num(key, v)?,
            "penalty" => {
                self.penalty_mode = match v {
                    "weighted" => PenaltyMode::CoefficientWeighted,
                    "plain" => PenaltyMode::Plain,
                    _ => return Err(CliError::config(format!("unknown penalty {v:?}"))),
                }
            }
            "rtol" => self.rtol = num(key, v)?,
            "max_iterations" => self.max_iterations = num(key, v)?,
            "dense_max_level" => self.dense_max_level = num(key, v)?,
            "direct" => self.direct = boolean(key, v)?,
            "refinement_steps" => self.refinement_steps = num(key, v)?,
            "compress" => self.compress = boolean(key, v)?,
            "svd_tol" => self.svd_tol = num(key, v)?,
            "qoi" => {
                self.qoi = v
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| match s.split_once(char::is_whitespace) {
                        None if s == "f" => Ok(QoiChoice::Forcing),
                        Some(("box", b)) => Ok(QoiChoice::Box(words::<4>(key, b)?)),
                        _ => Err(CliError::config(format!("unknown functional {s:?}"))),
                    })
                    .collect::<Result<_, _>>()?
            }
            "decay_point" => self.decay_point = words::<2>(key, v)?,
            "decay_local" => self.decay_local = num(key, v)?,
            "decay_layers" => self.decay_layers = num(key, v)?,
            "timings" => self.timings = boolean(key, v)?,
            "global_budget" => self.global_budget = num(key, v)?,
            "force_budget" => self.force_budget = boolean(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "cache" => {
                self.cache = match v {
                    "" | "none" => None,
                    _ => Some(PathBuf::from(v)),
                }
            }
            _ => return Err(CliError::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::config(m));
        if self.fine_level > dgms::mesh::MAX_LEVEL {
            return fail(format!("fine level {} is too fine", self.fine_level));
        }
        if self.coarse_levels.is_empty() {
            return fail("no coarse levels".into());
        }
        if let Some(c) = self.coarse_levels.iter().find(|&&c| c > self.fine_level) {
            return fail(format!(
                "coarse level {c} is finer than fine level {}",
                self.fine_level
            ));
        }
        let min = self.domain.spec().min_level();
        if let Some(c) = self.coarse_levels.iter().find(|&&c| c < min) {
            return fail(format!("coarse level {c} cannot resolve the domain"));
        }
        if let Localization::Constant(c) = self.localization {
            if !(c > 0.0 && c.is_finite()) {
                return fail(format!("C must be positive, got {c}"));
            }
        }
        if let Some(c) = self.sweep.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return fail(format!("sweep constants must be positive, got {c}"));
        }
        if !(0.0..1.0).contains(&self.svd_tol) {
            return fail(format!("svd_tol must lie in [0, 1), got {}", self.svd_tol));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return fail(format!("rtol must lie in (0, 1), got {}", self.rtol));
        }
        if self.decay_local > 3 {
            return fail("decay_local must be 0..=3".into());
        }
        self.penalty()?;
        Ok(())
    }

    pub fn penalty(&self) -> Result<PenaltyRule, CliError> {
        PenaltyRule::new(self.sigma0, self.penalty_mode).map_err(config_error)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            rtol: self.rtol,
            max_iterations: self.max_iterations,
            dense_max_level: self.dense_max_level,
            direct: self.direct,
            refinement_steps: self.refinement_steps,
        }
    }

    pub fn global_options(&self) -> dgms::multiscale::GlobalOptions {
        dgms::multiscale::GlobalOptions {
            budget: self.global_budget,
            force: self.force_budget,
        }
    }

    /// Patch radius for coarse level `level` under the configured rule.
    pub fn radius(&self, level: u32) -> Radius {
        match self.localization {
            Localization::Constant(c) => Radius::Layers(localization_radius(
                0.5f64.powi(level as i32),
                c,
                self.log_base,
            )),
            Localization::Layers(l) => Radius::Layers(l),
            Localization::Global => Radius::Global,
        }
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn join<T: fmt::Display>(xs: &[T], sep: &str) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

impl fmt::Display for StudyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "study = {}", self.study.name())?;
        let domain = match self.domain {
            DomainChoice::LShape => "lshape",
            DomainChoice::Square => "square",
        };
        writeln!(f, "domain = {domain}")?;
        match &self.coefficient {
            CoefficientSpec::Constant(a) => writeln!(f, "coefficient = constant {a}")?,
            CoefficientSpec::Stripes {
                period,
                low,
                high,
                axis,
            } => {
                let a = if *axis == Axis::X { "x" } else { "y" };
                writeln!(f, "coefficient = stripes {period} {low} {high} {a}")?
            }
            CoefficientSpec::Raster(p) => writeln!(f, "coefficient = raster {}", p.display())?,
        }
        match self.forcing {
            Forcing::Cosine => writeln!(f, "forcing = cosine")?,
            Forcing::Constant(c) => writeln!(f, "forcing = constant {c}")?,
        }
        writeln!(f, "fine_level = {}", self.fine_level)?;
        writeln!(f, "coarse_levels = {}", join(&self.coarse_levels, ", "))?;
        match self.localization {
            Localization::Constant(c) => writeln!(f, "C = {c}")?,
            Localization::Layers(l) => writeln!(f, "layers = {l}")?,
            Localization::Global => writeln!(f, "layers = global")?,
        }
        writeln!(f, "log_base = {}", self.log_base)?;
        writeln!(f, "sweep_C = {}", join(&self.sweep, ", "))?;
        writeln!(f, "sigma0 = {}", self.sigma0)?;
        let pen = match self.penalty_mode {
            PenaltyMode::CoefficientWeighted => "weighted",
            PenaltyMode::Plain => "plain",
        };
        writeln!(f, "penalty = {pen}")?;
        writeln!(f, "rtol = {:e}", self.rtol)?;
        writeln!(f, "max_iterations = {}", self.max_iterations)?;
        writeln!(f, "dense_max_level = {}", self.dense_max_level)?;
        writeln!(f, "direct = {}", self.direct)?;
        writeln!(f, "refinement_steps = {}", self.refinement_steps)?;
        writeln!(f, "compress = {}", self.compress)?;
        writeln!(f, "svd_tol = {:e}", self.svd_tol)?;
        let qoi: Vec<String> = self.qoi.iter().map(QoiChoice::label).collect();
        writeln!(f, "qoi = {}", qoi.join("; "))?;
        writeln!(
            f,
            "decay_point = {} {}",
            self.decay_point[0], self.decay_point[1]
        )?;
        writeln!(f, "decay_local = {}", self.decay_local)?;
        writeln!(f, "decay_layers = {}", self.decay_layers)?;
        writeln!(f, "timings = {}", self.timings)?;
        writeln!(f, "global_budget = {}", self.global_budget)?;
        writeln!(f, "force_budget = {}", self.force_budget)?;
        writeln!(f, "out = {}", self.out.display())?;
        match &self.cache {
            Some(p) => writeln!(f, "cache = {}", p.display()),
            None => writeln!(f, "cache = none"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = StudyConfig::default();
        assert_eq!(StudyConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = StudyConfig::parse(
            "# A2 study\n\nstudy = localization # trailing\ncoefficient = stripes 0.015625 0.01 1 x\n",
        )
        .unwrap();
        assert_eq!(cfg.study, StudyKind::Localization);
        assert_eq!(
            cfg.coefficient,
            CoefficientSpec::Stripes {
                period: 0.015625,
                low: 0.01,
                high: 1.0,
                axis: Axis::X
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "fine_level = 3\ncoarse_levels = 4",
            "C = 0",
            "C = -1",
            "sigma0 = 0",
            "nonsense = 1",
            "no equals sign",
            "coarse_levels = 1, x",
            "svd_tol = 1",
            "log_base = 10",
            "qoi = box 0 1",
            "domain = circle",
        ] {
            assert!(StudyConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn radius_rule() {
        let mut cfg = StudyConfig::default();
        assert_eq!(cfg.radius(5), Radius::Layers(10));
        cfg.log_base = LogBase::E;
        assert_eq!(cfg.radius(5), Radius::Layers(7));
        cfg.localization = Localization::Layers(3);
        assert_eq!(cfg.radius(5), Radius::Layers(3));
    }
}
