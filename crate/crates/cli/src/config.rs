//! TOML run configuration and its translation into core objects.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use volcomp::curvature_models::{build_conformal_metric, build_grw_metric, ConformalData, GRWData, WarpFunction};
use volcomp::metric::{euclidean, lorentzian_space_form, minkowski, space_form, CoordinateMetric};
use volcomp::sclv::{CutFunction, DirectionSet, Resolution, SCLVSpec};
use volcomp::{ModelConstants, SignatureMode};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub sclv: Option<SclvConfig>,
    #[serde(default)]
    pub theorem: TheoremConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub expand: ExpandConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Minkowski,
    Euclidean,
    LorentzianSpaceForm,
    SpaceForm,
    Grw,
    Conformal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarpConfig {
    Cosh { rate: f64 },
    Exp { rate: f64 },
    Cos { rate: f64 },
    Poly { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub family: Family,
    /// Spacetime dimension; GRW metrics take it from `m + 1`.
    pub n: Option<usize>,
    /// Curvature of a space form.
    pub k: Option<f64>,
    pub warp: Option<WarpConfig>,
    pub m: Option<usize>,
    pub k_fiber: Option<f64>,
    pub interval: Option<(f64, f64)>,
    /// Conformal factor `e^{2 a r²}` over a flat base.
    pub a: Option<f64>,
    pub base: Option<Family>,
    pub base_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SclvConfig {
    pub c: f64,
    pub mode: Option<SignatureMode>,
    pub directions: DirectionSet,
    pub resolution: Option<Resolution>,
    pub cut: CutFunction,
    pub scale_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremKind {
    Guenther,
    Bishop,
    BishopGromov,
    FlatCorollary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ConditionConfig {
    A,
    B,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremConfig {
    pub kind: Option<TheoremKind>,
    /// Comparison curvature; defaults to `sclv.c`.
    pub c: Option<f64>,
    pub condition: Option<ConditionConfig>,
    pub r_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol: default_tol() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> u64 {
    1_000_000
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { samples: default_samples(), seed: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    /// Frame components of each radial direction.
    #[serde(default)]
    pub directions: Vec<Vec<f64>>,
    #[serde(default = "default_expand_t")]
    pub t_max: f64,
}

fn default_expand_t() -> f64 {
    0.3
}

impl Default for ExpandConfig {
    fn default() -> Self {
        ExpandConfig { directions: Vec::new(), t_max: default_expand_t() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Alternative cut functions; each yields one instance.
    #[serde(default)]
    pub cuts: Vec<CutFunction>,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub format: Option<Format>,
    /// Also write one profile CSV per direction for volume runs.
    #[serde(default)]
    pub dump_directions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// A parsed configuration with the hash of its source text.
#[derive(Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub hash: String,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<Loaded, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(Loaded { config, hash: hex::encode(Sha256::digest(text.as_bytes())) })
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let m = &self.metric;
        match m.family {
            Family::Grw => {
                if m.warp.is_none() {
                    return Err(field("metric.warp", "required for the grw family"));
                }
                if m.m.is_none() {
                    return Err(field("metric.m", "required for the grw family"));
                }
            }
            Family::Conformal => {
                if m.a.is_none() {
                    return Err(field("metric.a", "required for the conformal family"));
                }
                if m.n.is_none() {
                    return Err(field("metric.n", "required"));
                }
            }
            Family::SpaceForm | Family::LorentzianSpaceForm => {
                if m.k.is_none() {
                    return Err(field("metric.k", "required for space forms"));
                }
                if m.n.is_none() {
                    return Err(field("metric.n", "required"));
                }
            }
            Family::Minkowski | Family::Euclidean => {
                if m.n.is_none() {
                    return Err(field("metric.n", "required"));
                }
            }
        }
        if let Some(base) = m.base {
            if !matches!(base, Family::Minkowski | Family::Euclidean) {
                return Err(field("metric.base", "conformal bases must be minkowski or euclidean"));
            }
        }
        if !(self.tolerances.tol > 0.0 && self.tolerances.tol.is_finite()) {
            return Err(field("tolerances.tol", "must be positive"));
        }
        if self.oracle.samples == 0 {
            return Err(field("oracle.samples", "must be positive"));
        }
        if !(self.expand.t_max > 0.0) {
            return Err(field("expand.t_max", "must be positive"));
        }
        if let Some(grid) = &self.theorem.r_grid {
            let b = self.sclv.as_ref().and_then(|s| s.scale_max).unwrap_or(1.0);
            if grid.is_empty() {
                return Err(field("theorem.r_grid", "must not be empty"));
            }
            if grid.iter().any(|r| !(*r > 0.0 && *r <= b)) {
                return Err(field("theorem.r_grid", format!("entries must lie in (0, {b}]")));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(field("theorem.r_grid", "must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.metric.family {
            Family::Grw => self.metric.m.unwrap_or(0) + 1,
            _ => self.metric.n.unwrap_or(0),
        }
    }

    pub fn base_point(&self) -> Result<Vec<f64>, CliError> {
        match &self.metric.base_point {
            Some(p) if p.len() != self.dim() => Err(field("metric.base_point", format!("needs {} components", self.dim()))),
            Some(p) => Ok(p.clone()),
            None => Ok(vec![0.0; self.dim()]),
        }
    }

    pub fn build_metric(&self) -> Result<CoordinateMetric, CliError> {
        let m = &self.metric;
        let n = self.dim();
        let out = match m.family {
            Family::Minkowski => minkowski(n),
            Family::Euclidean => euclidean(n),
            Family::SpaceForm => space_form(m.k.unwrap(), n),
            Family::LorentzianSpaceForm => lorentzian_space_form(m.k.unwrap(), n),
            Family::Grw => {
                let warp = match m.warp.clone().unwrap() {
                    WarpConfig::Cosh { rate } => WarpFunction::Cosh { rate },
                    WarpConfig::Exp { rate } => WarpFunction::Exp { rate },
                    WarpConfig::Cos { rate } => WarpFunction::Cos { rate },
                    WarpConfig::Poly { coeffs } => WarpFunction::Poly { coeffs },
                };
                let interval = m.interval.unwrap_or((-3.0, 3.0));
                GRWData::new(warp, m.m.unwrap(), m.k_fiber.unwrap_or(0.0), interval).and_then(|d| build_grw_metric(&d))
            }
            Family::Conformal => {
                let base = match m.base.unwrap_or(Family::Minkowski) {
                    Family::Euclidean => euclidean(n),
                    _ => minkowski(n),
                };
                base.and_then(|base| build_conformal_metric(&ConformalData { a: m.a.unwrap(), base }))
            }
        };
        out.map_err(CliError::Core)
    }

    pub fn sclv(&self) -> Result<&SclvConfig, CliError> {
        self.sclv.as_ref().ok_or_else(|| field("sclv", "this command needs an [sclv] table"))
    }

    pub fn build_spec(&self) -> Result<SCLVSpec, CliError> {
        self.build_spec_with_cut(self.sclv()?.cut.clone())
    }

    pub fn build_spec_with_cut(&self, cut: CutFunction) -> Result<SCLVSpec, CliError> {
        let s = self.sclv()?;
        let consts = ModelConstants::new(s.c, self.dim()).map_err(|e| field("sclv.c", e))?;
        let mut spec = SCLVSpec::new(consts, s.directions.clone(), cut).map_err(|e| field("sclv", e))?;
        if let Some(mode) = s.mode {
            spec = spec.with_mode(mode).map_err(|e| field("sclv.mode", e))?;
        }
        if let Some(res) = s.resolution {
            spec = spec.with_resolution(res);
            spec.validate().map_err(|e| field("sclv.resolution", e))?;
        }
        if let Some(b) = s.scale_max {
            spec = spec.with_scale_max(b).map_err(|e| field("sclv.scale_max", e))?;
        }
        Ok(spec)
    }

    pub fn comparison_c(&self) -> Result<f64, CliError> {
        match self.theorem.c {
            Some(c) => Ok(c),
            None => Ok(self.sclv()?.c),
        }
    }

    pub fn r_grid(&self) -> Result<Vec<f64>, CliError> {
        self.theorem.r_grid.clone().ok_or_else(|| field("theorem.r_grid", "required by this command"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINKOWSKI: &str = r#"
[metric]
family = "minkowski"
n = 3

[sclv]
c = 0.0
directions = { kind = "timelike-cap", chi_max = 1.0 }
cut = { kind = "constant", value = 1.0 }
"#;

    #[test]
    fn parses_minimal_config() {
        let loaded = parse(MINKOWSKI).unwrap();
        assert_eq!(loaded.config.dim(), 3);
        assert_eq!(loaded.hash.len(), 64);
        let spec = loaded.config.build_spec().unwrap();
        assert_eq!(spec.mode, SignatureMode::LorentzianTimelike);
        assert_eq!(loaded.config.tolerances.tol, 1e-8);
    }

    #[test]
    fn reports_line_of_syntax_error() {
        let err = parse("[metric]\nfamily = \"minkowski\"\nn = = 3\n").unwrap_err();
        let CliError::Config(msg) = err else { panic!("wrong error kind") };
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn names_missing_field() {
        let err = parse("[metric]\nfamily = \"grw\"\nm = 2\n").unwrap_err();
        let CliError::Config(msg) = err else { panic!("wrong error kind") };
        assert!(msg.contains("metric.warp"), "{msg}");
    }

    #[test]
    fn rejects_grid_outside_scale_interval() {
        let text = format!("{MINKOWSKI}\n[theorem]\nr_grid = [0.5, 1.5]\n");
        let CliError::Config(msg) = parse(&text).unwrap_err() else { panic!() };
        assert!(msg.contains("theorem.r_grid"));
    }

    #[test]
    fn rejects_unknown_family() {
        let CliError::Config(msg) = parse("[metric]\nfamily = \"kerr\"\nn = 4\n").unwrap_err() else { panic!() };
        assert!(msg.contains("kerr"), "{msg}");
    }
}
