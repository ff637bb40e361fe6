//! Experiment configuration.
//!
//! ```toml
//! seed = 1                        # RNG seed for the Monte Carlo baseline
//!
//! [problem]
//! geometry = "quarter-annulus"    # quarter-annulus | unit-square | thick-quarter-ring | file
//! geometry_file = "ring.patch"    # with geometry = "file"; relative to the config file
//! r_in = 1.0
//! r_out = 2.0
//! height = 1.0                    # thick-quarter-ring only
//! field = "test1"                 # test1 | constant
//! field_value = 1.0               # with field = "constant"
//! field_c = 4.0
//! amplitudes = [1.0, 0.4, 0.1]
//! frequencies = [2.0, 8.0, 16.0]
//! source = "constant"             # constant | manufactured
//! source_value = 1.0
//! functional = "integral"         # integral | point
//! point = [1.5, 0.5]              # with functional = "point"
//! stochastic_dim = 3
//! degree = 2
//! grading = 3.0
//! boundary = "dirichlet"          # dirichlet | neumann
//!
//! [rates]                         # inline values or the report written by fit-rates
//! r = [3.8, 4.0]
//! c = [1.0, 1.0]
//! g = [1.0, 1.0, 1.0]             # initial g, default all ones
//! file = "out/rates.toml"
//!
//! [fit]
//! base = [3, 3]                   # default: 3 in every direction
//! levels = [1, 2, 3, 4, 5, 6, 7]
//! y = [0.0, 0.0, 0.0]             # default: midpoint of the parameter box
//!
//! [misc]
//! tolerances = [1e-1, 1e-2, 1e-3, 1e-4]
//! w0 = 6                          # default d + N + 1
//! max_solves = 100000             # budget
//! g_min = 0.05
//!
//! [reference]
//! alpha = [6, 7]
//! beta = [4, 4, 3]
//! value = 0.2027                  # skip the reference solve
//!
//! [mc]
//! alpha = [5, 5]                  # fixed-level mode ...
//! samples = [16, 64, 256]
//! tolerances = [1e-1, 1e-2]       # ... or tolerance mode
//! replicas = 4
//! pilot = 32
//! max_level = 8
//!
//! [convergence]
//! full_tensor_levels = [1, 2, 3, 4]
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use misc_iga::geometry::{quarter_annulus, thick_quarter_ring, unit_square, Patch};
use misc_iga::pde::{Boundary, Coefficient, DiffusionProblem, Functional, Source, Test1Field};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub misc: MiscSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    QuarterAnnulus,
    UnitSquare,
    ThickQuarterRing,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Test1,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Constant,
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    Integral,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryChoice {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_geometry")]
    pub geometry: GeometryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_file: Option<PathBuf>,
    #[serde(default = "one")]
    pub r_in: f64,
    #[serde(default = "two")]
    pub r_out: f64,
    #[serde(default = "one")]
    pub height: f64,
    #[serde(default = "default_field")]
    pub field: FieldKind,
    #[serde(default = "one")]
    pub field_value: f64,
    #[serde(default = "default_c")]
    pub field_c: f64,
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_frequencies")]
    pub frequencies: Vec<f64>,
    #[serde(default = "default_source")]
    pub source: SourceKind,
    #[serde(default = "one")]
    pub source_value: f64,
    #[serde(default = "default_functional")]
    pub functional: FunctionalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default = "default_stochastic_dim")]
    pub stochastic_dim: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryChoice,
}

fn default_geometry() -> GeometryKind {
    GeometryKind::QuarterAnnulus
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_field() -> FieldKind {
    FieldKind::Test1
}
fn default_c() -> f64 {
    4.0
}
fn default_amplitudes() -> Vec<f64> {
    vec![1.0, 0.4, 0.1]
}
fn default_frequencies() -> Vec<f64> {
    vec![2.0, 8.0, 16.0]
}
fn default_source() -> SourceKind {
    SourceKind::Constant
}
fn default_functional() -> FunctionalKind {
    FunctionalKind::Integral
}
fn default_stochastic_dim() -> usize {
    3
}
fn default_degree() -> usize {
    2
}
fn default_grading() -> f64 {
    3.0
}
fn default_boundary() -> BoundaryChoice {
    BoundaryChoice::Dirichlet
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            geometry: default_geometry(),
            geometry_file: None,
            r_in: 1.0,
            r_out: 2.0,
            height: 1.0,
            field: default_field(),
            field_value: 1.0,
            field_c: default_c(),
            amplitudes: default_amplitudes(),
            frequencies: default_frequencies(),
            source: default_source(),
            source_value: 1.0,
            functional: default_functional(),
            point: None,
            stochastic_dim: default_stochastic_dim(),
            degree: default_degree(),
            grading: default_grading(),
            boundary: default_boundary(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<u32>>,
    #[serde(default = "default_fit_levels")]
    pub levels: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

fn default_fit_levels() -> Vec<u32> {
    (1..=7).collect()
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            base: None,
            levels: default_fit_levels(),
            y: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiscSection {
    #[serde(default = "default_tolerances")]
    pub tolerances: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_solves: Option<usize>,
    #[serde(default = "default_g_min")]
    pub g_min: f64,
}

fn default_tolerances() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_g_min() -> f64 {
    0.05
}

impl Default for MiscSection {
    fn default() -> Self {
        Self {
            tolerances: default_tolerances(),
            w0: None,
            max_solves: None,
            g_min: default_g_min(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<u32>>,
    #[serde(default)]
    pub samples: Vec<usize>,
    #[serde(default)]
    pub tolerances: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_pilot")]
    pub pilot: usize,
    #[serde(default = "default_max_level")]
    pub max_level: u32,
}

fn default_replicas() -> usize {
    4
}
fn default_pilot() -> usize {
    32
}
fn default_max_level() -> u32 {
    8
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            samples: Vec::new(),
            tolerances: Vec::new(),
            replicas: default_replicas(),
            pilot: default_pilot(),
            max_level: default_max_level(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_ft_levels")]
    pub full_tensor_levels: Vec<u32>,
}

fn default_ft_levels() -> Vec<u32> {
    vec![1, 2, 3, 4]
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            full_tensor_levels: default_ft_levels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub tolerances: Option<Vec<f64>>,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.iter().all(|t| *t > 0.0 && t.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
}

impl ExperimentConfig {
    /// Desk-scale default problem: quarter annulus, three modes, p = 2.
    pub fn desk_default() -> Self {
        Self {
            seed: 1,
            problem: ProblemConfig::default(),
            rates: None,
            fit: FitConfig::default(),
            misc: MiscSection::default(),
            reference: Some(ReferenceConfig {
                alpha: vec![6, 7],
                beta: vec![4, 4, 3],
                value: None,
            }),
            mc: McConfig::default(),
            convergence: ConvergenceConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(f) = cfg.problem.geometry_file.as_mut() {
            resolve(f);
        }
        if let Some(f) = cfg.rates.as_mut().and_then(|r| r.file.as_mut()) {
            resolve(f);
        }
        resolve(&mut cfg.output.dir);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(b) = o.budget {
            self.misc.max_solves = Some(b);
        }
        if let Some(t) = &o.tolerances {
            self.misc.tolerances = t.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !strictly_decreasing(&self.misc.tolerances) {
            return config("misc.tolerances must be positive and strictly decreasing");
        }
        if !strictly_decreasing(&self.mc.tolerances) {
            return config("mc.tolerances must be positive and strictly decreasing");
        }
        if self.misc.max_solves == Some(0) {
            return config("budget must be positive");
        }
        if self.mc.replicas == 0 || self.mc.pilot < 2 {
            return config("mc.replicas must be >= 1 and mc.pilot >= 2");
        }
        if self.mc.samples.iter().any(|&n| n < 2) {
            return config("mc.samples entries must be >= 2");
        }
        let p = &self.problem;
        if p.field == FieldKind::Test1
            && (p.amplitudes.len() != p.stochastic_dim || p.frequencies.len() != p.stochastic_dim)
        {
            return config("field amplitudes and frequencies need one entry per stochastic variable");
        }
        if p.geometry == GeometryKind::File && p.geometry_file.is_none() {
            return config("geometry = \"file\" needs geometry_file");
        }
        if p.functional == FunctionalKind::Point && p.point.is_none() {
            return config("functional = \"point\" needs point");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_toml())
    }

    pub fn spatial_dim(&self) -> Result<usize> {
        Ok(self.problem.patch()?.dim())
    }
}

pub fn sha256_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

impl ProblemConfig {
    /// Hash of the problem section; results from different problems are never merged.
    pub fn descriptor(&self) -> String {
        sha256_hex(&toml::to_string(self).expect("problem serializes"))
    }

    pub fn patch(&self) -> Result<Patch> {
        let p = match self.geometry {
            GeometryKind::QuarterAnnulus => quarter_annulus(self.r_in, self.r_out),
            GeometryKind::UnitSquare => Ok(unit_square()),
            GeometryKind::ThickQuarterRing => thick_quarter_ring(self.r_in, self.r_out, self.height),
            GeometryKind::File => {
                let path = self.geometry_file.as_ref().expect("validated");
                if !path.exists() {
                    return config(format!("geometry file {} not found", path.display()));
                }
                Patch::read(path)
            }
        };
        p.map_err(|e| CliError::Config(format!("geometry: {e}")))
    }

    pub fn build(&self) -> Result<DiffusionProblem> {
        let patch = self.patch()?;
        let d = patch.dim();
        let coefficient = match self.field {
            FieldKind::Constant => Coefficient::Constant(self.field_value),
            FieldKind::Test1 => {
                let height = (self.geometry == GeometryKind::ThickQuarterRing).then_some(self.height);
                Coefficient::Test1(Test1Field {
                    c: self.field_c,
                    amplitudes: self.amplitudes.clone(),
                    frequencies: self.frequencies.clone(),
                    r_in: self.r_in,
                    r_out: self.r_out,
                    height,
                })
            }
        };
        let source = match (self.source, self.geometry) {
            (SourceKind::Constant, _) => Source::Constant(self.source_value),
            (SourceKind::Manufactured, GeometryKind::UnitSquare) => Source::ManufacturedSquare,
            (SourceKind::Manufactured, GeometryKind::QuarterAnnulus) => Source::ManufacturedAnnulus {
                r_in: self.r_in,
                r_out: self.r_out,
            },
            (SourceKind::Manufactured, _) => {
                return config("manufactured sources exist for unit-square and quarter-annulus only")
            }
        };
        let functional = match self.functional {
            FunctionalKind::Integral => Functional::DomainIntegral,
            FunctionalKind::Point => Functional::PointValue(self.point.clone().expect("validated")),
        };
        let boundary = match self.boundary {
            BoundaryChoice::Dirichlet => Boundary::dirichlet(d),
            BoundaryChoice::Neumann => Boundary::neumann(d),
        };
        DiffusionProblem::new(
            patch,
            coefficient,
            source,
            functional,
            self.stochastic_dim,
            self.degree,
            self.grading,
        )
        .and_then(|p| p.with_boundary(boundary))
        .map_err(|e| CliError::Config(format!("problem: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_an_empty_problem() {
        let cfg = ExperimentConfig::from_toml("[problem]\n").unwrap();
        assert_eq!(cfg.problem, ProblemConfig::default());
        assert_eq!(cfg.misc.tolerances, vec![1e-1, 1e-2, 1e-3, 1e-4]);
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn serialization_round_trips() {
        let cfg = ExperimentConfig::desk_default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        assert!(ExperimentConfig::from_toml("[problem]\n[misc]\ntolerances = [1e-2, 1e-1]\n").is_err());
        assert!(ExperimentConfig::from_toml("[problem]\n[misc]\ntolerances = [1e-1, 1e-1]\n").is_err());
        assert!(ExperimentConfig::from_toml("[problem]\n[misc]\nmax_solves = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("[problem]\nbogus = 1\n").is_err());
    }

    #[test]
    fn descriptor_tracks_the_problem_only() {
        let a = ExperimentConfig::desk_default();
        let mut b = a.clone();
        b.misc.tolerances = vec![1e-2];
        b.seed = 7;
        assert_eq!(a.problem.descriptor(), b.problem.descriptor());
        assert_ne!(a.hash(), b.hash());
        b.problem.degree = 3;
        assert_ne!(a.problem.descriptor(), b.problem.descriptor());
    }

    #[test]
    fn missing_geometry_file_is_a_config_error() {
        let cfg = ExperimentConfig::from_toml(
            "[problem]\ngeometry = \"file\"\ngeometry_file = \"/nonexistent/x.patch\"\n",
        )
        .unwrap();
        match cfg.problem.build() {
            Err(CliError::Config(msg)) => assert!(msg.contains("not found")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn builds_the_desk_problem() {
        let p = ExperimentConfig::desk_default().problem.build().unwrap();
        assert_eq!(p.spatial_dim(), 2);
        assert_eq!(p.stochastic_dim(), 3);
    }
}
