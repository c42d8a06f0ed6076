//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seeds = [1, 2, 3]
//! start = [0.1234, 0.5678]        # or start_rational = [1, 2, 5]
//! weights = [0.5, 0.5]            # driving measure; uniform when omitted
//!
//! [[maps]]
//! linear = [[2, 1], [1, 1]]
//! epsilon = 0.02                  # optional shear-pair perturbation
//! horizontal = [{ freq = 1, coeff = 0.1591549, phase = 0.0 }]
//! vertical = [{ freq = 1, coeff = 0.1591549, phase = 0.7 }]
//!
//! [exponents]
//! steps = 100000
//! ```
//!
//! Each command reads its own section; every section has defaults.

use std::path::Path;

use ergolab::cocycle::{Perturbation, TrigTerm};
use ergolab::stationary::{Start, Thresholds};
use ergolab::{DrivingMeasure, IntMat2, MapSpec, RationalPoint, RealMat2, SineTerm, TorusPoint};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub linear: [[i64; 2]; 2],
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub horizontal: Vec<SineTerm>,
    #[serde(default)]
    pub vertical: Vec<SineTerm>,
    #[serde(default)]
    pub trig: Vec<TrigTerm>,
}

impl MapConfig {
    pub fn build(&self, epsilon: f64) -> ergolab::Result<MapSpec> {
        let linear = IntMat2::from_rows(self.linear);
        if !self.trig.is_empty() {
            return MapSpec::trig(linear, self.trig.clone(), epsilon);
        }
        if self.horizontal.is_empty() && self.vertical.is_empty() {
            return MapSpec::linear(linear);
        }
        MapSpec::shear_pair(linear, self.horizontal.clone(), self.vertical.clone(), epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentsConfig {
    pub steps: usize,
    pub expect_lambda_u: Option<f64>,
    pub tolerance: f64,
    /// Mass moved from the last map to the first; the exponent must stay positive.
    pub tv_shifts: Vec<f64>,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        ExponentsConfig { steps: 100_000, expect_lambda_u: None, tolerance: 1e-6, tv_shifts: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectConfig {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_iters")]
    pub iterations: usize,
    #[serde(default = "default_bisect_grid")]
    pub grid: usize,
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
}

fn default_iters() -> usize {
    12
}
fn default_bisect_grid() -> usize {
    64
}
fn default_scan_points() -> usize {
    11
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeExpectation {
    Certificate,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConesConfig {
    pub grid: usize,
    pub expect: Option<ConeExpectation>,
    pub bisect: Option<BisectConfig>,
}

impl Default for ConesConfig {
    fn default() -> Self {
        ConesConfig { grid: ergolab::cones::DEFAULT_GRID, expect: None, bisect: None }
    }
}

/// Unstable-curve slice used for the unstable dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceConfig {
    /// Curve base; the configured start when omitted.
    pub base: Option<[f64; 2]>,
    pub at: usize,
    pub radius: f64,
    pub n_back: usize,
    pub points: usize,
    pub k: usize,
    pub tube: f64,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig { base: None, at: 60, radius: 0.1, n_back: 40, points: 1024, k: 30, tube: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrichotomyConfig {
    /// Samples per seed.
    pub samples: usize,
    pub burn_in: usize,
    pub fourier_cutoff: i64,
    pub atom_radius: f64,
    pub atom_threshold: f64,
    pub exponent_steps: usize,
    pub nonrandom_words: usize,
    pub nonrandom_horizon: usize,
    pub slice: Option<SliceConfig>,
    pub thresholds: Thresholds,
    pub expect: Option<String>,
    /// Samples drawn in the scatter plot.
    pub plot_points: usize,
}

impl Default for TrichotomyConfig {
    fn default() -> Self {
        TrichotomyConfig {
            samples: 1_000_000,
            burn_in: 1000,
            fourier_cutoff: ergolab::stationary::DEFAULT_FOURIER_CUTOFF,
            atom_radius: 1e-3,
            atom_threshold: 0.01,
            exponent_steps: 100_000,
            nonrandom_words: 50,
            nonrandom_horizon: 40,
            slice: None,
            thresholds: Thresholds::default(),
            expect: None,
            plot_points: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingConfig {
    /// Thresholds δ, largest first.
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    pub m_max: usize,
    pub j_max: usize,
    pub window: usize,
    pub exponent_steps: usize,
    /// `ε₀`; derived from the exponents when omitted.
    pub epsilon0: Option<f64>,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            deltas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            epsilon: 0.5,
            m_max: 200,
            j_max: 600,
            window: ergolab::lyapunov::DEFAULT_WINDOW,
            exponent_steps: 100_000,
            epsilon0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixedConfig {
    pub f: [[f64; 2]; 2],
    pub g: [[f64; 2]; 2],
    pub t: Vec<f64>,
    pub steps: usize,
    pub tolerance: f64,
}

impl Default for MixedConfig {
    fn default() -> Self {
        MixedConfig {
            f: [[2.0, 0.0], [0.0, 0.5]],
            g: [[0.0, 0.5], [2.0, 0.0]],
            t: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            steps: 100_000,
            tolerance: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionSource {
    Uniform,
    Cantor,
    Point,
    /// Tube slice of the sampled stationary measure along an unstable curve.
    Slice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionConfig {
    pub source: DimensionSource,
    pub samples: usize,
    pub depth: u32,
    pub burn_in: usize,
    pub slice: SliceConfig,
    pub expect: Option<f64>,
    pub tolerance: f64,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        DimensionConfig {
            source: DimensionSource::Uniform,
            samples: 10_000,
            depth: 12,
            burn_in: 1000,
            slice: SliceConfig::default(),
            expect: None,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub maps: Vec<MapConfig>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_start")]
    pub start: [f64; 2],
    #[serde(default)]
    pub start_rational: Option<[i64; 3]>,
    #[serde(default)]
    pub exponents: ExponentsConfig,
    #[serde(default)]
    pub cones: ConesConfig,
    #[serde(default)]
    pub trichotomy: TrichotomyConfig,
    #[serde(default)]
    pub stopping_times: StoppingConfig,
    #[serde(default)]
    pub mixed_cocycle: MixedConfig,
    #[serde(default)]
    pub dimension: DimensionConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_start() -> [f64; 2] {
    [0.1234, 0.5678]
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    /// SHA-256 of the resolved configuration, as hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn family(&self) -> Result<Vec<MapSpec>, ConfigError> {
        self.family_at(None)
    }

    /// The family with every perturbation amplitude replaced by `epsilon`.
    pub fn family_at(&self, epsilon: Option<f64>) -> Result<Vec<MapSpec>, ConfigError> {
        if self.maps.is_empty() {
            return Err(ConfigError("no [[maps]] configured".into()));
        }
        self.maps
            .iter()
            .enumerate()
            .map(|(i, m)| m.build(epsilon.unwrap_or(m.epsilon)).map_err(|e| ConfigError(format!("map {i}: {e}"))))
            .collect()
    }

    pub fn measure(&self) -> Result<DrivingMeasure, ConfigError> {
        let n = self.maps.len();
        let nu = match &self.weights {
            None => DrivingMeasure::uniform(&(0..n).collect::<Vec<_>>()),
            Some(w) => {
                if w.len() != n {
                    return Err(ConfigError(format!("{} weights for {n} maps", w.len())));
                }
                DrivingMeasure::new(w.iter().enumerate().filter(|a| *a.1 != 0.0).map(|(i, &p)| (i, p)).collect())
            }
        };
        nu.map_err(|e| ConfigError(format!("weights: {e}")))
    }

    pub fn start(&self) -> Result<Start, ConfigError> {
        match self.start_rational {
            Some([nx, ny, den]) => RationalPoint::new(nx, ny, den)
                .map(Start::Rational)
                .ok_or_else(|| ConfigError(format!("invalid rational start {nx}/{den}, {ny}/{den}"))),
            None => Ok(Start::Point(TorusPoint::new(self.start[0], self.start[1]))),
        }
    }

    pub fn start_point(&self) -> Result<TorusPoint, ConfigError> {
        Ok(match self.start()? {
            Start::Point(p) => p,
            Start::Rational(r) => r.to_point(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError("at least one seed is required".into()));
        }
        // commands that need maps ask for the family themselves
        if !self.maps.is_empty() {
            self.family()?;
            self.measure()?;
        }
        self.start()?;
        Ok(())
    }
}

pub fn real(rows: [[f64; 2]; 2]) -> RealMat2 {
    RealMat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

/// Replace every perturbation amplitude of `spec` by `epsilon`.
pub fn with_epsilon(spec: &MapSpec, epsilon: f64) -> Option<MapSpec> {
    let p = match spec.perturbation().clone() {
        Perturbation::None => Perturbation::None,
        Perturbation::ShearPair { horizontal, vertical, .. } => {
            Perturbation::ShearPair { horizontal, vertical, epsilon }
        }
        Perturbation::Trig { terms, .. } => Perturbation::Trig { terms, epsilon },
    };
    MapSpec::new(spec.linear_part(), p, spec.is_conservative()).ok()
}
