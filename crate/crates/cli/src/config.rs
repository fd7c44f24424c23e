//! Scenario files: JSON schema, defaults and conversion to a core scenario.

use std::fs;
use std::path::{Path, PathBuf};

use epicampaign_core::network::{
    build_empirical_with, build_poisson_truncated, build_powerlaw, parse_edge_list, EmpiricalOptions,
};
use epicampaign_core::scenario::{
    DEFAULT_COST_WEIGHT, DEFAULT_FIXED_POINT_TOL, DEFAULT_GRID_POINTS, DEFAULT_N_SWEEP, DEFAULT_SEED_FRACTION,
};
use epicampaign_core::{DegreeDistribution, Scenario, SeedSpec, SweepSettings, TimeProfile, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub network: NetworkSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_grid")]
    pub n_grid: usize,
    pub beta: ProfileSpec,
    /// Defaults to ten times `beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ProfileSpec>,
    #[serde(default)]
    pub cost: CostSpec,
    #[serde(default)]
    pub seed: SeedFile,
    #[serde(default)]
    pub variant: VariantFile,
    #[serde(default)]
    pub sweep: SweepFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    #[serde(alias = "er")]
    Poisson { lambda: f64, k_min: u32, k_max: u32 },
    Powerlaw { alpha: f64, k_min: u32, k_max: u32 },
    /// Whitespace-separated edge list; relative paths are resolved against
    /// the scenario file's directory.
    Empirical {
        edge_list_path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip_max_degree: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    /// `peak / (1 + exp(-a (t - t0)))`.
    Sigmoid { peak: f64, a: f64, t0: f64 },
    /// `[t, value]` pairs with ascending `t`.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedFile {
    Uniform {
        i0: f64,
    },
    /// One fraction per degree class, from `k_min` to `k_max`.
    Vector {
        i0_vector: Vec<f64>,
    },
    Optimize {
        #[serde(rename = "B_i0")]
        b_i0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariantFile {
    FixedSeed,
    FixedBudget {
        #[serde(rename = "B")]
        budget: f64,
    },
    /// `B` is the seed budget; it may be given here or as `seed.B_i0`.
    Joint {
        #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
        budget: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default = "default_n_sweep")]
    pub n_sweep: usize,
    #[serde(default = "default_tol")]
    pub fixed_point_tol: f64,
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_n_sweep() -> usize {
    DEFAULT_N_SWEEP
}

fn default_tol() -> f64 {
    DEFAULT_FIXED_POINT_TOL
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec { b: DEFAULT_COST_WEIGHT }
    }
}

impl Default for SeedFile {
    fn default() -> Self {
        SeedFile::Uniform { i0: DEFAULT_SEED_FRACTION }
    }
}

impl Default for VariantFile {
    fn default() -> Self {
        VariantFile::FixedSeed
    }
}

impl Default for SweepFile {
    fn default() -> Self {
        SweepFile { n_sweep: DEFAULT_N_SWEEP, fixed_point_tol: DEFAULT_FIXED_POINT_TOL }
    }
}

impl ProfileSpec {
    pub fn to_profile(&self) -> TimeProfile {
        match self {
            ProfileSpec::Constant { value } => TimeProfile::Constant(*value),
            ProfileSpec::Sigmoid { peak, a, t0 } => {
                TimeProfile::Sigmoid { peak: *peak, steepness: *a, midpoint: *t0 }
            }
            ProfileSpec::PiecewiseLinear { knots } => {
                TimeProfile::PiecewiseLinear(knots.iter().map(|k| (k[0], k[1])).collect())
            }
        }
    }
}

/// A parsed scenario file together with everything derived from it.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    /// Edges of an empirical network, kept for simulation on the real graph.
    pub edges: Option<Vec<(String, String)>>,
    /// SHA-256 of the scenario file bytes, hex encoded.
    pub sha256: String,
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file: ScenarioFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (scenario, edges) = file.build(base)?;
    Ok(LoadedScenario { file, scenario, edges, sha256: hex_digest(&bytes) })
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ScenarioFile {
    /// Builds and validates the scenario; `base` resolves relative edge-list
    /// paths.
    pub fn build(&self, base: &Path) -> Result<(Scenario, Option<Vec<(String, String)>>), CliError> {
        let (dist, edges) = self.network.build(base)?;
        let beta = self.beta.to_profile();
        let mut scn = Scenario::new(dist, self.horizon, beta.clone())?.with_grid_points(self.n_grid)?;
        if let Some(gamma) = &self.gamma {
            scn = scn.with_gamma(gamma.to_profile());
        }
        scn = scn
            .with_cost_weight(self.cost.b)
            .with_sweep(SweepSettings {
                n_sweep: self.sweep.n_sweep,
                fixed_point_tol: self.sweep.fixed_point_tol,
                ..SweepSettings::default()
            });
        let mut seed = match &self.seed {
            SeedFile::Uniform { i0 } => SeedSpec::Uniform(*i0),
            SeedFile::Vector { i0_vector } => SeedSpec::PerClass(i0_vector.clone()),
            SeedFile::Optimize { b_i0 } => SeedSpec::Optimize { budget: *b_i0 },
        };
        let variant = match self.variant {
            VariantFile::FixedSeed => Variant::FixedSeed,
            VariantFile::FixedBudget { budget } => Variant::FixedBudget { budget },
            VariantFile::Joint { budget } => {
                if let Some(b) = budget {
                    match seed {
                        SeedSpec::Optimize { budget: given } if given != b => {
                            return Err(CliError::Config(format!(
                                "variant.B = {b} disagrees with seed.B_i0 = {given}"
                            )));
                        }
                        _ => seed = SeedSpec::Optimize { budget: b },
                    }
                }
                Variant::Joint
            }
        };
        let scn = scn.with_seed(seed).with_variant(variant);
        scn.validate()?;
        Ok((scn, edges))
    }
}

impl NetworkSpec {
    fn build(&self, base: &Path) -> Result<(DegreeDistribution, Option<Vec<(String, String)>>), CliError> {
        match self {
            NetworkSpec::Poisson { lambda, k_min, k_max } => {
                Ok((build_poisson_truncated(*lambda, *k_min, *k_max)?, None))
            }
            NetworkSpec::Powerlaw { alpha, k_min, k_max } => Ok((build_powerlaw(*alpha, *k_min, *k_max)?, None)),
            NetworkSpec::Empirical { edge_list_path, clip_max_degree } => {
                let path = base.join(edge_list_path);
                let text = fs::read_to_string(&path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let edges = parse_edge_list(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let options = EmpiricalOptions { clip_max_degree: *clip_max_degree };
                let dist = build_empirical_with(edges.iter().map(|(a, b)| (a, b)), options)?;
                Ok((dist, Some(edges)))
            }
        }
    }
}
