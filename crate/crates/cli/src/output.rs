//! Output directory: CSV tables, JSON summaries and their provenance records.

use std::fs;
use std::path::{Path, PathBuf};

use epicampaign_core::pmp::normalized_resource;
use epicampaign_core::{DegreeDistribution, Scenario, Trajectory};
use serde::Serialize;

use crate::config::hex_digest;
use crate::CliError;

/// Fields shared by every provenance record of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub subcommand: String,
    pub scenario_path: String,
    pub scenario_sha256: String,
    pub rng_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep_values: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    file: &'a str,
    file_sha256: String,
    #[serde(flatten)]
    run: &'a RunInfo,
    versions: Versions,
}

#[derive(Debug, Serialize)]
struct Versions {
    epicampaign: &'static str,
    epicampaign_core: &'static str,
}

#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    run: RunInfo,
}

impl OutputDir {
    pub fn create(dir: &Path, run: RunInfo) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), run })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` and `name.provenance.json` next to it.
    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let provenance = Provenance {
            file: name,
            file_sha256: hex_digest(bytes),
            run: &self.run,
            versions: Versions {
                epicampaign: env!("CARGO_PKG_VERSION"),
                epicampaign_core: epicampaign_core::VERSION,
            },
        };
        let mut record = serde_json::to_vec_pretty(&provenance).expect("provenance serializes");
        record.push(b'\n');
        self.write_raw(name, bytes)?;
        self.write_raw(&format!("{name}.provenance.json"), &record)
    }

    fn write_raw(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Numeric table with a mandatory header row and `\n` line endings.
    pub fn csv<I>(&self, name: &str, header: &[String], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.iter().map(|x| x.to_string())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    /// `k,p_k,q_k`.
    pub fn distribution(&self, dist: &DegreeDistribution) -> Result<(), CliError> {
        let rows = dist
            .degrees()
            .zip(dist.probabilities().iter().zip(dist.excess()))
            .map(|(k, (p, q))| vec![f64::from(k), *p, *q]);
        self.csv("distribution.csv", &header(&["k", "p_k", "q_k"]), rows)
    }

    /// `t,<prefix>_<k>...`, one row per grid point.
    pub fn trajectory(&self, name: &str, prefix: &str, traj: &Trajectory) -> Result<(), CliError> {
        let mut cols = vec!["t".to_string()];
        cols.extend(traj.degrees().map(|k| format!("{prefix}_{k}")));
        let rows = (0..traj.n_times()).map(|j| {
            let mut row = vec![traj.grid()[j]];
            row.extend_from_slice(traj.row(j));
            row
        });
        self.csv(name, &cols, rows)
    }

    /// `k,r_norm_k`.
    pub fn resource(&self, scn: &Scenario, controls: &Trajectory) -> Result<(), CliError> {
        let rows = normalized_resource(scn, controls).into_iter().map(|(k, r)| vec![f64::from(k), r]);
        self.csv("resource.csv", &header(&["k", "r_norm_k"]), rows)
    }

    /// `k,i0_k`.
    pub fn seeds(&self, dist: &DegreeDistribution, seeds: &[f64]) -> Result<(), CliError> {
        let rows = dist.degrees().zip(seeds).map(|(k, x)| vec![f64::from(k), *x]);
        self.csv("seed.csv", &header(&["k", "i0_k"]), rows)
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
