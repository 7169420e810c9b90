//! On-disk artifact formats. Complex values are stored as paired `re`/`im`
//! arrays; floats are written in shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use fda_waveopt::linalg::{CMatrix, CVector};
use fda_waveopt::mvdr::ReceiveWeights;
use fda_waveopt::signal_model::WaveformMatrix;
use fda_waveopt::solver::TraceRecord;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};

pub const TRACE_CSV: &str = "trace.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const WAVEFORM_JSON: &str = "waveform.json";
pub const WEIGHTS_JSON: &str = "weights.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const CUTS_CSV: &str = "cuts.csv";
pub const PROFILE_CSV: &str = "profile.csv";
pub const PULSE_JSON: &str = "pulse.json";
pub const SWEEP_CSV: &str = "sweep.csv";

/// Waveform matrix `S`, one row per transmit antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformFile {
    pub n_tx: usize,
    pub n_samples: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl WaveformFile {
    pub fn from_matrix(w: &WaveformMatrix) -> Self {
        let s = w.entries();
        let rows = |f: fn(&Complex64) -> f64| (0..s.nrows()).map(|m| s.row(m).iter().map(f).collect()).collect();
        WaveformFile {
            n_tx: s.nrows(),
            n_samples: s.ncols(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    /// Checks the shape against the expected `n_tx × n_samples`.
    pub fn to_matrix(&self, n_tx: usize, n_samples: usize) -> CliResult<WaveformMatrix> {
        let shape_ok = self.n_tx == n_tx
            && self.n_samples == n_samples
            && self.re.len() == n_tx
            && self.im.len() == n_tx
            && self.re.iter().chain(&self.im).all(|r| r.len() == n_samples);
        if !shape_ok {
            return Err(CliError::Config(format!(
                "waveform is {}×{} but the config expects {n_tx}×{n_samples}",
                self.n_tx, self.n_samples
            )));
        }
        let entries = CMatrix::from_fn(n_tx, n_samples, |m, l| Complex64::new(self.re[m][l], self.im[m][l]));
        Ok(WaveformMatrix::new(entries))
    }
}

/// Receive filter `w` in snapshot order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub len: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl WeightsFile {
    pub fn from_weights(w: &ReceiveWeights) -> Self {
        WeightsFile {
            len: w.w.len(),
            re: w.w.iter().map(|z| z.re).collect(),
            im: w.w.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_weights(&self, expected_len: usize) -> CliResult<ReceiveWeights> {
        if self.len != expected_len || self.re.len() != expected_len || self.im.len() != expected_len {
            return Err(CliError::Config(format!(
                "weights have length {} but the config expects {expected_len}",
                self.len
            )));
        }
        Ok(ReceiveWeights {
            w: CVector::from_iterator(expected_len, self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub sinr_db: f64,
    pub primal_residual: f64,
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub iteration: usize,
    pub wall_ms: f64,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        TraceRow {
            iteration: r.iteration,
            sinr_db: r.sinr_db,
            primal_residual: r.primal_residual,
            energy_residual: r.energy_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub f_t: f64,
    pub f_r: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRow {
    /// `fix_fr` or `fix_ft`.
    pub cut: String,
    /// Grid value of the held frequency.
    pub fixed: f64,
    pub f: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub lag: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSummary {
    pub antenna: usize,
    pub window: String,
    pub upsample: usize,
    pub mainlobe_width_samples: f64,
    /// Absent when the profile has no sidelobe.
    pub peak_sidelobe_db: Option<f64>,
    pub waveform: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub epsilon: f64,
    pub baseline_sinr_db: f64,
    pub final_sinr_db: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub status: String,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: Option<f64>,
}

/// Constraint residuals of the reported waveform; positive means violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    /// `max_j |(s_T - s_Ref)_j|² - ε²`
    pub similarity: f64,
    /// `max_m |s_Tᴴ Σ_m s_T - 1/N_T|`
    pub energy: f64,
    /// `max_m γ_m/N_T - s_Tᴴ B_m s_T`
    pub bandwidth: f64,
}

impl From<&fda_waveopt::constraints::FeasibilityReport> for Feasibility {
    fn from(r: &fda_waveopt::constraints::FeasibilityReport) -> Self {
        Feasibility {
            similarity: r.similarity,
            energy: r.max_energy(),
            bandwidth: r.max_bandwidth(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: String,
    pub config_digest: String,
    /// Parsed config, so downstream tools read source positions from here.
    pub config: ConfigFile,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<Penalties>,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    /// `ok`, `not_converged` or `failed`.
    pub status: String,
    /// True when some artifacts are missing or come from an aborted run.
    pub partial: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flagged_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline_sinr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_sinr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feasibility: Option<Feasibility>,
    pub files: Vec<FileEntry>,
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Output(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Size and digest of each named file that exists in `dir`.
pub fn inventory(dir: &Path, names: &[&str]) -> CliResult<Vec<FileEntry>> {
    let mut out = Vec::new();
    for name in names {
        let path: PathBuf = dir.join(name);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        out.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    Ok(out)
}
