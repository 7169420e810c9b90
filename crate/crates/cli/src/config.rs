//! TOML scenario files.

use std::path::Path;

use fda_waveopt::{Scenario, Source, SystemConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Name accepted in place of a path for the bundled preset.
pub const PRESET_TABLE12: &str = "table12";
pub const TABLE12_TOML: &str = include_str!("../presets/table12.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: SystemSection,
    pub target: SourceSection,
    #[serde(default)]
    pub interference: Vec<SourceSection>,
    pub reference: ReferenceSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_tx: usize,
    pub n_rx: usize,
    pub carrier_hz: f64,
    pub delta_f_hz: f64,
    pub d_tx_m: f64,
    pub d_rx_m: f64,
    pub pulse_s: f64,
    pub sample_hz: f64,
    pub n_samples: usize,
    pub n_window: usize,
    pub window_start_m: f64,
    pub lpf_cutoff_hz: Vec<f64>,
    pub band_tolerance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub range_m: f64,
    pub angle_deg: f64,
    /// SNR for the target, INR for interferers.
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub max_iter: usize,
    pub primal_tol: f64,
    pub sinr_plateau_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let stop = fda_waveopt::solver::StopCriteria::default();
        SolverSection {
            rho1: fda_waveopt::padmm::DEFAULT_RHO,
            rho2: fda_waveopt::padmm::DEFAULT_RHO,
            rho3: fda_waveopt::padmm::DEFAULT_RHO,
            max_iter: stop.max_iter,
            primal_tol: stop.primal_tol,
            sinr_plateau_tol: stop.sinr_plateau_tol,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, or the bundled preset when `path` is `table12`.
    pub fn load(path: &Path) -> CliResult<Self> {
        if path.as_os_str() == PRESET_TABLE12 && !path.exists() {
            return Self::parse(TABLE12_TOML);
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn scenario(&self) -> CliResult<Scenario> {
        let s = &self.system;
        let source = |x: &SourceSection, target: bool| {
            if target {
                Source::target(x.range_m, x.angle_deg, x.power_db)
            } else {
                Source::interference(x.range_m, x.angle_deg, x.power_db)
            }
        };
        let scenario = Scenario {
            system: SystemConfig {
                n_tx: s.n_tx,
                n_rx: s.n_rx,
                carrier_hz: s.carrier_hz,
                delta_f_hz: s.delta_f_hz,
                d_tx_m: s.d_tx_m,
                d_rx_m: s.d_rx_m,
                pulse_s: s.pulse_s,
                sample_hz: s.sample_hz,
                n_samples: s.n_samples,
                n_window: s.n_window,
                window_start_m: s.window_start_m,
                lpf_cutoff_hz: s.lpf_cutoff_hz.clone(),
                band_tolerance: s.band_tolerance.clone(),
            },
            target: source(&self.target, true),
            interferers: self.interference.iter().map(|x| source(x, false)).collect(),
            reference_bandwidth_hz: self.reference.bandwidth_hz,
        };
        scenario.validate()?;
        let sv = &self.solver;
        for (name, v) in [("solver.rho1", sv.rho1), ("solver.rho2", sv.rho2), ("solver.rho3", sv.rho3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("invalid configuration at `{name}`: must be finite and > 0, got {v}")));
            }
        }
        if sv.max_iter == 0 {
            return Err(CliError::Config("invalid configuration at `solver.max_iter`: must be at least 1".into()));
        }
        Ok(scenario)
    }

    /// SHA-256 of the parsed config in canonical form. Key order and
    /// formatting of the source file do not matter.
    pub fn digest(&self) -> String {
        // serde_json::Value maps are sorted by key.
        let canonical = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&canonical).expect("value serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_matches_library_scenario() {
        let cfg = ConfigFile::parse(TABLE12_TOML).unwrap();
        assert_eq!(cfg.scenario().unwrap(), Scenario::table12());
    }

    #[test]
    fn digest_ignores_key_order() {
        let a = ConfigFile::parse(TABLE12_TOML).unwrap();
        let reordered = TABLE12_TOML
            .replace("n_tx = 6\nn_rx = 6\n", "n_rx = 6\nn_tx = 6\n")
            .replace("range_m = 15075.0\nangle_deg = 20.0\n", "angle_deg = 20.0\nrange_m = 15075.0\n");
        assert_ne!(reordered, TABLE12_TOML);
        let b = ConfigFile::parse(&reordered).unwrap();
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.target.power_db = 21.0;
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = TABLE12_TOML.replace("[reference]", "[reference]\nbandwith_hz = 1.0");
        assert!(matches!(ConfigFile::parse(&text), Err(CliError::Config(_))));
    }
}
