//! System and scenario parameters.

use crate::error::{Error, Result};

/// Propagation speed used throughout (m/s).
pub const PROPAGATION_SPEED: f64 = 3.0e8;

/// Array, sampling and receiver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub carrier_hz: f64,
    /// Carrier increment between adjacent transmit elements.
    pub delta_f_hz: f64,
    pub d_tx_m: f64,
    pub d_rx_m: f64,
    pub pulse_s: f64,
    pub sample_hz: f64,
    /// Samples per transmitted pulse (L).
    pub n_samples: usize,
    /// Samples in the receive window (L̃).
    pub n_window: usize,
    /// Range corresponding to the first window sample.
    pub window_start_m: f64,
    /// Low-pass cutoff of each receive channel, one per transmit antenna.
    pub lpf_cutoff_hz: Vec<f64>,
    /// Required in-band energy fraction per antenna, each in (0, 1].
    pub band_tolerance: Vec<f64>,
}

impl SystemConfig {
    /// The six-element, 1 MHz increment system used in the simulation study.
    ///
    /// The window start puts the target at gate 5 and both interferers at
    /// gate 4, all fully inside the 30-sample window.
    pub fn table2() -> Self {
        let n_tx = 6;
        SystemConfig {
            n_tx,
            n_rx: 6,
            carrier_hz: 10e9,
            delta_f_hz: 1e6,
            d_tx_m: 0.015,
            d_rx_m: 0.015,
            pulse_s: 20e-6,
            sample_hz: 1e6,
            n_samples: 20,
            n_window: 30,
            window_start_m: 14_325.0,
            lpf_cutoff_hz: vec![900e3; n_tx],
            band_tolerance: vec![0.91; n_tx],
        }
    }

    pub fn wavelength(&self) -> f64 {
        PROPAGATION_SPEED / self.carrier_hz
    }

    /// Range extent of one sample.
    pub fn range_cell_m(&self) -> f64 {
        PROPAGATION_SPEED / (2.0 * self.sample_hz)
    }

    /// Cutoff of antenna `m` normalized to the sampling rate.
    pub fn normalized_cutoff(&self, m: usize) -> f64 {
        self.lpf_cutoff_hz[m] / self.sample_hz
    }

    /// Length of `s_T` (N_T·L).
    pub fn waveform_len(&self) -> usize {
        self.n_tx * self.n_samples
    }

    /// Length of a receive snapshot (N_T·N_R·L̃).
    pub fn snapshot_len(&self) -> usize {
        self.n_tx * self.n_rx * self.n_window
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(Error::config("system.n_tx", "must be at least 1"));
        }
        if self.n_rx == 0 {
            return Err(Error::config("system.n_rx", "must be at least 1"));
        }
        for (name, v) in [
            ("system.carrier_hz", self.carrier_hz),
            ("system.delta_f_hz", self.delta_f_hz),
            ("system.d_tx_m", self.d_tx_m),
            ("system.d_rx_m", self.d_rx_m),
            ("system.pulse_s", self.pulse_s),
            ("system.sample_hz", self.sample_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !self.window_start_m.is_finite() {
            return Err(Error::config("system.window_start_m", "must be finite"));
        }
        let expected = (self.pulse_s * self.sample_hz).round() as usize;
        if self.n_samples != expected {
            return Err(Error::config(
                "system.n_samples",
                format!("must equal round(pulse_s * sample_hz) = {expected}, got {}", self.n_samples),
            ));
        }
        if self.n_samples == 0 {
            return Err(Error::config("system.n_samples", "must be at least 1"));
        }
        if self.n_samples > self.n_window {
            return Err(Error::config(
                "system.n_window",
                format!("must be >= n_samples ({}), got {}", self.n_samples, self.n_window),
            ));
        }
        if self.lpf_cutoff_hz.len() != self.n_tx {
            return Err(Error::config(
                "system.lpf_cutoff_hz",
                format!("expected {} entries, got {}", self.n_tx, self.lpf_cutoff_hz.len()),
            ));
        }
        if self.band_tolerance.len() != self.n_tx {
            return Err(Error::config(
                "system.band_tolerance",
                format!("expected {} entries, got {}", self.n_tx, self.band_tolerance.len()),
            ));
        }
        for (m, &f) in self.lpf_cutoff_hz.iter().enumerate() {
            if !(f.is_finite() && f > 0.0 && f <= self.delta_f_hz) {
                return Err(Error::config(
                    format!("system.lpf_cutoff_hz[{m}]"),
                    format!("must lie in (0, delta_f_hz = {}], got {f}", self.delta_f_hz),
                ));
            }
            if f > self.sample_hz {
                return Err(Error::config(
                    format!("system.lpf_cutoff_hz[{m}]"),
                    format!("must not exceed sample_hz = {}", self.sample_hz),
                ));
            }
        }
        for (m, &g) in self.band_tolerance.iter().enumerate() {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::config(
                    format!("system.band_tolerance[{m}]"),
                    format!("must lie in (0, 1], got {g}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Target,
    Interference,
}

/// A point scatterer or interferer. `power_db` is SNR for the target and INR
/// for interferers, both relative to unit noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub range_m: f64,
    pub angle_rad: f64,
    pub power_db: f64,
    pub kind: SourceKind,
}

impl Source {
    pub fn target(range_m: f64, angle_deg: f64, snr_db: f64) -> Self {
        Source {
            range_m,
            angle_rad: angle_deg.to_radians(),
            power_db: snr_db,
            kind: SourceKind::Target,
        }
    }

    pub fn interference(range_m: f64, angle_deg: f64, inr_db: f64) -> Self {
        Source {
            range_m,
            angle_rad: angle_deg.to_radians(),
            power_db: inr_db,
            kind: SourceKind::Interference,
        }
    }

    pub fn power_linear(&self) -> f64 {
        10f64.powf(self.power_db / 10.0)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(Error::config(format!("{field}.range_m"), "must be finite and > 0"));
        }
        if !self.angle_rad.is_finite() {
            return Err(Error::config(format!("{field}.angle"), "must be finite"));
        }
        if !self.power_db.is_finite() {
            return Err(Error::config(format!("{field}.power_db"), "must be finite"));
        }
        Ok(())
    }
}

/// A full problem instance: system, one target, any number of interferers
/// and the bandwidth of the reference waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemConfig,
    pub target: Source,
    pub interferers: Vec<Source>,
    pub reference_bandwidth_hz: f64,
}

impl Scenario {
    /// Target plus two same-cell interferers, one of them in the target's
    /// mainlobe.
    pub fn table12() -> Self {
        Scenario {
            system: SystemConfig::table2(),
            target: Source::target(15_075.0, 20.0, 20.0),
            interferers: vec![
                Source::interference(14_985.0, -30.0, 30.0),
                Source::interference(14_970.0, 20.0, 30.0),
            ],
            reference_bandwidth_hz: 900e3,
        }
    }

    /// Same scenario with the interferers removed.
    pub fn without_interference(&self) -> Self {
        Scenario {
            interferers: Vec::new(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.target.kind != SourceKind::Target {
            return Err(Error::config("target.kind", "must be a target"));
        }
        self.target.validate("target")?;
        for (i, s) in self.interferers.iter().enumerate() {
            if s.kind != SourceKind::Interference {
                return Err(Error::config(format!("interference[{i}].kind"), "must be an interference"));
            }
            s.validate(&format!("interference[{i}]"))?;
        }
        let b = self.reference_bandwidth_hz;
        let min_cut = self.system.lpf_cutoff_hz.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(b.is_finite() && b >= 0.0 && b <= min_cut) {
            return Err(Error::config(
                "reference.bandwidth_hz",
                format!("must lie in [0, min lpf cutoff = {min_cut}], got {b}"),
            ));
        }
        Ok(())
    }
}
