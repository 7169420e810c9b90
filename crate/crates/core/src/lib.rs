//! Frequency diverse array (FDA) radar receive model, MVDR receive filtering
//! and transmit waveform design for mainlobe interference suppression.

pub mod config;
pub mod error;
pub mod linalg;
pub mod mvdr;
pub mod signal_model;

pub use config::{Scenario, Source, SourceKind, SystemConfig};
pub use error::{Error, Result};
pub mod constraints;
pub mod lift;
pub mod qp;
pub mod mmadmm;
pub mod padmm;
pub mod solver;
pub mod analysis;
