//! Pieces shared by the two waveform solvers: stopping rule, trace records,
//! final repair and the solver result type.

use std::time::Instant;

use num_complex::Complex64;

use crate::constraints::{ConstraintSet, FeasibilityReport};
use crate::error::Result;
use crate::linalg::CVector;
use crate::mvdr::{mvdr_weights, output_sinr, ReceiveWeights};
use crate::signal_model::{normalize_rows, Scene, WaveformMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub max_iter: usize,
    /// Bound on the norm of the constraint-splitting residual.
    pub primal_tol: f64,
    /// Largest SINR change (dB) over the plateau window.
    pub sinr_plateau_tol: f64,
    pub plateau_window: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            max_iter: 500,
            primal_tol: 1e-4,
            sinr_plateau_tol: 1e-4,
            plateau_window: 5,
        }
    }
}

impl StopCriteria {
    /// True once the residual is small and SINR has flattened out.
    pub fn satisfied(&self, trace: &[TraceRecord]) -> bool {
        let Some(last) = trace.last() else { return false };
        if last.primal_residual > self.primal_tol || trace.len() <= self.plateau_window {
            return false;
        }
        let tail = &trace[trace.len() - 1 - self.plateau_window..];
        let lo = tail.iter().map(|r| r.sinr_db).fold(f64::INFINITY, f64::min);
        let hi = tail.iter().map(|r| r.sinr_db).fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= self.sinr_plateau_tol
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Output SINR of the repaired iterate.
    pub sinr_db: f64,
    /// Norm of the splitting residual (`s_T - h` for P-ADMM, all auxiliary
    /// constraints for MM-ADMM).
    pub primal_residual: f64,
    /// Largest `|s_Tᴴ Σ_m s_T - 1/N_T|` before repair.
    pub energy_residual: f64,
    pub wall_ms: f64,
}

/// Output of a solver run.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub s_t: CVector,
    pub waveform: WaveformMatrix,
    pub weights: ReceiveWeights,
    pub sinr_db: f64,
    pub trace: Vec<TraceRecord>,
    pub feasibility: FeasibilityReport,
    pub converged: bool,
    /// Steps whose inner subproblem did not solve cleanly.
    pub flagged_steps: usize,
}

/// Bring an iterate onto the energy sphere while keeping the similarity box.
///
/// Alternates clipping each sample to `|s_j - r_j| ≤ ε` with rescaling each
/// antenna row to energy `1/N_T`.
pub fn repair(s_t: &CVector, cs: &ConstraintSet) -> CVector {
    let mut s = normalize_rows(s_t, cs.n_tx);
    for _ in 0..100 {
        let mut moved = false;
        for (x, r) in s.iter_mut().zip(cs.s_ref.iter()) {
            let d: Complex64 = *x - r;
            let n = d.norm();
            if n > cs.epsilon {
                *x = r + d * (cs.epsilon / n);
                moved = true;
            }
        }
        if !moved {
            break;
        }
        s = normalize_rows(&s, cs.n_tx);
    }
    s
}

pub(crate) fn max_energy_residual(s_t: &CVector, cs: &ConstraintSet) -> f64 {
    let inv = 1.0 / cs.n_tx as f64;
    (0..cs.n_tx)
        .map(|m| (cs.antenna_energy(s_t, m) - inv).abs())
        .fold(0.0, f64::max)
}

pub(crate) struct TraceClock(Instant);

impl TraceClock {
    pub fn start() -> Self {
        TraceClock(Instant::now())
    }

    pub fn ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Record for the iterate `s_t`.
pub(crate) fn record(
    scene: &Scene,
    cs: &ConstraintSet,
    s_t: &CVector,
    iteration: usize,
    primal_residual: f64,
    clock: &TraceClock,
) -> Result<TraceRecord> {
    let fixed = repair(s_t, cs);
    Ok(TraceRecord {
        iteration,
        sinr_db: output_sinr(scene, &fixed)?,
        primal_residual,
        energy_residual: max_energy_residual(s_t, cs),
        wall_ms: clock.ms(),
    })
}

pub(crate) fn finish(
    scene: &Scene,
    cs: &ConstraintSet,
    s_t: &CVector,
    trace: Vec<TraceRecord>,
    converged: bool,
    flagged_steps: usize,
) -> Result<SolverOutput> {
    let s = repair(s_t, cs);
    let weights = mvdr_weights(scene, &s)?;
    let sinr_db = output_sinr(scene, &s)?;
    Ok(SolverOutput {
        waveform: WaveformMatrix::from_s_t(&s, cs.n_tx, cs.n_samples)?,
        feasibility: cs.feasibility_report(&s),
        s_t: s,
        weights,
        sinr_db,
        trace,
        converged,
        flagged_steps,
    })
}

/// With `ε = 0` the feasible set is the reference alone.
pub(crate) fn pinned(scene: &Scene, cs: &ConstraintSet) -> Result<SolverOutput> {
    let clock = TraceClock::start();
    let s = cs.s_ref.clone();
    // No repair: the reference is returned bit for bit.
    let rec = TraceRecord {
        iteration: 0,
        sinr_db: output_sinr(scene, &s)?,
        primal_residual: 0.0,
        energy_residual: max_energy_residual(&s, cs),
        wall_ms: clock.ms(),
    };
    Ok(SolverOutput {
        waveform: WaveformMatrix::from_s_t(&s, cs.n_tx, cs.n_samples)?,
        weights: mvdr_weights(scene, &s)?,
        sinr_db: rec.sinr_db,
        feasibility: cs.feasibility_report(&s),
        s_t: s,
        trace: vec![rec],
        converged: true,
        flagged_steps: 0,
    })
}
