//! P-ADMM: alternate QP updates of `s_T` and its copy `h`, each with the SINR
//! objective frozen at the latest iterate, then scaled dual ascent on `u`
//! (for `s_T = h`) and `v_m` (for `s_Tᴴ Σ_m h = 1/N_T`).
//!
//! The similarity and bandwidth constraints are bilinear in `(s_T, h)`; with
//! one side fixed they become affine, so both subproblems are convex QPs. The
//! Hessians and constraints are block diagonal over antennas, so each update
//! splits into `N_T` small QPs.

use num_complex::Complex64;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::mvdr::{interference_covariance, psi_apply, CovarianceSolver};
use crate::qp::{solve_qp, Inequality, QpOptions, QpProblem};
use crate::signal_model::Scene;
use crate::solver::{finish, pinned, record, SolverOutput, StopCriteria, TraceClock};

/// Default for both penalties.
pub const DEFAULT_RHO: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct PadmmState {
    pub s_t: CVector,
    pub h: CVector,
    /// Scaled dual of `s_T = h`.
    pub u: CVector,
    /// Scaled duals of the per-antenna energy coupling.
    pub v: Vec<Complex64>,
    pub rho1: f64,
    pub rho2: f64,
    pub iteration: usize,
    pub qp_options: QpOptions,
}

/// Outcome of one P-ADMM step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// `‖s_T - h‖`
    pub primal_residual: f64,
    /// Number of antenna subproblems that failed or hit the iteration cap.
    pub flagged: usize,
}

impl PadmmState {
    /// `s_T⁰ = s_Ref`, zero multipliers. `h⁰` is `s_Ref` too: with `h = 0` the
    /// bandwidth rows of the first QP read `0 ≥ γ_m/N_T` and have no solution.
    pub fn init(cs: &ConstraintSet, rho1: f64, rho2: f64) -> Result<Self> {
        if !(rho1 > 0.0 && rho2 > 0.0) {
            return Err(Error::OutOfRange {
                what: "P-ADMM penalty",
                value: rho1.min(rho2),
            });
        }
        Ok(PadmmState {
            s_t: cs.s_ref.clone(),
            h: cs.s_ref.clone(),
            u: CVector::zeros(cs.len()),
            v: vec![Complex64::new(0.0, 0.0); cs.n_tx],
            rho1,
            rho2,
            iteration: 0,
            qp_options: QpOptions::default(),
        })
    }
}

/// Which half of the alternation a subproblem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// Optimize `s_T` with `h` fixed.
    Waveform,
    /// Optimize `h` with `s_T` fixed.
    Copy,
}

/// QP for antenna `m`. `fixed` is the side held constant, `psi_fixed` is
/// `Ψ · fixed` and `anchor` is `h - u` for the waveform half and `s_T + u`
/// for the copy half.
pub fn block_qp(
    cs: &ConstraintSet,
    st: &PadmmState,
    half: Half,
    m: usize,
    fixed: &CVector,
    psi_fixed: &CVector,
    anchor: &CVector,
) -> QpProblem {
    let l = cs.n_samples;
    let nt = cs.n_tx as f64;
    let range = m * l..(m + 1) * l;
    let b = fixed.rows(m * l, l).into_owned();
    let t = Complex64::new(1.0 / nt, 0.0) - st.v[m];
    let coupling = match half {
        Half::Waveform => t.conj(),
        Half::Copy => t,
    };

    let mut q_matrix = CMatrix::identity(l, l).scale(st.rho1);
    q_matrix.ger(Complex64::new(st.rho2, 0.0), &b, &b.map(|x| x.conj()), Complex64::new(1.0, 0.0));
    let q_linear = -psi_fixed.rows(m * l, l).into_owned() - anchor.rows(m * l, l).scale(st.rho1) - b.scale(st.rho2) * coupling;

    let mut ineq = Vec::with_capacity(l + 1);
    let eps2 = cs.epsilon * cs.epsilon;
    for (k, j) in range.enumerate() {
        let delta = fixed[j] - cs.s_ref[j];
        let mut a = CVector::zeros(l);
        a[k] = delta;
        ineq.push(Inequality {
            a,
            b: eps2 + (cs.s_ref[j].conj() * delta).re,
        });
    }
    ineq.push(Inequality {
        a: -(&cs.band[m] * &b),
        b: -cs.gamma[m] / nt,
    });
    QpProblem { q_matrix, q_linear, ineq }
}

fn solve_half(cs: &ConstraintSet, st: &PadmmState, half: Half, fixed: &CVector, psi_fixed: &CVector, anchor: &CVector, prev: &CVector) -> (CVector, usize) {
    let l = cs.n_samples;
    let mut out = prev.clone();
    let mut flagged = 0;
    for m in 0..cs.n_tx {
        let qp = block_qp(cs, st, half, m, fixed, psi_fixed, anchor);
        match solve_qp(&qp, st.qp_options) {
            Ok(sol) => {
                if !sol.converged {
                    flagged += 1;
                }
                out.rows_mut(m * l, l).copy_from(&sol.x);
            }
            Err(e) => {
                log::debug!("P-ADMM antenna {m} subproblem failed: {e}");
                flagged += 1;
            }
        }
    }
    (out, flagged)
}

/// One pass of the s-update, h-update and dual ascent.
pub fn padmm_step(st: &mut PadmmState, scene: &Scene, cs: &ConstraintSet) -> Result<StepReport> {
    let cov = interference_covariance(scene, &st.s_t, CovarianceSolver::Woodbury)?;
    let psi_h = psi_apply(&scene.target, &cov, &st.h);
    let anchor = &st.h - &st.u;
    let (s_new, f1) = solve_half(cs, st, Half::Waveform, &st.h.clone(), &psi_h, &anchor, &st.s_t);
    st.s_t = s_new;

    let cov = interference_covariance(scene, &st.s_t, CovarianceSolver::Woodbury)?;
    let psi_s = psi_apply(&scene.target, &cov, &st.s_t);
    let anchor = &st.s_t + &st.u;
    let (h_new, f2) = solve_half(cs, st, Half::Copy, &st.s_t.clone(), &psi_s, &anchor, &st.h);
    st.h = h_new;

    padmm_dual_update(st, cs);
    st.iteration += 1;
    Ok(StepReport {
        primal_residual: (&st.s_t - &st.h).norm(),
        flagged: f1 + f2,
    })
}

/// `u += s_T - h`, `v_m += s_Tᴴ Σ_m h - 1/N_T`.
pub fn padmm_dual_update(st: &mut PadmmState, cs: &ConstraintSet) {
    st.u += &st.s_t - &st.h;
    let l = cs.n_samples;
    for m in 0..cs.n_tx {
        let c = st.s_t.rows(m * l, l).dotc(&st.h.rows(m * l, l));
        st.v[m] += c - Complex64::new(1.0 / cs.n_tx as f64, 0.0);
    }
}

pub fn padmm_run(scene: &Scene, cs: &ConstraintSet, rho1: f64, rho2: f64, stop: StopCriteria) -> Result<SolverOutput> {
    if cs.epsilon == 0.0 {
        return pinned(scene, cs);
    }
    let mut st = PadmmState::init(cs, rho1, rho2)?;
    let clock = TraceClock::start();
    let mut trace = vec![record(scene, cs, &st.s_t, 0, 0.0, &clock)?];
    let mut flagged = 0;
    let mut converged = false;
    while st.iteration < stop.max_iter {
        let rep = padmm_step(&mut st, scene, cs)?;
        flagged += rep.flagged;
        trace.push(record(scene, cs, &st.s_t, st.iteration, rep.primal_residual, &clock)?);
        if stop.satisfied(&trace) {
            converged = true;
            break;
        }
    }
    log::debug!("P-ADMM finished after {} iterations (converged: {converged}, flagged: {flagged})", st.iteration);
    finish(scene, cs, &st.s_t, trace, converged, flagged)
}
