//! Interference-plus-noise covariance, MVDR weights and output SINR.
//!
//! `Z = I + Σ_i INR_i g_i g_iᴴ` with `g_i = Λ_i s_T`. Noise power is one, so
//! SNR and INR are the source powers directly. `Z` is never inverted; solves
//! use either the Woodbury identity on the rank-Υ update or a dense Cholesky
//! factorization of the full matrix.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{to_db, CMatrix, CVector};
use crate::signal_model::{ResponseOperator, Scene};

/// How `Z⁻¹ b` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceSolver {
    #[default]
    Woodbury,
    Dense,
}

enum Factor {
    /// Cholesky of the `Υ × Υ` capacitance `D⁻¹ + GᴴG`.
    Woodbury(Option<Cholesky<Complex64, Dyn>>),
    Dense(Cholesky<Complex64, Dyn>),
}

/// `Z` for a fixed waveform, factored for repeated solves.
pub struct CovarianceModel {
    echoes: CMatrix,
    inr: Vec<f64>,
    factor: Factor,
}

impl std::fmt::Debug for CovarianceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CovarianceModel")
            .field("dim", &self.echoes.nrows())
            .field("inr", &self.inr)
            .finish()
    }
}

impl CovarianceModel {
    /// Build from explicit operators and linear INRs.
    pub fn from_parts(ops: &[ResponseOperator], inr: &[f64], s_t: &CVector, n: usize, solver: CovarianceSolver) -> Result<Self> {
        let mut echoes = CMatrix::zeros(n, ops.len());
        for (k, op) in ops.iter().enumerate() {
            echoes.set_column(k, &op.apply(s_t));
        }
        Self::from_echoes(echoes, inr.to_vec(), solver)
    }

    /// Build from the interferer echoes `G = [g_1 … g_Υ]`.
    pub fn from_echoes(echoes: CMatrix, inr: Vec<f64>, solver: CovarianceSolver) -> Result<Self> {
        let factor = match solver {
            CovarianceSolver::Woodbury => {
                if echoes.ncols() == 0 {
                    Factor::Woodbury(None)
                } else {
                    let mut cap = echoes.adjoint() * &echoes;
                    for (k, &p) in inr.iter().enumerate() {
                        cap[(k, k)] += Complex64::new(1.0 / p, 0.0);
                    }
                    let ch = Cholesky::new(cap).ok_or(Error::NotPositiveDefinite("Woodbury capacitance"))?;
                    Factor::Woodbury(Some(ch))
                }
            }
            CovarianceSolver::Dense => {
                let z = dense_z(&echoes, &inr);
                Factor::Dense(Cholesky::new(z).ok_or(Error::NotPositiveDefinite("interference covariance"))?)
            }
        };
        Ok(CovarianceModel { echoes, inr, factor })
    }

    pub fn dim(&self) -> usize {
        self.echoes.nrows()
    }

    /// Interferer echoes as columns.
    pub fn echoes(&self) -> &CMatrix {
        &self.echoes
    }

    pub fn inr(&self) -> &[f64] {
        &self.inr
    }

    /// Dense `Z`.
    pub fn matrix(&self) -> CMatrix {
        dense_z(&self.echoes, &self.inr)
    }

    /// `Z x`
    pub fn apply(&self, x: &CVector) -> CVector {
        let mut out = x.clone();
        for (k, &p) in self.inr.iter().enumerate() {
            let g = self.echoes.column(k);
            let a = g.dotc(x) * p;
            out.axpy(a, &g, Complex64::new(1.0, 0.0));
        }
        out
    }

    /// `Z⁻¹ b`
    pub fn solve(&self, b: &CVector) -> CVector {
        match &self.factor {
            Factor::Woodbury(None) => b.clone(),
            Factor::Woodbury(Some(ch)) => {
                let t = ch.solve(&(self.echoes.adjoint() * b));
                b - &self.echoes * t
            }
            Factor::Dense(ch) => ch.solve(b),
        }
    }

    /// `Z⁻¹ B` column by column.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        match &self.factor {
            Factor::Woodbury(None) => b.clone(),
            Factor::Woodbury(Some(ch)) => {
                let t = ch.solve(&(self.echoes.adjoint() * b));
                b - &self.echoes * t
            }
            Factor::Dense(ch) => ch.solve(b),
        }
    }
}

fn dense_z(echoes: &CMatrix, inr: &[f64]) -> CMatrix {
    let n = echoes.nrows();
    let mut z = CMatrix::identity(n, n);
    for (k, &p) in inr.iter().enumerate() {
        let g = echoes.column(k);
        z.ger(Complex64::new(p, 0.0), &g, &g.map(|x| x.conj()), Complex64::new(1.0, 0.0));
    }
    z
}

/// `Z(s_T)` for a scene.
pub fn interference_covariance(scene: &Scene, s_t: &CVector, solver: CovarianceSolver) -> Result<CovarianceModel> {
    check_len(scene, s_t)?;
    CovarianceModel::from_parts(&scene.interferers, &scene.inr, s_t, scene.target.rows(), solver)
}

fn check_len(scene: &Scene, s_t: &CVector) -> Result<()> {
    if s_t.len() != scene.waveform_len() {
        return Err(Error::Dimension {
            context: "waveform s_T",
            expected: scene.waveform_len(),
            actual: s_t.len(),
        });
    }
    Ok(())
}

/// Distortionless receive filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveWeights {
    pub w: CVector,
}

/// `w = Z⁻¹x / (xᴴZ⁻¹x)`, `x = Λ s_T`.
pub fn mvdr_weights(scene: &Scene, s_t: &CVector) -> Result<ReceiveWeights> {
    mvdr_weights_with(scene, s_t, CovarianceSolver::default())
}

pub fn mvdr_weights_with(scene: &Scene, s_t: &CVector, solver: CovarianceSolver) -> Result<ReceiveWeights> {
    let cov = interference_covariance(scene, s_t, solver)?;
    let x = scene.target.apply(s_t);
    if x.norm() == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let y = cov.solve(&x);
    let q = x.dotc(&y).re;
    Ok(ReceiveWeights { w: y.unscale(q) })
}

/// Output SINR in dB for an arbitrary receive filter.
pub fn output_sinr_with_weights(scene: &Scene, s_t: &CVector, weights: &ReceiveWeights) -> Result<f64> {
    check_len(scene, s_t)?;
    let w = &weights.w;
    if w.len() != scene.target.rows() {
        return Err(Error::Dimension {
            context: "receive weights",
            expected: scene.target.rows(),
            actual: w.len(),
        });
    }
    let wn = w.norm_squared();
    if wn == 0.0 {
        return Err(Error::ZeroWeights);
    }
    let signal = scene.snr * w.dotc(&scene.target.apply(s_t)).norm_sqr();
    let mut interference = 0.0;
    for (op, &p) in scene.interferers.iter().zip(&scene.inr) {
        interference += p * w.dotc(&op.apply(s_t)).norm_sqr();
    }
    Ok(to_db(signal / (interference + wn)))
}

/// `SNR · s_Tᴴ Ψ s_T` in linear units, `Ψ = Λᴴ Z⁻¹ Λ`.
pub fn output_sinr_linear(scene: &Scene, s_t: &CVector) -> Result<f64> {
    output_sinr_linear_with(scene, s_t, CovarianceSolver::default())
}

pub fn output_sinr_linear_with(scene: &Scene, s_t: &CVector, solver: CovarianceSolver) -> Result<f64> {
    let cov = interference_covariance(scene, s_t, solver)?;
    let x = scene.target.apply(s_t);
    Ok(scene.snr * x.dotc(&cov.solve(&x)).re)
}

/// Output SINR of the MVDR filter in dB.
pub fn output_sinr(scene: &Scene, s_t: &CVector) -> Result<f64> {
    output_sinr_linear(scene, s_t).map(to_db)
}

/// SINR with all interferers removed: `SNR · ‖Λ s_T‖²`.
pub fn interference_free_bound(scene: &Scene, s_t: &CVector) -> f64 {
    to_db(scene.snr * scene.target.apply(s_t).norm_squared())
}

/// `Ψ(s_T) v = Λᴴ Z(s_T)⁻¹ Λ v` with a prebuilt covariance.
pub fn psi_apply(target: &ResponseOperator, cov: &CovarianceModel, v: &CVector) -> CVector {
    target.apply_adjoint(&cov.solve(&target.apply(v)))
}

/// Dense `Ψ(s_T)`, for diagnostics and small problems.
pub fn psi_matrix(scene: &Scene, s_t: &CVector, solver: CovarianceSolver) -> Result<CMatrix> {
    let cov = interference_covariance(scene, s_t, solver)?;
    let lam = scene.target.matrix();
    let psi = lam.adjoint() * cov.solve_matrix(&lam);
    Ok(crate::linalg::hermitian_part(&psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;
    use crate::linalg::{from_db, min_eigenvalue};

    fn scene() -> (Scene, CVector) {
        let s = Scene::new(&Scenario::table12()).unwrap();
        let r = s.reference.s_t();
        (s, r)
    }

    #[test]
    fn no_interference_is_identity() {
        let sc = Scene::new(&Scenario::table12().without_interference()).unwrap();
        let r = sc.reference.s_t();
        let cov = interference_covariance(&sc, &r, CovarianceSolver::Woodbury).unwrap();
        let b = sc.target.apply(&r);
        assert_eq!(cov.solve(&b), b);
        let w = mvdr_weights(&sc, &r).unwrap();
        let x = sc.target.apply(&r);
        assert!((w.w - x.unscale(x.norm_squared())).norm() < 1e-14);
    }

    #[test]
    fn trace_identity_rank_one() {
        let mut scn = Scenario::table12();
        scn.interferers.truncate(1);
        let sc = Scene::new(&scn).unwrap();
        let r = sc.reference.s_t();
        let cov = interference_covariance(&sc, &r, CovarianceSolver::Woodbury).unwrap();
        let z = cov.matrix();
        let tr: f64 = z.diagonal().iter().map(|x| x.re).sum();
        let expect = 1080.0 + from_db(30.0) * sc.interferers[0].apply(&r).norm_squared();
        assert!((tr - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn covariance_is_hermitian_with_unit_floor() {
        let (sc, r) = scene();
        let z = interference_covariance(&sc, &r, CovarianceSolver::Woodbury).unwrap().matrix();
        assert!(crate::linalg::hermitian_defect(&z) < 1e-12);
        assert!(min_eigenvalue(&z) >= 1.0 - 1e-9);
    }

    #[test]
    fn woodbury_matches_dense() {
        let (sc, r) = scene();
        let a = interference_covariance(&sc, &r, CovarianceSolver::Woodbury).unwrap();
        let d = interference_covariance(&sc, &r, CovarianceSolver::Dense).unwrap();
        let b = CVector::from_fn(1080, |i, _| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.11).cos()));
        let (xa, xd) = (a.solve(&b), d.solve(&b));
        assert!((&xa - &xd).norm() / xd.norm() < 1e-9);
        assert!((a.apply(&xa) - &b).norm() / b.norm() < 1e-10);
        assert!((d.matrix() * &xd - &b).norm() / b.norm() < 1e-10);
        let sa = output_sinr_with(&sc, &r, CovarianceSolver::Woodbury);
        let sd = output_sinr_with(&sc, &r, CovarianceSolver::Dense);
        assert!((sa - sd).abs() < 1e-9);
    }

    fn output_sinr_with(sc: &Scene, r: &CVector, s: CovarianceSolver) -> f64 {
        to_db(output_sinr_linear_with(sc, r, s).unwrap())
    }

    #[test]
    fn distortionless_and_equivalent() {
        let (sc, r) = scene();
        let w = mvdr_weights(&sc, &r).unwrap();
        let g = w.w.dotc(&sc.target.apply(&r));
        assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        let a = output_sinr_with_weights(&sc, &r, &w).unwrap();
        let b = output_sinr(&sc, &r).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        let scaled = ReceiveWeights { w: w.w.scale(-3.5) };
        assert!((output_sinr_with_weights(&sc, &r, &scaled).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn matched_filter_without_interference() {
        let sc = Scene::new(&Scenario::table12().without_interference()).unwrap();
        let r = sc.reference.s_t();
        let x = sc.target.apply(&r);
        let k = x.norm_squared();
        let w = ReceiveWeights { w: x.unscale(k) };
        let got = output_sinr_with_weights(&sc, &r, &w).unwrap();
        assert!((got - to_db(100.0 * k)).abs() < 1e-10);
        assert!((output_sinr(&sc, &r).unwrap() - interference_free_bound(&sc, &r)).abs() < 1e-10);
    }

    #[test]
    fn zero_waveform_is_degenerate() {
        let (sc, _) = scene();
        let z = CVector::zeros(120);
        assert!(matches!(mvdr_weights(&sc, &z), Err(Error::DegenerateTarget)));
        assert!(matches!(
            output_sinr_with_weights(&sc, &sc.reference.s_t(), &ReceiveWeights { w: CVector::zeros(1080) }),
            Err(Error::ZeroWeights)
        ));
    }

    #[test]
    fn psi_matches_quadratic_form() {
        let (sc, r) = scene();
        let psi = psi_matrix(&sc, &r, CovarianceSolver::Woodbury).unwrap();
        let q = sc.snr * r.dotc(&(&psi * &r)).re;
        assert!((to_db(q) - output_sinr(&sc, &r).unwrap()).abs() < 1e-9);
        let cov = interference_covariance(&sc, &r, CovarianceSolver::Woodbury).unwrap();
        assert!((psi_apply(&sc.target, &cov, &r) - &psi * &r).norm() < 1e-9);
    }
}
