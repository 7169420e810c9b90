//! Energy, similarity and bandwidth constraints on `s_T`, plus the Euclidean
//! projections used by the MM-ADMM auxiliary updates.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DVector};
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, CMatrix, CVector, J};

/// In-band energy Gram matrix for a cutoff `f_lp` normalized to the sampling
/// rate: `x_pᴴ H x_q` integrates `|X(ν)|²` over `ν ∈ [0, f_lp]`.
pub fn band_matrix(f_lp: f64, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |p, q| {
        if p == q {
            Complex64::new(f_lp, 0.0)
        } else {
            let k = p as f64 - q as f64;
            ((J * (2.0 * PI * f_lp * k)).exp() - 1.0) / (J * (2.0 * PI * k))
        }
    })
}

/// Constraint data for one problem instance.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub epsilon: f64,
    /// Reference waveform in `s_T` order.
    pub s_ref: CVector,
    pub n_tx: usize,
    pub n_samples: usize,
    /// `H_m`, one per antenna.
    pub band: Vec<CMatrix>,
    /// `H̄_m` with `H̄_mᴴ H̄_m = H_m`.
    pub band_roots: Vec<CMatrix>,
    /// `γ_m`
    pub gamma: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(cfg: &SystemConfig, s_ref: CVector, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::OutOfRange {
                what: "similarity radius",
                value: epsilon,
            });
        }
        if s_ref.len() != cfg.waveform_len() {
            return Err(Error::Dimension {
                context: "reference waveform",
                expected: cfg.waveform_len(),
                actual: s_ref.len(),
            });
        }
        let band: Vec<CMatrix> = (0..cfg.n_tx)
            .map(|m| band_matrix(cfg.normalized_cutoff(m), cfg.n_samples))
            .collect();
        let band_roots = band.iter().map(|h| hermitian_sqrt(h, 1e-12)).collect();
        Ok(ConstraintSet {
            epsilon,
            s_ref,
            n_tx: cfg.n_tx,
            n_samples: cfg.n_samples,
            band,
            band_roots,
            gamma: cfg.band_tolerance.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.n_tx * self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ_m x`: the samples of antenna `m`.
    pub fn block(&self, x: &CVector, m: usize) -> CVector {
        x.rows(m * self.n_samples, self.n_samples).into_owned()
    }

    /// Dense `Σ_m` as an `N_T L` square 0/1 matrix.
    pub fn sigma_selector(&self, m: usize) -> CMatrix {
        let n = self.len();
        CMatrix::from_fn(n, n, |i, k| {
            if i == k && i / self.n_samples == m {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Dense `B_m`: `H_m` embedded at block `m`.
    pub fn band_embedding(&self, m: usize) -> CMatrix {
        let n = self.len();
        let l = self.n_samples;
        let mut b = CMatrix::zeros(n, n);
        b.view_mut((m * l, m * l), (l, l)).copy_from(&self.band[m]);
        b
    }

    /// `s_Tᴴ Σ_m s_T`
    pub fn antenna_energy(&self, x: &CVector, m: usize) -> f64 {
        x.rows(m * self.n_samples, self.n_samples).norm_squared()
    }

    /// `s_Tᴴ B_m s_T`
    pub fn in_band_energy(&self, x: &CVector, m: usize) -> f64 {
        let b = self.block(x, m);
        b.dotc(&(&self.band[m] * &b)).re
    }

    pub fn feasibility_report(&self, s_t: &CVector) -> FeasibilityReport {
        let n = self.n_tx as f64;
        let eps2 = self.epsilon * self.epsilon;
        let dev = (s_t - &self.s_ref).iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        FeasibilityReport {
            similarity: dev - eps2,
            similarity_per_sample: (s_t - &self.s_ref).iter().map(|z| z.norm_sqr() - eps2).collect(),
            energy: (0..self.n_tx).map(|m| (self.antenna_energy(s_t, m) - 1.0 / n).abs()).collect(),
            bandwidth: (0..self.n_tx)
                .map(|m| self.gamma[m] / n - self.in_band_energy(s_t, m))
                .collect(),
        }
    }
}

/// Constraint residuals; positive entries are violations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `max_j |(s_T - s_Ref)_j|² - ε²`
    pub similarity: f64,
    pub similarity_per_sample: Vec<f64>,
    /// `|s_Tᴴ Σ_m s_T - 1/N_T|`
    pub energy: Vec<f64>,
    /// `γ_m/N_T - s_Tᴴ B_m s_T`
    pub bandwidth: Vec<f64>,
}

impl FeasibilityReport {
    pub fn max_energy(&self) -> f64 {
        self.energy.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_bandwidth(&self) -> f64 {
        self.bandwidth.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn similarity_ok(&self, tol: f64) -> bool {
        self.similarity <= tol
    }

    pub fn energy_ok(&self, tol: f64) -> bool {
        self.max_energy() <= tol
    }

    pub fn bandwidth_ok(&self, tol: f64) -> bool {
        self.max_bandwidth() <= tol
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.similarity_ok(tol) && self.energy_ok(tol) && self.bandwidth_ok(tol)
    }
}

/// Nearest point of the ball `‖x‖ ≤ ε`.
pub fn project_similarity_ball<T: ComplexField<RealField = f64>>(h: &DVector<T>, eps: f64) -> DVector<T> {
    let n = h.norm();
    if n <= eps {
        h.clone()
    } else {
        h.scale(eps / n)
    }
}

/// Nearest point of the sphere `‖x‖² = 1/N_T`.
pub fn project_energy_sphere<T: ComplexField<RealField = f64>>(u: &DVector<T>, n_tx: usize) -> Result<DVector<T>> {
    let n = u.norm();
    if n == 0.0 {
        return Err(Error::ZeroProjection);
    }
    Ok(u.scale(1.0 / (n * (n_tx as f64).sqrt())))
}

/// Nearest point of `{‖x‖² ≥ γ/N_T}`. The origin maps to `√(γ/N_T) e₁`.
pub fn project_band_exterior<T: ComplexField<RealField = f64>>(v: &DVector<T>, gamma: f64, n_tx: usize) -> DVector<T> {
    let radius = (gamma / n_tx as f64).sqrt();
    let n = v.norm();
    if n * n >= gamma / n_tx as f64 {
        v.clone()
    } else if n == 0.0 {
        let mut e = DVector::<T>::zeros(v.len());
        if !e.is_empty() {
            e[0] = T::from_real(radius);
        }
        e
    } else {
        v.scale(radius / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;
    use crate::linalg::min_eigenvalue;
    use crate::signal_model::reference_olfm;

    #[test]
    fn band_full_is_identity() {
        let h = band_matrix(1.0, 7);
        assert!((h - CMatrix::identity(7, 7)).norm() < 1e-15);
    }

    #[test]
    fn band_half_offdiag() {
        let h = band_matrix(0.5, 4);
        let expect = Complex64::new(0.0, 1.0 / PI);
        assert!((h[(1, 0)] - expect).norm() < 1e-15);
    }

    #[test]
    fn band_hermitian_and_monotone() {
        for &f in &[0.1, 0.37, 0.9] {
            let h = band_matrix(f, 20);
            assert!((h.adjoint() - &h).norm() < 1e-14);
            assert!(min_eigenvalue(&h) > -1e-12);
        }
        let d = band_matrix(0.9, 20) - band_matrix(0.6, 20);
        assert!(min_eigenvalue(&d) >= -1e-10);
    }

    #[test]
    fn roots_reconstruct() {
        let sc = Scenario::table12();
        let r = reference_olfm(&sc.system, 900e3).s_t();
        let cs = ConstraintSet::new(&sc.system, r, 1.0).unwrap();
        for (h, hb) in cs.band.iter().zip(&cs.band_roots) {
            assert!((hb.adjoint() * hb - h).norm() < 1e-10);
        }
        let mut total = CMatrix::zeros(120, 120);
        for m in 0..6 {
            let s = cs.sigma_selector(m);
            assert_eq!(&s * &s, s);
            total += s;
        }
        assert_eq!(total, CMatrix::identity(120, 120));
    }

    #[test]
    fn report_examples() {
        let sc = Scenario::table12();
        let r = reference_olfm(&sc.system, 900e3).s_t();
        let cs = ConstraintSet::new(&sc.system, r.clone(), 0.1).unwrap();
        let rep = cs.feasibility_report(&r);
        assert!(rep.similarity <= 0.0);
        assert!(rep.energy_ok(1e-14));
        let rep2 = cs.feasibility_report(&r.scale(2.0));
        for e in rep2.energy {
            assert!((e - 3.0 / 6.0).abs() < 1e-13);
        }
        let mut bumped = r.clone();
        bumped[0] += Complex64::new(0.1 + 1e-3, 0.0);
        let rep3 = cs.feasibility_report(&bumped);
        assert!(rep3.similarity_per_sample[0] > 0.0);
        assert!(rep3.similarity_per_sample[1..].iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn projection_examples() {
        let h = DVector::from_vec(vec![0.25, 0.0]);
        assert_eq!(project_similarity_ball(&h, 1.0), h);
        let h = DVector::from_vec(vec![2.0, 0.0]);
        assert_eq!(project_similarity_ball(&h, 1.0), DVector::from_vec(vec![1.0, 0.0]));
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let p = project_energy_sphere(&u, 4).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!(project_energy_sphere(&DVector::<f64>::zeros(3), 4).is_err());
        let v: DVector<f64> = DVector::from_vec(vec![0.1, 0.0]);
        let p = project_band_exterior(&v, 0.91, 6);
        assert!((p.norm_squared() - 0.91 / 6.0).abs() < 1e-15);
        let z = project_band_exterior(&DVector::<f64>::zeros(2), 0.91, 6);
        assert!((z[0] - (0.91f64 / 6.0).sqrt()).abs() < 1e-15);
    }
}
