//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;
pub type RVector = DVector<f64>;
pub type RMatrix = DMatrix<f64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e^{jθ}`
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Hermitian part `(M + Mᴴ)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry of `|M - Mᴴ|` divided by the largest entry of `|M|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let d = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    d / scale
}

/// Hermitian square root of a PSD matrix, clipping eigenvalues below `floor`
/// to zero. The result `R` satisfies `R R = R^H R ≈ M`.
pub fn hermitian_sqrt(m: &CMatrix, floor: f64) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let r = if lam > floor { lam.sqrt() } else { 0.0 };
        scaled.column_mut(k).scale_mut(r);
    }
    scaled * v.adjoint()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetrize and clip eigenvalues below `floor` up to `floor`.
pub fn psd_repair(m: &RMatrix, floor: f64) -> RMatrix {
    let sym = (m + m.transpose()).scale(0.5);
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return sym;
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(k).scale_mut(lam.max(floor));
    }
    scaled * v.transpose()
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `‖a - b‖₂ / max(‖b‖₂, tiny)`
pub fn rel_err(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
