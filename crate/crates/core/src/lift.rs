//! Complex-to-real lifting.
//!
//! A complex vector `x` maps to `[Re x; Im x]` and a complex matrix `M` to
//! `[[Re M, -Im M], [Im M, Re M]]`, so that `(M x)_r = M_r x_r`,
//! `Re(yᴴx) = y_rᵀ x_r` and, for Hermitian `M`, `xᴴMx = x_rᵀ M_r x_r`.

use num_complex::Complex64;

use crate::linalg::{CMatrix, CVector, RMatrix, RVector};

pub fn lift_vector(x: &CVector) -> RVector {
    let n = x.len();
    RVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

pub fn unlift_vector(x: &RVector) -> CVector {
    assert!(x.len() % 2 == 0, "lifted vector has odd length");
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(x[i], x[i + n]))
}

pub fn lift_matrix(m: &CMatrix) -> RMatrix {
    let (r, c) = m.shape();
    RMatrix::from_fn(2 * r, 2 * c, |i, k| {
        let z = m[(i % r, k % c)];
        match (i < r, k < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn unlift_matrix(m: &RMatrix) -> CMatrix {
    let (r, c) = (m.nrows() / 2, m.ncols() / 2);
    CMatrix::from_fn(r, c, |i, k| Complex64::new(m[(i, k)], m[(i + r, k)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, k| Complex64::new((seed + i as f64 * 1.3 + k as f64).sin(), (seed * 0.7 + k as f64 * 2.1 - i as f64).cos()))
    }

    #[test]
    fn round_trips() {
        let m = sample(4, 0.3);
        assert_eq!(unlift_matrix(&lift_matrix(&m)), m);
        let x = m.column(1).into_owned();
        assert_eq!(unlift_vector(&lift_vector(&x)), x);
    }

    #[test]
    fn products_and_forms() {
        let a = sample(5, 1.1);
        let h = &a + a.adjoint();
        let x = sample(5, 2.0).column(0).into_owned();
        let y = sample(5, 3.0).column(2).into_owned();
        assert!((lift_vector(&(&a * &x)) - lift_matrix(&a) * lift_vector(&x)).norm() < 1e-12);
        assert!((y.dotc(&x).re - lift_vector(&y).dot(&lift_vector(&x))).abs() < 1e-12);
        let q = x.dotc(&(&h * &x)).re;
        let qr = lift_vector(&x).dot(&(lift_matrix(&h) * lift_vector(&x)));
        assert!((q - qr).abs() < 1e-12);
        assert!((lift_matrix(&a).transpose() - lift_matrix(&a.adjoint())).norm() < 1e-15);
    }
}
