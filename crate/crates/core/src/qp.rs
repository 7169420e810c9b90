//! Dense convex QP with affine inequalities.
//!
//! Minimizes `½ xᴴQx + Re(qᴴx)` subject to `Re(a_iᴴx) ≤ b_i`. Complex problems
//! are lifted to real form (`x_r = [Re x; Im x]`) and solved by the
//! Goldfarb–Idnani dual active-set method, which starts from the unconstrained
//! minimizer and adds violated constraints one at a time while keeping dual
//! feasibility. An inconsistent constraint set is detected when a violated
//! constraint cannot be added, which yields a Farkas certificate.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::lift::{lift_matrix, lift_vector, unlift_vector};
use crate::linalg::{psd_repair, CMatrix, CVector, RMatrix, RVector};

/// `Re(aᴴx) ≤ b`
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub a: CVector,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub q_matrix: CMatrix,
    pub q_linear: CVector,
    pub ineq: Vec<Inequality>,
}

/// Real QP: minimize `½ xᵀGx + cᵀx` subject to `a_iᵀx ≤ b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealQp {
    pub g: RMatrix,
    pub c: RVector,
    pub a: Vec<RVector>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { tol: 1e-10, max_iter: 1000 }
    }
}

/// Largest violations of the KKT conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResidual {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
    /// Most negative multiplier, as a positive number (zero when all are ≥ 0).
    pub dual: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity).max(self.dual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealQpSolution {
    pub x: RVector,
    /// One multiplier per input constraint (zero when inactive).
    pub multipliers: Vec<f64>,
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub kkt: KktResidual,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: CVector,
    pub multipliers: Vec<f64>,
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub kkt: KktResidual,
    pub iterations: usize,
    pub converged: bool,
}

impl QpProblem {
    pub fn to_real(&self) -> RealQp {
        RealQp {
            g: lift_matrix(&self.q_matrix),
            c: lift_vector(&self.q_linear),
            a: self.ineq.iter().map(|c| lift_vector(&c.a)).collect(),
            b: self.ineq.iter().map(|c| c.b).collect(),
        }
    }

    pub fn objective(&self, x: &CVector) -> f64 {
        0.5 * x.dotc(&(&self.q_matrix * x)).re + self.q_linear.dotc(x).re
    }
}

impl RealQp {
    pub fn objective(&self, x: &RVector) -> f64 {
        0.5 * x.dot(&(&self.g * x)) + self.c.dot(x)
    }

    pub fn kkt(&self, x: &RVector, lambda: &[f64]) -> KktResidual {
        let mut grad = &self.g * x + &self.c;
        let mut primal = 0.0f64;
        let mut comp = 0.0f64;
        let mut dual = 0.0f64;
        for ((a, &b), &l) in self.a.iter().zip(&self.b).zip(lambda) {
            grad.axpy(l, a, 1.0);
            let s = a.dot(x) - b;
            primal = primal.max(s);
            comp = comp.max((l * s).abs());
            dual = dual.max(-l);
        }
        KktResidual {
            stationarity: grad.amax(),
            primal,
            complementarity: comp,
            dual,
        }
    }
}

/// Solve a complex QP through its real lift.
pub fn solve_qp(p: &QpProblem, opts: QpOptions) -> Result<QpSolution> {
    let n = p.q_matrix.nrows();
    if p.q_linear.len() != n {
        return Err(Error::Dimension {
            context: "QP linear term",
            expected: n,
            actual: p.q_linear.len(),
        });
    }
    for c in &p.ineq {
        if c.a.len() != n {
            return Err(Error::Dimension {
                context: "QP constraint row",
                expected: n,
                actual: c.a.len(),
            });
        }
    }
    let sol = solve_real_qp(&p.to_real(), opts)?;
    Ok(QpSolution {
        x: unlift_vector(&sol.x),
        multipliers: sol.multipliers,
        active_set: sol.active_set,
        objective: sol.objective,
        kkt: sol.kkt,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Goldfarb–Idnani dual active-set method.
pub fn solve_real_qp(p: &RealQp, opts: QpOptions) -> Result<RealQpSolution> {
    let g = psd_repair(&p.g, 1e-12);
    let chol = Cholesky::new(g).ok_or(Error::NotPositiveDefinite("QP Hessian"))?;

    // Normalize rows; zero rows are either vacuous or contradictory.
    let mut rows: Vec<(usize, RVector, f64, f64)> = Vec::new();
    for (i, (a, &b)) in p.a.iter().zip(&p.b).enumerate() {
        let na = a.norm();
        if na <= 1e-14 {
            if b < -opts.tol {
                return Err(Error::Infeasible {
                    farkas_residual: na,
                    certificate_gap: -b,
                });
            }
            continue;
        }
        // Stored in ≥ form: nᵀx ≥ β with n = -a/‖a‖, β = -b/‖a‖.
        rows.push((i, -a / na, -b / na, na));
    }

    let mut x = -chol.solve(&p.c);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;

    'outer: while iterations < opts.max_iter {
        // Most violated constraint.
        let mut pick = None;
        let mut worst = -opts.tol;
        for (k, (_, nk, beta, _)) in rows.iter().enumerate() {
            if active.contains(&k) {
                continue;
            }
            let s = nk.dot(&x) - beta;
            if s < worst {
                worst = s;
                pick = Some(k);
            }
        }
        let Some(pk) = pick else {
            converged = true;
            break;
        };
        let np = rows[pk].1.clone();
        let mut u_new = 0.0;

        loop {
            iterations += 1;
            if iterations > opts.max_iter {
                break 'outer;
            }
            let w = chol.solve(&np);
            let q = active.len();
            let (z, r) = if q == 0 {
                (w.clone(), RVector::zeros(0))
            } else {
                let nmat = RMatrix::from_columns(&active.iter().map(|&k| rows[k].1.clone()).collect::<Vec<_>>());
                let ginv_n = chol.solve(&nmat);
                let m = nmat.transpose() * &ginv_n;
                let rhs = nmat.transpose() * &w;
                let r = solve_small_spd(&m, &rhs);
                let z = &w - &ginv_n * &r;
                (z, r)
            };

            // Partial step: first active multiplier to hit zero.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-14 {
                    let t = u[j] / rj;
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            let zn = z.dot(&np);
            let step_free = z.norm() <= 1e-12 * w.norm().max(1e-300) || zn <= 1e-300;
            let t2 = if step_free {
                f64::INFINITY
            } else {
                -(np.dot(&x) - rows[pk].2) / zn
            };
            let t = t1.min(t2);

            if !t.is_finite() {
                // nᵀ_p is a nonpositive combination of active rows.
                let mut comb = np.clone();
                let mut gap = rows[pk].2;
                for (j, &k) in active.iter().enumerate() {
                    comb.axpy(-r[j], &rows[k].1, 1.0);
                    gap -= r[j] * rows[k].2;
                }
                return Err(Error::Infeasible {
                    farkas_residual: comb.norm(),
                    certificate_gap: gap,
                });
            }

            if !step_free {
                x.axpy(t, &z, 1.0);
            }
            for (j, uj) in u.iter_mut().enumerate() {
                *uj -= t * r[j];
            }
            u_new += t;

            if t == t2 {
                active.push(pk);
                u.push(u_new);
                continue 'outer;
            }
            let j = drop.expect("partial step implies a blocking constraint");
            active.remove(j);
            u.remove(j);
        }
    }

    let mut multipliers = vec![0.0; p.a.len()];
    for (j, &k) in active.iter().enumerate() {
        let (orig, _, _, scale) = rows[k];
        multipliers[orig] = u[j] / scale;
    }
    let mut active_set: Vec<usize> = active.iter().map(|&k| rows[k].0).collect();
    active_set.sort_unstable();
    let kkt = p.kkt(&x, &multipliers);
    let objective = p.objective(&x);
    Ok(RealQpSolution {
        x,
        multipliers,
        active_set,
        objective,
        kkt,
        iterations,
        converged,
    })
}

fn solve_small_spd(m: &RMatrix, rhs: &RVector) -> RVector {
    match Cholesky::<f64, Dyn>::new(m.clone()) {
        Some(ch) => ch.solve(rhs),
        None => m.clone().lu().solve(rhs).unwrap_or_else(|| RVector::zeros(rhs.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn real(g: RMatrix, c: RVector, a: Vec<RVector>, b: Vec<f64>) -> RealQp {
        RealQp { g, c, a, b }
    }

    #[test]
    fn unconstrained_least_squares() {
        let x0 = CVector::from_vec(vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)]);
        let p = QpProblem {
            q_matrix: CMatrix::identity(2, 2),
            q_linear: x0.scale(-2.0),
            ineq: vec![],
        };
        let s = solve_qp(&p, QpOptions::default()).unwrap();
        // ½‖x‖² - 2Re(x0ᴴx) is minimized at 2·x0.
        assert!((s.x - x0.scale(2.0)).norm() < 1e-12);
    }

    #[test]
    fn single_active_constraint() {
        let mut a = CVector::zeros(3);
        a[0] = Complex64::new(1.0, 0.0);
        let p = QpProblem {
            q_matrix: CMatrix::identity(3, 3),
            q_linear: CVector::zeros(3),
            ineq: vec![Inequality { a, b: -1.0 }],
        };
        let s = solve_qp(&p, QpOptions::default()).unwrap();
        let mut e = CVector::zeros(3);
        e[0] = Complex64::new(-1.0, 0.0);
        assert!((s.x - e).norm() < 1e-12);
        assert_eq!(s.active_set, vec![0]);
        assert!((s.multipliers[0] - 1.0).abs() < 1e-12);
        assert!(s.kkt.max() < 1e-10);
    }

    #[test]
    fn detects_infeasibility() {
        let e = RVector::from_vec(vec![1.0, 0.0]);
        let p = real(RMatrix::identity(2, 2), RVector::zeros(2), vec![e.clone(), -e], vec![-1.0, -1.0]);
        match solve_real_qp(&p, QpOptions::default()) {
            Err(Error::Infeasible { farkas_residual, certificate_gap }) => {
                assert!(farkas_residual < 1e-12);
                assert!(certificate_gap > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_rows() {
        let z = RVector::zeros(2);
        let p = real(RMatrix::identity(2, 2), RVector::zeros(2), vec![z.clone()], vec![1.0]);
        assert!(solve_real_qp(&p, QpOptions::default()).unwrap().converged);
        let p = real(RMatrix::identity(2, 2), RVector::zeros(2), vec![z], vec![-1.0]);
        assert!(matches!(solve_real_qp(&p, QpOptions::default()), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn degenerate_duplicate_rows() {
        let e = RVector::from_vec(vec![1.0, 1.0]);
        let p = real(
            RMatrix::identity(2, 2),
            RVector::from_vec(vec![-3.0, -3.0]),
            vec![e.clone(), e.scale(2.0), e],
            vec![1.0, 2.0, 1.0],
        );
        let s = solve_real_qp(&p, QpOptions::default()).unwrap();
        assert!((s.x - RVector::from_vec(vec![0.5, 0.5])).norm() < 1e-10);
        assert!(s.kkt.max() < 1e-9);
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let n = 4;
        let a: Vec<RVector> = (0..n).map(|i| -RVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
        let p = real(RMatrix::identity(n, n), RVector::zeros(n), a, vec![-1.0; n]);
        let s = solve_real_qp(&p, QpOptions { tol: 1e-12, max_iter: 2 }).unwrap();
        assert!(!s.converged);
        let s = solve_real_qp(&p, QpOptions::default()).unwrap();
        assert!(s.converged);
        assert!((s.x - RVector::from_element(n, 1.0)).norm() < 1e-12);
    }
}
