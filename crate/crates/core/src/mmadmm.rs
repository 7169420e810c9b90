//! MM-ADMM: majorize `-s_Tᴴ Ψ(s_T) s_T` at the current iterate, then take one
//! ADMM pass on the real-lifted problem with auxiliary variables for the
//! similarity, energy and bandwidth constraints.
//!
//! The majorizer follows from joint convexity of `(x, Z) ↦ xᴴZ⁻¹x`. With
//! `ỹ = Z̃⁻¹Λs̃`,
//!
//! ```text
//! M(s; s̃) = sᴴPs - 2Re(zᴴs) + ‖ỹ‖²,   z = Λᴴỹ,   P = Σ_i INR_i (Λ_iᴴỹ)(Λ_iᴴỹ)ᴴ
//! ```
//!
//! which equals `-s̃ᴴΨ(s̃)s̃` at `s = s̃`, shares its gradient there and lies
//! above `-sᴴΨ(s)s` everywhere.

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;

use crate::constraints::{project_band_exterior, project_energy_sphere, project_similarity_ball, ConstraintSet};
use crate::error::{Error, Result};
use crate::lift::{lift_matrix, lift_vector, unlift_vector};
use crate::linalg::{CMatrix, CVector, RMatrix, RVector};
use crate::mvdr::{interference_covariance, CovarianceSolver};
use crate::signal_model::Scene;
use crate::solver::{finish, pinned, record, SolverOutput, StopCriteria, TraceClock};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
}

impl Penalties {
    pub fn uniform(rho: f64) -> Self {
        Penalties { rho1: rho, rho2: rho, rho3: rho }
    }
}

/// The linear part of the surrogate grows like `2‖Ψ‖ ≈ 2N_R`; penalties much
/// below that let the iterates run away.
impl Default for Penalties {
    fn default() -> Self {
        Penalties::uniform(20.0)
    }
}

/// Majorizer of `-sᴴΨ(s)s` expanded at a fixed point.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub z: CVector,
    /// `√INR_i · Λ_iᴴ ỹ`, so that `P = Σ c_i c_iᴴ`.
    pub factors: Vec<CVector>,
    /// `‖ỹ‖²`
    pub constant: f64,
}

impl Surrogate {
    pub fn at(scene: &Scene, s_tilde: &CVector) -> Result<Self> {
        let cov = interference_covariance(scene, s_tilde, CovarianceSolver::Woodbury)?;
        let y = cov.solve(&scene.target.apply(s_tilde));
        let z = scene.target.apply_adjoint(&y);
        let factors = scene
            .interferers
            .iter()
            .zip(&scene.inr)
            .map(|(op, &p)| op.apply_adjoint(&y).scale(p.sqrt()))
            .collect();
        Ok(Surrogate {
            z,
            factors,
            constant: y.norm_squared(),
        })
    }

    /// Dense `P`.
    pub fn p_matrix(&self) -> CMatrix {
        let n = self.z.len();
        let mut p = CMatrix::zeros(n, n);
        for c in &self.factors {
            p.ger(Complex64::new(1.0, 0.0), c, &c.map(|x| x.conj()), Complex64::new(1.0, 0.0));
        }
        p
    }

    /// `M(s; s̃)`
    pub fn value(&self, s: &CVector) -> f64 {
        let quad: f64 = self.factors.iter().map(|c| c.dotc(s).norm_sqr()).sum();
        quad - 2.0 * self.z.dotc(s).re + self.constant
    }
}

/// `-s_Tᴴ Ψ(s_T) s_T`
pub fn true_objective(scene: &Scene, s_t: &CVector) -> Result<f64> {
    let cov = interference_covariance(scene, s_t, CovarianceSolver::Woodbury)?;
    let x = scene.target.apply(s_t);
    Ok(-x.dotc(&cov.solve(&x)).re)
}

/// Lifted iterate, auxiliaries and scaled duals.
#[derive(Debug, Clone)]
pub struct MmAdmmState {
    /// `[Re s_T; Im s_T]`
    pub s: RVector,
    /// Similarity auxiliaries, stored lifted: pair `j` is `(h[j], h[j + N_T L])`.
    pub h: RVector,
    pub p: RVector,
    /// Energy auxiliaries, one lifted `2L` vector per antenna.
    pub u: Vec<RVector>,
    pub q: Vec<RVector>,
    /// Bandwidth auxiliaries `≈ H̄_m Σ_m s`.
    pub v: Vec<RVector>,
    pub d: Vec<RVector>,
    pub rho: Penalties,
    pub iteration: usize,
}

/// Lifted constraint operators that stay fixed across iterations.
#[derive(Debug, Clone)]
pub struct LiftedConstraints {
    n: usize,
    l: usize,
    s_ref: RVector,
    /// `lift(H̄_m)`
    roots: Vec<RMatrix>,
    /// `lift(H̄_mᴴ H̄_m)`
    grams: Vec<RMatrix>,
}

impl LiftedConstraints {
    pub fn new(cs: &ConstraintSet) -> Self {
        LiftedConstraints {
            n: cs.len(),
            l: cs.n_samples,
            s_ref: lift_vector(&cs.s_ref),
            roots: cs.band_roots.iter().map(lift_matrix).collect(),
            grams: cs.band_roots.iter().map(|r| lift_matrix(&(r.adjoint() * r))).collect(),
        }
    }

    /// `Σ_m x` in lifted coordinates.
    pub fn block(&self, x: &RVector, m: usize) -> RVector {
        let (n, l) = (self.n, self.l);
        RVector::from_fn(2 * l, |i, _| if i < l { x[m * l + i] } else { x[n + m * l + i - l] })
    }

    /// `x += Σ_mᵀ y`
    fn scatter_add(&self, x: &mut RVector, m: usize, y: &RVector, alpha: f64) {
        let (n, l) = (self.n, self.l);
        for i in 0..l {
            x[m * l + i] += alpha * y[i];
            x[n + m * l + i] += alpha * y[l + i];
        }
    }

    /// `B̄_m s = lift(H̄_m) Σ_m s`
    pub fn band_apply(&self, x: &RVector, m: usize) -> RVector {
        &self.roots[m] * self.block(x, m)
    }
}

impl MmAdmmState {
    /// `s⁰ = s_Ref`, every auxiliary and dual zero.
    pub fn init(cs: &ConstraintSet, rho: Penalties) -> Self {
        let n = cs.len();
        let l = cs.n_samples;
        MmAdmmState {
            s: lift_vector(&cs.s_ref),
            h: RVector::zeros(2 * n),
            p: RVector::zeros(2 * n),
            u: vec![RVector::zeros(2 * l); cs.n_tx],
            q: vec![RVector::zeros(2 * l); cs.n_tx],
            v: vec![RVector::zeros(2 * l); cs.n_tx],
            d: vec![RVector::zeros(2 * l); cs.n_tx],
            rho,
            iteration: 0,
        }
    }

    pub fn s_t(&self) -> CVector {
        unlift_vector(&self.s)
    }
}

/// Coefficient matrix of the s-update.
pub fn s_update_matrix(sur: &Surrogate, lc: &LiftedConstraints, rho: Penalties) -> RMatrix {
    let n = lc.n;
    let l = lc.l;
    let pr = lift_matrix(&sur.p_matrix());
    let mut a = &pr + pr.transpose();
    for i in 0..2 * n {
        a[(i, i)] += rho.rho1 + rho.rho2;
    }
    for (m, g) in lc.grams.iter().enumerate() {
        for i in 0..2 * l {
            let gi = if i < l { m * l + i } else { n + m * l + i - l };
            for k in 0..2 * l {
                let gk = if k < l { m * l + k } else { n + m * l + k - l };
                a[(gi, gk)] += rho.rho3 * g[(i, k)];
            }
        }
    }
    a
}

/// Right-hand side of the s-update.
pub fn s_update_rhs(sur: &Surrogate, lc: &LiftedConstraints, st: &MmAdmmState) -> RVector {
    let rho = st.rho;
    let mut b = lift_vector(&sur.z).scale(2.0);
    b.axpy(rho.rho1, &(&lc.s_ref + &st.h - &st.p), 1.0);
    for m in 0..st.u.len() {
        lc.scatter_add(&mut b, m, &(&st.u[m] - &st.q[m]), rho.rho2);
        let back = lc.roots[m].transpose() * (&st.v[m] - &st.d[m]);
        lc.scatter_add(&mut b, m, &back, rho.rho3);
    }
    b
}

/// Minimize the surrogate plus penalty terms over `s`.
pub fn mm_s_update(sur: &Surrogate, lc: &LiftedConstraints, st: &MmAdmmState) -> Result<RVector> {
    let a = s_update_matrix(sur, lc, st.rho);
    let b = s_update_rhs(sur, lc, st);
    let ch = Cholesky::new(a).ok_or(Error::NotPositiveDefinite("MM-ADMM s-update system"))?;
    Ok(ch.solve(&b))
}

/// Projected auxiliary updates.
pub fn mm_aux_update(st: &mut MmAdmmState, lc: &LiftedConstraints, cs: &ConstraintSet) -> Result<()> {
    let n = lc.n;
    for j in 0..n {
        let a = RVector::from_vec(vec![
            st.s[j] - lc.s_ref[j] + st.p[j],
            st.s[n + j] - lc.s_ref[n + j] + st.p[n + j],
        ]);
        let h = project_similarity_ball(&a, cs.epsilon);
        st.h[j] = h[0];
        st.h[n + j] = h[1];
    }
    for m in 0..cs.n_tx {
        let a = lc.block(&st.s, m) + &st.q[m];
        st.u[m] = match project_energy_sphere(&a, cs.n_tx) {
            Ok(u) => u,
            // Leave the previous auxiliary in place when the argument vanishes.
            Err(Error::ZeroProjection) => st.u[m].clone(),
            Err(e) => return Err(e),
        };
        let b = lc.band_apply(&st.s, m) + &st.d[m];
        st.v[m] = project_band_exterior(&b, cs.gamma[m], cs.n_tx);
    }
    Ok(())
}

/// Norm of the stacked constraint residuals at the current state.
pub fn primal_residual(st: &MmAdmmState, lc: &LiftedConstraints) -> f64 {
    let mut total = (&st.s - &lc.s_ref - &st.h).norm_squared();
    for m in 0..st.u.len() {
        total += (lc.block(&st.s, m) - &st.u[m]).norm_squared();
        total += (lc.band_apply(&st.s, m) - &st.v[m]).norm_squared();
    }
    total.sqrt()
}

/// Scaled dual ascent. Returns the norm of the residual it added.
pub fn mm_dual_update(st: &mut MmAdmmState, lc: &LiftedConstraints) -> f64 {
    let r1 = &st.s - &lc.s_ref - &st.h;
    st.p += &r1;
    let mut total = r1.norm_squared();
    for m in 0..st.u.len() {
        let r2 = lc.block(&st.s, m) - &st.u[m];
        let r3 = lc.band_apply(&st.s, m) - &st.v[m];
        st.q[m] += &r2;
        st.d[m] += &r3;
        total += r2.norm_squared() + r3.norm_squared();
    }
    total.sqrt()
}

/// One outer iteration: rebuild the surrogate at the current point, then one
/// s / auxiliary / dual pass.
pub fn mmadmm_step(st: &mut MmAdmmState, scene: &Scene, lc: &LiftedConstraints, cs: &ConstraintSet) -> Result<(Surrogate, f64)> {
    let sur = Surrogate::at(scene, &st.s_t())?;
    st.s = mm_s_update(&sur, lc, st)?;
    mm_aux_update(st, lc, cs)?;
    let res = mm_dual_update(st, lc);
    st.iteration += 1;
    Ok((sur, res))
}

pub fn mmadmm_run(scene: &Scene, cs: &ConstraintSet, rho: Penalties, stop: StopCriteria) -> Result<SolverOutput> {
    if cs.epsilon == 0.0 {
        return pinned(scene, cs);
    }
    let lc = LiftedConstraints::new(cs);
    let mut st = MmAdmmState::init(cs, rho);
    let clock = TraceClock::start();
    let mut trace = vec![record(scene, cs, &st.s_t(), 0, primal_residual(&st, &lc), &clock)?];
    let mut converged = false;
    let mut flagged = 0;
    let mut last_good = st.s_t();
    while st.iteration < stop.max_iter {
        let res = match mmadmm_step(&mut st, scene, &lc, cs) {
            Ok((_, res)) => res,
            Err(Error::NotPositiveDefinite(what)) => {
                log::warn!("MM-ADMM stopped at iteration {}: {what} lost definiteness", st.iteration);
                flagged += 1;
                break;
            }
            Err(e) => return Err(e),
        };
        let s = st.s_t();
        if !(res.is_finite() && s.iter().all(|z| z.re.is_finite() && z.im.is_finite())) {
            log::warn!("MM-ADMM iterate diverged at iteration {}", st.iteration);
            flagged += 1;
            break;
        }
        trace.push(record(scene, cs, &s, st.iteration, res, &clock)?);
        last_good = s;
        if stop.satisfied(&trace) {
            converged = true;
            break;
        }
    }
    log::debug!("MM-ADMM finished after {} iterations (converged: {converged})", st.iteration);
    finish(scene, cs, &last_good, trace, converged, flagged)
}
