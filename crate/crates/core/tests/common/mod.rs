//! Checks shared by the property tests and the acceptance report.
#![allow(dead_code)]

use fda_waveopt::linalg::{CMatrix, CVector, RMatrix, RVector};
use fda_waveopt::qp::{solve_real_qp, QpOptions, RealQp};
use fda_waveopt::signal_model::{Scene, SnapshotSampler, WaveformMatrix};
use fda_waveopt::{Scenario, Source};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dual projected-gradient oracle: maximize the concave dual over λ ≥ 0 with
/// accelerated steps, then recover the primal point.
pub fn dual_gradient_oracle(qp: &RealQp) -> RVector {
    let ginv = qp.g.clone().try_inverse().unwrap();
    let m = qp.a.len();
    let amat = RMatrix::from_fn(m, qp.c.len(), |i, j| qp.a[i][j]);
    let b = RVector::from_vec(qp.b.clone());
    let h = &amat * &ginv * amat.transpose();
    let step = 1.0 / h.norm().max(1e-12);
    let primal = |lam: &RVector| -(&ginv * (&qp.c + amat.transpose() * lam));
    let mut lam = RVector::zeros(m);
    let mut y = lam.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let grad = &amat * primal(&y) - &b;
        let next = (&y + grad.scale(step)).map(|v| v.max(0.0));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &lam).scale((t - 1.0) / t_next);
        lam = next;
        t = t_next;
    }
    primal(&lam)
}

/// Random strictly convex 6-dim QP with 4 rows and a known strictly feasible
/// point.
pub fn random_qp(rng: &mut ChaCha8Rng) -> (RealQp, RVector) {
    let n = 6;
    let r = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let g = &r * r.transpose() + RMatrix::identity(n, n);
    let c = RVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    let x0 = RVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
    let a: Vec<RVector> = (0..4).map(|_| RVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect();
    let b = a.iter().map(|ai| ai.dot(&x0) + rng.random_range(0.0..0.5)).collect();
    (RealQp { g, c, a, b }, x0)
}

/// Largest deviation from the oracle over `cases` random instances.
pub fn qp_oracle_check(cases: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let (qp, x0) = random_qp(&mut rng);
        let sol = solve_real_qp(&qp, QpOptions::default()).map_err(|e| format!("case {case}: {e}"))?;
        let oracle = dual_gradient_oracle(&qp);
        worst = worst.max((&sol.x - &oracle).amax());
        if qp.objective(&sol.x) > qp.objective(&x0) + 1e-10 {
            return Err(format!("case {case}: worse than a feasible point"));
        }
        if sol.kkt.max() > 1e-8 {
            return Err(format!("case {case}: KKT residual {}", sol.kkt.max()));
        }
    }
    Ok(worst)
}

/// Relative Frobenius error between the sample covariance of `draws`
/// snapshots and the model covariance, on a reduced 2×2 array.
pub fn snapshot_covariance_error(draws: usize, seed: u64) -> f64 {
    let mut sc = Scenario::table12();
    let sys = &mut sc.system;
    sys.n_tx = 2;
    sys.n_rx = 2;
    sys.pulse_s = 4e-6;
    sys.n_samples = 4;
    sys.n_window = 6;
    sys.lpf_cutoff_hz = vec![900e3; 2];
    sys.band_tolerance = vec![0.9; 2];
    let ws = sys.window_start_m;
    sc.target = Source::target(ws + 150.0, 20.0, 3.0);
    sc.interferers = vec![Source::interference(ws + 300.0, -30.0, 6.0)];
    let scene = Scene::new(&sc).unwrap();
    let wf = WaveformMatrix::from_s_t(&scene.reference.s_t(), 2, 4).unwrap();
    let sources = [sc.target.clone(), sc.interferers[0].clone()];
    let mut sampler = SnapshotSampler::new(&sc.system, &sources, &wf, 1.0, seed).unwrap();
    let n = scene.target.rows();
    let one = Complex64::new(1.0, 0.0);
    let mut acc = CMatrix::zeros(n, n);
    for _ in 0..draws {
        let x = sampler.draw();
        acc.ger(one, &x, &x.map(|v| v.conj()), one);
    }
    acc /= Complex64::new(draws as f64, 0.0);

    let s = wf.s_t();
    let mut model = CMatrix::identity(n, n);
    for (op, p) in [(&scene.target, scene.snr), (&scene.interferers[0], scene.inr[0])] {
        let g: CVector = op.apply(&s);
        model.ger(Complex64::new(p, 0.0), &g, &g.map(|v| v.conj()), one);
    }
    (&acc - &model).norm() / model.norm()
}
