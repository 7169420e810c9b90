//! Post-processing: transmit/receive spatial-frequency power maps, output
//! spectrum of a designed waveform and filter pair, spectrum cuts, and
//! pulse-compression profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{to_db, CMatrix, CVector, RMatrix};
use crate::mvdr::ReceiveWeights;
use crate::signal_model::{steering, ResponseOperator, Scene, SpatialFrequencies};

/// Floor applied after peak normalization.
pub const DB_FLOOR: f64 = -80.0;

/// Uniform axis of `n` points inside `(-0.5, 0.5]`, symmetric about zero.
pub fn frequency_axis(n: usize) -> Vec<f64> {
    (0..n).map(|k| (k as f64 - (n as f64 - 1.0) / 2.0) / n as f64).collect()
}

/// Power over a `(f_t, f_r)` grid. `values_db[(i, k)]` belongs to
/// `(f_t[i], f_r[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub f_t: Vec<f64>,
    pub f_r: Vec<f64>,
    /// Peak-normalized, floored at [`DB_FLOOR`].
    pub values_db: RMatrix,
    /// Raw linear values before normalization.
    pub linear: RMatrix,
}

impl SpectrumGrid {
    fn from_linear(f_t: Vec<f64>, f_r: Vec<f64>, linear: RMatrix) -> Self {
        let peak = linear.iter().cloned().fold(0.0, f64::max);
        let values_db = linear.map(|v| {
            if peak > 0.0 && v > 0.0 {
                to_db(v / peak).max(DB_FLOOR)
            } else {
                DB_FLOOR
            }
        });
        SpectrumGrid { f_t, f_r, values_db, linear }
    }

    /// Grid coordinates of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (mut bi, mut bk, mut best) = (0, 0, f64::NEG_INFINITY);
        for i in 0..self.f_t.len() {
            for k in 0..self.f_r.len() {
                if self.linear[(i, k)] > best {
                    best = self.linear[(i, k)];
                    bi = i;
                    bk = k;
                }
            }
        }
        (self.f_t[bi], self.f_r[bk])
    }

    /// Spacing between adjacent grid lines.
    pub fn step(&self) -> (f64, f64) {
        let d = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
        (d(&self.f_t), d(&self.f_r))
    }

    /// Indices of strict 8-neighbourhood local maxima, sorted by value.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let (nt, nr) = (self.f_t.len(), self.f_r.len());
        let mut out = Vec::new();
        for i in 0..nt {
            for k in 0..nr {
                let v = self.linear[(i, k)];
                if v <= 0.0 {
                    continue;
                }
                let mut is_max = true;
                for di in -1i64..=1 {
                    for dk in -1i64..=1 {
                        if di == 0 && dk == 0 {
                            continue;
                        }
                        let (ii, kk) = (i as i64 + di, k as i64 + dk);
                        if ii < 0 || kk < 0 || ii >= nt as i64 || kk >= nr as i64 {
                            continue;
                        }
                        if self.linear[(ii as usize, kk as usize)] > v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push((i, k));
                }
            }
        }
        out.sort_by(|a, b| self.linear[*b].total_cmp(&self.linear[*a]));
        out
    }
}

/// Scene map `P(f) = Σ_k p_k |g(f)ᴴ g_k|²` with `g(f) = Λ(f) s_T` evaluated at
/// source `k`'s own range gate and `g_k = Λ_k s_T`. The target enters with its
/// SNR, interferers with their INR.
pub fn scene_power_map(scene: &Scene, s_t: &CVector, n_grid: usize) -> Result<SpectrumGrid> {
    check_grid(n_grid)?;
    let axis = frequency_axis(n_grid);
    let nt = scene.n_tx();
    let nr = scene.system.n_rx;
    let mut linear = RMatrix::zeros(n_grid, n_grid);
    let sources = std::iter::once((&scene.target, scene.snr)).chain(scene.interferers.iter().zip(scene.inr.iter().cloned()));
    for (op, power) in sources {
        // g(f)ᴴ g_k factors into a receive sum and an energy-weighted transmit sum.
        let energy = windowed_row_energy(op, s_t, nt);
        let ut = op.transmit_steering();
        let ur = op.receive_steering();
        let tx: Vec<f64> = axis
            .iter()
            .map(|&f| {
                let u = steering(f, nt);
                (0..nt).map(|m| u[m].conj() * ut[m] * energy[m]).sum::<Complex64>().norm_sqr()
            })
            .collect();
        let rx: Vec<f64> = axis
            .iter()
            .map(|&f| {
                let u = steering(f, nr);
                (0..nr).map(|r| u[r].conj() * ur[r]).sum::<Complex64>().norm_sqr()
            })
            .collect();
        for i in 0..n_grid {
            for k in 0..n_grid {
                linear[(i, k)] += power * tx[i] * rx[k];
            }
        }
    }
    Ok(SpectrumGrid::from_linear(axis.clone(), axis, linear))
}

/// Energy of each antenna's samples that fall inside the window for `op`'s gate.
fn windowed_row_energy(op: &ResponseOperator, s_t: &CVector, n_tx: usize) -> Vec<f64> {
    let l = s_t.len() / n_tx;
    (0..n_tx)
        .map(|m| op.window_map().iter().flatten().map(|&p| s_t[m * l + p].norm_sqr()).sum())
        .collect()
}

/// `|g(f)ᴴ g_k|²` at one frequency pair, straight from the operator. Used to
/// cross-check the factored map.
pub fn scene_term(op: &ResponseOperator, s_t: &CVector, f: SpatialFrequencies) -> f64 {
    let g = op.apply(s_t);
    op.with_frequencies(f).apply(s_t).dotc(&g).norm_sqr()
}

/// `|wᴴ Λ(f) s_T|²` over the grid, with `Λ(f)` at the range gate of `gate`.
pub fn output_spectrum_map(s_t: &CVector, weights: &ReceiveWeights, gate: &ResponseOperator, n_grid: usize) -> Result<SpectrumGrid> {
    check_grid(n_grid)?;
    let c = filter_projection(s_t, weights, gate)?;
    let (nt, nr) = c.shape();
    let axis = frequency_axis(n_grid);
    let ut: Vec<CVector> = axis.iter().map(|&f| steering(f, nt)).collect();
    let ur: Vec<CVector> = axis.iter().map(|&f| steering(f, nr)).collect();
    let mut linear = RMatrix::zeros(n_grid, n_grid);
    for (k, ur) in ur.iter().enumerate() {
        let cr = &c * ur;
        for (i, ut) in ut.iter().enumerate() {
            linear[(i, k)] = ut.iter().zip(cr.iter()).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr();
        }
    }
    Ok(SpectrumGrid::from_linear(axis.clone(), axis, linear))
}

/// `C[m, r] = Σ_l conj(w[l, r, m]) (S K)[m, l]`, so that
/// `wᴴ Λ(f) s_T = u_T(f_t)ᵀ C u_R(f_r)`.
fn filter_projection(s_t: &CVector, weights: &ReceiveWeights, gate: &ResponseOperator) -> Result<CMatrix> {
    let nt = gate.transmit_steering().len();
    let nr = gate.receive_steering().len();
    let w = &weights.w;
    if w.len() != gate.rows() {
        return Err(Error::Dimension {
            context: "receive weights",
            expected: gate.rows(),
            actual: w.len(),
        });
    }
    if s_t.len() != gate.cols() {
        return Err(Error::Dimension {
            context: "waveform s_T",
            expected: gate.cols(),
            actual: s_t.len(),
        });
    }
    let l = s_t.len() / nt;
    let mut c = CMatrix::zeros(nt, nr);
    for (col, p) in gate.window_map().iter().enumerate() {
        let Some(p) = *p else { continue };
        for r in 0..nr {
            for m in 0..nt {
                c[(m, r)] += w[col * nt * nr + r * nt + m].conj() * s_t[m * l + p];
            }
        }
    }
    Ok(c)
}

/// `|wᴴ Λ s_T|²` for one operator.
pub fn filter_response(s_t: &CVector, weights: &ReceiveWeights, op: &ResponseOperator) -> f64 {
    weights.w.dotc(&op.apply(s_t)).norm_sqr()
}

/// Attenuation (dB) of an interferer relative to the target after filtering.
pub fn notch_depth_db(scene: &Scene, s_t: &CVector, weights: &ReceiveWeights, interferer: usize) -> f64 {
    let t = filter_response(s_t, weights, &scene.target);
    let i = filter_response(s_t, weights, &scene.interferers[interferer]);
    to_db(t / i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutAxis {
    /// Hold `f_r` fixed, vary `f_t`.
    FixFr,
    /// Hold `f_t` fixed, vary `f_r`.
    FixFt,
}

/// Slice along the grid line nearest to `value`. Returns `(frequency, dB)` pairs.
pub fn spectrum_cut(grid: &SpectrumGrid, axis: CutAxis, value: f64) -> Result<Vec<(f64, f64)>> {
    if !(value > -0.5 && value <= 0.5) {
        return Err(Error::OutOfRange { what: "cut frequency", value });
    }
    let nearest = |v: &[f64]| {
        v.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - value).abs().total_cmp(&(b.1 - value).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    Ok(match axis {
        CutAxis::FixFr => {
            let k = nearest(&grid.f_r);
            grid.f_t.iter().enumerate().map(|(i, &f)| (f, grid.values_db[(i, k)])).collect()
        }
        CutAxis::FixFt => {
            let i = nearest(&grid.f_t);
            grid.f_r.iter().enumerate().map(|(k, &f)| (f, grid.values_db[(i, k)])).collect()
        }
    })
}

fn check_grid(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "grid size",
            value: n as f64,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hamming,
    None,
}

/// Self-matched pulse-compression output.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionProfile {
    /// Delay in samples of the original rate; zero lag at the center.
    pub lag: Vec<f64>,
    /// Peak-normalized magnitude in dB.
    pub magnitude_db: Vec<f64>,
    /// −3 dB mainlobe width in samples.
    pub mainlobe_width: f64,
    /// Highest sidelobe in dB (−∞ if there is none).
    pub peak_sidelobe_db: f64,
    pub peak_index: usize,
}

/// Symmetric `n`-point Hamming window.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (n as f64 - 1.0)).cos()).collect()
}

/// Frequency-domain matched filter of `row` against itself: `|X|²` times an
/// `L`-point window centred on DC, zero-padded to `upsample_to` bins and
/// inverse transformed.
pub fn pulse_compression(row: &CVector, upsample_to: usize, window: Window) -> Result<CompressionProfile> {
    let l = row.len();
    if l < 2 {
        return Err(Error::OutOfRange {
            what: "pulse length",
            value: l as f64,
        });
    }
    if upsample_to < l {
        return Err(Error::OutOfRange {
            what: "upsampled length",
            value: upsample_to as f64,
        });
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut bins: Vec<Complex64> = row.iter().cloned().collect();
    planner.plan_fft_forward(l).process(&mut bins);

    // Window in natural bin order: the symmetric window is centred on DC.
    let w = match window {
        Window::Hamming => hamming(l),
        Window::None => vec![1.0; l],
    };
    let half = l / 2;
    let w_nat: Vec<f64> = (0..l).map(|k| w[(k + half) % l]).collect();

    let pos = l.div_ceil(2);
    let mut padded = vec![Complex64::new(0.0, 0.0); upsample_to];
    for k in 0..l {
        let v = Complex64::new(bins[k].norm_sqr() * w_nat[k], 0.0);
        let dst = if k < pos { k } else { upsample_to - (l - k) };
        padded[dst] = v;
    }
    planner.plan_fft_inverse(upsample_to).process(&mut padded);

    let n = upsample_to;
    let mag: Vec<f64> = (0..n).map(|i| padded[(i + n / 2) % n].norm()).collect();
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    let magnitude_db: Vec<f64> = mag.iter().map(|&v| if v > 0.0 { to_db(v * v / (peak * peak)) } else { f64::NEG_INFINITY }).collect();
    let scale = l as f64 / n as f64;
    let lag: Vec<f64> = (0..n).map(|i| (i as f64 - (n / 2) as f64) * scale).collect();
    let peak_index = (0..n).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap_or(0);
    let (width, psl) = mainlobe_metrics(&magnitude_db, peak_index);
    Ok(CompressionProfile {
        lag,
        magnitude_db,
        mainlobe_width: width * scale,
        peak_sidelobe_db: psl,
        peak_index,
    })
}

/// −3 dB width in bins and peak sidelobe level.
fn mainlobe_metrics(db: &[f64], peak: usize) -> (f64, f64) {
    let n = db.len();
    let crossing = |dir: i64| -> f64 {
        let mut i = peak as i64;
        loop {
            let j = i + dir;
            if j < 0 || j >= n as i64 {
                return i as f64;
            }
            let (a, b) = (db[i as usize], db[j as usize]);
            if b < -3.0 {
                let t = if a.is_finite() && b.is_finite() { (a + 3.0) / (a - b) } else { 0.0 };
                return i as f64 + dir as f64 * t;
            }
            i = j;
        }
    };
    let width = crossing(1) - crossing(-1);

    // Mainlobe extends while the profile keeps falling away from the peak.
    let mut lo = peak;
    while lo > 0 && db[lo - 1] <= db[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < n && db[hi + 1] <= db[hi] {
        hi += 1;
    }
    let psl = db[..lo]
        .iter()
        .chain(db[hi + 1..].iter())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (width, psl)
}
