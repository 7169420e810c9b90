//! Deterministic receive model: spatial frequencies, steering vectors,
//! commutation and shift matrices, the stacked response operator and the
//! OLFM reference waveform.
//!
//! Waveform vectors come in two orderings. `s = vec(S)` stacks the columns of
//! the `N_T × L` matrix `S` (time-major), `s_T = vec(Sᵀ)` stacks its rows
//! (antenna-major). The optimisation code works on `s_T` throughout.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{Scenario, Source, SystemConfig, PROPAGATION_SPEED};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, RMatrix};

/// Wrap a normalized frequency into `(-0.5, 0.5]`.
pub fn wrap_frequency(x: f64) -> f64 {
    let y = x - x.round();
    if y <= -0.5 {
        y + 1.0
    } else if y > 0.5 {
        y - 1.0
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFrequencies {
    pub f_t: f64,
    pub f_r: f64,
}

pub fn spatial_frequencies(cfg: &SystemConfig, src: &Source) -> SpatialFrequencies {
    let lambda = cfg.wavelength();
    let sin = src.angle_rad.sin();
    let f_t = 2.0 * cfg.delta_f_hz * src.range_m / PROPAGATION_SPEED - cfg.d_tx_m * sin / lambda;
    let f_r = -cfg.d_rx_m * sin / lambda;
    SpatialFrequencies {
        f_t: wrap_frequency(f_t),
        f_r: wrap_frequency(f_r),
    }
}

/// `[1, e^{j2πf}, …, e^{j2π(n-1)f}]`
pub fn steering(f: f64, n: usize) -> CVector {
    CVector::from_fn(n, |m, _| cis(2.0 * PI * m as f64 * f))
}

pub fn transmit_steering(f_t: f64, n_tx: usize) -> CVector {
    steering(f_t, n_tx)
}

pub fn receive_steering(f_r: f64, n_rx: usize) -> CVector {
    steering(f_r, n_rx)
}

/// Permutation `T(m, n)` with `T(m,n)·vec(A) = vec(Aᵀ)` for any `m × n` matrix `A`.
pub fn commutation_matrix(m: usize, n: usize) -> RMatrix {
    let mut t = RMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            t[(i * n + j, j * m + i)] = 1.0;
        }
    }
    t
}

/// Apply `T(m, n)` to a vector without forming the matrix.
pub fn commute(v: &CVector, m: usize, n: usize) -> CVector {
    assert_eq!(v.len(), m * n);
    let mut out = CVector::zeros(m * n);
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] = v[j * m + i];
        }
    }
    out
}

/// Where a return lands relative to the receive window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateCase {
    /// Arrives before sampling starts; only part of the pulse overlaps.
    Early,
    Inside,
    /// Still arriving when sampling stops.
    Late,
}

impl GateCase {
    pub fn as_str(self) -> &'static str {
        match self {
            GateCase::Early => "early",
            GateCase::Inside => "inside",
            GateCase::Late => "late",
        }
    }
}

/// Range gate of a source.
///
/// `offset` is the signed delay in samples relative to the first window
/// sample. `shift` is the parameter of the shift matrix: the offset itself for
/// the inside case, and the number of overlapping samples for the early and
/// late cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeGate {
    pub offset: i64,
    pub case: GateCase,
    pub shift: usize,
}

pub fn range_gate(cfg: &SystemConfig, src: &Source) -> Result<RangeGate> {
    let delay = 2.0 * (src.range_m - cfg.window_start_m) / PROPAGATION_SPEED;
    let raw = (delay * cfg.sample_hz).round();
    let l = cfg.n_samples as i64;
    let lw = cfg.n_window as i64;
    if !raw.is_finite() || raw < -(l as f64) || raw > lw as f64 {
        return Err(Error::OutOfWindow {
            range_m: src.range_m,
            offset: raw as i64,
        });
    }
    let offset = raw as i64;
    let (case, shift) = if offset < 0 {
        (GateCase::Early, (l + offset) as usize)
    } else if offset + l > lw {
        (GateCase::Late, (lw - offset) as usize)
    } else {
        (GateCase::Inside, offset as usize)
    };
    Ok(RangeGate { offset, case, shift })
}

/// For every window sample, the pulse sample that lands there (if any).
fn window_map(l: usize, n_samples: usize, n_window: usize, case: GateCase) -> Result<Vec<Option<usize>>> {
    let bad = || Error::InvalidShift {
        offset: l,
        case: case.as_str(),
        n_samples,
        n_window,
    };
    let mut map = vec![None; n_window];
    match case {
        GateCase::Inside => {
            if l + n_samples > n_window {
                return Err(bad());
            }
            for p in 0..n_samples {
                map[l + p] = Some(p);
            }
        }
        GateCase::Early => {
            if l > n_samples || l > n_window {
                return Err(bad());
            }
            for p in 0..l {
                map[n_window - l + p] = Some(p);
            }
        }
        GateCase::Late => {
            if l > n_samples || l > n_window {
                return Err(bad());
            }
            for p in 0..l {
                map[n_window - l + p] = Some(n_samples - l + p);
            }
        }
    }
    Ok(map)
}

/// The `L × L̃` 0/1 shift matrix `K(l)` for the given gate case.
pub fn shift_matrix(l: usize, n_samples: usize, n_window: usize, case: GateCase) -> Result<RMatrix> {
    let map = window_map(l, n_samples, n_window, case)?;
    let mut k = RMatrix::zeros(n_samples, n_window);
    for (col, p) in map.iter().enumerate() {
        if let Some(p) = p {
            k[(*p, col)] = 1.0;
        }
    }
    Ok(k)
}

/// Transmit waveform matrix `S` (`N_T × L`).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformMatrix {
    entries: CMatrix,
}

impl WaveformMatrix {
    pub fn new(entries: CMatrix) -> Self {
        WaveformMatrix { entries }
    }

    /// Rebuild `S` from `s_T = vec(Sᵀ)`.
    pub fn from_s_t(s_t: &CVector, n_tx: usize, n_samples: usize) -> Result<Self> {
        if s_t.len() != n_tx * n_samples {
            return Err(Error::Dimension {
                context: "waveform s_T",
                expected: n_tx * n_samples,
                actual: s_t.len(),
            });
        }
        Ok(WaveformMatrix {
            entries: CMatrix::from_fn(n_tx, n_samples, |m, l| s_t[m * n_samples + l]),
        })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn n_tx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.entries.ncols()
    }

    /// `vec(S)`, column-stacked.
    pub fn s(&self) -> CVector {
        CVector::from_column_slice(self.entries.as_slice())
    }

    /// `vec(Sᵀ)`, row-stacked.
    pub fn s_t(&self) -> CVector {
        let (n, l) = self.entries.shape();
        CVector::from_fn(n * l, |i, _| self.entries[(i / l, i % l)])
    }

    pub fn row(&self, m: usize) -> CVector {
        self.entries.row(m).transpose()
    }

    pub fn row_energies(&self) -> Vec<f64> {
        (0..self.n_tx()).map(|m| self.entries.row(m).norm_squared()).collect()
    }
}

/// `Λ(f_t, f_r) = [K(l)ᵀ ⊗ (u_R ⊗ diag u_T)] · T(L, N_T)` for one source.
///
/// The operator is stored in factored form. Snapshot entries are ordered
/// window-sample-major, then receive element, then transmit element.
#[derive(Debug, Clone)]
pub struct ResponseOperator {
    pub freqs: SpatialFrequencies,
    pub gate: RangeGate,
    n_tx: usize,
    n_rx: usize,
    n_samples: usize,
    u_t: CVector,
    u_r: CVector,
    window: Vec<Option<usize>>,
}

pub fn response_operator(cfg: &SystemConfig, freqs: SpatialFrequencies, gate: RangeGate) -> Result<ResponseOperator> {
    let window = window_map(gate.shift, cfg.n_samples, cfg.n_window, gate.case)?;
    Ok(ResponseOperator {
        freqs,
        gate,
        n_tx: cfg.n_tx,
        n_rx: cfg.n_rx,
        n_samples: cfg.n_samples,
        u_t: transmit_steering(freqs.f_t, cfg.n_tx),
        u_r: receive_steering(freqs.f_r, cfg.n_rx),
        window,
    })
}

impl ResponseOperator {
    /// Operator for a source, gated against the configured window.
    pub fn for_source(cfg: &SystemConfig, src: &Source) -> Result<Self> {
        let gate = range_gate(cfg, src)?;
        response_operator(cfg, spatial_frequencies(cfg, src), gate)
    }

    /// Same gate and array, different spatial frequencies.
    pub fn with_frequencies(&self, freqs: SpatialFrequencies) -> Self {
        ResponseOperator {
            freqs,
            u_t: steering(freqs.f_t, self.n_tx),
            u_r: steering(freqs.f_r, self.n_rx),
            ..self.clone()
        }
    }

    pub fn rows(&self) -> usize {
        self.n_tx * self.n_rx * self.window.len()
    }

    pub fn cols(&self) -> usize {
        self.n_tx * self.n_samples
    }

    pub fn transmit_steering(&self) -> &CVector {
        &self.u_t
    }

    pub fn receive_steering(&self) -> &CVector {
        &self.u_r
    }

    /// Pulse sample landing in each window sample.
    pub fn window_map(&self) -> &[Option<usize>] {
        &self.window
    }

    /// `Λ s_T`
    pub fn apply(&self, s_t: &CVector) -> CVector {
        assert_eq!(s_t.len(), self.cols(), "Λ·s_T dimension");
        let (nt, nr) = (self.n_tx, self.n_rx);
        let mut out = CVector::zeros(self.rows());
        for (col, p) in self.window.iter().enumerate() {
            let Some(p) = *p else { continue };
            for r in 0..nr {
                let base = col * nt * nr + r * nt;
                for m in 0..nt {
                    out[base + m] = self.u_r[r] * self.u_t[m] * s_t[m * self.n_samples + p];
                }
            }
        }
        out
    }

    /// `Λᴴ y`
    pub fn apply_adjoint(&self, y: &CVector) -> CVector {
        assert_eq!(y.len(), self.rows(), "Λᴴ·y dimension");
        let (nt, nr) = (self.n_tx, self.n_rx);
        let mut out = CVector::zeros(self.cols());
        for (col, p) in self.window.iter().enumerate() {
            let Some(p) = *p else { continue };
            for r in 0..nr {
                let base = col * nt * nr + r * nt;
                for m in 0..nt {
                    out[m * self.n_samples + p] += (self.u_r[r] * self.u_t[m]).conj() * y[base + m];
                }
            }
        }
        out
    }

    /// Dense matrix, assembled from the Kronecker definition.
    pub fn matrix(&self) -> CMatrix {
        let nt = self.n_tx;
        let diag_t = CMatrix::from_diagonal(&self.u_t);
        let inner = self.u_r.kronecker(&diag_t);
        let k = shift_matrix(self.gate.shift, self.n_samples, self.window.len(), self.gate.case)
            .expect("gate validated at construction")
            .map(|x| Complex64::new(x, 0.0));
        let a_bar = k.transpose().kronecker(&inner);
        let t = commutation_matrix(self.n_samples, nt).map(|x| Complex64::new(x, 0.0));
        a_bar * t
    }

    /// Dense `Ā = K(l)ᵀ ⊗ (u_R ⊗ diag u_T)`, which acts on `vec(S)`.
    pub fn a_bar(&self) -> CMatrix {
        let diag_t = CMatrix::from_diagonal(&self.u_t);
        let inner = self.u_r.kronecker(&diag_t);
        let k = shift_matrix(self.gate.shift, self.n_samples, self.window.len(), self.gate.case)
            .expect("gate validated at construction")
            .map(|x| Complex64::new(x, 0.0));
        k.transpose().kronecker(&inner)
    }

    /// `Λᴴ Λ`. Diagonal: each waveform sample inside the window contributes `N_R`.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.cols(), self.cols());
        for p in self.window.iter().flatten() {
            for m in 0..self.n_tx {
                let i = m * self.n_samples + p;
                g[(i, i)] = Complex64::new(self.n_rx as f64, 0.0);
            }
        }
        g
    }
}

/// OLFM reference: row `m` is `e^{j2π m γ t} e^{jπ (B/T_p) t²}` at `t = l/f_s`,
/// `γ = B/N_T`, each row scaled to energy `1/N_T`.
pub fn reference_olfm(cfg: &SystemConfig, bandwidth_hz: f64) -> WaveformMatrix {
    let (nt, l) = (cfg.n_tx, cfg.n_samples);
    let gamma = bandwidth_hz / nt as f64;
    let chirp = bandwidth_hz / cfg.pulse_s;
    let mut s = CMatrix::from_fn(nt, l, |m, k| {
        let t = k as f64 / cfg.sample_hz;
        cis(2.0 * PI * m as f64 * gamma * t + PI * chirp * t * t)
    });
    let target = (1.0 / nt as f64).sqrt();
    for m in 0..nt {
        let n = s.row(m).norm();
        s.row_mut(m).scale_mut(target / n);
    }
    WaveformMatrix::new(s)
}

/// Rescale each row of `s_T` to energy `1/N_T`. Zero rows are left alone.
pub fn normalize_rows(s_t: &CVector, n_tx: usize) -> CVector {
    let l = s_t.len() / n_tx;
    let target = (1.0 / n_tx as f64).sqrt();
    let mut out = s_t.clone();
    for m in 0..n_tx {
        let mut row = out.rows_mut(m * l, l);
        let n = row.norm();
        if n > 0.0 {
            row.scale_mut(target / n);
        }
    }
    out
}

fn complex_gaussian(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// One receive snapshot `Σ ς_k Λ_k s_T + n` with `ς_k ~ CN(0, p_k)` and
/// white noise `n ~ CN(0, σ² I)`.
pub fn simulate_snapshot(
    cfg: &SystemConfig,
    sources: &[Source],
    waveform: &WaveformMatrix,
    noise_power: f64,
    seed: u64,
) -> Result<CVector> {
    Ok(SnapshotSampler::new(cfg, sources, waveform, noise_power, seed)?.draw())
}

/// Draw snapshots repeatedly from one generator.
pub struct SnapshotSampler {
    ops: Vec<ResponseOperator>,
    powers: Vec<f64>,
    echoes: Vec<CVector>,
    noise_power: f64,
    rng: ChaCha8Rng,
}

impl SnapshotSampler {
    pub fn new(cfg: &SystemConfig, sources: &[Source], waveform: &WaveformMatrix, noise_power: f64, seed: u64) -> Result<Self> {
        let ops = sources
            .iter()
            .map(|s| ResponseOperator::for_source(cfg, s))
            .collect::<Result<Vec<_>>>()?;
        let s_t = waveform.s_t();
        let echoes = ops.iter().map(|op| op.apply(&s_t)).collect();
        Ok(SnapshotSampler {
            ops,
            powers: sources.iter().map(Source::power_linear).collect(),
            echoes,
            noise_power,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn operators(&self) -> &[ResponseOperator] {
        &self.ops
    }

    pub fn draw(&mut self) -> CVector {
        let n = self.ops.first().map(|o| o.rows()).unwrap_or(0);
        let mut out = CVector::zeros(n);
        for (echo, &p) in self.echoes.iter().zip(&self.powers) {
            let a = complex_gaussian(&mut self.rng, p);
            out.axpy(a, echo, Complex64::new(1.0, 0.0));
        }
        if self.noise_power > 0.0 {
            for x in out.iter_mut() {
                *x += complex_gaussian(&mut self.rng, self.noise_power);
            }
        }
        out
    }
}

/// Per-source operators and linear powers for a scenario, built once.
#[derive(Debug, Clone)]
pub struct Scene {
    pub system: SystemConfig,
    pub target: ResponseOperator,
    pub snr: f64,
    pub interferers: Vec<ResponseOperator>,
    pub inr: Vec<f64>,
    pub reference: WaveformMatrix,
}

impl Scene {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let cfg = &scenario.system;
        let target = ResponseOperator::for_source(cfg, &scenario.target)?;
        let interferers = scenario
            .interferers
            .iter()
            .map(|s| ResponseOperator::for_source(cfg, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scene {
            system: cfg.clone(),
            target,
            snr: scenario.target.power_linear(),
            interferers,
            inr: scenario.interferers.iter().map(Source::power_linear).collect(),
            reference: reference_olfm(cfg, scenario.reference_bandwidth_hz),
        })
    }

    pub fn n_tx(&self) -> usize {
        self.system.n_tx
    }

    pub fn waveform_len(&self) -> usize {
        self.system.waveform_len()
    }
}
