use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fda_waveopt::analysis::{output_spectrum_map, pulse_compression, scene_power_map, spectrum_cut, CutAxis, SpectrumGrid, Window};
use fda_waveopt::constraints::ConstraintSet;
use fda_waveopt::mmadmm::{mmadmm_run, Penalties as MmPenalties};
use fda_waveopt::mvdr::{interference_free_bound, mvdr_weights, output_sinr};
use fda_waveopt::padmm::padmm_run;
use fda_waveopt::signal_model::{range_gate, spatial_frequencies, Scene, WaveformMatrix};
use fda_waveopt::solver::{SolverOutput, StopCriteria};
use fda_waveopt::Scenario;
use serde::Serialize;

use crate::artifacts::*;
use crate::cli::{Algo, OptimizeArgs, PulseArgs, SpectrumArgs, ValidateArgs, WindowArg};
use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};

struct Loaded {
    path: PathBuf,
    file: ConfigFile,
    scenario: Scenario,
    digest: String,
}

fn load(path: &Path) -> CliResult<Loaded> {
    let file = ConfigFile::load(path)?;
    let scenario = file.scenario()?;
    Ok(Loaded {
        path: path.to_path_buf(),
        digest: file.digest(),
        file,
        scenario,
    })
}

fn manifest(cfg: &Loaded, command: &str, seed: u64, started_at: String) -> RunManifest {
    RunManifest {
        tool: "fda-waveopt".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_path: cfg.path.display().to_string(),
        config_digest: cfg.digest.clone(),
        config: cfg.file.clone(),
        mode: None,
        algorithm: None,
        epsilon: None,
        rho: None,
        seed,
        started_at,
        finished_at: String::new(),
        status: "ok".into(),
        partial: false,
        error: None,
        converged: None,
        iterations: None,
        flagged_steps: None,
        baseline_sinr_db: None,
        final_sinr_db: None,
        feasibility: None,
        files: Vec::new(),
    }
}

fn finish_manifest(dir: &Path, mut m: RunManifest, names: &[&str]) -> CliResult<()> {
    m.files = inventory(dir, names)?;
    m.finished_at = now_rfc3339();
    write_json(&dir.join(MANIFEST_JSON), &m)
}

#[derive(Debug, Serialize)]
struct SourceReport {
    kind: &'static str,
    range_m: f64,
    angle_deg: f64,
    power_db: f64,
    f_t: f64,
    f_r: f64,
    gate_offset: i64,
    gate_case: &'static str,
    gate_shift: usize,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    config_digest: String,
    n_tx: usize,
    n_rx: usize,
    n_samples: usize,
    n_window: usize,
    sources: Vec<SourceReport>,
    reference_energy_error: f64,
    /// `γ_m/N_T - in-band energy` per antenna; positive means violated.
    reference_bandwidth_residual: Vec<f64>,
    baseline_sinr_db: f64,
    interference_free_bound_db: f64,
}

pub fn validate(args: &ValidateArgs) -> CliResult<String> {
    let cfg = load(&args.config)?;
    let sc = &cfg.scenario;
    let scene = Scene::new(sc)?;
    let s_ref = scene.reference.s_t();
    let cs = ConstraintSet::new(&sc.system, s_ref.clone(), 0.0)?;
    let feas = cs.feasibility_report(&s_ref);
    let mut sources = Vec::new();
    for (kind, src) in std::iter::once(("target", &sc.target)).chain(sc.interferers.iter().map(|s| ("interference", s))) {
        let f = spatial_frequencies(&sc.system, src);
        let g = range_gate(&sc.system, src)?;
        sources.push(SourceReport {
            kind,
            range_m: src.range_m,
            angle_deg: src.angle_rad.to_degrees(),
            power_db: src.power_db,
            f_t: f.f_t,
            f_r: f.f_r,
            gate_offset: g.offset,
            gate_case: g.case.as_str(),
            gate_shift: g.shift,
        });
    }
    let report = ValidateReport {
        config_digest: cfg.digest.clone(),
        n_tx: sc.system.n_tx,
        n_rx: sc.system.n_rx,
        n_samples: sc.system.n_samples,
        n_window: sc.system.n_window,
        sources,
        reference_energy_error: feas.max_energy(),
        reference_bandwidth_residual: feas.bandwidth.clone(),
        baseline_sinr_db: output_sinr(&scene, &s_ref)?,
        interference_free_bound_db: interference_free_bound(&scene, &s_ref),
    };
    if args.json {
        return serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()));
    }
    let mut s = String::new();
    let _ = writeln!(s, "config {} (sha256 {})", cfg.path.display(), report.config_digest);
    let _ = writeln!(
        s,
        "system: {} tx x {} rx, L = {}, window = {}",
        report.n_tx, report.n_rx, report.n_samples, report.n_window
    );
    let _ = writeln!(s, "{:<13} {:>10} {:>8} {:>7} {:>9} {:>9}  gate", "source", "range_m", "angle", "dB", "f_t", "f_r");
    for r in &report.sources {
        let _ = writeln!(
            s,
            "{:<13} {:>10.1} {:>8.2} {:>7.1} {:>9.4} {:>9.4}  {} {} (offset {})",
            r.kind, r.range_m, r.angle_deg, r.power_db, r.f_t, r.f_r, r.gate_case, r.gate_shift, r.gate_offset
        );
    }
    let _ = writeln!(s, "reference energy error: {:.3e}", report.reference_energy_error);
    let bw: Vec<String> = report.reference_bandwidth_residual.iter().map(|v| format!("{v:+.4}")).collect();
    let _ = writeln!(s, "reference bandwidth residual (> 0 violates): [{}]", bw.join(", "));
    let _ = writeln!(s, "baseline SINR: {:.4} dB (interference-free bound {:.4} dB)", report.baseline_sinr_db, report.interference_free_bound_db);
    Ok(s)
}

/// Result of one ε run of `optimize`.
struct RunResult {
    row: SweepRow,
    error: Option<CliError>,
}

fn eps_dir(out: &Path, eps: f64, sweep: bool) -> PathBuf {
    if sweep {
        out.join(format!("eps-{eps}"))
    } else {
        out.to_path_buf()
    }
}

fn run_solver(algo: Algo, scene: &Scene, cs: &ConstraintSet, rho: (f64, f64, f64), stop: StopCriteria) -> fda_waveopt::Result<SolverOutput> {
    match algo {
        Algo::Mmadmm => mmadmm_run(scene, cs, MmPenalties { rho1: rho.0, rho2: rho.1, rho3: rho.2 }, stop),
        Algo::Padmm => padmm_run(scene, cs, rho.0, rho.1, stop),
    }
}

fn optimize_one(cfg: &Loaded, args: &OptimizeArgs, scene: &Scene, eps: f64, dir: &Path) -> CliResult<RunResult> {
    let started = now_rfc3339();
    ensure_dir(dir)?;
    let sv = &cfg.file.solver;
    let rho = (args.rho1.unwrap_or(sv.rho1), args.rho2.unwrap_or(sv.rho2), args.rho3.unwrap_or(sv.rho3));
    let stop = StopCriteria {
        max_iter: args.max_iter.unwrap_or(sv.max_iter),
        primal_tol: sv.primal_tol,
        sinr_plateau_tol: sv.sinr_plateau_tol,
        ..StopCriteria::default()
    };
    let baseline = output_sinr(scene, &scene.reference.s_t())?;
    let mut m = manifest(cfg, "optimize", args.seed, started);
    m.algorithm = Some(args.algo.as_str().into());
    m.epsilon = Some(eps);
    m.rho = Some(Penalties {
        rho1: rho.0,
        rho2: rho.1,
        rho3: (args.algo == Algo::Mmadmm).then_some(rho.2),
    });
    m.baseline_sinr_db = Some(baseline);

    let mut row = SweepRow {
        algorithm: args.algo.as_str().into(),
        epsilon: eps,
        baseline_sinr_db: baseline,
        final_sinr_db: None,
        iterations: None,
        converged: false,
        status: "failed".into(),
        dir: dir.display().to_string(),
    };
    let outcome = ConstraintSet::new(&scene.system, scene.reference.s_t(), eps).and_then(|cs| run_solver(args.algo, scene, &cs, rho, stop));
    let error = match outcome {
        Ok(out) => {
            log::info!("{} eps={eps}: {:.4} dB after {} iterations", args.algo.as_str(), out.sinr_db, out.trace.len() - 1);
            write_csv(&dir.join(TRACE_CSV), out.trace.iter().map(TraceRow::from))?;
            write_csv(
                &dir.join(TIMING_CSV),
                out.trace.iter().map(|r| TimingRow { iteration: r.iteration, wall_ms: r.wall_ms }),
            )?;
            write_json(&dir.join(WAVEFORM_JSON), &WaveformFile::from_matrix(&out.waveform))?;
            write_json(&dir.join(WEIGHTS_JSON), &WeightsFile::from_weights(&out.weights))?;
            let iterations = out.trace.last().map(|r| r.iteration).unwrap_or(0);
            m.converged = Some(out.converged);
            m.iterations = Some(iterations);
            m.flagged_steps = Some(out.flagged_steps);
            m.final_sinr_db = Some(out.sinr_db);
            m.feasibility = Some(Feasibility::from(&out.feasibility));
            row.final_sinr_db = Some(out.sinr_db);
            row.iterations = Some(iterations);
            row.converged = out.converged;
            if out.converged {
                m.status = "ok".into();
                None
            } else {
                m.status = "not_converged".into();
                Some(CliError::NotConverged(format!(
                    "{} at eps = {eps} stopped after {iterations} iterations",
                    args.algo.as_str()
                )))
            }
        }
        Err(e) => {
            log::error!("{} eps={eps} failed: {e}", args.algo.as_str());
            m.status = "failed".into();
            m.partial = true;
            m.error = Some(e.to_string());
            Some(CliError::from(e))
        }
    };
    row.status = m.status.clone();
    finish_manifest(dir, m, &[TRACE_CSV, TIMING_CSV, WAVEFORM_JSON, WEIGHTS_JSON])?;
    Ok(RunResult { row, error })
}

/// Runs every ε, possibly in parallel. Returns a one-line summary per run,
/// or the most severe error after all runs have finished.
pub fn optimize(args: &OptimizeArgs) -> CliResult<String> {
    let cfg = load(&args.config)?;
    if args.eps.is_empty() {
        return Err(CliError::Config("--eps needs at least one value".into()));
    }
    if let Some(&bad) = args.eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(CliError::Config(format!("--eps values must be finite and >= 0, got {bad}")));
    }
    for (name, v) in [("--rho1", args.rho1), ("--rho2", args.rho2), ("--rho3", args.rho3)] {
        if let Some(v) = v.filter(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CliError::Config(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    if args.max_iter == Some(0) {
        return Err(CliError::Config("--max-iter must be at least 1".into()));
    }
    let scene = Scene::new(&cfg.scenario)?;
    ensure_dir(&args.out)?;
    let sweep = args.eps.len() > 1;

    let results: Vec<Mutex<Option<CliResult<RunResult>>>> = args.eps.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = args.jobs.clamp(1, args.eps.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= args.eps.len() {
                    break;
                }
                let eps = args.eps[i];
                let r = optimize_one(&cfg, args, &scene, eps, &eps_dir(&args.out, eps, sweep));
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });

    let mut rows = Vec::new();
    let mut worst: Option<CliError> = None;
    let mut keep_worst = |e: CliError| {
        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
            worst = Some(e);
        }
    };
    for r in results {
        match r.into_inner().unwrap().expect("every run reports") {
            Ok(RunResult { row, error }) => {
                rows.push(row);
                if let Some(e) = error {
                    keep_worst(e);
                }
            }
            Err(e) => keep_worst(e),
        }
    }
    if sweep {
        write_csv(&args.out.join(SWEEP_CSV), rows.iter())?;
    }
    if let Some(e) = worst {
        return Err(e);
    }
    let mut s = String::new();
    for r in &rows {
        let _ = writeln!(
            s,
            "{} eps={}: {:.4} dB (baseline {:.4} dB, {} iterations) -> {}",
            r.algorithm,
            r.epsilon,
            r.final_sinr_db.unwrap_or(f64::NAN),
            r.baseline_sinr_db,
            r.iterations.unwrap_or(0),
            r.dir
        );
    }
    Ok(s)
}

fn read_waveform(path: &Path, scenario: &Scenario) -> CliResult<WaveformMatrix> {
    let f: WaveformFile = read_json(path)?;
    f.to_matrix(scenario.system.n_tx, scenario.system.n_samples)
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult<String> {
    let started = now_rfc3339();
    let cfg = load(&args.config)?;
    if args.grid < 2 {
        return Err(CliError::Config(format!("--grid must be at least 2, got {}", args.grid)));
    }
    let scene = Scene::new(&cfg.scenario)?;
    let gate = match args.gate.as_str() {
        "target" => &scene.target,
        other => {
            let k: usize = other
                .parse()
                .map_err(|_| CliError::Config(format!("--gate must be `target` or an interference index, got `{other}`")))?;
            scene
                .interferers
                .get(k.wrapping_sub(1))
                .ok_or_else(|| CliError::Config(format!("--gate {k}: there are {} interferers", scene.interferers.len())))?
        }
    };
    let (grid, mode): (SpectrumGrid, &str) = match (&args.waveform, &args.weights) {
        (None, Some(_)) => return Err(CliError::Config("--weights needs --waveform".into())),
        (None, None) => (scene_power_map(&scene, &scene.reference.s_t(), args.grid)?, "scene"),
        (Some(wp), weights) => {
            let s = read_waveform(wp, &cfg.scenario)?.s_t();
            let w = match weights {
                Some(p) => read_json::<WeightsFile>(p)?.to_weights(scene.target.rows())?,
                None => mvdr_weights(&scene, &s)?,
            };
            (output_spectrum_map(&s, &w, gate, args.grid)?, "output")
        }
    };
    ensure_dir(&args.out)?;
    let rows = (0..grid.f_t.len()).flat_map(|i| {
        let g = &grid;
        (0..g.f_r.len()).map(move |k| SpectrumRow {
            f_t: g.f_t[i],
            f_r: g.f_r[k],
            db: g.values_db[(i, k)],
        })
    });
    write_csv(&args.out.join(SPECTRUM_CSV), rows)?;

    let fr = args.cut_fr.unwrap_or(scene.target.freqs.f_r);
    let ft = args.cut_ft.unwrap_or(scene.target.freqs.f_t);
    let nearest = |axis: &[f64], v: f64| axis.iter().cloned().min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs())).unwrap_or(v);
    let mut cuts = Vec::new();
    for (name, axis, value, held) in [("fix_fr", CutAxis::FixFr, fr, nearest(&grid.f_r, fr)), ("fix_ft", CutAxis::FixFt, ft, nearest(&grid.f_t, ft))] {
        for (f, db) in spectrum_cut(&grid, axis, value).map_err(|e| CliError::Config(format!("cut {name}: {e}")))? {
            cuts.push(CutRow { cut: name.into(), fixed: held, f, db });
        }
    }
    write_csv(&args.out.join(CUTS_CSV), cuts)?;

    let mut m = manifest(&cfg, "spectrum", args.seed, started);
    m.mode = Some(mode.into());
    finish_manifest(&args.out, m, &[SPECTRUM_CSV, CUTS_CSV])?;
    let (pt, pr) = grid.argmax();
    Ok(format!(
        "{mode} map, {n}x{n} grid, peak at (f_t, f_r) = ({pt:.4}, {pr:.4}) -> {}\n",
        args.out.display(),
        n = args.grid
    ))
}

pub fn pulse(args: &PulseArgs) -> CliResult<String> {
    let started = now_rfc3339();
    let cfg = load(&args.config)?;
    let n_tx = cfg.scenario.system.n_tx;
    if args.antenna == 0 || args.antenna > n_tx {
        return Err(CliError::Config(format!("--antenna must lie in 1..={n_tx}, got {}", args.antenna)));
    }
    let (waveform, source) = match &args.waveform {
        Some(p) => (read_waveform(p, &cfg.scenario)?, p.display().to_string()),
        None => (Scene::new(&cfg.scenario)?.reference, "reference".to_string()),
    };
    let window = match args.window {
        WindowArg::Hamming => Window::Hamming,
        WindowArg::None => Window::None,
    };
    let p = pulse_compression(&waveform.row(args.antenna - 1), args.upsample, window).map_err(|e| CliError::Config(e.to_string()))?;
    ensure_dir(&args.out)?;
    write_csv(
        &args.out.join(PROFILE_CSV),
        p.lag.iter().zip(&p.magnitude_db).map(|(&lag, &db)| ProfileRow { lag, db }),
    )?;
    let summary = PulseSummary {
        antenna: args.antenna,
        window: match args.window {
            WindowArg::Hamming => "hamming".into(),
            WindowArg::None => "none".into(),
        },
        upsample: args.upsample,
        mainlobe_width_samples: p.mainlobe_width,
        peak_sidelobe_db: p.peak_sidelobe_db.is_finite().then_some(p.peak_sidelobe_db),
        waveform: source,
    };
    write_json(&args.out.join(PULSE_JSON), &summary)?;
    let mut m = manifest(&cfg, "pulse", args.seed, started);
    m.mode = Some(summary.window.clone());
    finish_manifest(&args.out, m, &[PROFILE_CSV, PULSE_JSON])?;
    Ok(format!(
        "antenna {}: mainlobe {:.4} samples, peak sidelobe {} -> {}\n",
        args.antenna,
        p.mainlobe_width,
        summary.peak_sidelobe_db.map(|v| format!("{v:.2} dB")).unwrap_or_else(|| "none".into()),
        args.out.display()
    ))
}
