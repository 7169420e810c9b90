use std::path::Path;
use std::process::{Command, Output};

use fda_waveopt::constraints::ConstraintSet;
use fda_waveopt::mvdr::output_sinr;
use fda_waveopt::padmm::{padmm_run, DEFAULT_RHO};
use fda_waveopt::signal_model::Scene;
use fda_waveopt::solver::StopCriteria;
use fda_waveopt::Scenario;
use fda_waveopt_cli::artifacts::{read_csv, read_json, ProfileRow, RunManifest, SpectrumRow, TraceRow, WaveformFile, WeightsFile};
use fda_waveopt_cli::config::TABLE12_TOML;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fda-waveopt"))
        .args(args)
        .env("FDA_WAVEOPT_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_preset_prints_frequencies() {
    let out = bin(&["validate", "table12"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for f in ["0.3290", "-0.1710", "0.1500", "0.2500", "-0.3710"] {
        assert!(text.contains(f), "missing {f} in\n{text}");
    }
    let json = bin(&["validate", "table12", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let expect = [(0.329, -0.171), (0.15, 0.25), (-0.371, -0.171)];
    for (src, (ft, fr)) in v["sources"].as_array().unwrap().iter().zip(expect) {
        assert!((src["f_t"].as_f64().unwrap() - ft).abs() < 1e-3);
        assert!((src["f_r"].as_f64().unwrap() - fr).abs() < 1e-3);
    }
}

#[test]
fn validate_rejects_band_tolerance_above_one() {
    let dir = TempDir::new().unwrap();
    let text = TABLE12_TOML.replace("band_tolerance = [0.91,", "band_tolerance = [1.2,");
    let cfg = write_config(&dir, "bad.toml", &text);
    let out = bin(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.band_tolerance[0]"));
}

#[test]
fn validate_rejects_pulse_longer_than_window() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", &TABLE12_TOML.replace("n_window = 30", "n_window = 10"));
    let out = bin(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.n_window"));
}

#[test]
fn missing_config_is_io_error() {
    assert_eq!(bin(&["validate", "/nonexistent/config.toml"]).status.code(), Some(4));
}

#[test]
fn zero_radius_gives_single_baseline_row() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["optimize", "table12", "--algo", "padmm", "--eps", "0", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace: Vec<TraceRow> = read_csv(&dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.len(), 1);
    let sc = Scene::new(&Scenario::table12()).unwrap();
    assert_eq!(trace[0].sinr_db, output_sinr(&sc, &sc.reference.s_t()).unwrap());
}

#[test]
fn mmadmm_reaches_high_sinr() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["optimize", "table12", "--algo", "mmadmm", "--eps", "1.0", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace: Vec<TraceRow> = read_csv(&dir.path().join("trace.csv")).unwrap();
    assert!(trace.last().unwrap().sinr_db >= 18.0);
    let m: RunManifest = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.status, "ok");
    assert_eq!(m.algorithm.as_deref(), Some("mmadmm"));
    let names: Vec<&str> = m.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["trace.csv", "timing.csv", "waveform.json", "weights.json"]);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let out = bin(&["optimize", "table12", "--algo", "padmm", "--eps", "0.2", "--seed", "7", "--out", s(d.path())]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["trace.csv", "waveform.json", "weights.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn artifacts_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["optimize", "table12", "--algo", "padmm", "--eps", "0.5", "--max-iter", "200", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));

    let sc = Scene::new(&Scenario::table12()).unwrap();
    let cs = ConstraintSet::new(&sc.system, sc.reference.s_t(), 0.5).unwrap();
    let stop = StopCriteria { max_iter: 200, ..Default::default() };
    let mem = padmm_run(&sc, &cs, DEFAULT_RHO, DEFAULT_RHO, stop).unwrap();

    let wf: WaveformFile = read_json(&dir.path().join("waveform.json")).unwrap();
    let s_file = wf.to_matrix(6, 20).unwrap().s_t();
    assert!((&s_file - &mem.s_t).camax() <= 1e-12);
    let w: WeightsFile = read_json(&dir.path().join("weights.json")).unwrap();
    assert!((&w.to_weights(sc.target.rows()).unwrap().w - &mem.weights.w).camax() <= 1e-12);
    let trace: Vec<TraceRow> = read_csv(&dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.len(), mem.trace.len());
    for (a, b) in trace.iter().zip(&mem.trace) {
        assert_eq!(a.iteration, b.iteration);
        assert!((a.sinr_db - b.sinr_db).abs() <= 1e-12);
        assert!((a.primal_residual - b.primal_residual).abs() <= 1e-12);
    }
    let m: RunManifest = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.final_sinr_db, Some(mem.sinr_db));
}

#[test]
fn digest_survives_key_reordering() {
    let dir = TempDir::new().unwrap();
    let reordered = TABLE12_TOML.replace("n_tx = 6\nn_rx = 6\n", "n_rx = 6\nn_tx = 6\n");
    let cfg = write_config(&dir, "reordered.toml", &reordered);
    let digest = |c: &str| {
        let v: serde_json::Value = serde_json::from_slice(&bin(&["validate", c, "--json"]).stdout).unwrap();
        v["config_digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest("table12"), digest(&cfg));
}

#[test]
fn eps_sweep_writes_subdirectories() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["optimize", "table12", "--algo", "padmm", "--eps", "0,0.2", "--max-iter", "150", "--jobs", "2", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("eps-0/trace.csv").exists());
    assert!(dir.path().join("eps-0.2/waveform.json").exists());
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["optimize", "table12", "--algo", "mmadmm", "--eps", "1", "--max-iter", "2", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let m: RunManifest = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.status, "not_converged");
    assert!(dir.path().join("waveform.json").exists());
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = bin(&["spectrum", "table12", "--grid", "3", "--out", s(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn small_grid_has_nine_rows() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["spectrum", "table12", "--grid", "3", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SpectrumRow> = read_csv(&dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.db <= 0.0));
}

/// Grid values around `(ft, fr)` within one cell.
fn near_local_max(rows: &[SpectrumRow], n: usize, ft: f64, fr: f64) -> bool {
    let step = 1.0 / n as f64;
    let at = |i: usize, k: usize| rows[i * n + k].db;
    (0..n).any(|i| {
        (0..n).any(|k| {
            let r = &rows[i * n + k];
            if (r.f_t - ft).abs() > step * 1.0001 || (r.f_r - fr).abs() > step * 1.0001 {
                return false;
            }
            let mut is_max = true;
            for di in -1i64..=1 {
                for dk in -1i64..=1 {
                    let (ii, kk) = (i as i64 + di, k as i64 + dk);
                    if ii >= 0 && kk >= 0 && (ii as usize) < n && (kk as usize) < n && at(ii as usize, kk as usize) > r.db {
                        is_max = false;
                    }
                }
            }
            is_max
        })
    })
}

#[test]
fn scene_map_peaks_at_sources() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["spectrum", "table12", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SpectrumRow> = read_csv(&dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(rows.len(), 201 * 201);
    for (ft, fr) in [(0.15, 0.25), (-0.371, -0.171)] {
        assert!(near_local_max(&rows, 201, ft, fr), "no peak near ({ft}, {fr})");
    }
    // The 20 dB target rides on the skirt of the 30 dB interferer sharing its f_r.
    let nearest = rows
        .iter()
        .min_by(|a, b| ((a.f_t - 0.329).hypot(a.f_r + 0.171)).total_cmp(&(b.f_t - 0.329).hypot(b.f_r + 0.171)))
        .unwrap();
    assert!((nearest.db + 10.0).abs() < 1.0, "target cell at {} dB", nearest.db);
    let cuts = std::fs::read_to_string(dir.path().join("cuts.csv")).unwrap();
    assert_eq!(cuts.lines().count(), 1 + 2 * 201);
}

#[test]
fn output_map_peaks_at_target() {
    let dir = TempDir::new().unwrap();
    let run = dir.path().join("run");
    assert_eq!(bin(&["optimize", "table12", "--algo", "padmm", "--eps", "0", "--out", s(&run)]).status.code(), Some(0));
    let map = dir.path().join("map");
    let out = bin(&["spectrum", "table12", "--waveform", s(&run.join("waveform.json")), "--out", s(&map)]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SpectrumRow> = read_csv(&map.join("spectrum.csv")).unwrap();
    let best = rows.iter().max_by(|a, b| a.db.total_cmp(&b.db)).unwrap();
    assert!((best.f_t - 0.329).abs() <= 1.0 / 201.0 && (best.f_r + 0.171).abs() <= 1.0 / 201.0);
}

#[test]
fn waveform_shape_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let bad = WaveformFile { n_tx: 2, n_samples: 3, re: vec![vec![0.0; 3]; 2], im: vec![vec![0.0; 3]; 2] };
    let p = dir.path().join("w.json");
    std::fs::write(&p, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = bin(&["spectrum", "table12", "--waveform", s(&p), "--grid", "3", "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reference_profile_has_unique_peak() {
    let dir = TempDir::new().unwrap();
    let out = bin(&["pulse", "table12", "--antenna", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<ProfileRow> = read_csv(&dir.path().join("profile.csv")).unwrap();
    assert_eq!(rows.len(), 1000);
    let peaks: Vec<&ProfileRow> = rows.iter().filter(|r| r.db == 0.0).collect();
    assert_eq!(peaks.len(), 1);
    assert_eq!(peaks[0].lag, 0.0);
    assert!(rows.iter().all(|r| r.db <= 0.0));
}

#[test]
fn bad_antenna_is_rejected() {
    let dir = TempDir::new().unwrap();
    assert_eq!(bin(&["pulse", "table12", "--antenna", "0", "--out", s(dir.path())]).status.code(), Some(2));
    assert_eq!(bin(&["pulse", "table12", "--antenna", "7", "--out", s(dir.path())]).status.code(), Some(2));
}
