use std::path::Path;

use sepmix::{DVector, DensityMatrix, SystemShape, C64};
use sepmix_cli::io::{EnsembleFile, StateFile};
use sepmix_cli::report::{Payload, Report};
use sepmix_cli::{execute, Outcome, EXIT_ARGUMENT, EXIT_OK, EXIT_SEARCH_FAILED};

/// Tolerance for a state rebuilt from a serialized ensemble.
const REMIX_TOL: f64 = 1e-10;

fn run(args: &[&str]) -> Outcome {
    execute(std::iter::once("sepmix").chain(args.iter().copied()))
}

fn save(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn state_distance(a: &StateFile, b: &StateFile) -> f64 {
    assert_eq!(a.dims, b.dims);
    a.matrix.iter().zip(&b.matrix).map(|(x, y)| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sum::<f64>().sqrt()
}

fn mixed_state(out: &Outcome) -> StateFile {
    match out.report().expect("json report").payload {
        Payload::Mix(m) => m.state,
        p => panic!("unexpected payload {p:?}"),
    }
}

#[test]
fn reports_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let sample = run(&["sample-state", "--shape", "2,2", "--k", "5", "--model", "pure", "--seed", "1"]);
    let input = save(dir.path(), "s.json", &sample.stdout);
    let outs = [
        run(&["thresholds", "--shape", "2,3,4"]),
        run(&["rank-scan", "--shape", "2,2", "--k", "3", "--samples", "5", "--seed", "2"]),
        run(&["witness", "--shape", "2,2", "--k", "5"]),
        run(&["degenerate-check", "--shape", "2,2"]),
        sample.clone(),
        run(&["decompose", "--input", &input, "--k", "5", "--model", "pure", "--seed", "3"]),
        run(&["length-upper", "--input", &input, "--model", "general", "--seed", "3", "--timing"]),
        run(&["mix", "--ensemble", &input]),
    ];
    for out in outs {
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        let r: Report = serde_json::from_str(&out.stdout).unwrap();
        let again: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, again);
        assert_eq!(r.version, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn witness_ensemble_mixes_back_to_its_state() {
    let dir = tempfile::tempdir().unwrap();
    for (shape, k) in [("2,2", "4"), ("2,3", "4"), ("3,2", "9")] {
        let w = run(&["witness", "--shape", shape, "--k", k]);
        assert_eq!(w.code, EXIT_OK, "{}", w.stderr);
        let path = save(dir.path(), "w.json", &w.stdout);
        let state = w.report().unwrap().payload.state().cloned().unwrap();
        // full report and bare ensemble file are both accepted
        let from_report = mixed_state(&run(&["mix", "--ensemble", &path]));
        let bare = serde_json::to_string(w.report().unwrap().payload.ensemble().unwrap()).unwrap();
        let bare_path = save(dir.path(), "e.json", &bare);
        let from_file = mixed_state(&run(&["mix", "--input", &bare_path]));
        assert!(state_distance(&state, &from_report) <= REMIX_TOL);
        assert!(state_distance(&state, &from_file) <= REMIX_TOL);
    }
}

#[test]
fn decompose_ensemble_mixes_back_to_the_target() {
    let dir = tempfile::tempdir().unwrap();
    for (model, k) in [("pure", "4"), ("general", "3")] {
        let sample = run(&["sample-state", "--shape", "2,2", "--k", k, "--model", model, "--seed", "17"]);
        let input = save(dir.path(), "t.json", &sample.stdout);
        let target = sample.report().unwrap().payload.state().cloned().unwrap();
        let d = run(&["decompose", "--input", &input, "--k", k, "--model", model, "--seed", "5"]);
        assert_eq!(d.code, EXIT_OK, "{}", d.stderr);
        let path = save(dir.path(), "d.json", &d.stdout);
        let remixed = mixed_state(&run(&["mix", "--ensemble", &path]));
        let cert = match d.report().unwrap().payload {
            Payload::Decompose(c) => c,
            _ => unreachable!(),
        };
        assert!(cert.residual <= cert.tolerance);
        assert!((state_distance(&target, &remixed) - cert.remix_residual).abs() <= REMIX_TOL);
        assert!(cert.remix_residual <= cert.tolerance + REMIX_TOL);
    }
}

#[test]
fn decompose_failure_exits_4_without_entanglement_claims() {
    let dir = tempfile::tempdir().unwrap();
    let s = 0.5f64.sqrt();
    let z = C64::new(0.0, 0.0);
    let bell = DensityMatrix::pure(&DVector::from_vec(vec![C64::new(s, 0.0), z, z, C64::new(s, 0.0)])).unwrap();
    let file = StateFile::from_matrix(&SystemShape::new(vec![2, 2]).unwrap(), &bell);
    let path = save(dir.path(), "bell.json", &serde_json::to_string(&file).unwrap());
    let out = run(&["decompose", "--input", &path, "--k", "3", "--model", "pure", "--restarts", "4", "--seed", "1"]);
    assert_eq!(out.code, EXIT_SEARCH_FAILED);
    let cert = match out.report().unwrap().payload {
        Payload::Decompose(c) => c,
        _ => unreachable!(),
    };
    assert_eq!(cert.status, "failure");
    assert!(cert.message.contains("not evidence of entanglement"));
    assert!(cert.advisory_ppt_min_eigenvalue < 0.0);
}

#[test]
fn argument_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let not_psd = StateFile { dims: vec![2], matrix: vec![[1.5, 0.0], [0.0, 0.0], [0.0, 0.0], [-0.5, 0.0]] };
    let bad = save(dir.path(), "bad.json", &serde_json::to_string(&not_psd).unwrap());
    let skew = StateFile { dims: vec![2], matrix: vec![[0.5, 0.0], [0.1, 0.0], [0.0, 0.0], [0.5, 0.0]] };
    let skew = save(dir.path(), "skew.json", &serde_json::to_string(&skew).unwrap());
    let cases: Vec<Vec<&str>> = vec![
        vec!["frobnicate"],
        vec!["thresholds", "--shape", "2,2", "--bogus"],
        vec!["thresholds", "--shape", "1,2"],
        vec!["thresholds", "--shape", "2,x"],
        vec!["rank-scan", "--shape", "2,2", "--k", "3"],
        vec!["rank-scan", "--shape", "2,2", "--k", "3", "--seed", "1", "--model", "mixed"],
        vec!["witness", "--shape", "2,2", "--k", "3"],
        vec!["witness", "--shape", "2,2", "--k", "4", "--format", "csv"],
        vec!["degenerate-check", "--shape", "2,3"],
        vec!["decompose", "--input", &bad, "--k", "1", "--seed", "1"],
        vec!["decompose", "--input", &skew, "--k", "1", "--seed", "1"],
        vec!["decompose", "--input", "/nonexistent/state.json", "--k", "1", "--seed", "1"],
        vec!["sample-state", "--shape", "2,2"],
        vec!["rank-scan", "--shape", "2,2", "--k", "3", "--seed", "1", "--threads", "0"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.code, EXIT_ARGUMENT, "{args:?}: {}", out.stderr);
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn rank_scan_csv() {
    let out = run(&["rank-scan", "--shape", "2,2", "--k", "3", "--samples", "4", "--seed", "7", "--format", "csv"]);
    assert_eq!(out.code, EXIT_OK);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines, ["sample,rank", "0,14", "1,14", "2,14", "3,14"]);
}

#[test]
fn rank_scan_below_threshold_has_no_full_rank_samples() {
    let out = run(&["rank-scan", "--shape", "2,2", "--k", "3", "--samples", "200", "--seed", "7"]);
    match out.report().unwrap().payload {
        Payload::RankScan(s) => {
            assert_eq!(s.full_rank_fraction, 0.0);
            assert_eq!(s.ranks.len(), 200);
        }
        _ => unreachable!(),
    }
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = run(&["thresholds", "--shape", "3,3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out.stdout);
    assert!(out.stdout.contains("\"thm3_zero_below\": \"9/1\""));
}

#[test]
fn ensemble_file_validation() {
    let good = EnsembleFile {
        dims: vec![2, 2],
        model: "pure".into(),
        weights: vec![0.5, 0.5],
        components: None,
        vectors: Some(vec![vec![vec![[1.0, 0.0], [0.0, 0.0]]; 2], vec![vec![[0.0, 0.0], [1.0, 0.0]]; 2]]),
    };
    assert!(good.to_ensemble().is_ok());
    let mut bad_sum = good.clone();
    bad_sum.weights = vec![0.5, 0.6];
    assert!(bad_sum.to_ensemble().is_err());
    let mut bad_norm = good.clone();
    bad_norm.vectors.as_mut().unwrap()[0][0] = vec![[1.0, 0.0], [1.0, 0.0]];
    assert!(bad_norm.to_ensemble().is_err());
    let mut extra = good.clone();
    extra.vectors.as_mut().unwrap()[1].push(vec![[1.0, 0.0], [0.0, 0.0]]);
    assert!(extra.to_ensemble().is_err());
    let mut missing = good;
    missing.model = "general".into();
    assert!(missing.to_ensemble().is_err());
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(run(&["--help"]).code, EXIT_OK);
    assert_eq!(run(&["--version"]).code, EXIT_OK);
}
