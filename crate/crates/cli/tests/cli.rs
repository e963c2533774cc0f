use std::fs;

use poa_cli::{run, EXIT_OK, EXIT_PROPERTY_FAILURE, EXIT_USAGE};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("poa").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn uniform_sweep_has_constant_four_thirds() {
    let (code, out, _) = invoke(&["sweep", "--model", "uniform", "--r-min", "0.1", "--r-max", "0.9", "--r-steps", "9"]);
    assert_eq!(code, EXIT_OK);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "r");
    assert_eq!(&headers[13], "error");
    let poa_col = headers.iter().position(|h| h == "poa").unwrap();
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let poa: f64 = row[poa_col].parse().unwrap();
        assert!((poa - 4.0 / 3.0).abs() < 1e-9, "{poa}");
    }
}

#[test]
fn sweep_output_is_deterministic_across_execution_modes() {
    let args = ["sweep", "--model", "halfnormal", "--config", "pull-retailer", "--r-steps", "25"];
    let (c1, a, _) = invoke(&args);
    let (c2, b, _) = invoke(&args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let (c3, c, _) = invoke(&seq);
    assert_eq!((c1, c2, c3), (EXIT_OK, EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.lines().count(), 26);
}

#[test]
fn sweep_writes_file_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let (code, out, _) = invoke(&["sweep", "--model", "tanh", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    assert_eq!(fs::read_to_string(path).unwrap().lines().count(), 20);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(invoke(&["sweep", "--r-min", "0.9", "--r-max", "0.1"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["sweep", "--r-max", "1.5"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["sweep", "--model", "gamma"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["sweep", "--model", "empirical:/nonexistent/fit.json"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["bound-curves", "--k", "0.2"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["ar", "--out-dir", "/tmp/x", "--beta", "1.0"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["--help"]).0, EXIT_OK);
}

#[test]
fn bound_curves_emit_requested_rows() {
    let (code, out, _) = invoke(&["bound-curves", "--k", "0.2", "--r-tilde", "0.4", "--steps", "50"]);
    assert_eq!(code, EXIT_OK);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["alpha", "improved_upper", "lower"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r[1] >= 1.0 && r[2] >= 1.0));
}

#[test]
fn geometry_reports_uniform_intercept() {
    let dir = tempfile::tempdir().unwrap();
    let icpt = dir.path().join("i.csv");
    let (code, out, _) = invoke(&[
        "geometry", "--model", "uniform", "--r", "0.5", "--q-max", "1", "--steps", "11", "--intercepts", icpt.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 12);
    let text = fs::read_to_string(icpt).unwrap();
    let central = text.lines().find(|l| l.starts_with("intercept_central,")).unwrap();
    let v: f64 = central.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.125).abs() < 1e-12);
    assert!(text.contains("Qc,5.00000000000e-1"));
}

#[test]
fn ar_pipeline_round_trips_through_fit_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = invoke(&["ar", "--n-samples", "40000", "--chains", "4", "--r-steps", "5", "--out-dir", d]);
    assert_eq!(code, EXIT_OK, "{err}");
    for f in ["summary.csv", "histogram.csv", "fit.json", "sweep.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(dir.path().join("histogram.csv")).unwrap().lines().count(), 129);
    let fit = dir.path().join("fit.json");
    let selector = format!("empirical:{}", fit.display());
    let (code, out, _) = invoke(&["sweep", "--model", &selector, "--r-steps", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, fs::read_to_string(dir.path().join("sweep.csv")).unwrap());
}

#[test]
fn validate_passes_and_detects_injected_faults() {
    let (code, out, _) = invoke(&["validate", "--suite", "invariants"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    for fault in ["inflate-lower-bound", "deflate-upper-bound"] {
        let (code, out, _) = invoke(&["validate", "--suite", "invariants", "--inject", fault, "--report", report.to_str().unwrap()]);
        assert_eq!(code, EXIT_PROPERTY_FAILURE);
        assert!(out.contains("FAIL invariants/bound_sandwich"));
        let csv = fs::read_to_string(&report).unwrap();
        assert!(csv.lines().any(|l| l.starts_with("invariants,bound_sandwich,false")));
    }
}
