use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ep_moments::linalg;
use ep_moments::model::{parse_model, ValidationReport};
use ep_moments::moments::{first_moment_matrix, kronecker_sum, reduce, EvolutionMatrix};
use ep_moments::nhh::LatticeModel;
use ep_moments::oracle::VerificationReport;
use ep_moments::spectral::{EPReport, SweepTable};

const PAIR: &str = "\
# Δ = 1, Γ = 1, Γ12 = 0.8
[system]
n_modes = 2

[detunings]
1 -1

[decoherence]
1 0.8
0.8 1
";

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ep-moments-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn model_file(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ep-moments")).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ep-moments"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_writes_a_parseable_report() {
    let m = model_file("validate.model", PAIR);
    let out = scratch("validate.json");
    let o = run(&["validate", s(&m), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let report: ValidationReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.ok);
}

#[test]
fn gain_like_model_is_a_validation_error() {
    let m = model_file("gain.model", PAIR);
    let o = run(&["validate", s(&m), "--set", "gamma12=1.5"]);
    assert_eq!(code(&o), 2);
    let report: ValidationReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!report.ok);
    assert!(report.findings.iter().any(|f| f.code == "gain-like-decoherence"));
}

#[test]
fn syntax_errors_exit_2_with_line_numbers() {
    let m = model_file("broken.model", "[system]\nn_modes = 2\n[detunings]\n1 x\n");
    let o = run(&["moments-matrix", s(&m), "--order", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn usage_errors_exit_1() {
    let m = model_file("usage.model", PAIR);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["moments-matrix", s(&m)])), 1);
    assert_eq!(code(&run(&["moments-matrix", s(&m), "--order", "1", "--set", "nonsense=1"])), 1);
    assert_eq!(code(&run(&["moments-matrix", s(&m), "--order", "1", "--set", "gamma12"])), 1);
    assert_eq!(code(&run(&["sweep", s(&m), "--order", "1", "--param", "gamma12", "--from", "0", "--to", "1", "--steps", "4", "--format", "json"])), 1);
    assert_eq!(code(&run(&["validate", "/definitely/not/here.model"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn moments_matrix_matches_the_library() {
    let m = model_file("mm.model", PAIR);
    let o = run(&["moments-matrix", s(&m), "--order", "2", "--reduce"]);
    assert_eq!(code(&o), 0);
    let got = EvolutionMatrix::from_json(&stdout(&o)).unwrap();
    let sys = parse_model(PAIR).unwrap();
    let m1 = first_moment_matrix(&sys, false).unwrap();
    let want = reduce(&kronecker_sum(&m1, &m1).unwrap()).unwrap();
    assert_eq!(got, want);

    let o = run(&["moments-matrix", s(&m), "--basis", "a1† a1,a1† a2,a2† a1,a2† a2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(EvolutionMatrix::from_json(&stdout(&o)).unwrap().dim(), 4);

    // ⟨a1 a1†⟩ picks up a constant source term and has no closed matrix.
    let o = run(&["moments-matrix", s(&m), "--basis", "a1 a1†"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn ep_order_exit_code_tracks_the_ep() {
    let m = model_file("ep.model", PAIR);
    let o = run(&["ep-order", s(&m), "--order", "1", "--set", "gamma12=1"]);
    assert_eq!(code(&o), 0);
    let report = EPReport::from_json(&stdout(&o)).unwrap();
    assert_eq!(report.max_ep_order(), 2);
    assert_eq!(report.clusters[0].blocks, vec![2]);

    let o = run(&["ep-order", s(&m), "--order", "3", "--set", "gamma12=1"]);
    assert_eq!(EPReport::from_json(&stdout(&o)).unwrap().max_ep_order(), 4);

    assert_eq!(code(&run(&["ep-order", s(&m), "--order", "1"])), 4);
}

#[test]
fn spectrum_reports_eigenvalues_and_ep_structure() {
    let m = model_file("spectrum.model", PAIR);
    let o = run(&["spectrum", s(&m), "--order", "2", "--set", "gamma12=1"]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["basis"].as_array().unwrap().len(), 3);
    let report: EPReport = serde_json::from_value(doc["ep_report"].clone()).unwrap();
    assert_eq!(report.max_ep_order(), 3);

    let o = run(&["spectrum", s(&m), "--order", "2", "--set", "gamma12=1", "--full"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let report: EPReport = serde_json::from_value(doc["ep_report"].clone()).unwrap();
    assert_eq!(report.clusters[0].blocks, vec![3, 1]);

    let o = run(&["spectrum", s(&m), "--order", "1", "--format", "csv"]);
    assert!(stdout(&o).starts_with("k,re,im\n1,-1.000000000000e+00,-6.000000000000e-01\n"));
}

#[test]
fn sweep_is_deterministic_and_round_trips() {
    let m = model_file("sweep.model", PAIR);
    let args = ["sweep", s(&m), "--order", "3", "--param", "gamma12", "--from", "0", "--to", "2", "--steps", "200"];
    let a = run(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = run_env(&args, "EP_MOMENTS_THREADS", "1");
    assert_eq!(a.stdout, b.stdout);

    let table = SweepTable::from_csv("gamma12", &stdout(&a)).unwrap();
    assert_eq!(table.rows.len(), 201);
    assert_eq!(table.to_csv(), stdout(&a));
    let ep = &table.rows[100];
    assert_eq!(ep.param, 1.0);
    for v in ep.eigenvalues.as_ref().unwrap() {
        assert!((v - ep_moments::linalg::c(-3.0, 0.0)).norm() <= 1e-9);
    }
}

#[test]
fn design_lattice_writes_json_and_graphml() {
    let m = model_file("lat.model", PAIR);
    let (json, graph) = (scratch("lat.json"), scratch("lat.graphml"));
    let o = run(&["design-lattice", s(&m), "--order", "2", "--out", s(&json), "--graphml", s(&graph)]);
    assert_eq!(code(&o), 0);
    let lat = LatticeModel::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(lat.psd);
    assert_eq!(lat.n_modes, 3);
    assert!(std::fs::read_to_string(&graph).unwrap().contains("<graphml"));

    let o = run(&["design-lattice", s(&m), "--order", "2", "--set", "gamma12=1", "--extra-damping", "0.13"]);
    let lat = LatticeModel::from_json(&stdout(&o)).unwrap();
    assert!(lat.psd);
    assert!(linalg::is_hermitian(&lat.jump_gamma, 0.0));
}

#[test]
fn verify_passes_and_fails_on_tolerance() {
    let m = model_file("verify.model", PAIR);
    let (report_path, traj) = (scratch("verify.json"), scratch("verify.csv"));
    let o = run(&[
        "verify", s(&m), "--order", "2", "--alpha", "0.6,0.3i", "--cutoff", "8", "--tmax", "3", "--dt", "0.001",
        "--tol", "1e-6", "--out", s(&report_path), "--trajectory", s(&traj),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = VerificationReport::from_json(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report.pass);
    assert_eq!(report.per_moment_max_dev.len(), 3);
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("t,re⟨a1 a1⟩,im⟨a1 a1⟩,"));
    assert_eq!(csv.lines().count(), 302);

    let o = run(&[
        "verify", s(&m), "--order", "1", "--alpha", "0.6,0.3i", "--cutoff", "8", "--tmax", "0.5", "--dt", "0.001",
        "--tol", "1e-14",
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn verify_leakage_is_a_numerical_failure() {
    let m = model_file("leak.model", PAIR);
    let o = run(&[
        "verify", s(&m), "--order", "1", "--alpha", "1.4,0", "--cutoff", "8", "--tmax", "0.1", "--dt", "0.01",
        "--tol", "1e-5",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn mn_reports_matrix_spectrum_and_closed_form() {
    let o = run(&["mn", "--N", "3", "--gamma", "1", "--gamma12", "0.5", "--delta", "1"]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let m = EvolutionMatrix::from_json(&doc["evolution_matrix"].to_string()).unwrap();
    assert_eq!(m.dim(), 4);
    let pairs = |key: &str| -> Vec<(f64, f64)> {
        doc[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
            .collect()
    };
    let (eig, closed) = (pairs("eigenvalues"), pairs("closed_form"));
    assert_eq!(eig.len(), 4);
    for a in &eig {
        let nearest = closed
            .iter()
            .map(|b| (a.0 - b.0).hypot(a.1 - b.1))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-9);
    }
}
