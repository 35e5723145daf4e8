use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qstein(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qstein")).args(args).output().expect("binary runs")
}

fn qstein_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qstein")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV into header and rows of string fields.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(text: &str, name: &str) -> Vec<String> {
    let (header, rows) = csv(text);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

fn write_matrix(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

const HALF: &str = r#"{"dim": 2, "re": [[0.5, 0.0], [0.0, 0.5]]}"#;
const PURE: &str = r#"{"dim": 2, "re": [[1.0, 0.0], [0.0, 0.0]]}"#;

#[test]
fn divergence_pure_vs_mixed_is_log_two() {
    let out = stdout(&qstein(&["divergence", "--preset", "pure-vs-mixed"]));
    assert!((num(&column(&out, "divergence")[0]) - 2f64.ln()).abs() < 1e-12);
    assert_eq!(column(&out, "support_condition")[0], "true");
}

#[test]
fn divergence_of_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write_matrix(dir.path(), "rho.json", HALF);
    let out = stdout(&qstein(&["divergence", "--rho", &rho, "--sigma", &rho]));
    assert_eq!(num(&column(&out, "divergence")[0]), 0.0);
}

#[test]
fn divergence_random_pair_self_certifies() {
    let out = stdout(&qstein(&["divergence", "--preset", "random", "--seed", "7", "--dim", "3"]));
    let d = num(&column(&out, "divergence")[0]);
    let slope = num(&column(&out, "psi_prime_0")[0]);
    assert!((d - slope).abs() < 1e-9);
    assert!(num(&column(&out, "agreement")[0]) < 1e-9);
}

#[test]
fn support_violation_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write_matrix(dir.path(), "rho.json", HALF);
    let sigma = write_matrix(dir.path(), "sigma.json", PURE);
    let o = qstein(&["divergence", "--rho", &rho, "--sigma", &sigma]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("support"));
}

#[test]
fn error_exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_matrix(dir.path(), "bad.json", r#"{"dim": 2, "re": [[1.0]]}"#);
    assert_eq!(qstein(&["divergence", "--rho", &bad, "--sigma", &bad]).status.code(), Some(3));
    let eps = qstein(&["beta-star", "--preset", "biased-coin", "--n", "2", "--epsilon", "1.5"]);
    assert_eq!(eps.status.code(), Some(5));
    let cap = qstein(&["beta-star", "--preset", "tilted-qubit", "--n", "5", "--epsilon", "0.1", "--dim-cap", "16"]);
    assert_eq!(cap.status.code(), Some(6));
    assert_eq!(qstein(&["divergence"]).status.code(), Some(5));
    assert_eq!(qstein(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn psi_curve_of_identical_states_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write_matrix(dir.path(), "rho.json", r#"{"dim": 2, "re": [[0.7, 0.1], [0.1, 0.3]], "im": [[0, 0.05], [-0.05, 0]]}"#);
    let out = stdout(&qstein(&["curves", "psi", "--rho", &rho, "--sigma", &rho]));
    let psi = column(&out, "psi");
    assert_eq!(psi.len(), 101);
    assert!(psi.iter().all(|v| num(v).abs() < 1e-12));
}

#[test]
fn phi_curve_vanishes_below_divergence_and_carries_markers() {
    let out = stdout(&qstein(&["curves", "phi", "--preset", "tilted-qubit", "--angle", "0.7"]));
    let (header, rows) = csv(&out);
    let (li, pi, mi) = (0, 1, header.iter().position(|h| h == "marker").unwrap());
    let d = rows.iter().find(|r| r[mi] == "divergence").map(|r| num(&r[li])).unwrap();
    for r in &rows {
        if num(&r[li]) <= d {
            assert_eq!(num(&r[pi]), 0.0, "{r:?}");
        }
    }
    for m in ["divergence", "lambda_star", "psi_prime_one", "high_rate_edge"] {
        assert!(rows.iter().any(|r| r[mi] == m), "missing marker {m}");
    }
    let lambdas: Vec<f64> = rows.iter().map(|r| num(&r[li])).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn phi_curve_passes_the_shape_check() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("phi.csv");
    stdout(&qstein(&["curves", "phi", "--preset", "tilted-qubit", "--out", csv_path.to_str().unwrap()]));
    let out = stdout(&qstein_in(dir.path(), &["verify", "--scale", "0.02", "--phi-csv", "phi.csv"]));
    let suites = column(&out, "suite");
    let failures = column(&out, "failures");
    let i = suites.iter().position(|s| s == "phi_table").unwrap();
    assert_eq!(failures[i], "0");
}

#[test]
fn exponent_of_identical_states() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write_matrix(dir.path(), "rho.json", HALF);
    let out = stdout(&qstein(&["exponent", "--rho", &rho, "--sigma", &rho, "--r", "1"]));
    assert!((num(&column(&out, "lambda_star")[0]) - 0.5).abs() < 1e-9);
    assert!((num(&column(&out, "phi_star")[0]) - 0.5).abs() < 1e-9);
    assert!(num(&column(&out, "fixed_point_residual")[0]) < 1e-9);
}

#[test]
fn exponent_interior_forms_agree() {
    let out = stdout(&qstein(&["exponent", "--preset", "tilted-qubit", "--r", "0.15"]));
    assert_eq!(column(&out, "regime")[0], "interior");
    assert!(num(&column(&out, "form_gap")[0]) < 1e-8);
    assert_eq!(column(&out, "strong_converse")[0], "true");
}

#[test]
fn beta_star_biased_coin_single_copy() {
    let out = stdout(&qstein(&["beta-star", "--preset", "biased-coin", "--n", "1", "--epsilon", "0.25"]));
    assert!((num(&column(&out, "beta_star")[0]) - 0.5).abs() < 1e-12);
    assert!(num(&column(&out, "dual_gap")[0]) >= -1e-9);
    assert_eq!(column(&out, "representation")[0], "diagonal");
}

#[test]
fn stein_rows_satisfy_the_lower_bound() {
    for (preset, n_max) in [("biased-coin", "8"), ("tilted-qubit", "5")] {
        let out = stdout(&qstein(&["stein", "--preset", preset, "--epsilon", "0.05", "--n-max", n_max]));
        let holds = column(&out, "bound_holds");
        assert_eq!(holds.len(), n_max.parse::<usize>().unwrap());
        assert!(holds.iter().all(|h| h == "true"), "{preset}: {out}");
        assert!(column(&out, "dual_gap").iter().all(|g| num(g) >= -1e-9));
        assert!(column(&out, "dpi_holds").iter().all(|h| h == "true"));
        for (b, bound) in column(&out, "log_beta_over_n").iter().zip(column(&out, "bound")) {
            if !bound.is_empty() {
                assert!(num(b) >= num(&bound) - 1e-9);
            }
        }
    }
}

#[test]
fn stein_output_is_independent_of_worker_count() {
    let one = stdout(&qstein(&["stein", "--preset", "biased-coin", "--epsilon", "0.1", "--n-max", "9"]));
    let three = stdout(&qstein(&["stein", "--preset", "biased-coin", "--epsilon", "0.1", "--n-max", "9", "--workers", "3"]));
    assert_eq!(one, three);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["curves", "phi", "--preset", "random", "--seed", "5", "--dim", "3"];
    assert_eq!(qstein(&args).stdout, qstein(&args).stdout);
}

#[test]
fn bits_are_nats_over_log_two() {
    let args = ["exponent", "--preset", "tilted-qubit", "--r", "0.15"];
    let nats = stdout(&qstein(&args));
    let r_bits = format!("{}", 0.15 / std::f64::consts::LN_2);
    let bits = stdout(&qstein(&["exponent", "--preset", "tilted-qubit", "--r", &r_bits, "--unit", "bits"]));
    for col in ["r", "divergence", "lambda_star", "phi_star", "u_parametric"] {
        let (a, b) = (num(&column(&nats, col)[0]), num(&column(&bits, col)[0]));
        assert!((a / std::f64::consts::LN_2 - b).abs() < 1e-10, "{col}: {a} vs {b}");
    }
    // unitless columns are untouched
    assert_eq!(column(&nats, "s_star"), column(&bits, "s_star"));
}

#[test]
fn csv_numbers_use_two_digit_exponents() {
    let out = stdout(&qstein(&["divergence", "--preset", "biased-coin"]));
    assert_eq!(column(&out, "divergence")[0], "1.308120359411e-01");
}

#[test]
fn json_format() {
    let out = stdout(&qstein(&["beta-star", "--preset", "biased-coin", "--n", "3", "--epsilon", "0.1", "--format", "json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 3);
    assert!(v["beta_star"].as_f64().unwrap() > 0.0);
    let out = stdout(&qstein(&["stein", "--preset", "biased-coin", "--epsilon", "0.05", "--n-max", "3", "--format", "json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(v[0]["bound"].is_null());
}

#[test]
fn classical_modes() {
    let p = "[0.75, 0.25]";
    let q = "[0.5, 0.5]";
    let out = stdout(&qstein(&["classical", "--p", p, "--q", q, "--r", "0.2"]));
    assert!(num(&column(&out, "form_gap")[0]) < 1e-7);
    assert!(num(&column(&out, "rate_residual")[0]) < 1e-10);

    let out = stdout(&qstein(&["classical", "--p", p, "--q", q, "--r", "0.2", "--n", "20,40"]));
    let (header, rows) = csv(&out);
    assert_eq!(&header[..5], ["n", "r", "alpha_star", "exponent_estimate", "u_tilde"]);
    assert_eq!(rows.len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let p_file = write_matrix(dir.path(), "p.json", p);
    let out = stdout(&qstein(&["classical", "--p", &p_file, "--q", q, "--epsilon", "0.25", "--n", "1"]));
    assert!((num(&column(&out, "beta_star")[0]) - 0.5).abs() < 1e-12);

    let same = qstein(&["classical", "--p", p, "--q", p, "--r", "0.2", "--n", "5"]);
    let out = stdout(&same);
    let alpha = num(&column(&out, "alpha_star")[0]);
    assert!((alpha - (1.0 - (-5.0f64 * 0.2).exp())).abs() < 1e-12);
}

#[test]
fn verify_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qstein_in(dir.path(), &["verify", "--seed", "3"]);
    let out = stdout(&o);
    assert!(column(&out, "failures").iter().all(|f| f == "0"));
    assert!(!dir.path().join("counterexample.json").exists());
}

#[test]
fn verify_fault_injection_writes_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let o = qstein_in(dir.path(), &["verify", "--scale", "0.05", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(dir.path().join("counterexample.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["slack"].as_f64().unwrap() < 0.0);
    assert!(v["suite"].is_string());
}
