use std::path::PathBuf;
use std::process::{Command, Output};

use plab_cli::Report;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn plab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plab")).args(args).output().unwrap()
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn jacobi_passes_on_so3() {
    let out = plab(&["jacobi", "--algebra", &fixture("so3.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r.pass);
    assert_eq!(r.checks.iter().map(|c| c.check.as_str()).collect::<Vec<_>>(), ["antisymmetry", "jacobi", "schouten_self_bracket"]);
}

#[test]
fn broken_table_exits_one() {
    let out = plab(&["jacobi", "--algebra", &fixture("broken.json")]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(!r.pass);
    let jacobi = r.checks.iter().find(|c| c.check == "jacobi").unwrap();
    assert!(jacobi.max_residual >= 1.0 && jacobi.failures == 1);
}

#[test]
fn malformed_json_exits_two() {
    let out = plab(&["jacobi", "--algebra", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("could not parse"));
}

#[test]
fn missing_file_and_flags_exit_two() {
    assert_eq!(plab(&["jacobi", "--algebra", "/nonexistent/alg.json"]).status.code(), Some(2));
    assert_eq!(plab(&["normal-form", "--algebra", &fixture("so3.json")]).status.code(), Some(2));
    assert_eq!(plab(&["jacobi", "--algebra", &fixture("so3.json"), "--samples", "0"]).status.code(), Some(2));
    assert_eq!(plab(&["jacobi", "--algebra", &fixture("so3.json"), "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(plab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dimension_mismatch_is_an_input_error() {
    let out = plab(&["normal-form", "--algebra", &fixture("aff1.json"), "--transversal", &fixture("so3_line.transversal.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_transversal_is_a_failing_check() {
    let out = plab(&["normal-form", "--algebra", &fixture("so3.json"), "--transversal", &fixture("so3_tangent.transversal.json")]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r.checks[0].check, "transversality");
    assert!(r.checks[0].worst[0].detail.as_deref().unwrap().contains("not a Poisson transversal"));
}

#[test]
fn normal_form_sl2_and_config_echo() {
    let out = plab(&[
        "normal-form",
        "--algebra",
        &fixture("sl2.json"),
        "--transversal",
        &fixture("sl2_h.transversal.json"),
        "--samples",
        "30",
        "--seed",
        "7",
        "--fd-step",
        "1e-5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!((r.config.samples, r.config.seed, r.config.fd_step), (30, 7, Some(1e-5)));
    assert!(r.checks.iter().all(|c| c.samples == 30 && c.seed == Some(7)));
}

#[test]
fn poisson_map_borel() {
    let out = plab(&[
        "poisson-map",
        "--algebra",
        &fixture("borel.json"),
        "--morphism",
        &fixture("borel_into_sl2.morphism.json"),
        "--transversal",
        &fixture("borel_point.transversal.json"),
        "--samples",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn frobenius_rejects_non_subalgebra() {
    let out = plab(&["frobenius", "--algebra", &fixture("so3.json"), "--frobenius", &fixture("so3_not_subalgebra.frobenius.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out).checks[0].check, "frobenius_pair");
}

#[test]
fn groupoid_heisenberg_without_transversal() {
    let out = plab(&["groupoid", "--algebra", &fixture("heisenberg3.json"), "--rep", &fixture("heisenberg3.rep.json"), "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).checks.len(), 3);
}

#[test]
fn groupoid_rep_for_wrong_algebra() {
    let out = plab(&["groupoid", "--algebra", &fixture("so3.json"), "--rep", &fixture("aff1.rep.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dirac_query_reports_result() {
    let out = plab(&["dirac", "--query", &fixture("gauge_pullback.dirac.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let result = r.result.unwrap();
    assert_eq!(result["dim"], 2);
    let pi = &result["bivector"];
    assert!((pi[0][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn text_format_and_out_file() {
    let dir = std::env::temp_dir().join(format!("plab-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.txt");
    let out =
        plab(&["dual-pair", "--algebra", &fixture("so3.json"), "--samples", "10", "--format", "text", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("PASS  dual_pair"));
    assert!(text.trim_end().ends_with(')') && text.contains("overall: PASS"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tolerance_below_the_finite_difference_floor_fails() {
    let out =
        plab(&["normal-form", "--algebra", &fixture("so3.json"), "--transversal", &fixture("so3_line.transversal.json"), "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_sample_smoke_mode() {
    let out = plab(&["dual-pair", "--algebra", &fixture("sl2.json"), "--samples", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out).checks.iter().all(|c| c.samples == 1));
}

#[test]
fn shipped_examples_pass() {
    let runs: Vec<Vec<String>> = vec![
        vec!["jacobi".into(), "--algebra".into(), fixture("aff1_x_aff1.json")],
        vec!["jacobi".into(), "--algebra".into(), fixture("heisenberg3.json")],
        vec!["dual-pair".into(), "--algebra".into(), fixture("so3.json")],
        vec!["normal-form".into(), "--algebra".into(), fixture("so3.json"), "--transversal".into(), fixture("so3_line.transversal.json")],
        vec![
            "groupoid".into(),
            "--algebra".into(),
            fixture("sl2.json"),
            "--rep".into(),
            fixture("sl2.rep.json"),
            "--transversal".into(),
            fixture("sl2_h.transversal.json"),
            "--samples".into(),
            "20".into(),
        ],
        vec![
            "groupoid".into(),
            "--algebra".into(),
            fixture("aff1.json"),
            "--rep".into(),
            fixture("aff1.rep.json"),
            "--samples".into(),
            "20".into(),
        ],
        vec!["frobenius".into(), "--algebra".into(), fixture("sl2.json"), "--frobenius".into(), fixture("borel_in_sl2.frobenius.json")],
        vec![
            "frobenius".into(),
            "--algebra".into(),
            fixture("aff1_x_aff1.json"),
            "--frobenius".into(),
            fixture("diag_aff1.frobenius.json"),
        ],
    ];
    for args in &runs {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = plab(&argv);
        assert_eq!(out.status.code(), Some(0), "{argv:?}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
