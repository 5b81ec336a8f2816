//! End-to-end tests against the compiled binary: exit codes, JSON shape,
//! closed-form spot values, and byte-level determinism of repeated runs.

use std::process::{Command, Output};

fn slicelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slicelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn result_f64(v: &serde_json::Value, key: &str) -> f64 {
    v["results"][key]
        .as_f64()
        .unwrap_or_else(|| panic!("results.{key} missing in {v}"))
}

const CUBE3: &str = r#"{"type":"cube","n":3,"half_side":1.0}"#;
const SQUARE: &str = r#"{"type":"cube","n":2,"half_side":1.0}"#;
const DISK: &str = r#"{"type":"lq_ball","n":2,"q":2}"#;
const CONST: &str = r#"{"type":"constant"}"#;

#[test]
fn volume_cube_matches_closed_form() {
    let out = slicelab(&["volume", "--body", CUBE3]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(result_f64(&v, "exact_volume"), 8.0);
    let est = v["results"]["volume"]["value"].as_f64().unwrap();
    assert!((est - 8.0).abs() / 8.0 < 5e-3, "volume {est}");
    assert_eq!(v["results"]["volume"]["status"], "ok");
}

#[test]
fn malformed_specs_exit_2() {
    let out = slicelab(&["volume", "--body", r#"{"type":"dodecahedron","n":3}"#]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dodecahedron"));

    let out = slicelab(&["volume", "--body", "missing_file.json"]);
    assert_eq!(code(&out), 2);

    // deny_unknown_fields: typos in field names must not parse
    let out = slicelab(&["volume", "--body", r#"{"type":"cube","n":3,"side":1.0}"#]);
    assert_eq!(code(&out), 2);

    let out = slicelab(&[
        "moment", "--body", SQUARE, "--density", CONST, "--p", "2", "--xi", "[0.0,0.0]",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unmet_tolerance_exits_3() {
    // Gaussian-tail body volume carries real quadrature error; a 1e-9
    // relative target is unreachable at default budgets.
    let out = slicelab(&["volume", "--body", r#"{"type":"lq_ball","n":3,"q":3}"#, "--tol", "1e-9"]);
    assert_eq!(code(&out), 3);
    let v = json_of(&out);
    assert_eq!(v["results"]["volume"]["status"], "tolerance_not_met");
}

#[test]
fn section_bound_equality_case() {
    // Axis sections of the cube under a flat density meet the bound with
    // equality, so the margin sits at zero within quadrature error.
    let out = slicelab(&[
        "lemma16", "--body", CUBE3, "--density", CONST, "--p", "2", "--xi", "axis:0",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["results"]["holds"], true);
    let lhs = result_f64(&v, "lhs");
    let margin = result_f64(&v, "margin");
    assert!(margin.abs() <= 1e-3 * lhs.abs(), "margin {margin} vs lhs {lhs}");
}

#[test]
fn jensen_holds_on_ball_and_cube() {
    for body in [DISK, SQUARE] {
        let out = slicelab(&["jensen", "--body", body, "--p", "2"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let v = json_of(&out);
        assert_eq!(v["results"]["holds"], true);
    }
}

#[test]
fn dovr_square_in_disk() {
    // Circumscribed disk of the square: scaling sqrt(2), bound
    // sqrt(2)*sqrt(pi/4) = sqrt(pi/2).
    let out = slicelab(&[
        "dovr", "--body", SQUARE, "--p", "2", "--witnesses",
        r#"{"type":"euclidean_ball","n":2,"radius":1.0}"#,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let bound = result_f64(&v, "dovr_upper");
    let expect = (std::f64::consts::PI / 2.0).sqrt();
    assert!((bound - expect).abs() / expect < 1e-2, "dovr {bound} vs {expect}");
    let scaling = result_f64(&v, "scaling_used");
    assert!((scaling - 2f64.sqrt()).abs() < 1e-6, "scaling {scaling}");
}

#[test]
fn dbm_cube_to_disk_is_sqrt2() {
    let out = slicelab(&["dbm", "--M", SQUARE, "--D", DISK]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let bound = result_f64(&v, "dbm_upper");
    assert!((bound - 2f64.sqrt()).abs() < 1e-6, "dbm {bound}");

    // Diagonal refinement cannot beat the rotation-symmetric optimum here.
    let out = slicelab(&["dbm", "--M", SQUARE, "--D", DISK, "--refine", "2"]);
    assert_eq!(code(&out), 0);
    let v = json_of(&out);
    let refined = result_f64(&v, "dbm_upper");
    assert!((refined - 2f64.sqrt()).abs() < 1e-6, "refined {refined}");
}

#[test]
fn bp_compare_exit_codes() {
    // Disk inside the square: every directional moment is dominated, so the
    // transfer conclusion must hold.
    let out = slicelab(&[
        "bp-compare", "--K", DISK, "--M", SQUARE, "--density", CONST, "--p", "2", "--D", SQUARE,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["results"]["status"], "ok");
    assert_eq!(v["results"]["conclusion_holds"], true);

    // Reversed: the square sticks out of the disk, the moment hypothesis
    // fails on the grid, and the run signals it through the exit code.
    let out = slicelab(&[
        "bp-compare", "--K", SQUARE, "--M", DISK, "--density", CONST, "--p", "2", "--D", SQUARE,
    ]);
    assert_eq!(code(&out), 1);
    let v = json_of(&out);
    assert_eq!(v["results"]["status"], "hypothesis_violated");
}

#[test]
fn monotone_q_indicator_is_flat() {
    let out = slicelab(&[
        "monotonic-q", "--g", r#"{"type":"indicator","half_width":0.75}"#, "--qgrid", "0:8:0.5",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["results"]["monotone"], true);
    let values: Vec<f64> = v["results"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(values.len(), 17);
    for val in values {
        assert!((val - 0.75).abs() < 1e-9, "indicator functional {val}");
    }
}

#[test]
fn bad_qgrid_exits_2() {
    let out = slicelab(&[
        "monotonic-q", "--g", r#"{"type":"indicator","half_width":1.0}"#, "--qgrid", "4:0:0.5",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn min_moment_square_matches_closed_form() {
    // Flat p=2 landscape on the square: every direction gives 4/3.
    let out = slicelab(&[
        "min-moment", "--body", SQUARE, "--density", CONST, "--p", "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let m = v["results"]["min_moment"]["value"].as_f64().unwrap();
    assert!((m - 4.0 / 3.0).abs() < 1e-3, "min moment {m}");
}

#[test]
fn reports_are_deterministic_and_written_to_out() {
    let dir = std::env::temp_dir();
    let p1 = dir.join("slicelab_cli_det_1.json");
    let p2 = dir.join("slicelab_cli_det_2.json");
    let args = [
        "slicing-constant", "--body", SQUARE, "--density", CONST, "--seed", "41",
    ];
    let out1 = slicelab(&[&args[..], &["--out", p1.to_str().unwrap()]].concat());
    let out2 = slicelab(&[&args[..], &["--out", p2.to_str().unwrap()]].concat());
    assert_eq!(code(&out1), 0, "{}", String::from_utf8_lossy(&out1.stderr));
    assert_eq!(code(&out2), 0);
    let b1 = std::fs::read(&p1).unwrap();
    let b2 = std::fs::read(&p2).unwrap();
    assert!(!b1.is_empty());
    assert_eq!(b1, b2, "same seed, same bytes");
    // ... and a different seed moves the quadrature estimates.
    let out3 = slicelab(&[
        "slicing-constant", "--body", SQUARE, "--density", CONST, "--seed", "43",
    ]);
    assert_eq!(code(&out3), 0);
    assert_ne!(b1, out3.stdout);
    let _ = std::fs::remove_file(p1);
    let _ = std::fs::remove_file(p2);
}

#[test]
fn csv_format_carries_the_same_results() {
    let out = slicelab(&["volume", "--body", CUBE3, "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"), "csv header missing:\n{text}");
    assert!(text.contains("results.exact_volume,8.0000000000000000e+0"), "{text}");
}

#[test]
fn report_input_echo_reparses() {
    // Round-trip contract: the echoed body spec is itself a valid spec.
    let out = slicelab(&["volume", "--body", r#"{"type":"ellipsoid","axes":[1.0,0.5,2.0]}"#]);
    assert_eq!(code(&out), 0);
    let v = json_of(&out);
    let echoed = serde_json::to_string(&v["inputs"]["body"]).unwrap();
    let again = slicelab(&["volume", "--body", &echoed]);
    assert_eq!(code(&again), 0);
    let v2 = json_of(&again);
    assert_eq!(v["results"], v2["results"], "echoed spec reproduces the run");
}

#[test]
fn verify_suite_quick_is_byte_identical_across_runs() {
    let run = || {
        let out = slicelab(&["verify-suite", "--seed", "7", "--budget", "quick"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "suite summary must be byte-identical for a fixed seed");
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["results"]["suite"]["all_passed"], true);
    assert_eq!(v["results"]["suite"]["criteria"].as_array().unwrap().len(), 12);
}
