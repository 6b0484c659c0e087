use std::path::PathBuf;
use std::process::{Command, Output};

use g2_core::canonical::{phi0, psi0};
use g2_core::json::{form_from_json, form_to_json, sym_from_json};
use g2_core::{Form, Rational, Scalar, SymBilinear};
use serde_json::Value;

fn g2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2")).args(args).output().expect("g2 runs")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn metric_of_phi0_is_the_identity() {
    let p = scratch("phi0.json", &form_to_json(&phi0::<f64>()).to_string());
    let r = report(&g2(&["metric", "--in", p.to_str().unwrap()]));
    assert_eq!(r["schema_version"], 1);
    let g: SymBilinear<f64> = sym_from_json(&r["g"], "$.g").unwrap();
    assert_eq!(g, SymBilinear::identity());
    assert_eq!(r["sqrt_det_g"], 1.0);
    let psi: Form<f64> = form_from_json(&r["psi"], "$.psi").unwrap();
    assert_eq!(psi, psi0());
}

#[test]
fn exact_metric_round_trips() {
    let phi = phi0::<Rational>().scale(&Rational::ratio(8, 1));
    let p = scratch("phi8.json", &form_to_json(&phi).to_string());
    let r = report(&g2(&["metric", "--mode", "exact", "--in", p.to_str().unwrap()]));
    assert_eq!(form_from_json::<Rational>(&r["phi"], "$").unwrap(), phi);
    // 8φ₀ has metric 4·I and √det g = 4^{7/2} = 128.
    assert_eq!(r["sqrt_det_g"], "128");
    let g: SymBilinear<Rational> = sym_from_json(&r["g"], "$").unwrap();
    assert_eq!(g, SymBilinear::identity().scale(&Rational::ratio(4, 1)));
}

#[test]
fn inexact_root_in_exact_mode_is_an_input_error() {
    let phi = phi0::<Rational>().scale(&Rational::ratio(2, 1));
    let p = scratch("phi2.json", &form_to_json(&phi).to_string());
    let out = g2(&["metric", "--mode", "exact", "--in", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exact root"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_a_location() {
    let p = scratch("broken.json", "{\"degree\": 3,\n  \"terms\": [\n  {\"idx\": [1,2,3] \"val\": 1}]}");
    let out = g2(&["metric", "--in", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("broken.json") && msg.contains("line 3"), "{msg}");
}

#[test]
fn bad_index_reports_its_path() {
    let p = scratch("badidx.json", r#"{"degree":3,"terms":[{"idx":[1,2,3],"val":1},{"idx":[1,2,8],"val":1}]}"#);
    let out = g2(&["metric", "--in", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("$.terms[1].idx"), "{}", stderr(&out));
}

#[test]
fn mixed_modes_are_rejected() {
    let p = scratch("halves.json", r#"{"degree":3,"terms":[{"idx":[1,2,3],"val":"1/2"}]}"#);
    assert_eq!(g2(&["metric", "--in", p.to_str().unwrap()]).status.code(), Some(2));
    let q = scratch("floaty.json", r#"{"degree":3,"terms":[{"idx":[1,2,3],"val":0.5}]}"#);
    assert_eq!(g2(&["metric", "--mode", "exact", "--in", q.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn degenerate_form_exits_3() {
    let p = scratch("e123.json", r#"{"degree":3,"terms":[{"idx":[1,2,3],"val":1}]}"#);
    let out = g2(&["metric", "--in", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn failed_check_exits_4() {
    let out = g2(&["torsion", "--sample", "conformal", "--n", "8", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("FAIL"));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], false);
}

#[test]
fn identities_pass_in_float_mode() {
    let out = g2(&["identities", "--mode", "float"]);
    let r = report(&out);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(stderr(&out).lines().filter(|l| l.starts_with("PASS")).count(), r["checks"].as_array().unwrap().len());
}

#[test]
fn octonion_table_row_for_e1() {
    let r = report(&g2(&["octonion", "table"]));
    let row: Vec<&str> = r["table"][1].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(row, ["e1", "-1", "e3", "-e2", "e5", "-e4", "e7", "-e6"]);
    assert_eq!(r["psi_associator"]["sigma"], -1);
}

#[test]
fn decompose_splits_phi0_plus_noise() {
    let mut chi = phi0::<f64>().scale(&2.0);
    chi.add_term(&[0, 1, 3], 0.25).unwrap();
    let p = scratch("chi.json", &form_to_json(&chi).to_string());
    let r = report(&g2(&["decompose", "--degree", "3", "--in", p.to_str().unwrap()]));
    let n = &r["norms"];
    let predicted = n["predicted"].as_array().unwrap();
    for (k, key) in ["pi1", "pi7", "pi27"].iter().enumerate() {
        assert!((n[*key].as_f64().unwrap() - predicted[k].as_f64().unwrap()).abs() < 1e-12);
    }
    let wrong = g2(&["decompose", "--degree", "2", "--in", p.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["deform", "--mode", "l27", "--order", "3", "--eps", "0.01", "--seed", "5"];
    let a = g2(&args);
    let b = g2(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = g2(&["deform", "--mode", "l27", "--order", "3", "--eps", "0.01", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn l27_oracle_residual_scales_like_eps4() {
    let residual = |eps: &str| {
        let r = report(&g2(&["deform", "--mode", "l27", "--order", "3", "--eps", eps, "--seed", "1"]));
        r["oracle_residual"].as_f64().unwrap()
    };
    let (coarse, fine) = (residual("0.02"), residual("0.01"));
    let ratio = coarse / fine;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    let c = coarse / 0.02f64.powi(4);
    assert!(fine < 2.0 * c * 0.01f64.powi(4));
}

#[test]
fn deform_reads_chi_components() {
    let p = scratch("chi_a.json", &form_to_json(&phi0::<f64>().scale(&0.5)).to_string());
    let r = report(&g2(&["deform", "--mode", "conformal", "--eps", "0.01", "--chi", p.to_str().unwrap()]));
    assert!((r["direction"]["a"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!(r["oracle_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn out_flag_writes_the_report() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("betti.json");
    let out = g2(&["betti", "1", "2", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!((r["b1"].as_u64(), r["b2"].as_u64(), r["b3"].as_u64()), (Some(0), Some(1), Some(6)));
}

#[test]
fn moduli_curvature_needs_a_special_point() {
    let r = report(&g2(&["moduli", "--report", "V,K,G,A,Q,R"]));
    assert!(r["R"]["agreement"].as_f64().unwrap() < 1e-12);
    let s = scratch("coords.json", "[1.0, 0.1, 0.0]");
    let out = g2(&["moduli", "--coords", s.to_str().unwrap(), "--report", "A"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let r = report(&g2(&["moduli", "--coords", s.to_str().unwrap(), "--report", "V,G"]));
    assert!(r["V"].as_f64().unwrap() > 0.0);
}

#[test]
fn torsion_of_a_field_file() {
    let field = g2_core::field::samples::conformal(g2_core::field::Grid::along(&[4], 8).unwrap(), 4, 0.2);
    let p = scratch("field.json", &g2_core::json::field_to_json(&field).to_string());
    let r = report(&g2(&["torsion", "--field", p.to_str().unwrap()]));
    let n = &r["norms"];
    assert!(n["tau7"].as_f64().unwrap() > 1e-3);
    assert!(n["tau14"].as_f64().unwrap() < 1e-12 && n["tau27"].as_f64().unwrap() < 1e-12);
}
