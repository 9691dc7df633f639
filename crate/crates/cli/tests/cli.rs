use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn dstau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dstau")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn derive_translation_and_kdv() {
    let o = dstau(&["derive", "--flows", "1:0,1:1", "--format", "text"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("u_t = -u_x"), "{s}");
    assert!(s.contains("u_t = 3/2*u*u_x - 1/4*u_xxx"), "{s}");
}

#[test]
fn empty_flow_set_is_empty_listing() {
    let o = dstau(&["derive", "--flows", ""]);
    assert!(o.status.success());
    assert_eq!(json(&o)["flows"].as_array().unwrap().len(), 0);
}

#[test]
fn default_verify_passes_and_is_deterministic() {
    let a = dstau(&["verify"]);
    let b = dstau(&["verify"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["residual_zero"], Value::Bool(true));
    for section in ["structure", "resolvents", "d10", "omega_symmetry", "tau_symmetry", "commutativity", "gauge_invariance", "miura"] {
        assert_eq!(v["sections"][section]["residual_zero"], Value::Bool(true), "{section}");
    }
}

#[test]
fn corrupted_omega_fails_with_named_identity() {
    let o = dstau(&["verify", "--config", fixture("corrupt_omega.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["residual_zero"], Value::Bool(false));
    let failed: Vec<String> = v["sections"]["omega_symmetry"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["residual_zero"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, vec!["Ω[1:0;1:1] = Ω[1:1;1:0]".to_string()]);
}

#[test]
fn sl3_verify_passes() {
    let o = dstau(&["verify", "--config", fixture("sl3.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn solve_with_zero_t_degree_echoes_initial_data() {
    let o = dstau(&["solve", "--t-degree", "0", "--bgw", "2"]);
    assert!(o.status.success());
    let v = json(&o);
    let coeffs = v["solution"]["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 1);
    assert_eq!(coeffs[0]["values"][0], v["solution"]["initial"][0]);
    assert_eq!(v["solution"]["initial"][0], "(2)/(1 - 2*x + x^2)");
}

#[test]
fn translation_flow_shifts_initial_data() {
    let o = dstau(&["solve", "--config", fixture("translation.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    // u(x - t): ∂_t^k u = (-1)^k u^{(k)} with u = 3/(1-x)^2
    assert!(s.contains("∂t^[1] u1 = (-6)/(1 - 3*x + 3*x^2 - x^3)"), "{s}");
    assert!(s.contains("∂t^[2] u1 = (18)/(1 - 4*x"), "{s}");
}

#[test]
fn flags_override_config_file() {
    let o = dstau(&["solve", "--config", fixture("translation.toml").to_str().unwrap(), "--format", "json", "--t-degree", "1"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["solution"]["t_degree"], 1);
}

#[test]
fn invalid_configuration_exits_nonzero() {
    let o = dstau(&["derive", "--depth", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("depth"));
    assert_eq!(dstau(&["derive", "--type", "E8^(1)"]).status.code(), Some(2));
    assert_eq!(dstau(&["derive", "--flows", "2:0"]).status.code(), Some(2));
}

#[test]
fn pole_at_expansion_point_is_reported() {
    let o = dstau(&["solve", "--flows", "1:0", "--initial", "[1]/[0,1]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pole"));
}

#[test]
fn other_subcommands_pass() {
    for args in [
        vec!["resolvent"],
        vec!["gauge-fix"],
        vec!["gauge-fix", "--type", "A2^(1)"],
        vec!["omega", "--type", "A2^(2)", "--flows", "1:0,2:1"],
        vec!["discrete"],
        vec!["discrete", "--miura", "u1 + u2^2|u1[+1]*u2[-1]", "--miura", "3*u2|u1[-1]", "--eps-order", "2"],
    ] {
        let o = dstau(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
