use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.graph"))
}

fn dofusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dofusion")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn graph(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn identify_prints_the_adjustment_formula() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "obs.src", "obs\n");
    let o = dofusion(&["--graph", &graph("backdoor_small"), "identify", "P(Y|do(C))", "--data", &data]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("Σ_e P(y|c,e) P(e)"));
}

#[test]
fn recover_with_an_unbiased_marginal() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "sel.src", "obs selected\nmarginal Z,W\n");
    let o = dofusion(&["--graph", &graph("selection_backdoor"), "--format", "json", "recover", "P(y|do(x))", "--data", &data]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["status"], "derived");
    assert_eq!(r["estimand_text"], "Σ_{w,z} P(y|w,x,z,S=1) P(w,z)");
}

#[test]
fn surrogate_experiment_on_an_instrument_is_not_enough() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "z.src", "obs\nexp Z\n");
    let o = dofusion(&["--graph", &graph("instrumental_variable"), "--format", "json", "identify", "P(y|do(x))", "--data", &data]);
    assert_eq!(o.status.code(), Some(2));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["status"], "not_derived_within_budget");
    assert!(r["derivation"].is_null());
}

#[test]
fn json_reports_share_one_schema() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "obs.src", "obs\n");
    let g = graph("backdoor_small");
    let runs = [
        dofusion(&["--graph", &g, "--format", "json", "dsep", "Y | H | W,C"]),
        dofusion(&["--graph", &g, "--format", "json", "ci-list"]),
        dofusion(&["--graph", &g, "--format", "json", "adjust", "--backdoor", "C", "Y"]),
        dofusion(&["--graph", &g, "--format", "json", "identify", "P(y|do(c))", "--data", &data, "--validate", "3"]),
    ];
    for o in &runs {
        let r: Value = serde_json::from_str(&stdout(o)).unwrap();
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["query", "status", "method", "estimand_text", "estimand_latex", "derivation", "validation"] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
    }
    let last: Value = serde_json::from_str(&stdout(&runs[3])).unwrap();
    assert_eq!(last["validation"]["seeds"], 3);
    assert!(last["validation"]["max_abs_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn dsep_exit_codes_follow_the_answer() {
    let g = graph("d_separation_example");
    assert_eq!(dofusion(&["--graph", &g, "dsep", "A", "|", "C"]).status.code(), Some(0));
    assert_eq!(dofusion(&["--graph", &g, "dsep", "A | C | D"]).status.code(), Some(2));
    assert_eq!(dofusion(&["--graph", &g, "dsep", "A | Q"]).status.code(), Some(1));
}

#[test]
fn ci_list_matches_the_collider_example() {
    let o = dofusion(&["--graph", &graph("d_separation_example"), "ci-list", "--max-given", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn frontdoor_in_latex() {
    let o = dofusion(&["--graph", &graph("frontdoor_conditional"), "--format", "latex", "adjust", "--frontdoor", "X", "Y"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("\\sum_{m, w_{1}, w_{2}, w_{3}, x'}"));
}

#[test]
fn transport_respects_domain_filter() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "meta.src", "exp X domain=a\nexp X,Z domain=b\n");
    let g = graph("meta_transport");
    let both = dofusion(&["--graph", &g, "transport", "P(y|do(x))", "--data", &data, "--domains", "a,b"]);
    assert_eq!(both.status.code(), Some(0));
    assert_eq!(stdout(&both).lines().next(), Some("Σ_z P^{(b)}(y|do(x),do(z)) P^{(a)}(z|do(x))"));
    let one = dofusion(&["--graph", &g, "transport", "P(y|do(x))", "--data", &data, "--domains", "a", "--max-states", "2000"]);
    assert_eq!(one.status.code(), Some(2));
}

#[test]
fn derivations_round_trip_through_check_derivation() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "obs.src", "obs\n");
    let g = graph("frontdoor_conditional");
    let o = dofusion(&["--graph", &g, "--format", "json", "identify", "P(y|do(x))", "--data", &data]);
    let report = write(&dir, "report.json", &stdout(&o));
    assert_eq!(dofusion(&["--graph", &g, "check-derivation", &report]).status.code(), Some(0));

    let mut r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bare = write(&dir, "bare.json", &r["derivation"].to_string());
    assert_eq!(dofusion(&["--graph", &g, "check-derivation", &bare]).status.code(), Some(0));

    // drop the conditioning set from the second step's premise
    r["derivation"]["steps"][1]["params"]["vars"] = Value::Array(vec![]);
    let bad = write(&dir, "bad.json", &r.to_string());
    let o = dofusion(&["--graph", &g, "check-derivation", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("invalid at step 2"), "{}", stdout(&o));
}

#[test]
fn reports_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "obs.src", "obs\nexp Z\n");
    let args = [
        "--graph",
        &graph("surrogate_frontdoor"),
        "--format",
        "json",
        "--seed",
        "4",
        "identify",
        "P(y|do(x))",
        "--data",
        &data,
        "--validate",
        "5",
    ];
    assert_eq!(dofusion(&args).stdout, dofusion(&args).stdout);
}

#[test]
fn validate_runs_the_bundled_examples() {
    let o = dofusion(&["validate", "--seeds", "3"]);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.contains("backdoor_small")));
    // every result is exact, so only a missing derivation could fail
    assert!(out.lines().all(|l| l.starts_with("ok")), "{out}");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn validate_one_query() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "src", "exp X source\nobs\n");
    let o = dofusion(&[
        "--graph",
        &graph("transport_admissible"),
        "validate",
        "P(y|do(x))",
        "--data",
        &data,
        "--task",
        "transport",
        "--seeds",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("over 10 seeds"));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad_graph = write(&dir, "g", "var X\nX -> Q\n");
    let data = write(&dir, "obs", "obs\n");
    assert_eq!(dofusion(&["--graph", &bad_graph, "identify", "P(y|do(x))", "--data", &data]).status.code(), Some(1));
    assert_eq!(dofusion(&["identify", "P(y|do(x))", "--data", &data]).status.code(), Some(1));
    assert_eq!(dofusion(&["--graph", &graph("backdoor_small"), "adjust", "C", "Y"]).status.code(), Some(1));
    assert_eq!(dofusion(&["--graph", &graph("backdoor_small"), "identify", "P(y|do(c)) P(e)", "--data", &data]).status.code(), Some(1));
    assert_eq!(dofusion(&["--help"]).status.code(), Some(0));
}
