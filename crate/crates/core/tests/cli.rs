use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rblab::{count_solutions_exhaustive, generate_instance, Instance, Params};
use serde_json::Value;

fn rblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rblab"))
        .args(args)
        .env_remove("RBLAB_OUT_DIR")
        .output()
        .unwrap()
}

fn summary(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_and_count_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("i.json");
    summary(&rblab(&[
        "generate",
        "--n",
        "8",
        "--alpha",
        "0.5",
        "--p",
        "0.5",
        "--seed",
        "3",
        "--out",
        path(&file),
    ]));
    let text = fs::read_to_string(&file).unwrap();
    let params = Params::calibrated(8, 0.5, 0.5, 2, 3).unwrap();
    let library = generate_instance(&params).unwrap();
    assert_eq!(text, library.to_json().unwrap());
    let count = summary(&rblab(&["count", "--in", path(&file)]));
    assert_eq!(count["solution_count"], count_solutions_exhaustive(&library).unwrap());
    let solve = summary(&rblab(&["solve", "--in", path(&file), "--count-all", "--order", "mrv"]));
    assert_eq!(solve["solution_count"], count["solution_count"]);
}

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (file, jobs) in [(&a, "1"), (&b, "3")] {
        summary(&rblab(&[
            "generate",
            "--n",
            "9",
            "--alpha",
            "0.5",
            "--p",
            "0.5",
            "--variant",
            "symmetric",
            "--seed",
            "11",
            "--jobs",
            jobs,
            "--out",
            path(file),
        ]));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sub_prob_csv_has_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.csv");
    let out = summary(&rblab(&[
        "sub-prob",
        "--n",
        "6",
        "--alpha",
        "0.5",
        "--p",
        "0.5",
        "--trials",
        "120",
        "--format",
        "csv",
        "--out",
        path(&file),
    ]));
    assert_eq!(out["trials"], 120);
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 122);
    assert!(text.lines().last().unwrap().starts_with("aggregate,trials=120,"));
}

#[test]
fn out_dir_receives_default_names() {
    let dir = tempfile::tempdir().unwrap();
    summary(&rblab(&[
        "sat-prob",
        "--n",
        "6",
        "--alpha",
        "0.5",
        "--p",
        "0.5",
        "--trials",
        "30",
        "--out-dir",
        path(dir.path()),
    ]));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sat-prob.json")).unwrap()).unwrap();
    assert_eq!(report["trials"], 30);
    assert!(report.get("wall_time").is_none());
}

#[test]
fn restrict_symmap_and_encode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let sub = dir.path().join("sub.json");
    let cnf = dir.path().join("i.cnf");
    let mapped = dir.path().join("m.json");
    summary(&rblab(&[
        "generate",
        "--n",
        "8",
        "--alpha",
        "0.5",
        "--p",
        "0.5",
        "--seed",
        "4",
        "--out",
        path(&inst),
    ]));
    summary(&rblab(&[
        "restrict",
        "--in",
        path(&inst),
        "--var",
        "2",
        "--value",
        "1",
        "--out",
        path(&sub),
    ]));
    let sub_instance = Instance::from_json(&fs::read_to_string(&sub).unwrap()).unwrap();
    assert_eq!(sub_instance.n(), 7);
    assert_eq!(sub_instance.provenance().derivation.len(), 1);
    let enc = summary(&rblab(&["encode", "--in", path(&inst), "--out", path(&cnf)]));
    assert_eq!(enc["num_vars"], 24);
    assert!(fs::read_to_string(&cnf).unwrap().contains("p cnf 24 "));
    let out = rblab(&[
        "symmap",
        "--in",
        path(&inst),
        "--constraint",
        "0",
        "--out",
        path(&mapped),
    ]);
    let s = summary(&out);
    let original = Instance::from_json(&fs::read_to_string(&inst).unwrap()).unwrap();
    let quad = (0..original.constraints().len())
        .find_map(|ci| rblab::symmetry::find_symmetry_quadruple(&original, ci, None).unwrap())
        .unwrap();
    let ci = quad.constraint_index.to_string();
    let s2 = summary(&rblab(&[
        "symmap",
        "--in",
        path(&inst),
        "--constraint",
        &ci,
        "--out",
        path(&mapped),
    ]));
    assert_eq!(s2["quadruple"], serde_json::to_value(quad).unwrap());
    let image = Instance::from_json(&fs::read_to_string(&mapped).unwrap()).unwrap();
    assert_eq!(
        image,
        rblab::symmetry::apply_symmetry_mapping(&original, &quad).unwrap()
    );
    assert_eq!(s["command"], "symmap");
}

#[test]
fn exit_codes() {
    let bad_k = rblab(&["generate", "--n", "5", "--alpha", "0.5", "--p", "0.5", "--k", "9"]);
    assert_eq!(bad_k.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_k.stderr).contains("--k"));
    let bad_p = rblab(&["sat-prob", "--n", "5", "--alpha", "0.5", "--p", "1.5", "--trials", "10"]);
    assert_eq!(bad_p.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_p.stderr).contains("--p"));
    let guard = rblab(&[
        "mean-count",
        "--n",
        "30",
        "--alpha",
        "0.5",
        "--p",
        "0.5",
        "--trials",
        "10",
    ]);
    assert_eq!(guard.status.code(), Some(3));
    let missing = rblab(&["count", "--in", "/nonexistent/instance.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(rblab(&["bogus"]).status.code(), Some(2));
    assert_eq!(rblab(&["--help"]).status.code(), Some(0));
}
