use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

/// Run the binary; returns exit code and parsed JSON report.
fn dcube(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_dcube")).args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let doc = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
    (code, doc)
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn validate_examples() {
    let (code, doc) = dcube(&["validate", &fixture("rot6.fsys")]);
    assert_eq!((code, &doc["valid"]), (0, &Value::Bool(true)));
    let (code, _) = dcube(&["validate", &fixture("example83.affine")]);
    assert_eq!(code, 0);
    let (code, doc) = dcube(&["validate", &fixture("invalid/noncommuting.fsys")]);
    assert_eq!(code, 1);
    assert!(doc["report"]["commutation_failure"].is_object());
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "bad.fsys");
    std::fs::write(&path, "finite-system\npoints = 3\nd = 1\nT1 = [0,0,1]\n").unwrap();
    let (code, doc) = dcube(&["validate", &path]);
    assert_eq!(code, 1, "{doc}");
    std::fs::write(&path, "finite-system\npoints = 3\nd = 1\nT1 = [0,x,1]\n").unwrap();
    let (code, doc) = dcube(&["verify", &path]);
    assert_eq!(code, 3);
    assert!(doc["error"].as_str().unwrap().contains("line 4"), "{doc}");
    std::fs::write(&path, "mystery\n").unwrap();
    assert_eq!(dcube(&["verify", &path]).0, 3);
    assert_eq!(dcube(&["verify", &tmp(&dir, "missing.fsys")]).0, 3);
}

#[test]
fn ucpp_on_rot6() {
    let (code, doc) = dcube(&["ucpp", &fixture("rot6.fsys")]);
    assert_eq!(code, 0);
    assert_eq!(doc["ucpp"], true);
    assert_eq!(doc["q"], 108);
}

#[test]
fn ucpp_on_raw_cube_set() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "raw.cubes");
    std::fs::write(&path, "cube-set d=2 dirs=1,2\n0,0,0,0\n0,0,0,1\n").unwrap();
    let (code, doc) = dcube(&["ucpp", &path]);
    assert_eq!(code, 1);
    assert_eq!(doc["witness"]["vertex"], "11");
}

#[test]
fn cubes_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = tmp(&dir, "q.cubes");
    let (code, doc) = dcube(&["cubes", &fixture("rot6.fsys"), "--dump", &path]);
    assert_eq!(code, 0);
    assert_eq!((doc["q"].as_u64(), doc["k"].as_u64()), (Some(108), Some(18)));
    let (code, doc) = dcube(&["ucpp", &path]);
    assert_eq!((code, doc["q"].as_u64()), (0, Some(108)));
    let (_, doc) = dcube(&["cubes", &fixture("rot6.fsys"), "--dirs", "1"]);
    assert_eq!(doc["k"], 6);
}

#[test]
fn joining_of_parity_sets_is_empty() {
    let b1 = fixture("parityB1.pset");
    let b2 = fixture("parityB2.pset");
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "j.pset");
    let (code, doc) = dcube(&["joining", &b1, &b2, &b1, "-o", &out]);
    assert_eq!(code, 0);
    assert_eq!(doc["empty"], true);
    assert_eq!(doc["contains_zero"], false);
    let (_, doc) = dcube(&["verify", &out]);
    assert_eq!(doc["status"], "pass");
    assert_eq!(dcube(&["joining", &b1, &fixture("rot6.fsys")]).0, 3);
}

#[test]
fn affine_check_example() {
    let (code, doc) = dcube(&["affine-check", &fixture("example83.affine")]);
    assert_eq!(code, 0);
    assert_eq!(doc["conditions"]["cond1"], true);
    assert_eq!(doc["validation"]["nilpotency_index"], serde_json::json!([2, 2]));
    let (_, doc) = dcube(&["affine-check", &fixture("jordan3.affine")]);
    assert_eq!(doc["conditions"]["cond1"], false);
}

#[test]
fn formula_test_verdicts() {
    let (code, doc) = dcube(&["formula-test", &fixture("jordan3.affine"), "--range", "3", "--q", "4"]);
    assert_eq!((code, doc["verdict"].as_str()), (0, Some("witness_found")));
    let (code, doc) = dcube(&["formula-test", &fixture("rot6.affine")]);
    assert_eq!((code, doc["verdict"].as_str()), (0, Some("identity_holds")));
}

#[test]
fn discretize_rotation_gives_rot6() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "d.fsys");
    let (code, doc) = dcube(&["discretize", &fixture("rot6.affine"), "--q", "6", "-o", &out, "--full"]);
    assert_eq!((code, doc["points"].as_u64()), (0, Some(6)));
    let strip = |s: String| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(std::fs::read_to_string(&out).unwrap()), strip(std::fs::read_to_string(fixture("rot6.fsys")).unwrap()));
    assert_eq!(dcube(&["discretize", &fixture("example83.affine"), "--q", "2", "-o", &out]).0, 3);
}

#[test]
fn return_times_on_rot6() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "r.pset");
    let (code, doc) = dcube(&["return-times", &fixture("rot6.fsys"), "--point", "0", "--target", "0", "-o", &out]);
    assert_eq!(code, 0);
    assert_eq!(doc["return_set"]["residues"].as_array().unwrap().len(), 3);
    assert_eq!(doc["joining_containment"]["passed"], true);
    let (code, doc) = dcube(&["validate", &out]);
    assert_eq!((code, &doc["set"]), (0, &serde_json::json!({ "k": 2, "moduli": [6, 3], "residues": [[0, 0], [2, 2], [4, 1]] })));
}

#[test]
fn hypotheses_unmet_exit_two() {
    let (code, doc) = dcube(&["structure", &fixture("union_z4_z2.fsys")]);
    assert_eq!(code, 2, "{doc}");
    assert_eq!(doc["status"], "hypotheses_unmet");
    assert_eq!(dcube(&["rpp", &fixture("identity3.fsys")]).0, 2);
}

#[test]
fn rpp_and_structure_on_rot6() {
    let (code, doc) = dcube(&["rpp", &fixture("rot6.fsys")]);
    assert_eq!(code, 0);
    assert_eq!(doc["r"]["diagonal"], true);
    assert_eq!(doc["characterization"]["agree"], true);
    let (code, doc) = dcube(&["structure", &fixture("rot6.fsys"), "--basepoint", "2"]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["decomposition"]["injective"], true);
}

#[test]
fn quotients_write_systems() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "q.fsys");
    let (code, doc) = dcube(&["quotient", &fixture("rot6.fsys"), "--relation", "qh", "--gens", "2", "-o", &out]);
    assert_eq!((code, doc["points"].as_u64()), (0, Some(2)));
    assert_eq!(dcube(&["verify", &out]).0, 0);
    let (code, doc) = dcube(&["quotient", &fixture("rot6.fsys"), "--relation", "rpp"]);
    assert_eq!((code, doc["points"].as_u64()), (0, Some(6)));
    assert_eq!(dcube(&["quotient", &fixture("rot6.fsys"), "--relation", "qh"]).0, 3);
}

fn top_level_fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixtures()).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_file()).collect();
    v.sort();
    v
}

#[test]
fn verify_passes_on_every_fixture() {
    let files = top_level_fixtures();
    assert!(files.len() >= 10);
    for f in files {
        let (code, doc) = dcube(&["verify", &f.display().to_string()]);
        assert_eq!(code, 0, "{}: {doc}", f.display());
    }
}

#[test]
fn human_output_and_thread_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_dcube"))
        .args(["verify", &fixture("rot6.fsys"), "--human", "--threads", "2"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gluing"), "{text}");
    assert!(!text.contains("threads"));
    let (_, doc) = dcube(&["--threads=3", "ucpp", &fixture("rot6.fsys")]);
    assert_eq!(doc["command"], serde_json::json!(["ucpp", fixture("rot6.fsys")]));
}

