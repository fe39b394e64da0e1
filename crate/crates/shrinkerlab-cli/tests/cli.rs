//! End-to-end checks of the binary: exit-code contract, report schemas,
//! and byte-level determinism modulo the timestamp field.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shrinkerlab"))
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("shrinkerlab_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn spectrum_on_catalog_sphere_exits_zero() {
    let dir = tempdir("spectrum");
    let status = bin()
        .args([
            "spectrum",
            "--catalog",
            "sphere",
            "--level",
            "3",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.join("spectrum.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let report = &json["report"];
    assert!(report["lambda"].as_array().unwrap().len() == 3);
    assert_eq!(report["paper_interval_check"], "inside");
    assert!(report["multiplicity_groups"][0].as_array().unwrap().len() == 3);
    for l in report["lambda"].as_array().unwrap() {
        let v = l.as_f64().unwrap();
        assert!((v - 0.5).abs() < 0.02, "lambda {v}");
    }
}

#[test]
fn missing_file_exits_two() {
    let dir = tempdir("missing");
    let output = bin()
        .args(["validate", "definitely_not_here.off", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn non_manifold_mesh_exits_two_and_names_edge() {
    let dir = tempdir("nonmanifold");
    // Three triangles sharing one edge.
    let off = "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 -1 0\n3 0 1 2\n3 0 3 1\n3 0 1 4\n";
    let path = dir.join("broken.off");
    std::fs::write(&path, off).unwrap();
    let output = bin().arg("validate").arg(&path).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("non-manifold") && stderr.contains("(0,1)"),
        "stderr: {stderr}"
    );
}

#[test]
fn bad_usage_exits_two() {
    let output = bin().args(["spectrum", "--nonsense-flag"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn check_failure_exits_one() {
    // The radius-1 sphere is not a shrinker: the spectrum gate reports
    // not_applicable (no failure), but identity residuals blow past their
    // tolerances, which is a check failure, not an input error.
    let dir = tempdir("fail");
    let output = bin()
        .args([
            "verify-identities",
            "--catalog",
            "sphere",
            "--radius",
            "1.0",
            "--level",
            "3",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = std::fs::read_to_string(dir.join("identities.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["passed"], false);
    assert!(!json["failures"].as_array().unwrap().is_empty());
}

#[test]
fn reports_are_deterministic_modulo_timestamp() {
    let dir_a = tempdir("det_a");
    let dir_b = tempdir("det_b");
    for dir in [&dir_a, &dir_b] {
        let status = bin()
            .args(["spectrum", "--catalog", "sphere", "--level", "2", "--out"])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read_to_string(dir_a.join("spectrum.json")).unwrap();
    let b = std::fs::read_to_string(dir_b.join("spectrum.json")).unwrap();
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
}

#[test]
fn growth_csv_has_fixed_header() {
    let dir = tempdir("growthcsv");
    let status = bin()
        .args([
            "growth",
            "--catalog",
            "cylinder",
            "--level",
            "32",
            "--halflength",
            "12",
            "--radii",
            "2:10:1",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("growth_profile.csv")).unwrap();
    assert!(csv.starts_with("r,area,bound\n"));
    assert_eq!(csv.lines().count(), 10); // header + 9 radii
}

#[test]
fn solve_writes_trace_and_mesh() {
    let dir = tempdir("solve");
    let status = bin()
        .args([
            "solve",
            "--catalog",
            "sphere",
            "--radius",
            "1.9",
            "--level",
            "2",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("solve_trace.csv")).unwrap();
    assert!(csv.starts_with("iter,energy,step\n"));
    assert!(Path::new(&dir.join("solve_relaxed.off")).exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("solve.json")).unwrap()).unwrap();
    let r = json["report"]["final_mean_radius"].as_f64().unwrap();
    assert!((r - 2.0).abs() <= 0.02, "relaxed radius {r}");
}

#[test]
fn config_file_source_works() {
    let dir = tempdir("config");
    let cfg = dir.join("exemplar.cfg");
    std::fs::write(&cfg, "kind = sphere\nradius = 2.0\nresolution = 2\n").unwrap();
    let status = bin()
        .args(["catalog", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("catalog.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["exact"], true);
    assert_eq!(json["report"]["vertex_count"], 162);
}

#[test]
fn reilly_field_and_domain_grammar() {
    let dir = tempdir("reilly");
    let status = bin()
        .args([
            "reilly",
            "--field",
            "poly:0,1,0,0,0,0.5",
            "--domain",
            "shell:0.5:1.5",
            "--level",
            "5",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let output = bin()
        .args(["reilly", "--field", "bogus", "--domain", "ball:1", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn budgets_reject_open_meshes() {
    let dir = tempdir("budgets_open");
    let output = bin()
        .args([
            "budgets",
            "--catalog",
            "cylinder",
            "--level",
            "24",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn spectrum_dumps_eigenfunctions_on_request() {
    let dir = tempdir("eigdump");
    let status = bin()
        .args([
            "spectrum",
            "--catalog",
            "sphere",
            "--level",
            "2",
            "--pairs",
            "2",
            "--dump-eigenfunctions",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("spectrum_mesh.off").exists());
    let u0 = std::fs::read_to_string(dir.join("spectrum_eigenfunction_0.txt")).unwrap();
    assert_eq!(u0.lines().count(), 162);
    assert!(u0.lines().all(|l| l.parse::<f64>().is_ok()));
}

#[test]
fn invalid_tolerance_exits_two() {
    let output = bin()
        .args(["barrier", "--tol", "-1.0"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
