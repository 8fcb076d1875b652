//! End-to-end checks of the `lgc` binary: subcommands, exit codes, and the
//! per-cell output tree.

use std::path::PathBuf;
use std::process::Command;

fn lgc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lgc"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lgc-cli-test-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_manifest(dir: &std::path::Path, body: &str) -> PathBuf {
    let path = dir.join("manifest.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn validate_accepts_a_good_manifest_and_exits_zero() {
    let dir = temp_dir("validate-ok");
    let manifest = write_manifest(
        &dir,
        r#"
problem = "xor"
activations = ["tanh"]
init_ranges = [1.0]
regimes = ["micro"]
output_dir = "out"
"#,
    );
    let out = lgc().arg("validate").arg(&manifest).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn usage_errors_exit_one() {
    // Unknown subcommand.
    let out = lgc().arg("explode").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Invalid manifest field.
    let dir = temp_dir("validate-bad");
    let manifest = write_manifest(
        &dir,
        r#"
problem = "xor"
activations = ["softmax"]
init_ranges = [1.0]
regimes = ["micro"]
output_dir = "out"
"#,
    );
    let out = lgc().arg("validate").arg(&manifest).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("softmax"), "actionable message: {stderr}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn missing_dataset_exits_two() {
    let dir = temp_dir("missing-data");
    let manifest = write_manifest(
        &dir,
        r#"
problem = "heart"
activations = ["tanh"]
init_ranges = [1.0]
regimes = ["macro"]
output_dir = "out"
"#,
    );
    let out = lgc()
        .arg("run")
        .arg(&manifest)
        .env("LGC_DATA_DIR", dir.join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn summarize_on_a_missing_cell_exits_two() {
    let out = lgc()
        .arg("summarize")
        .arg("/nonexistent/cell")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_summarize_render_round_trip() {
    let dir = temp_dir("round-trip");
    let out_dir = dir.join("out");
    let manifest = write_manifest(
        &dir,
        &format!(
            r#"
problem = "xor"
activations = ["tanh"]
init_ranges = [1.0]
regimes = ["macro"]
master_seed = 7
output_dir = "{}"

[overrides]
walk_count = 5
macro_steps = 60
"#,
            out_dir.display()
        ),
    );

    let out = lgc().arg("run").arg(&manifest).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let cell = out_dir.join("xor_tanh_macro_r1");
    assert!(cell.join("cloud.csv").exists());
    assert!(cell.join("metadata.json").exists());
    assert!(cell.join("attractors.json").exists());
    assert!(cell.join("lgc.png").exists());

    // Interrupted-run hygiene: no temp files left behind.
    for entry in std::fs::read_dir(&cell).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(
            !name.to_string_lossy().ends_with(".tmp"),
            "leftover temp file {name:?}"
        );
    }

    let out = lgc().arg("summarize").arg(&cell).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("records: 300 (5 walks x 60 steps)"), "{text}");
    assert!(text.contains("master seed: 7"), "{text}");
    assert!(text.contains("thresholds:"), "{text}");

    let out = lgc()
        .arg("summarize")
        .arg(&cell)
        .arg("--json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["record_count"], 300);
    let fractions = report["curvature_fractions"].as_array().unwrap();
    let total: f64 = fractions
        .iter()
        .map(|f| f["fraction"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12, "fractions sum to {total}");

    let out = lgc()
        .arg("render")
        .arg(&cell)
        .arg("--color-by")
        .arg("curvature")
        .arg("--x-scale")
        .arg("sqrt")
        .arg("--panes")
        .arg("--out")
        .arg(cell.join("custom"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let listed = String::from_utf8_lossy(&out.stdout);
    assert!(listed.lines().count() >= 1);
    for line in listed.lines() {
        assert!(PathBuf::from(line).exists(), "missing render output {line}");
    }

    // EGen coloring has no data on XOR: usage error, exit 1.
    let out = lgc()
        .arg("render")
        .arg(&cell)
        .arg("--color-by")
        .arg("egen")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn reruns_are_byte_identical_and_seed_flag_changes_results() {
    let dir = temp_dir("determinism");
    let manifest_body = |out: &str| {
        format!(
            r#"
problem = "xor"
activations = ["elu"]
init_ranges = [1.0]
regimes = ["macro"]
master_seed = 11
output_dir = "{out}"

[overrides]
walk_count = 4
macro_steps = 40
"#
        )
    };
    let a = dir.join("a");
    let b = dir.join("b");
    let manifest_a = write_manifest(&dir, &manifest_body(&a.display().to_string()));
    assert_eq!(
        lgc()
            .arg("run")
            .arg(&manifest_a)
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    let manifest_b = dir.join("manifest-b.toml");
    std::fs::write(&manifest_b, manifest_body(&b.display().to_string())).unwrap();
    assert_eq!(
        lgc()
            .arg("run")
            .arg(&manifest_b)
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    let cloud_a = std::fs::read(a.join("xor_elu_macro_r1/cloud.csv")).unwrap();
    let cloud_b = std::fs::read(b.join("xor_elu_macro_r1/cloud.csv")).unwrap();
    assert_eq!(cloud_a, cloud_b);

    // A different seed produces a different cloud.
    let c = dir.join("c");
    assert_eq!(
        lgc()
            .arg("run")
            .arg(&manifest_a)
            .arg("--seed")
            .arg("12")
            .arg("--output")
            .arg(&c)
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    let cloud_c = std::fs::read(c.join("xor_elu_macro_r1/cloud.csv")).unwrap();
    assert_ne!(cloud_a, cloud_c);

    std::fs::remove_dir_all(dir).ok();
}
