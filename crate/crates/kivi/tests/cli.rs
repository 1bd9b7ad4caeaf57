use std::path::Path;
use std::process::{Command, Output};

fn kivi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kivi"))
        .args(args)
        .current_dir(cwd)
        .env_remove("KIVI_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn bench_config(edit: impl FnOnce(&mut serde_json::Value)) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/estimator_bench.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["kivi"]["iterations"] = 30.into();
    v["tracking"] = false.into();
    v["output_dir"] = "out".into();
    edit(&mut v);
    v
}

fn write(dir: &Path, name: &str, v: &serde_json::Value) {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(v).unwrap()).unwrap();
}

#[test]
fn unknown_kind_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.json", &bench_config(|v| v["kind"] = "mystery".into()));
    let out = kivi(&["run", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kind") && err.contains("mystery"), "{err}");
}

#[test]
fn invalid_field_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.json", &bench_config(|v| v["kivi"]["n_q"] = 0.into()));
    let out = kivi(&["run", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_q"));
    let missing = kivi(&["run", "absent.json"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_code_three_and_keeps_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.json", &bench_config(|v| v["kivi"]["optimizer"]["lr"] = 1e200.into()));
    let out = kivi(&["run", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(tmp.path().join("out/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("iteration,elbo,kl,reconstruction"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty() && rows.len() < 30);
    assert!(!tmp.path().join("out/report.json").exists());
}

#[test]
fn overrides_and_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.json", &bench_config(|_| {}));
    let out = Command::new(env!("CARGO_BIN_EXE_kivi"))
        .args(["run", "c.json", "--seed", "9", "--no-reverse-trick"])
        .current_dir(tmp.path())
        .env("KIVI_OUTPUT_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("root/out/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["kivi"]["reverse_trick"], false);
    assert_eq!(report["metrics"]["reverse_trick"], 0.0);

    let again = kivi(&["run", "c.json", "--output-dir", "second"], tmp.path());
    assert!(again.status.success());
    let cmp = kivi(&["compare", "root/out", "second", "--csv", "cmp.csv"], tmp.path());
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    assert!(String::from_utf8_lossy(&cmp.stdout).contains("kivi.mean_norm"));
    assert!(tmp.path().join("cmp.csv").is_file());

    let plot = kivi(&["export-plotdata", "second"], tmp.path());
    assert!(plot.status.success(), "{}", String::from_utf8_lossy(&plot.stderr));
    assert!(tmp.path().join("second/plotdata/samples_scatter.csv").is_file());
}
