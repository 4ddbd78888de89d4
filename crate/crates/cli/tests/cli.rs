use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SYNTH: &str = r#"
name = "tiny"
pipeline = "base"
paradigm = "dfl"
topology = "ring"
participants = 3
rounds = 2
seed = 11

[model]
hidden1 = 4
hidden2 = 3

[train]
batch_size = 32
epochs = 1
learning_rate = 0.01

[data]
source = "synthetic"

[data.synthetic]
n_features = 3
classes = 2
runs_per_class = 12
samples_per_run = 60
"#;

fn fedsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn valid_synthetic_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let out = dir.path().join("run");
    let o = fedsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in [
        "report.json",
        "ledger.csv",
        "rounds.csv",
        "resolved-config.toml",
        "class-map.json",
        "scaler.json",
        "stationary-plan.json",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["name"], "tiny");
    assert_eq!(report["transport"]["payloads"], 2 * 2 * 3);
}

#[test]
fn cfl_with_ring_names_topology() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SYNTH.replace(r#"paradigm = "dfl""#, r#"paradigm = "cfl""#));
    let out = dir.path().join("run");
    let o = fedsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`topology`"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_field_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("bogus = 1\n{SYNTH}"));
    let o = fedsim(&["run", "--config", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn snapshot_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let first = dir.path().join("first");
    let o = fedsim(&["run", "--config", &cfg, "--seed", "5", "--out", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let snapshot = fs::read_to_string(first.join("resolved-config.toml")).unwrap();
    assert!(snapshot.contains("seed = 5"));

    let second = dir.path().join("second");
    let o = fedsim(&[
        "run",
        "--config",
        first.join("resolved-config.toml").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["report.json", "ledger.csv", "rounds.csv", "resolved-config.toml"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn refuses_non_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let out = dir.path().join("run");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let o = fedsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(out.join("keep.txt")).unwrap(), "x");
}

#[test]
fn one_cell_grid_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let grid = dir.path().join("grid.toml");
    fs::write(
        &grid,
        "pipelines = [\"base\"]\n[[cells]]\nparadigm = \"sdfl\"\ntopology = \"fully\"\n",
    )
    .unwrap();
    let gout = dir.path().join("grid");
    let o = fedsim(&[
        "grid",
        "--config",
        &cfg,
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        gout.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cell = gout.join("base-sdfl-fully");
    assert!(cell.join("report.json").is_file());

    let rout = dir.path().join("run");
    let o = fedsim(&[
        "run",
        "--config",
        cell.join("resolved-config.toml").to_str().unwrap(),
        "--out",
        rout.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(cell.join("report.json")).unwrap(), fs::read(rout.join("report.json")).unwrap());

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(cell.join("report.json")).unwrap()).unwrap();
    let summary = fs::read_to_string(gout.join("summary.csv")).unwrap();
    let mut rows = summary.lines().skip(1);
    let row: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(row[0], "base-sdfl-fully");
    assert_eq!(row[4], "ok");
    assert_eq!(row[7].parse::<f64>().unwrap(), report["test_summary"]["macro"]["f1"].as_f64().unwrap());
    assert!(rows.next().is_none());
    assert!(gout.join("summary.md").is_file());
}

#[test]
fn grid_isolates_failing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    fs::write(
        &grid,
        "pipelines = [\"base\", \"stationary\"]\n[[cells]]\nparadigm = \"dfl\"\ntopology = \"ring\"\n",
    )
    .unwrap();
    let gout = dir.path().join("grid");
    // A moving-average window longer than any run makes only the stationary cell fail.
    let cfg = write_config(dir.path(), &format!("{SYNTH}\n[stationary]\nma_window = 500\n"));
    let o = fedsim(&[
        "grid",
        "--config",
        &cfg,
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        gout.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = fs::read_to_string(gout.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("base-dfl-ring,") && l.contains(",ok,")));
    assert!(summary.lines().any(|l| l.starts_with("stationary-dfl-ring,") && l.contains(",failed,")));
    assert!(gout.join("base-dfl-ring/report.json").is_file());
    assert!(!gout.join("stationary-dfl-ring").exists());
}

fn fresh_run(dir: &Path) -> std::path::PathBuf {
    let cfg = write_config(dir, SYNTH);
    let out = dir.join("run");
    let o = fedsim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

#[test]
fn inspect_fresh_run_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = fresh_run(dir.path());
    let before: Vec<_> = ["report.json", "ledger.csv"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    let o = fedsim(&["inspect", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(text.contains(report["config_digest"].as_str().unwrap()));
    assert!(text.contains(&format!("{} bytes sent", report["transport"]["bytes_sent"])));
    assert!(text.contains(&format!("f1 {:.4}", report["test_summary"]["macro"]["f1"].as_f64().unwrap())));
    let after: Vec<_> = ["report.json", "ledger.csv"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn inspect_names_deleted_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let out = fresh_run(dir.path());
    fs::remove_file(out.join("ledger.csv")).unwrap();
    let o = fedsim(&["inspect", out.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("ledger.csv"), "{}", stderr(&o));
}

#[test]
fn inspect_detects_tampered_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let out = fresh_run(dir.path());
    let ledger = fs::read_to_string(out.join("ledger.csv")).unwrap();
    let mut lines: Vec<String> = ledger.lines().map(String::from).collect();
    let row = &mut lines[1];
    let last = row.pop().unwrap();
    row.push(if last == '0' { '1' } else { '0' });
    fs::write(out.join("ledger.csv"), lines.join("\n") + "\n").unwrap();
    let o = fedsim(&["inspect", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ledger.csv"), "{}", stderr(&o));
}

#[test]
fn synth_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let out = dir.path().join("data.csv");
    let o = fedsim(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "faultNumber,simulationRun,sample,x_1,x_2,x_3");
    assert_eq!(text.lines().count(), 1 + 2 * 12 * 60);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if path.file_name().unwrap().to_str().unwrap().starts_with("grid") {
            assert!(!fedsim_core::config::GridSpec::from_toml(&text).unwrap().cells.is_empty());
        } else {
            let mut cfg = fedsim_core::config::ExperimentConfig::load(&path).unwrap();
            cfg.resolve();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        seen += 1;
    }
    assert!(seen >= 4);
}

#[test]
fn seasonal_example_runs_all_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/synthetic-seasonal.toml");
    let out = dir.path().join("run");
    let o = fedsim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stationary-plan.json")).unwrap()).unwrap();
    let columns = plan["columns"].as_array().unwrap();
    assert_eq!(columns.len(), 6);
    assert!(columns.iter().all(|c| c["detrend"] == true && c["period"] == 24));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["model"]["input_dim"], 30);
    let o = fedsim(&["inspect", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn readme_config_example_parses() {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let start = readme.find("```toml\nname = ").unwrap() + "```toml\n".len();
    let block = &readme[start..start + readme[start..].find("```").unwrap()];
    let mut cfg = fedsim_core::config::ExperimentConfig::from_toml(block).unwrap();
    cfg.resolve();
    cfg.validate().unwrap();
    assert_eq!(cfg.train.clip_norm, Some(5.0));
}
