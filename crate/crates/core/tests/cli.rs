use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use meshla::cli::{baseline_actions, Strategy};
use meshla::config::ScenarioConfig;
use meshla::output::SERIES_COLUMNS;
use tempfile::TempDir;

fn meshla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshla")).args(args).output().expect("binary runs")
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, config: &ScenarioConfig) -> String {
    let path = dir.join("scenario.json");
    std::fs::write(&path, config.to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn small_grid() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.engine.horizon = 30;
    c.engine.warmup = 10;
    c
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

/// Reads a series file back and checks its shape; returns the data rows.
fn read_series(path: &Path, slots: usize) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), SERIES_COLUMNS);
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), slots);
    for (t, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), t);
        for (i, field) in row.iter().enumerate() {
            let value: f64 = field.parse().unwrap();
            assert!(value.is_finite() && value >= 0.0, "column {i}: {field}");
        }
    }
    rows
}

fn read_summary(path: &Path) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    for key in ["mean_delivered", "mean_connectivity", "mean_interference", "mean_cq", "switch_rate"] {
        assert!(v["summary"][key].is_number(), "{key}");
    }
    assert!(v["convergence"]["nodes"].is_array());
    v
}

#[test]
fn run_writes_series_and_summary_per_seed() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_grid());
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let status = meshla(&["run", "--config", &config, "--seed", "4", "--out", out_s]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(files_in(&out), ["series_seed4.csv", "summary_seed4.json"]);
    read_series(&out.join("series_seed4.csv"), 30);
    let summary = read_summary(&out.join("summary_seed4.json"));
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["summary"]["evaluated_slots"], 20);
}

#[test]
fn twenty_seeds_give_forty_files() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_grid());
    let out = tmp.path().join("out");
    let mut args =
        vec!["run".to_owned(), "--config".into(), config, "--out".into(), out.to_str().unwrap().into()];
    for seed in 1..=20 {
        args.extend(["--seed".to_owned(), seed.to_string()]);
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(meshla(&args).status.code(), Some(0));
    let names = files_in(&out);
    assert_eq!(names.len(), 40);
    for seed in 1..=20 {
        assert!(names.contains(&format!("series_seed{seed}.csv")));
        assert!(names.contains(&format!("summary_seed{seed}.json")));
    }
}

#[test]
fn flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_grid());
    let out = tmp.path().join("o");
    let args = ["run", "--config", &config, "--out", out.to_str().unwrap(), "--slots", "12", "--warmup", "2"];
    assert_eq!(meshla(&args).status.code(), Some(0));
    // Without --seed the file's seed is used.
    read_series(&out.join("series_seed1.csv"), 12);
    assert_eq!(read_summary(&out.join("summary_seed1.json"))["summary"]["warm_up"], 2);
}

#[test]
fn usage_and_config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(meshla(&["run", "--config", "/nonexistent/x.json", "--out", out]).status.code(), Some(2));
    assert_eq!(meshla(&["run"]).status.code(), Some(2));
    assert_eq!(meshla(&["launch"]).status.code(), Some(2));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"topology\": {\n    \"layout\": 3,\n").unwrap();
    let o = meshla(&["run", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let mut c = small_grid();
    c.topology.num_radios = 20;
    let config = write_config(tmp.path(), &c);
    let o = meshla(&["run", "--config", &config, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("topology.num_radios"));

    let config = write_config(tmp.path(), &small_grid());
    let dup = ["run", "--config", &config, "--out", out, "--seed", "3", "--seed", "3"];
    assert_eq!(meshla(&dup).status.code(), Some(2));
}

#[test]
fn sweep_emits_a_comparison_table() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_grid());
    let out = tmp.path().join("sweep");
    let out_s = out.to_str().unwrap();
    let args =
        ["sweep", "--config", &config, "--out", out_s, "--parameter", "num_radios", "--values", "1,2,3"];
    let mut args: Vec<&str> = args.to_vec();
    args.extend(["--seed", "1", "--seed", "2"]);
    let o = meshla(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(out.join("comparison_num_radios.csv")).unwrap();
    assert_eq!(&reader.headers().unwrap()[0], "num_radios");
    let values: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_owned()).collect();
    assert_eq!(values, ["1", "2", "3"]);
    for v in 1..=3 {
        assert_eq!(files_in(&out.join(format!("num_radios_{v}"))).len(), 4);
    }

    let args = ["sweep", "--config", &config, "--out", out_s, "--parameter", "K", "--values", "2,10"];
    assert_eq!(meshla(&args).status.code(), Some(0));
    let reader = csv::Reader::from_path(out.join("comparison_K.csv")).unwrap();
    assert_eq!(reader.into_records().count(), 2);
}

#[test]
fn sweep_rejects_bad_requests() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_grid());
    let out = tmp.path().join("sweep");
    let out = out.to_str().unwrap();
    let unknown = ["sweep", "--config", &config, "--out", out, "--parameter", "speed", "--values", "1"];
    assert_eq!(meshla(&unknown).status.code(), Some(2));
    let empty = ["sweep", "--config", &config, "--out", out, "--parameter", "lambda", "--values"];
    assert_eq!(meshla(&empty).status.code(), Some(2));
    let unparsable =
        ["sweep", "--config", &config, "--out", out, "--parameter", "feedback", "--values", "loud"];
    assert_eq!(meshla(&unparsable).status.code(), Some(2));
}

#[test]
fn baselines() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &small_grid());
    let out = tmp.path().join("base");
    let out_s = out.to_str().unwrap();
    let o = meshla(&["baseline", "--config", &config, "--out", out_s, "--strategy", "common-channel"]);
    assert_eq!(o.status.code(), Some(0));
    let common = read_series(&out.join("series_seed1.csv"), 30);

    // Every link is usable and every pair of links conflicts at its peak.
    let scenario = small_grid().build().unwrap();
    let links = scenario.topology.link_count() as u64;
    let peak: u64 =
        (0..links).map(|l| scenario.topology.interference_set(l as usize).unwrap().len() as u64).sum();
    for row in &common {
        assert_eq!(row[2].parse::<u64>().unwrap(), links);
        assert_eq!(row[3].parse::<u64>().unwrap(), peak);
    }

    let random_dir = tmp.path().join("random");
    let args = [
        "baseline",
        "--config",
        &config,
        "--out",
        random_dir.to_str().unwrap(),
        "--strategy",
        "random-static",
    ];
    assert_eq!(meshla(&args).status.code(), Some(0));
    let first = std::fs::read(random_dir.join("series_seed1.csv")).unwrap();
    assert_eq!(meshla(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(random_dir.join("series_seed1.csv")).unwrap(), first);
    for row in read_series(&random_dir.join("series_seed1.csv"), 30) {
        assert!(row[3].parse::<u64>().unwrap() <= peak);
        assert_eq!(&row[7], "0");
    }

    let args = ["baseline", "--config", &config, "--out", out_s, "--strategy", "loudest"];
    assert_eq!(meshla(&args).status.code(), Some(2));
}

#[test]
fn random_static_is_fixed_per_seed() {
    let scenario = small_grid().build().unwrap();
    let a = baseline_actions(&scenario, Strategy::RandomStatic, 9);
    assert_eq!(a, baseline_actions(&scenario, Strategy::RandomStatic, 9));
    assert_ne!(a, baseline_actions(&scenario, Strategy::RandomStatic, 10));
    assert!(a.iter().enumerate().all(|(v, &x)| x < scenario.catalog(v).len()));
    assert_eq!(baseline_actions(&scenario, Strategy::CommonChannel, 9), vec![0; 25]);
}

#[test]
fn cli_output_matches_golden_series() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &ScenarioConfig::default());
    let out = tmp.path().join("g");
    let o = meshla(&["run", "--config", &config, "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/default_seed1.csv");
    assert_eq!(std::fs::read(out.join("series_seed1.csv")).unwrap(), std::fs::read(golden).unwrap());
}

#[test]
fn shipped_configs_build() {
    for name in ["grid5x5.json", "line4.json"] {
        let c = ScenarioConfig::load(&repo_config(name)).unwrap();
        c.build().unwrap();
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
    }
}

#[test]
fn default_config_round_trips_through_the_cli() {
    let o = meshla(&["default-config"]);
    assert_eq!(o.status.code(), Some(0));
    let parsed = ScenarioConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(parsed, ScenarioConfig::default());
}
