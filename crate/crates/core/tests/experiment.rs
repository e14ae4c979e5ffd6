use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dpla_core::data::SynthParams;
use dpla_core::dp_pipelines::DpMethod;
use dpla_core::experiment::{emit_report, run_sweep, summarize, ExperimentConfig, RESULTS_COLUMNS};

fn small_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::synthetic(SynthParams::new(400, 4, 1, 2.0, 1));
    config.epsilons = vec![0.1, 1.0, 100.0];
    config.seeds = vec![1, 2, 3];
    config
}

fn emit(config: &ExperimentConfig, dir: &Path) -> String {
    let results = run_sweep(config).unwrap();
    emit_report(&results, &summarize(&results), dir, false).unwrap();
    fs::read_to_string(dir.join("results.csv")).unwrap()
}

fn read_rows(csv_text: &str) -> Vec<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    rdr.records()
        .map(|r| header.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect())
        .collect()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config();
    config.threads = Some(1);
    let one = emit(&config, &dir.path().join("one"));
    config.threads = Some(4);
    let four = emit(&config, &dir.path().join("four"));
    assert_eq!(one, four);
    let rows = read_rows(&one);
    assert_eq!(rows.len(), 3 * 3 * 3);
    assert!(rows.iter().all(|r| r["status"] == "ok" && r["wall_time_seconds"].is_empty()));
    let header = one.lines().next().unwrap();
    assert_eq!(header, RESULTS_COLUMNS.join(","));
}

#[test]
fn cells_are_isolated_from_their_neighbours() {
    let full = run_sweep(&small_config()).unwrap();
    let mut narrow = small_config();
    narrow.epsilons = vec![1.0];
    narrow.seeds = vec![2];
    narrow.methods = vec![DpMethod::PredictionPerturbation];
    let single = run_sweep(&narrow).unwrap();
    let row = &single.rows[0];
    let same = full.rows.iter().find(|r| r.cell == row.cell).unwrap();
    assert_eq!(same.outcome, row.outcome);
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

#[test]
fn summary_is_recomputable_from_results_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_text = emit(&small_config(), dir.path());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_fingerprint"].as_str().unwrap().len(), 64);

    let mut groups: BTreeMap<(String, String), Vec<BTreeMap<String, String>>> = BTreeMap::new();
    for row in read_rows(&csv_text) {
        groups.entry((row["method"].clone(), row["epsilon"].clone())).or_default().push(row);
    }
    let json_groups = summary["groups"].as_array().unwrap();
    assert_eq!(json_groups.len(), groups.len());
    for g in json_groups {
        let key = (
            g["method"].as_str().unwrap().to_string(),
            dpla_core::experiment::format_float(g["epsilon"].as_f64().unwrap()),
        );
        let rows = &groups[&key];
        for (json_key, csv_key) in [
            ("utility_loss", "utility_loss"),
            ("privacy_leakage", "privacy_leakage"),
            ("true_revealed_records", "true_revealed_records"),
        ] {
            let recomputed = median(rows.iter().map(|r| r[csv_key].parse::<f64>().unwrap()).collect());
            let reported = g[json_key].as_f64().unwrap();
            // results.csv carries 12 significant digits
            assert!((recomputed - reported).abs() <= 1e-11 * reported.abs().max(1.0), "{key:?} {json_key}");
        }
    }
}

#[test]
fn summary_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    emit(&small_config(), dir.path());
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(value, again);
}

#[test]
fn figure_series_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    emit(&small_config(), dir.path());
    for name in ["fig_utility_loss.csv", "fig_privacy_leakage.csv", "fig_trr.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epsilon,input_perturbation,objective_perturbation,prediction_perturbation"
        );
        assert_eq!(lines.count(), 3);
    }
}

#[test]
fn config_file_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let (table, schema) = dpla_core::data::synth_generate(&SynthParams::new(200, 3, 1, 2.0, 2)).unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    table.write_csv(fs::File::create(dir.path().join("data/d.csv")).unwrap()).unwrap();
    fs::write(dir.path().join("data/s.json"), schema.to_json_string()).unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"data_path": "data/d.csv", "schema_path": "data/s.json", "methods": ["objective_perturbation"], "epsilons": [1.0], "seeds": [1]}"#,
    )
    .unwrap();
    let config = ExperimentConfig::from_json_file(&cfg_path).unwrap();
    let results = run_sweep(&config).unwrap();
    assert_eq!(results.rows.len(), 1);
    assert!(results.rows[0].is_ok());
}

#[test]
fn unknown_config_fields_are_rejected() {
    assert!(ExperimentConfig::from_json_str(r#"{"data_path": "synth", "synth": {"n": 100, "seed": 1}, "epsilon": [1]}"#).is_err());
}
