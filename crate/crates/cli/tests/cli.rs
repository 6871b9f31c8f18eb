use std::path::Path;
use std::process::{Command, Output};

use aac_core::cmaes::{default_config, Configuration};
use aac_core::ela::{compute_ela, feature_names, fit_scaler, sample_doe};
use aac_core::nn::{train, LabeledDataset, NnArchitecture, TrainSettings};
use aac_core::pipeline::write_doe_csv;
use aac_core::problems::make_bbob;

fn aac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aac"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_lists_subcommands() {
    let out = aac(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["generate", "label", "train", "predict", "evaluate", "report"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn generate_writes_pool_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"dimension": 2, "n_train_functions": 6, "training_source": "mixed"}"#);
    let out_dir = dir.path().join("run");
    let out = aac(&["--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9", "generate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("pool/manifest.json").exists());
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved["master_seed"], 9);
    assert_eq!(resolved["run_budget_per_dim"], 1000);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"repetitions": 0}"#);
    assert_eq!(aac(&["--config", &bad, "generate"]).status.code(), Some(2));
    let malformed = write_config(dir.path(), "{not json");
    assert_eq!(aac(&["--config", &malformed, "generate"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(aac(&["--config", missing.to_str().unwrap(), "generate"]).status.code(), Some(3));
    let out = dir.path().to_str().unwrap();
    assert_eq!(aac(&["--out", out, "report"]).status.code(), Some(3));
    assert_eq!(aac(&["--out", out, "label"]).status.code(), Some(3));
    let doe = dir.path().join("doe.csv");
    std::fs::write(&doe, "x0,x1,y\n0,0,1\n").unwrap();
    assert_eq!(aac(&["--out", out, "predict", doe.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn predict_prints_a_valid_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let docs: Vec<_> = [1, 8]
        .iter()
        .map(|&fid| sample_doe(&make_bbob(fid, 2, 0).unwrap(), 20, 1).unwrap())
        .collect();
    let elas: Vec<_> = docs.iter().map(|d| compute_ela(d).unwrap()).collect();
    let scaler = fit_scaler(&elas, feature_names()).unwrap();
    let inputs = elas.iter().map(|e| scaler.apply(e).unwrap().values().to_vec()).collect();
    let target = default_config(2).with_continuous([12.0, 0.4, 0.3, 0.5, 0.5, 0.1, 0.1]);
    let data = LabeledDataset::from_configs(inputs, &[target.clone(), target], false).unwrap();
    let arch = NnArchitecture {
        n_hidden: 1,
        hidden_size: 16,
        epochs: 5,
    };
    let model = train(&data, &arch, scaler, &TrainSettings::default(), 0).unwrap();
    std::fs::create_dir_all(dir.path().join("model")).unwrap();
    model.save(&dir.path().join("model/model.json")).unwrap();

    let f = make_bbob(3, 2, 0).unwrap();
    let doe = sample_doe(&f, 20, 2).unwrap();
    let y: Vec<f64> = doe.x.iter().map(|x| f.evaluate(x)).collect();
    let doe_path = dir.path().join("doe.csv");
    write_doe_csv(&doe_path, &doe, &y).unwrap();

    let out = aac(&["--out", dir.path().to_str().unwrap(), "predict", doe_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg: Configuration = serde_json::from_slice(&out.stdout).unwrap();
    cfg.validate().unwrap();
    let again = aac(&["--out", dir.path().to_str().unwrap(), "predict", doe_path.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);
}
