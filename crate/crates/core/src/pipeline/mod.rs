//! Stage orchestration: generate → label → train → evaluate.
//!
//! Every stage reads and writes plain files under one output directory, so a run can
//! be interrupted and resumed, and every random draw is derived from the master seed.
//!
//! ```text
//! out/config.json            resolved configuration
//! out/pool/manifest.json     training functions (*.rgf trees, *.json MA-BBOB specs)
//! out/labels/<id>.json       tuning record per function
//! out/labels/ledger.csv      screening verdicts
//! out/ela/features.csv       raw features of the accepted functions
//! out/ela/kept.json          features surviving correlation pruning
//! out/model/grid.json        architecture search losses
//! out/model/model.json       trained predictor
//! out/eval/...               test-suite tuning, per-run AUCs and the comparison report
//! ```

mod stages;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cmaes::CONTINUOUS_DOMAINS;
use crate::ela::Doe;
use crate::error::{Error, Result};
use crate::nn::TrainSettings;
use crate::rgf::RgfGenParams;
use crate::stats::ComparisonRow;
use crate::tpe::TpeSettings;

pub use stages::{
    load_pool, predict_from_doe, run_all, stage_evaluate, stage_generate, stage_label, stage_train, LabelRecord,
    PoolEntry, PoolManifest, SourceKind,
};

const MAX_LAMBDA: usize = CONTINUOUS_DOMAINS[0].2 as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingSource {
    Rgf,
    Mabbob,
    Mixed,
}

/// Everything a pipeline run depends on. Unset optional fields take
/// dimension-dependent defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dimension: usize,
    pub n_train_functions: usize,
    pub training_source: TrainingSource,
    pub samples_per_dim: Option<usize>,
    pub run_budget_per_dim: Option<usize>,
    pub tpe_budget: usize,
    pub repetitions: usize,
    pub restrict_to_continuous_hp: Option<bool>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// BBOB function ids used by the evaluation stage.
    pub test_functions: Vec<usize>,
    pub tie_tolerance: f64,
    pub rgf: RgfGenParams,
    pub tpe: TpeSettings,
    pub training: TrainSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dimension: 5,
            n_train_functions: 50,
            training_source: TrainingSource::Mixed,
            samples_per_dim: None,
            run_budget_per_dim: None,
            tpe_budget: 50,
            repetitions: 5,
            restrict_to_continuous_hp: None,
            master_seed: 2024,
            output_dir: PathBuf::from("out"),
            test_functions: (1..=24).collect(),
            tie_tolerance: crate::selection::DEFAULT_TIE_TOLERANCE,
            rgf: RgfGenParams::default(),
            tpe: TpeSettings::default(),
            training: TrainSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn samples_per_dim(&self) -> usize {
        self.samples_per_dim
            .unwrap_or(if self.dimension <= 10 { 50 } else { 20 })
    }

    pub fn run_budget(&self) -> usize {
        self.run_budget_per_dim
            .unwrap_or(if self.dimension <= 10 { 1000 } else { 100 })
            * self.dimension
    }

    pub fn continuous_only(&self) -> bool {
        self.restrict_to_continuous_hp.unwrap_or(self.dimension >= 20)
    }

    /// Fill every optional field with its effective value.
    pub fn resolved(&self) -> Self {
        Self {
            samples_per_dim: Some(self.samples_per_dim()),
            run_budget_per_dim: Some(self.run_budget() / self.dimension.max(1)),
            restrict_to_continuous_hp: Some(self.continuous_only()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dimension", self.dimension),
            ("n_train_functions", self.n_train_functions),
            ("run_budget_per_dim", self.run_budget_per_dim.unwrap_or(1)),
            ("tpe_budget", self.tpe_budget),
            ("repetitions", self.repetitions),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::param(format!("{name} must be positive")));
        }
        if self.samples_per_dim() < 10 {
            return Err(Error::param("samples_per_dim must be at least 10"));
        }
        if self.run_budget() < MAX_LAMBDA {
            return Err(Error::param(format!(
                "run budget {} cannot hold one generation of the largest population ({MAX_LAMBDA})",
                self.run_budget()
            )));
        }
        if self.tpe_budget < self.tpe.n_startup {
            return Err(Error::param(format!(
                "tpe_budget {} is below the {} startup trials",
                self.tpe_budget, self.tpe.n_startup
            )));
        }
        if let Some(f) = self.test_functions.iter().find(|f| !(1..=24).contains(*f)) {
            return Err(Error::param(format!("test function {f} is not a BBOB id")));
        }
        self.rgf.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn paths(&self) -> Paths {
        Paths {
            root: self.output_dir.clone(),
        }
    }
}

/// Locations of the persisted artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paths {
    pub root: PathBuf,
}

impl Paths {
    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }
    pub fn pool(&self) -> PathBuf {
        self.root.join("pool")
    }
    pub fn pool_manifest(&self) -> PathBuf {
        self.pool().join("manifest.json")
    }
    pub fn labels(&self) -> PathBuf {
        self.root.join("labels")
    }
    pub fn label(&self, id: &str) -> PathBuf {
        self.labels().join(format!("{id}.json"))
    }
    pub fn ledger(&self) -> PathBuf {
        self.labels().join("ledger.csv")
    }
    pub fn ela(&self) -> PathBuf {
        self.root.join("ela")
    }
    pub fn model_dir(&self) -> PathBuf {
        self.root.join("model")
    }
    pub fn model(&self) -> PathBuf {
        self.model_dir().join("model.json")
    }
    pub fn eval(&self) -> PathBuf {
        self.root.join("eval")
    }
    pub fn report(&self) -> PathBuf {
        self.eval().join("report.csv")
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Serialize as pretty JSON with a trailing newline, via a temporary file so a
/// crash never leaves a truncated artifact behind.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Read a sample: one row per point, coordinates first and the objective value last.
/// A header row is expected.
pub fn read_doe_csv(path: &Path) -> Result<Doe> {
    let mut r = csv::Reader::from_path(path)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                position: line + 2,
                message: format!("{}: {e}", path.display()),
            })?;
        if values.len() < 2 {
            return Err(Error::Parse {
                position: line + 2,
                message: "a row needs at least one coordinate and a value".into(),
            });
        }
        if let Some(first) = x.first().map(Vec::len) {
            if first != values.len() - 1 {
                return Err(Error::Parse {
                    position: line + 2,
                    message: "rows differ in length".into(),
                });
            }
        }
        y.push(values[values.len() - 1]);
        x.push(values[..values.len() - 1].to_vec());
    }
    if x.is_empty() {
        return Err(Error::param(format!("{} holds no sample rows", path.display())));
    }
    Ok(Doe::from_raw(x, y))
}

/// Write a sample in the format read by [`read_doe_csv`].
pub fn write_doe_csv(path: &Path, doe: &Doe, y_raw: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..doe.dimension()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for (row, y) in doe.x.iter().zip(y_raw) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Human-readable digest of a comparison report.
pub fn summarize(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let mut baselines: Vec<&str> = rows.iter().map(|r| r.baseline.as_str()).collect();
    baselines.dedup();
    baselines.sort_unstable();
    baselines.dedup();
    for b in baselines {
        let sel: Vec<&ComparisonRow> = rows.iter().filter(|r| r.baseline == b).collect();
        let no_worse = sel.iter().filter(|r| r.median_auc_ours <= r.median_auc_baseline).count();
        let significant = sel.iter().filter(|r| r.significant).count();
        out.push_str(&format!(
            "vs {b}: predicted median AUC no worse on {no_worse}/{n}, significantly better on {significant}/{n}\n",
            n = sel.len()
        ));
    }
    out.push_str(&format!(
        "{:<12} {:<8} {:>10} {:>10} {:>10}\n",
        "function", "baseline", "ours", "theirs", "p"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:<8} {:>10.5} {:>10.5} {:>10.4}{}\n",
            r.function_id,
            r.baseline,
            r.median_auc_ours,
            r.median_auc_baseline,
            r.p_value,
            if r.significant { " *" } else { "" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_dimension() {
        let mut c = PipelineConfig::default();
        assert_eq!(c.samples_per_dim(), 50);
        assert_eq!(c.run_budget(), 5000);
        assert!(!c.continuous_only());
        c.dimension = 20;
        assert_eq!(c.samples_per_dim(), 20);
        assert_eq!(c.run_budget(), 2000);
        assert!(c.continuous_only());
        c.restrict_to_continuous_hp = Some(false);
        assert!(!c.continuous_only());
        assert_eq!(c.resolved().resolved(), c.resolved());
    }

    #[test]
    fn validation() {
        PipelineConfig::default().validate().unwrap();
        let bad = [
            PipelineConfig {
                repetitions: 0,
                ..Default::default()
            },
            PipelineConfig {
                tpe_budget: 10,
                ..Default::default()
            },
            PipelineConfig {
                test_functions: vec![25],
                ..Default::default()
            },
            PipelineConfig {
                dimension: 2,
                run_budget_per_dim: Some(20),
                ..Default::default()
            },
            PipelineConfig {
                samples_per_dim: Some(5),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn partial_json_takes_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"dimension": 3, "training_source": "rgf"}"#).unwrap();
        assert_eq!(c.dimension, 3);
        assert_eq!(c.training_source, TrainingSource::Rgf);
        assert_eq!(c.tpe_budget, 50);
    }

    #[test]
    fn doe_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("doe.csv");
        let x = vec![vec![0.5, -1.0], vec![2.0, 3.25], vec![-4.0, 1.0]];
        let y = vec![1.0, 7.5, -2.0];
        let doe = Doe::from_raw(x, y.clone());
        write_doe_csv(&p, &doe, &y).unwrap();
        assert_eq!(read_doe_csv(&p).unwrap(), doe);
        std::fs::write(&p, "x0,y\n1,2\n3\n").unwrap();
        assert!(read_doe_csv(&p).is_err());
    }
}
