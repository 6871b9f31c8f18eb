use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_dir, read_doe_csv, read_json, write_json, Paths, PipelineConfig, TrainingSource};
use crate::cmaes::{self, default_config, Configuration};
use crate::ela::{compute_ela, fit_scaler, prune_correlated, sample_doe, write_feature_csv, write_manifest, ElaVector, PRUNE_THRESHOLD};
use crate::error::{Error, Result};
use crate::nn::{grid_search, train, LabeledDataset, NnArchitecture, NnModel, MIN_GRID_ROWS};
use crate::par::Execution;
use crate::problems::{make_bbob, make_mabbob, MaBbobSpec, ObjectiveFunction};
use crate::rgf::{generate_tree, read_batch, write_batch, Protection};
use crate::selection::{ranking_ambiguity, read_ledger, screen, write_ledger, LedgerRow, SelectionVerdict};
use crate::stats::{auc, select_sbs, select_vbs, write_report, ComparisonRow};
use crate::tpe::{label_function, HpoResult, LabelParams, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Rgf,
    Mabbob,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    pub kind: SourceKind,
    /// File name relative to the pool directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolManifest {
    pub dimension: usize,
    pub entries: Vec<PoolEntry>,
}

/// Everything the labeling stage learned about one training function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub function_id: String,
    pub kind: SourceKind,
    pub y_worst: f64,
    pub verdict: SelectionVerdict,
    /// Absent when the function was rejected before tuning.
    pub hpo: Option<HpoResult>,
}

/// Write the training-function pool and the resolved configuration.
pub fn stage_generate(cfg: &PipelineConfig) -> Result<PoolManifest> {
    cfg.validate()?;
    let paths = cfg.paths();
    create_dir(&paths.pool())?;
    write_json(&paths.config(), &cfg.resolved())?;
    let d = cfg.dimension;
    let n = cfg.n_train_functions;
    let n_rgf = match cfg.training_source {
        TrainingSource::Rgf => n,
        TrainingSource::Mabbob => 0,
        TrainingSource::Mixed => n.div_ceil(2),
    };
    let mut entries = Vec::with_capacity(n);
    for i in 0..n_rgf {
        let id = format!("rgf_{i:04}");
        let params = cfg.rgf.with_seed(crate::seed_path!(cfg.master_seed, "generate", "rgf", i));
        let tree = generate_tree(&params, d)?;
        let file = format!("{id}.rgf");
        let path = paths.pool().join(&file);
        std::fs::write(&path, write_batch(&[tree], d)).map_err(|e| Error::io(&path, e))?;
        entries.push(PoolEntry {
            id,
            kind: SourceKind::Rgf,
            file,
        });
    }
    for j in 0..n - n_rgf {
        let id = format!("mabbob_{j:04}");
        let spec = MaBbobSpec::sample(d, crate::seed_path!(cfg.master_seed, "generate", "mabbob", j));
        let file = format!("{id}.json");
        write_json(&paths.pool().join(&file), &spec)?;
        entries.push(PoolEntry {
            id,
            kind: SourceKind::Mabbob,
            file,
        });
    }
    let manifest = PoolManifest { dimension: d, entries };
    write_json(&paths.pool_manifest(), &manifest)?;
    log::info!("generated {n} training functions ({n_rgf} random trees)");
    Ok(manifest)
}

/// Load the pool written by [`stage_generate`].
pub fn load_pool(paths: &Paths) -> Result<(PoolManifest, Vec<ObjectiveFunction>)> {
    let manifest: PoolManifest = read_json(&paths.pool_manifest())?;
    let d = manifest.dimension;
    let mut functions = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let path = paths.pool().join(&e.file);
        let f = match e.kind {
            SourceKind::Rgf => {
                let text = std::fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
                let (dim, mut trees) = read_batch(&text)?;
                if dim != d || trees.len() != 1 {
                    return Err(Error::param(format!("{} must hold one tree of dimension {d}", path.display())));
                }
                trees.remove(0).into_objective(e.id.clone(), Protection::default())
            }
            SourceKind::Mabbob => {
                let spec: MaBbobSpec = read_json(&path)?;
                make_mabbob(&spec, d)?.with_id(e.id.clone())
            }
        };
        functions.push(f);
    }
    Ok((manifest, functions))
}

fn label_params(cfg: &PipelineConfig, seed: u64) -> LabelParams {
    LabelParams {
        space: SearchSpace {
            continuous_only: cfg.continuous_only(),
        },
        settings: cfg.tpe,
        ..LabelParams::new(cfg.tpe_budget, cfg.run_budget(), cfg.repetitions, seed)
    }
}

fn training_doe_seed(cfg: &PipelineConfig, id: &str) -> u64 {
    crate::seed_path!(cfg.master_seed, "doe", id)
}

fn rejected(reason: &str) -> SelectionVerdict {
    SelectionVerdict {
        y_opt: 0.0,
        kendall_tau: 0.0,
        z_score: 0.0,
        ambiguous: false,
        outlier: false,
        accepted: false,
        reasons: vec![reason.to_string()],
    }
}

fn label_one(cfg: &PipelineConfig, f: &ObjectiveFunction, kind: SourceKind) -> Result<LabelRecord> {
    let doe = sample_doe(f, cfg.samples_per_dim(), training_doe_seed(cfg, f.id()))?;
    if doe.degenerate {
        return Ok(LabelRecord {
            function_id: f.id().to_string(),
            kind,
            y_worst: 0.0,
            verdict: rejected("degenerate sample"),
            hpo: None,
        });
    }
    let y_worst = doe.y_raw_max;
    let hpo = label_function(f, y_worst, &label_params(cfg, crate::seed_path!(cfg.master_seed, "label", f.id())))?;
    let verdict = match kind {
        SourceKind::Rgf => screen(&hpo, cfg.tie_tolerance)?,
        // the optimum is known by construction, so only the ranking is recorded
        SourceKind::Mabbob => {
            let scores: Vec<f64> = hpo.history.iter().map(|t| t.score).collect();
            SelectionVerdict {
                y_opt: hpo.y_opt,
                kendall_tau: ranking_ambiguity(&scores, cfg.tie_tolerance)?,
                z_score: 0.0,
                ambiguous: false,
                outlier: false,
                accepted: true,
                reasons: vec!["known optimum, not screened".into()],
            }
        }
    };
    Ok(LabelRecord {
        function_id: f.id().to_string(),
        kind,
        y_worst,
        verdict,
        hpo: Some(hpo),
    })
}

/// Tune the optimizer on every pool function that has no record yet, then rewrite
/// the ledger from the records on disk.
pub fn stage_label(cfg: &PipelineConfig) -> Result<Vec<LedgerRow>> {
    cfg.validate()?;
    let paths = cfg.paths();
    let (manifest, functions) = load_pool(&paths)?;
    create_dir(&paths.labels())?;
    let pending: Vec<usize> = (0..functions.len())
        .filter(|&i| !paths.label(functions[i].id()).exists())
        .collect();
    log::info!(
        "labeling {} of {} functions ({} already done)",
        pending.len(),
        functions.len(),
        functions.len() - pending.len()
    );
    Execution::default().try_map(pending.len(), |k| {
        let i = pending[k];
        let rec = label_one(cfg, &functions[i], manifest.entries[i].kind)?;
        write_json(&paths.label(&rec.function_id), &rec)?;
        log::info!(
            "{}: {}",
            rec.function_id,
            if rec.verdict.accepted { "accepted" } else { "rejected" }
        );
        Ok::<(), Error>(())
    })?;
    let rows = functions
        .iter()
        .map(|f| {
            let rec: LabelRecord = read_json(&paths.label(f.id()))?;
            Ok(LedgerRow::new(f.id(), &rec.verdict))
        })
        .collect::<Result<Vec<_>>>()?;
    write_ledger(&paths.ledger(), &rows)?;
    Ok(rows)
}

/// Build the dataset from the accepted functions, search the architecture and train
/// the final model on all of it.
pub fn stage_train(cfg: &PipelineConfig) -> Result<NnModel> {
    cfg.validate()?;
    let paths = cfg.paths();
    let (_, functions) = load_pool(&paths)?;
    let accepted: Vec<String> = read_ledger(&paths.ledger())?
        .into_iter()
        .filter(|r| r.accepted)
        .map(|r| r.function_id)
        .collect();
    if accepted.len() < MIN_GRID_ROWS {
        return Err(Error::param(format!(
            "training needs at least {MIN_GRID_ROWS} accepted functions, the ledger has {}",
            accepted.len()
        )));
    }
    let rows = Execution::default().try_map(accepted.len(), |k| {
        let id = &accepted[k];
        let f = functions
            .iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| Error::param(format!("ledger entry {id} is not in the pool")))?;
        let rec: LabelRecord = read_json(&paths.label(id))?;
        let hpo = rec
            .hpo
            .ok_or_else(|| Error::param(format!("{id} is accepted but was never tuned")))?;
        let doe = sample_doe(f, cfg.samples_per_dim(), training_doe_seed(cfg, id))?;
        Ok::<_, Error>((compute_ela(&doe)?, hpo.best))
    })?;
    let (elas, configs): (Vec<ElaVector>, Vec<Configuration>) = rows.into_iter().unzip();

    create_dir(&paths.ela())?;
    let names = elas[0].names().to_vec();
    let table: Vec<(String, Vec<f64>)> = accepted.iter().cloned().zip(elas.iter().map(|e| e.values().to_vec())).collect();
    write_feature_csv(&paths.ela().join("features.csv"), &names, &table)?;
    let kept = prune_correlated(&elas, PRUNE_THRESHOLD)?;
    write_manifest(&paths.ela().join("kept.json"), &kept)?;
    let scaler = fit_scaler(&elas, &kept)?;
    let inputs = elas
        .iter()
        .map(|e| scaler.apply(e).map(|v| v.values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let data = LabeledDataset::from_configs(inputs, &configs, cfg.continuous_only())?;

    let grid = grid_search(
        &data,
        &NnArchitecture::grid(),
        &cfg.training,
        crate::seed_path!(cfg.master_seed, "grid"),
        Execution::default(),
    )?;
    create_dir(&paths.model_dir())?;
    write_json(&paths.model_dir().join("grid.json"), &grid)?;
    log::info!(
        "selected {:?} (validation loss {:.5}) from {} rows and {} features",
        grid.best,
        grid.best_loss,
        data.len(),
        kept.len()
    );
    let model = train(&data, &grid.best, scaler, &cfg.training, crate::seed_path!(cfg.master_seed, "train"))?;
    model.save(&paths.model())?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvaluatedConfigs {
    function_id: String,
    y_opt: f64,
    y_worst: f64,
    predicted: Configuration,
    default: Configuration,
    sbs: Configuration,
    vbs: Configuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AucRow {
    function_id: String,
    configuration: String,
    repetition: usize,
    auc: f64,
}

struct TestCase {
    f: ObjectiveFunction,
    predicted: Configuration,
    y_worst: f64,
    hpo: HpoResult,
}

/// Compare the predicted configurations against the default, single-best and
/// virtual-best configurations on the BBOB test functions.
pub fn stage_evaluate(cfg: &PipelineConfig) -> Result<Vec<ComparisonRow>> {
    cfg.validate()?;
    if cfg.repetitions < 5 {
        return Err(Error::param("evaluation needs at least 5 repetitions for the signed-rank test"));
    }
    if cfg.test_functions.is_empty() {
        return Err(Error::param("no test functions configured"));
    }
    let paths = cfg.paths();
    let model = NnModel::load(&paths.model())?;
    let hpo_dir = paths.eval().join("hpo");
    create_dir(&hpo_dir)?;
    let master = cfg.master_seed;
    let d = cfg.dimension;

    let cases = Execution::default().try_map(cfg.test_functions.len(), |k| {
        let fid = cfg.test_functions[k];
        let f = make_bbob(fid, d, crate::seed_path!(master, "instance", fid))?.with_id(format!("F{fid}"));
        let doe = sample_doe(&f, cfg.samples_per_dim(), crate::seed_path!(master, "eval-doe", fid))?;
        let predicted = model.predict(&compute_ela(&doe)?)?;
        let y_worst = doe.y_raw_max;
        let hpo_path = hpo_dir.join(format!("{}.json", f.id()));
        let hpo = if hpo_path.exists() {
            read_json(&hpo_path)?
        } else {
            let hpo = label_function(&f, y_worst, &label_params(cfg, crate::seed_path!(master, "eval-label", fid)))?;
            write_json(&hpo_path, &hpo)?;
            hpo
        };
        log::info!("{}: predicted {predicted}", f.id());
        Ok::<_, Error>(TestCase {
            f,
            predicted,
            y_worst,
            hpo,
        })
    })?;

    let histories: Vec<(String, crate::tpe::TrialHistory)> = cases
        .iter()
        .map(|c| (c.f.id().to_string(), c.hpo.trial_history()))
        .collect();
    let sbs = select_sbs(&histories)?;

    let per_case = Execution::default().try_map(cases.len(), |k| {
        let c = &cases[k];
        let fid = cfg.test_functions[k];
        let y_opt = c.f.known_optimum().expect("BBOB optimum is known");
        let configs = EvaluatedConfigs {
            function_id: c.f.id().to_string(),
            y_opt,
            y_worst: c.y_worst,
            predicted: c.predicted.clone(),
            default: default_config(d),
            sbs: sbs.clone(),
            vbs: select_vbs(&c.hpo.trial_history())?,
        };
        let named = [
            ("predicted", &configs.predicted),
            ("default", &configs.default),
            ("sbs", &configs.sbs),
            ("vbs", &configs.vbs),
        ];
        let mut aucs: Vec<Vec<f64>> = Vec::with_capacity(named.len());
        for (_, config) in &named {
            let values = (0..cfg.repetitions)
                .map(|rep| {
                    // common seeds across configurations pair the repetitions
                    let trace = cmaes::run(&c.f, config, cfg.run_budget(), crate::seed_path!(master, "eval-run", fid, rep))?;
                    auc(&trace.best_so_far, y_opt, c.y_worst).map(|a| a.value)
                })
                .collect::<Result<Vec<_>>>()?;
            aucs.push(values);
        }
        let mut rows = Vec::new();
        for (b, (name, _)) in named.iter().enumerate().skip(1) {
            rows.push(ComparisonRow::new(c.f.id(), name, &aucs[0], &aucs[b])?);
        }
        let auc_rows: Vec<AucRow> = named
            .iter()
            .zip(&aucs)
            .flat_map(|((name, _), values)| {
                values.iter().enumerate().map(|(rep, v)| AucRow {
                    function_id: c.f.id().to_string(),
                    configuration: name.to_string(),
                    repetition: rep,
                    auc: *v,
                })
            })
            .collect();
        Ok::<_, Error>((configs, rows, auc_rows))
    })?;

    let mut all_configs = Vec::new();
    let mut report = Vec::new();
    let auc_path = paths.eval().join("aucs.csv");
    let mut w = csv::Writer::from_path(&auc_path)?;
    for (configs, rows, auc_rows) in per_case {
        all_configs.push(configs);
        report.extend(rows);
        for r in auc_rows {
            w.serialize(r)?;
        }
    }
    w.flush().map_err(|e| Error::io(&auc_path, e))?;
    write_json(&paths.eval().join("configs.json"), &all_configs)?;
    write_report(&paths.report(), &report)?;
    Ok(report)
}

/// Predict a configuration for a sample stored as CSV.
pub fn predict_from_doe(model_path: &Path, doe_path: &Path) -> Result<Configuration> {
    let model = NnModel::load(model_path)?;
    let doe = read_doe_csv(doe_path)?;
    model.predict(&compute_ela(&doe)?)
}

/// Run every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<ComparisonRow>> {
    stage_generate(cfg)?;
    stage_label(cfg)?;
    stage_train(cfg)?;
    stage_evaluate(cfg)
}
