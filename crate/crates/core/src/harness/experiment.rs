use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    compute_metrics, load_features, load_manifest, render_table, split, write_history_csv, Dataset,
    EpochRecord, EvalReport, FeatureSource, HarnessError, SplitConfig, SplitName, Splits, TableRow,
    TrainConfig, TrainedModel,
};
use crate::models::ModelSpec;

fn default_frame_ms() -> u32 {
    32
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Fully resolved description of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    #[serde(default)]
    pub filename_rule: Option<String>,
    /// Directory holding extracted `lld_<ms>ms/` matrices.
    pub features_dir: PathBuf,
    #[serde(default = "default_frame_ms")]
    pub frame_ms: u32,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub features: FeatureSource,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub split: SplitConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Resolve relative paths against `base` (usually the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        self.manifest = base.join(&self.manifest);
        self.features_dir = base.join(&self.features_dir);
        self.out_dir = base.join(&self.out_dir);
        self.features = self.features.resolved(base);
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model.validate()?;
        self.train.validate()?;
        if self.model.is_frame_level() != self.features.is_frame_level() {
            return Err(HarnessError::ConfigInvalid(format!(
                "model {} cannot consume {} features",
                self.model.kind(),
                self.features.describe()
            )));
        }
        Ok(())
    }

    /// Digest of everything that influences results; the output location is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        config_hash(&c)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(self.hash())
    }
}

/// First 16 hex digits of SHA-256 over the canonical (key-sorted) JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_value(value)
        .expect("config serializes")
        .to_string();
    hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

pub fn write_report_json(path: impl AsRef<Path>, report: &EvalReport) -> Result<(), HarnessError> {
    write(path.as_ref(), serde_json::to_string_pretty(report)?)
}

pub fn read_report_json(path: impl AsRef<Path>) -> Result<EvalReport, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Everything a run produces, also written under [`ExperimentConfig::run_dir`].
#[derive(Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub val_report: Option<EvalReport>,
    pub test_report: EvalReport,
}

struct Prepared {
    splits: Splits,
    store: super::FeatureStore,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    config.validate()?;
    let manifest = load_manifest(&config.manifest, config.filename_rule.as_deref())?;
    let splits = split(&manifest, &config.split)?;
    let store = load_features(
        &config.features,
        &config.features_dir,
        config.frame_ms,
        &manifest,
    )?;
    Ok(Prepared { splits, store })
}

fn evaluate(
    trained: &mut TrainedModel,
    data: &Dataset,
    config: &ExperimentConfig,
    which: SplitName,
) -> Result<EvalReport, HarnessError> {
    let pred: Vec<usize> = trained
        .predict(data)?
        .iter()
        .map(|p| p.class_index)
        .collect();
    let mut report = compute_metrics(&data.labels(), &pred)?;
    report.metadata.config_hash = config.hash();
    report.metadata.seed = config.train.seed;
    report.metadata.model_kind = config.model.kind().to_string();
    report.metadata.split = which.name().to_string();
    Ok(report)
}

/// Load, split, train, evaluate and persist one configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let started = now();
    let Prepared { splits, store } = prepare(config)?;
    let train = Dataset::from_manifest(&splits.train, &store)?;
    let val = Dataset::from_manifest(&splits.val, &store)?;
    let test = Dataset::from_manifest(&splits.test, &store)?;
    drop(store);
    if test.is_empty() {
        return Err(HarnessError::ConfigInvalid("test split is empty".into()));
    }

    let outcome = super::train_model(&config.model, &train, &val, &config.train)?;
    let mut trained = outcome.trained;
    let val_report = if val.is_empty() {
        None
    } else {
        Some(evaluate(&mut trained, &val, config, SplitName::Val)?)
    };
    let mut test_report = evaluate(&mut trained, &test, config, SplitName::Test)?;
    let finished = now();
    test_report.metadata.started_at = Some(started.clone());
    test_report.metadata.finished_at = Some(finished.clone());
    let val_report = val_report.map(|mut r| {
        r.metadata.started_at = Some(started);
        r.metadata.finished_at = Some(finished);
        r
    });

    let run_dir = config.run_dir();
    fs::create_dir_all(&run_dir).map_err(|e| HarnessError::io(&run_dir, e))?;
    write(&run_dir.join("config.toml"), config.to_toml())?;
    trained.save(run_dir.join("checkpoint.bin"))?;
    write_history_csv(run_dir.join("history.csv"), &outcome.history)?;
    write_report_json(run_dir.join("report.json"), &test_report)?;
    if let Some(r) = &val_report {
        write_report_json(run_dir.join("val_report.json"), r)?;
    }
    let row = TableRow::from_report(
        config.features.describe(),
        config.model.kind().to_string(),
        Some(&test_report),
        None,
        None,
    );
    write(
        &run_dir.join("table.txt"),
        render_table(&format!("run {}", config.hash()), &[row]),
    )?;

    Ok(RunOutcome {
        run_dir,
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        val_report,
        test_report,
    })
}

/// Re-evaluate a finished run from its stored config and checkpoint.
pub fn evaluate_run(
    run_dir: impl AsRef<Path>,
    which: SplitName,
) -> Result<EvalReport, HarnessError> {
    let run_dir = run_dir.as_ref();
    let cfg_path = run_dir.join("config.toml");
    let text = fs::read_to_string(&cfg_path).map_err(|e| HarnessError::io(&cfg_path, e))?;
    let config = ExperimentConfig::from_toml(&text)?;
    let Prepared { splits, store } = prepare(&config)?;
    let data = Dataset::from_manifest(splits.get(which), &store)?;
    if data.is_empty() {
        return Err(HarnessError::ConfigInvalid(format!(
            "{} split is empty",
            which.name()
        )));
    }
    let mut trained = TrainedModel::load(
        run_dir.join("checkpoint.bin"),
        &config.model,
        &data.input_shape,
    )?;
    let mut report = evaluate(&mut trained, &data, &config, which)?;
    report.metadata.finished_at = Some(now());
    Ok(report)
}
