use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lld_dir, HarnessError, Manifest};
use crate::audio::load_conditioned;
use crate::dsp::WindowKind;
use crate::functionals::{apply_functionals, export_feature_csv, FeatureVector, FunctionalSet};
use crate::lld::{write_lld, LldExtractor};

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub frame_ms: u32,
    pub window: WindowKind,
    pub functional_set: Option<FunctionalSet>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractFailure {
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub frame_ms: u32,
    pub total: usize,
    pub succeeded: usize,
    pub failed: Vec<ExtractFailure>,
    pub wall_time_s: f64,
    pub lld_dir: PathBuf,
    pub functionals_csv: Option<PathBuf>,
}

/// `<out_dir>/functionals_<set>_<ms>ms.csv`
pub fn functionals_csv_path(out_dir: &Path, set: &str, frame_ms: u32) -> PathBuf {
    out_dir.join(format!("functionals_{set}_{frame_ms}ms.csv"))
}

/// Extract every manifest entry into `<out_dir>/lld_<ms>ms/<clip_id>.lld` on a
/// worker pool. Per-file failures are collected rather than aborting the batch.
pub fn extract_manifest(
    manifest: &Manifest,
    out_dir: &Path,
    opts: &ExtractOptions,
) -> Result<ExtractSummary, HarnessError> {
    let start = Instant::now();
    let extractor = LldExtractor::new(opts.frame_ms, opts.window)?;
    let dir = lld_dir(out_dir, opts.frame_ms);
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;

    let results: Vec<Result<Option<FeatureVector>, ExtractFailure>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let id = entry.clip_id();
                let run = || -> Result<Option<FeatureVector>, HarnessError> {
                    let clip = load_conditioned(&entry.path)?;
                    let m = extractor.extract(&clip, &id)?;
                    write_lld(dir.join(format!("{id}.lld")), &m)?;
                    Ok(match &opts.functional_set {
                        Some(set) => Some(apply_functionals(&m, set)?),
                        None => None,
                    })
                };
                run().map_err(|e| {
                    log::warn!("{}: {e}", entry.path.display());
                    ExtractFailure {
                        path: entry.path.clone(),
                        error: e.to_string(),
                    }
                })
            })
            .collect()
    });

    let mut vectors = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(v) => vectors.extend(v),
            Err(f) => failed.push(f),
        }
    }
    let functionals_csv = match &opts.functional_set {
        Some(set) => {
            let p = functionals_csv_path(out_dir, &set.name, opts.frame_ms);
            export_feature_csv(&p, &vectors)?;
            Some(p)
        }
        None => None,
    };
    let summary = ExtractSummary {
        frame_ms: opts.frame_ms,
        total: manifest.len(),
        succeeded: manifest.len() - failed.len(),
        failed,
        wall_time_s: start.elapsed().as_secs_f64(),
        lld_dir: dir,
        functionals_csv,
    };
    let p = out_dir.join(format!("summary_{}ms.json", opts.frame_ms));
    fs::write(&p, serde_json::to_string_pretty(&summary)?).map_err(|e| HarnessError::io(&p, e))?;
    Ok(summary)
}
