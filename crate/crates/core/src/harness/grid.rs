use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{config_hash, run_experiment, ExperimentConfig};
use super::{EvalReport, FeatureSource, HarnessError, SplitConfig, TrainConfig};
use crate::models::ModelSpec;

/// Published UA/WA a cell is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub ua: f64,
    pub wa: f64,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_frame_ms() -> u32 {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    /// Row group, e.g. a frame resolution or feature set name.
    pub group: String,
    pub method: String,
    #[serde(default = "default_frame_ms")]
    pub frame_ms: u32,
    #[serde(default)]
    pub features: FeatureSource,
    pub model: ModelSpec,
    /// Replaces the grid-wide training config for this cell.
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub reference: Option<Reference>,
}

/// A table of experiments sharing one corpus and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub title: String,
    pub manifest: PathBuf,
    #[serde(default)]
    pub filename_rule: Option<String>,
    pub features_dir: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(rename = "cell", default)]
    pub cells: Vec<GridCell>,
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let g: Self =
            toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        if g.cells.is_empty() {
            return Err(HarnessError::ConfigInvalid("grid has no cells".into()));
        }
        Ok(g)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.manifest = base.join(&self.manifest);
        self.features_dir = base.join(&self.features_dir);
        self.out_dir = base.join(&self.out_dir);
        for c in &mut self.cells {
            c.features = c.features.resolved(base);
        }
    }

    pub fn hash(&self) -> String {
        let mut g = self.clone();
        g.out_dir = PathBuf::new();
        config_hash(&g)
    }

    /// Standalone experiment config for cell `i`; runs land under `<out_dir>/runs`.
    pub fn experiment(&self, i: usize) -> ExperimentConfig {
        let cell = &self.cells[i];
        ExperimentConfig {
            manifest: self.manifest.clone(),
            filename_rule: self.filename_rule.clone(),
            features_dir: self.features_dir.clone(),
            frame_ms: cell.frame_ms,
            out_dir: self.out_dir.join("runs"),
            features: cell.features.clone(),
            model: cell.model.clone(),
            train: cell.train.clone().unwrap_or_else(|| self.train.clone()),
            split: self.split.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub group: String,
    pub method: String,
    pub reference: Option<Reference>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub dir: PathBuf,
    pub cells: Vec<CellResult>,
    pub table: String,
}

impl GridOutcome {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// One rendered table line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub group: String,
    pub method: String,
    pub ua: Option<f64>,
    pub wa: Option<f64>,
    pub ref_ua: Option<f64>,
    pub ref_wa: Option<f64>,
    pub status: String,
}

impl TableRow {
    pub fn from_report(
        group: String,
        method: String,
        report: Option<&EvalReport>,
        reference: Option<Reference>,
        error: Option<&str>,
    ) -> Self {
        Self {
            group,
            method,
            ua: report.map(|r| r.ua),
            wa: report.map(|r| r.wa),
            ref_ua: reference.map(|r| r.ua),
            ref_wa: reference.map(|r| r.wa),
            status: match error {
                Some(e) => format!("FAILED: {e}"),
                None => "ok".into(),
            },
        }
    }

    pub fn from_cell(c: &CellResult) -> Self {
        Self::from_report(
            c.group.clone(),
            c.method.clone(),
            c.report.as_ref(),
            c.reference,
            c.error.as_deref(),
        )
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.2}"))
}

/// Fixed-width text table, rows in the given order.
pub fn render_table(title: &str, rows: &[TableRow]) -> String {
    let header = ["Group", "Method", "UA", "WA", "Ref UA", "Ref WA", "Status"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.group.clone(),
                r.method.clone(),
                cell(r.ua),
                cell(r.wa),
                cell(r.ref_ua),
                cell(r.ref_wa),
                r.status.clone(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if (2..6).contains(&i) {
                    format!("{c:>w$}")
                } else {
                    format!("{c:<w$}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = format!("{title}\n");
    out.push_str(&line(header.to_vec()));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn render_csv(rows: &[TableRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "method", "ua", "wa", "ref_ua", "ref_wa", "status"])?;
    for r in rows {
        let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.4}"));
        w.write_record([
            r.group.clone(),
            r.method.clone(),
            f(r.ua),
            f(r.wa),
            f(r.ref_ua),
            f(r.ref_wa),
            r.status.clone(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Run every cell on a pool of `workers` threads. A failing cell is recorded and
/// the remaining cells still run. Results keep the configured cell order.
pub fn run_grid(grid: &GridConfig, workers: usize) -> Result<GridOutcome, HarnessError> {
    if grid.cells.is_empty() {
        return Err(HarnessError::ConfigInvalid("grid has no cells".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let results: Vec<CellResult> = pool.install(|| {
        (0..grid.cells.len())
            .into_par_iter()
            .map(|i| {
                let c = &grid.cells[i];
                let exp = grid.experiment(i);
                let run = run_experiment(&exp);
                if let Err(e) = &run {
                    log::error!("cell {} / {} failed: {e}", c.group, c.method);
                }
                let (report, error, run_dir) = match run {
                    Ok(o) => (Some(o.test_report), None, Some(o.run_dir)),
                    Err(e) => (None, Some(e.to_string()), None),
                };
                CellResult {
                    group: c.group.clone(),
                    method: c.method.clone(),
                    reference: c.reference,
                    report,
                    error,
                    run_dir,
                }
            })
            .collect()
    });

    let rows: Vec<TableRow> = results.iter().map(TableRow::from_cell).collect();
    let table = render_table(&grid.title, &rows);
    let dir = grid.out_dir.join(format!("grid_{}", grid.hash()));
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))
    };
    write("config.toml", &grid.to_toml())?;
    write("table.txt", &table)?;
    write("table.csv", &render_csv(&rows)?)?;
    write("grid.json", &serde_json::to_string_pretty(&results)?)?;
    Ok(GridOutcome {
        dir,
        cells: results,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_one_line_per_row() {
        let rows = vec![
            TableRow {
                group: "32ms".into(),
                method: "BLSTM".into(),
                ua: Some(51.04),
                wa: None,
                ref_ua: Some(51.04),
                ref_wa: Some(66.91),
                status: "ok".into(),
            };
            3
        ];
        let t = render_table("T", &rows);
        assert_eq!(t.lines().count(), 3 + 3);
        assert!(t.contains("51.04"));
        let csv = render_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }
}
