use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Filename convention of the Persian emotional speech corpus, e.g. `F01A01.wav`.
pub const SHEMO_FILENAME_RULE: &str =
    r"^(?P<gender>[FM])(?P<speaker>\d{2})(?P<label>[AHNSWF])\d{2}\.wav$";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Happiness,
    Neutral,
    Sadness,
    Surprise,
    Fear,
}

impl Emotion {
    /// Classes in class-index order; fear is excluded from experiments.
    pub const CLASSES: [Emotion; 5] = [
        Emotion::Anger,
        Emotion::Happiness,
        Emotion::Neutral,
        Emotion::Sadness,
        Emotion::Surprise,
    ];

    pub fn class_index(self) -> Option<usize> {
        Self::CLASSES.iter().position(|&e| e == self)
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        Self::CLASSES.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Happiness => "happiness",
            Emotion::Neutral => "neutral",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Fear => "fear",
        }
    }

    /// Single-letter code used in corpus filenames.
    pub fn letter(self) -> char {
        match self {
            Emotion::Anger => 'A',
            Emotion::Happiness => 'H',
            Emotion::Neutral => 'N',
            Emotion::Sadness => 'S',
            Emotion::Surprise => 'W',
            Emotion::Fear => 'F',
        }
    }

    /// Accepts full names (case-insensitive, `normal` for neutral) or filename letters.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let all = [
            Emotion::Anger,
            Emotion::Happiness,
            Emotion::Neutral,
            Emotion::Sadness,
            Emotion::Surprise,
            Emotion::Fear,
        ];
        if s.len() == 1 {
            let c = s.chars().next()?.to_ascii_uppercase();
            return all.into_iter().find(|e| e.letter() == c);
        }
        let lower = s.to_ascii_lowercase();
        if lower == "normal" {
            return Some(Emotion::Neutral);
        }
        all.into_iter().find(|e| e.name() == lower)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Emotion,
    pub speaker: Option<String>,
    pub gender: Option<String>,
}

impl ManifestEntry {
    /// File stem; the key features are stored under.
    pub fn clip_id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn class_index(&self) -> usize {
        self.label
            .class_index()
            .expect("fear entries are filtered on load")
    }
}

/// Labelled utterances with fear removed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Fear entries dropped while loading.
    pub fear_dropped: usize,
}

impl Manifest {
    /// Filter fear and validate uniqueness of paths and clip ids.
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self, HarnessError> {
        let total = entries.len();
        let entries: Vec<ManifestEntry> = entries
            .into_iter()
            .filter(|e| e.label != Emotion::Fear)
            .collect();
        let fear_dropped = total - entries.len();
        let mut paths = HashSet::new();
        let mut ids = HashSet::new();
        for e in &entries {
            if !paths.insert(e.path.clone()) {
                return Err(HarnessError::DuplicatePath(e.path.clone()));
            }
            if !ids.insert(e.clip_id()) {
                return Err(HarnessError::DuplicateClipId(e.clip_id()));
            }
        }
        if entries.is_empty() {
            return Err(HarnessError::EmptyManifest);
        }
        if fear_dropped > 0 {
            log::info!("dropped {fear_dropped} fear entries");
        }
        Ok(Self {
            entries,
            fear_dropped,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Label to class index.
    pub fn label_map(&self) -> Vec<(Emotion, usize)> {
        Emotion::CLASSES
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for e in &self.entries {
            counts[e.class_index()] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.class_index()).collect()
    }
}

/// Load a manifest CSV (`path,label[,speaker,gender]`, optional header) or scan a
/// directory whose filenames match `filename_rule` (default: the corpus convention).
pub fn load_manifest(
    path: impl AsRef<Path>,
    filename_rule: Option<&str>,
) -> Result<Manifest, HarnessError> {
    let path = path.as_ref();
    let entries = if path.is_dir() {
        scan_directory(path, filename_rule.unwrap_or(SHEMO_FILENAME_RULE))?
    } else {
        read_manifest_csv(path)?
    };
    for e in &entries {
        if !e.path.is_file() {
            return Err(HarnessError::MissingFile(e.path.clone()));
        }
    }
    Manifest::from_entries(entries)
}

fn optional(s: Option<&str>) -> Option<String> {
    s.map(str::trim).filter(|s| !s.is_empty()).map(String::from)
}

fn read_manifest_csv(path: &Path) -> Result<Vec<ManifestEntry>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::io(path, source))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let first = record.get(0).unwrap_or("").trim();
        if row == 0 && first.eq_ignore_ascii_case("path") {
            continue;
        }
        if first.is_empty() {
            continue;
        }
        let raw_label = record.get(1).unwrap_or("");
        let label = Emotion::parse(raw_label).ok_or_else(|| HarnessError::UnknownLabel {
            row: row + 1,
            label: raw_label.to_string(),
        })?;
        let p = Path::new(first);
        entries.push(ManifestEntry {
            path: if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            },
            label,
            speaker: optional(record.get(2)),
            gender: optional(record.get(3)),
        });
    }
    Ok(entries)
}

fn scan_directory(dir: &Path, rule: &str) -> Result<Vec<ManifestEntry>, HarnessError> {
    let re = Regex::new(rule).map_err(|e| HarnessError::BadRule(e.to_string()))?;
    if !re.capture_names().any(|n| n == Some("label")) {
        return Err(HarnessError::BadRule(
            "pattern needs a named group `label`".into(),
        ));
    }
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|source| HarnessError::io(dir, source))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut entries = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let Some(caps) = re.captures(name) else {
            log::debug!("skipping {name}: does not match the filename rule");
            continue;
        };
        let raw = &caps["label"];
        let label = Emotion::parse(raw).ok_or_else(|| HarnessError::UnknownLabel {
            row: i + 1,
            label: raw.to_string(),
        })?;
        entries.push(ManifestEntry {
            path: dir.join(name),
            label,
            speaker: caps.name("speaker").map(|m| m.as_str().to_string()),
            gender: caps.name("gender").map(|m| m.as_str().to_string()),
        });
    }
    Ok(entries)
}

/// Write `path,label,speaker,gender`; paths under the CSV's directory are stored relative to it.
pub fn write_manifest_csv(path: impl AsRef<Path>, manifest: &Manifest) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["path", "label", "speaker", "gender"])?;
    for e in &manifest.entries {
        let p = e.path.strip_prefix(base).unwrap_or(&e.path);
        w.write_record([
            p.to_string_lossy().as_ref(),
            e.label.name(),
            e.speaker.as_deref().unwrap_or(""),
            e.gender.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::io(path, source))?;
    Ok(())
}
