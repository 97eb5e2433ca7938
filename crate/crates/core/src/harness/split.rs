use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{HarnessError, Manifest, ManifestEntry};
use crate::nn::NnRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Train, validation, test fractions.
    pub ratios: [f64; 3],
    pub seed: u64,
    /// Keep every speaker inside a single split instead of stratifying by label.
    pub speaker_disjoint: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratios: [0.8, 0.1, 0.1],
            seed: 42,
            speaker_disjoint: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Manifest,
    pub val: Manifest,
    pub test: Manifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl Splits {
    pub fn get(&self, which: SplitName) -> &Manifest {
        match which {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }
}

fn check_ratios(r: &[f64; 3]) -> Result<(), HarnessError> {
    if r.iter().any(|&v| !(0.0..=1.0).contains(&v))
        || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
        || r[0] == 0.0
    {
        return Err(HarnessError::InvalidRatios(*r));
    }
    Ok(())
}

fn finish(parts: [Vec<ManifestEntry>; 3]) -> Splits {
    let [mut train, mut val, mut test] = parts;
    for p in [&mut train, &mut val, &mut test] {
        p.sort_by(|a, b| a.path.cmp(&b.path));
    }
    let wrap = |entries| Manifest {
        entries,
        fear_dropped: 0,
    };
    Splits {
        train: wrap(train),
        val: wrap(val),
        test: wrap(test),
    }
}

/// Partition a manifest. Entries are sorted before shuffling so the seed alone
/// fixes the outcome regardless of input row order.
pub fn split(manifest: &Manifest, config: &SplitConfig) -> Result<Splits, HarnessError> {
    check_ratios(&config.ratios)?;
    let mut rng = NnRng::seed_from_u64(config.seed);
    if config.speaker_disjoint {
        return speaker_split(manifest, &config.ratios, &mut rng);
    }
    let mut by_class: BTreeMap<usize, Vec<ManifestEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        by_class.entry(e.class_index()).or_default().push(e.clone());
    }
    let mut parts: [Vec<ManifestEntry>; 3] = Default::default();
    for (class, mut entries) in by_class {
        let n = entries.len();
        if n < 3 {
            return Err(HarnessError::ClassTooSmall { class, count: n });
        }
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        entries.shuffle(&mut rng);
        let n_train = ((n as f64 * config.ratios[0]).round() as usize).clamp(1, n);
        let n_val = ((n as f64 * config.ratios[1]).round() as usize).min(n - n_train);
        let mut rest = entries.into_iter();
        parts[0].extend(rest.by_ref().take(n_train));
        parts[1].extend(rest.by_ref().take(n_val));
        parts[2].extend(rest);
    }
    Ok(finish(parts))
}

fn speaker_split(
    manifest: &Manifest,
    ratios: &[f64; 3],
    rng: &mut NnRng,
) -> Result<Splits, HarnessError> {
    let mut by_speaker: BTreeMap<String, Vec<ManifestEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        let speaker = e.speaker.clone().ok_or_else(|| {
            HarnessError::ConfigInvalid(format!(
                "speaker-disjoint split needs a speaker for {}",
                e.path.display()
            ))
        })?;
        by_speaker.entry(speaker).or_default().push(e.clone());
    }
    let mut speakers: Vec<Vec<ManifestEntry>> = by_speaker.into_values().collect();
    speakers.shuffle(rng);
    let total = manifest.len() as f64;
    let mut parts: [Vec<ManifestEntry>; 3] = Default::default();
    for group in speakers {
        // the split furthest below its target share takes the next speaker
        let k = (0..3)
            .max_by(|&a, &b| {
                let deficit = |i: usize| ratios[i] * total - parts[i].len() as f64;
                deficit(a).total_cmp(&deficit(b)).then(b.cmp(&a))
            })
            .unwrap();
        parts[k].extend(group);
    }
    Ok(finish(parts))
}
