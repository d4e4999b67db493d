//! Labeled feature sets: window labeling from annotations, patient-level
//! train/validation/test splits, and majority-class undersampling.
//!
//! Splits are patient-disjoint so models are forced to generalize across
//! patients. Only the training split is rebalanced; validation and test keep
//! the natural class distribution.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edf::{self, AnnotationSet, ArtifactClass, CorpusEntry, CorpusIndex};
use crate::features::{self, FeatureConfig};
use crate::montage::{apply_montage, Montage};
use crate::{Error, Result};

/// One labeled window with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub features: Vec<f64>,
    pub label: ArtifactClass,
    pub patient_id: String,
    pub session_id: String,
    pub start_s: f64,
}

/// A set of labeled windows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledFeatureSet {
    pub rows: Vec<LabeledRow>,
}

impl LabeledFeatureSet {
    pub fn class_counts(&self) -> BTreeMap<ArtifactClass, usize> {
        let mut counts = BTreeMap::new();
        for row in &self.rows {
            *counts.entry(row.label).or_insert(0) += 1;
        }
        counts
    }

    pub fn patients(&self) -> BTreeSet<String> {
        self.rows.iter().map(|r| r.patient_id.clone()).collect()
    }

    /// CSV export: one row per window with provenance and feature columns.
    pub fn to_csv(&self) -> String {
        let dim = self.rows.first().map_or(22, |r| r.features.len());
        let mut out = String::from("patient,session,start_s,label");
        for i in 0..dim {
            out.push_str(&format!(",f{i}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}",
                row.patient_id, row.session_id, row.start_s, row.label
            ));
            for f in &row.features {
                out.push_str(&format!(",{f}"));
            }
            out.push('\n');
        }
        out
    }
}

/// End-to-end extraction parameters shared by all sessions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Every recording is resampled to this rate at parse exit.
    pub target_sample_rate_hz: f64,
    pub feature: FeatureConfig,
    /// Minimum fraction of a window an artifact must cover to label it.
    pub coverage_threshold: f64,
    #[serde(skip, default = "Montage::tcp")]
    pub montage: Montage,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            target_sample_rate_hz: 256.0,
            feature: FeatureConfig::default(),
            coverage_threshold: 0.5,
            montage: Montage::tcp(),
        }
    }
}

impl PipelineConfig {
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.feature.content_hash().as_bytes());
        hasher.update(self.target_sample_rate_hz.to_le_bytes());
        hasher.update(self.coverage_threshold.to_le_bytes());
        for (a, c) in &self.montage.pairs {
            hasher.update(a.as_bytes());
            hasher.update(c.as_bytes());
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Label one window interval from the annotation set: the event with the
/// greatest temporal overlap wins if it covers at least
/// `coverage_threshold` of the window; ties break toward the earlier event
/// start, then the smaller class code. Channel-scoped events are collapsed
/// to record-level intervals.
pub fn label_window(
    start_s: f64,
    window_s: f64,
    annotations: &AnnotationSet,
    coverage_threshold: f64,
) -> ArtifactClass {
    let stop_s = start_s + window_s;
    let mut best: Option<(f64, f64, usize)> = None; // (overlap, event start, class code)
    for event in &annotations.events {
        let overlap = event.stop_s.min(stop_s) - event.start_s.max(start_s);
        if overlap <= 0.0 {
            continue;
        }
        let candidate = (overlap, event.start_s, event.label.code());
        best = Some(match best {
            None => candidate,
            Some(b) => {
                // larger overlap wins; then earlier start; then smaller code
                if candidate.0 > b.0 + 1e-12
                    || ((candidate.0 - b.0).abs() <= 1e-12
                        && (candidate.1 < b.1 - 1e-12
                            || ((candidate.1 - b.1).abs() <= 1e-12 && candidate.2 < b.2)))
                {
                    candidate
                } else {
                    b
                }
            }
        });
    }
    match best {
        Some((overlap, _, code)) if overlap >= coverage_threshold * window_s - 1e-12 => {
            ArtifactClass::from_code(code).unwrap()
        }
        _ => ArtifactClass::Null,
    }
}

/// Patient-disjoint split assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub ratios: (f64, f64, f64),
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl SplitAssignment {
    pub fn set_for(&self, patient_id: &str) -> Option<&'static str> {
        if self.train.contains(patient_id) {
            Some("train")
        } else if self.validation.contains(patient_id) {
            Some("validation")
        } else if self.test.contains(patient_id) {
            Some("test")
        } else {
            None
        }
    }
}

/// Shuffle patients with a seeded RNG and partition them. Validation and
/// test each get `floor(n * ratio)` patients; the remainder goes to train.
pub fn patient_split(
    index: &CorpusIndex,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitAssignment> {
    let mut patients: Vec<String> = index.patients.iter().cloned().collect();
    let n = patients.len();
    if n < 3 {
        return Err(Error::Dataset(format!("need at least 3 patients, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    patients.shuffle(&mut rng);
    let n_val = (n as f64 * ratios.1).floor() as usize;
    let n_test = (n as f64 * ratios.2).floor() as usize;
    let n_train = n - n_val - n_test;
    Ok(SplitAssignment {
        seed,
        ratios,
        train: patients[..n_train].iter().cloned().collect(),
        validation: patients[n_train..n_train + n_val].iter().cloned().collect(),
        test: patients[n_train + n_val..].iter().cloned().collect(),
    })
}

/// Reduce every class to the minimum class count by seeded sampling without
/// replacement, then deterministically re-shuffle the row order.
pub fn undersample(set: &LabeledFeatureSet, seed: u64) -> Result<LabeledFeatureSet> {
    if set.rows.is_empty() {
        return Err(Error::Dataset("cannot undersample an empty set".into()));
    }
    let counts = set.class_counts();
    let target = *counts.values().min().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = Vec::new();
    for class in ArtifactClass::ALL {
        let mut indices: Vec<usize> = set
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == class)
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            continue;
        }
        indices.shuffle(&mut rng);
        picked.extend(indices.into_iter().take(target));
    }
    picked.shuffle(&mut rng);
    Ok(LabeledFeatureSet {
        rows: picked.into_iter().map(|i| set.rows[i].clone()).collect(),
    })
}

// ---------------------------------------------------------------------------
// EAF1 feature cache
// ---------------------------------------------------------------------------

const EAF_MAGIC: &[u8; 4] = b"EAF1";

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u32).to_le_bytes());
    out.extend(s.as_bytes());
}

fn read_str(bytes: &[u8], pos: &mut usize) -> Result<String> {
    let len = u32::from_le_bytes(
        bytes
            .get(*pos..*pos + 4)
            .ok_or_else(|| Error::Dataset("truncated cache file".into()))?
            .try_into()
            .unwrap(),
    ) as usize;
    *pos += 4;
    let s = bytes
        .get(*pos..*pos + len)
        .ok_or_else(|| Error::Dataset("truncated cache file".into()))?;
    *pos += len;
    String::from_utf8(s.to_vec()).map_err(|_| Error::Dataset("bad cache string".into()))
}

/// Serialize labeled rows of one session to the EAF1 cache format.
pub fn encode_cache(
    config_hash: &str,
    record_id: &str,
    sample_rate_hz: f64,
    rows: &[LabeledRow],
) -> Vec<u8> {
    let dim = rows.first().map_or(22, |r| r.features.len()) as u32;
    let mut out = Vec::new();
    out.extend(EAF_MAGIC);
    write_str(&mut out, config_hash);
    write_str(&mut out, record_id);
    out.extend(sample_rate_hz.to_le_bytes());
    out.extend(dim.to_le_bytes());
    out.extend((rows.len() as u64).to_le_bytes());
    for row in rows {
        write_str(&mut out, &row.patient_id);
        write_str(&mut out, &row.session_id);
        out.extend(row.start_s.to_le_bytes());
        out.push(row.label.code() as u8);
        for f in &row.features {
            out.extend(f.to_le_bytes());
        }
    }
    out
}

pub fn decode_cache(bytes: &[u8], expect_config_hash: &str) -> Result<Vec<LabeledRow>> {
    if bytes.len() < 4 || &bytes[..4] != EAF_MAGIC {
        return Err(Error::Dataset("bad cache magic".into()));
    }
    let mut pos = 4;
    let config_hash = read_str(bytes, &mut pos)?;
    if config_hash != expect_config_hash {
        return Err(Error::Dataset("cache config hash mismatch".into()));
    }
    let _record_id = read_str(bytes, &mut pos)?;
    let take = |bytes: &[u8], pos: &mut usize, n: usize| -> Result<Vec<u8>> {
        let s = bytes
            .get(*pos..*pos + n)
            .ok_or_else(|| Error::Dataset("truncated cache file".into()))?;
        *pos += n;
        Ok(s.to_vec())
    };
    let _fs = f64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().unwrap());
    let dim = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().unwrap()) as usize;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let patient_id = read_str(bytes, &mut pos)?;
        let session_id = read_str(bytes, &mut pos)?;
        let start_s = f64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().unwrap());
        let label_code = take(bytes, &mut pos, 1)?[0] as usize;
        let label = ArtifactClass::from_code(label_code)
            .ok_or_else(|| Error::Dataset(format!("bad label code {label_code}")))?;
        let mut features = Vec::with_capacity(dim);
        for _ in 0..dim {
            features.push(f64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().unwrap()));
        }
        rows.push(LabeledRow { features, label, patient_id, session_id, start_s });
    }
    Ok(rows)
}

fn cache_key(cfg_hash: &str, edf_bytes: &[u8], annotation_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg_hash.as_bytes());
    hasher.update(edf_bytes);
    hasher.update(annotation_text.as_bytes());
    hasher.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Extract and label one session's windows, optionally via the on-disk
/// cache. The cache key covers the pipeline config, the EDF bytes, and the
/// annotation text, so any change re-extracts.
pub fn labeled_rows_for_entry(
    entry: &CorpusEntry,
    cfg: &PipelineConfig,
    cache_dir: Option<&Path>,
) -> Result<Vec<LabeledRow>> {
    let cfg_hash = cfg.content_hash();
    let edf_bytes = std::fs::read(&entry.edf_path)?;
    let annotation_text = std::fs::read_to_string(&entry.annotation_path)?;
    let cache_path = cache_dir.map(|d| d.join(format!("{}.eaf", cache_key(&cfg_hash, &edf_bytes, &annotation_text))));
    if let Some(path) = &cache_path {
        if let Ok(bytes) = std::fs::read(path) {
            if let Ok(rows) = decode_cache(&bytes, &cfg_hash) {
                return Ok(rows);
            }
        }
    }

    let mut rec = edf::parse_edf(&edf_bytes)?;
    rec.patient_id = entry.patient_id.clone();
    rec.session_id = entry.session_id.clone();
    rec.resample(cfg.target_sample_rate_hz);
    let annotations = edf::parse_annotations(&annotation_text, rec.duration_s())?;
    let montaged = apply_montage(&rec, &cfg.montage)?;
    let feats = features::extract_features(&montaged, &cfg.feature)?;
    let rows: Vec<LabeledRow> = feats
        .into_iter()
        .map(|(start_s, features)| LabeledRow {
            label: label_window(start_s, cfg.feature.window_s, &annotations, cfg.coverage_threshold),
            features,
            patient_id: entry.patient_id.clone(),
            session_id: entry.session_id.clone(),
            start_s,
        })
        .collect();

    if let Some(path) = &cache_path {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, encode_cache(&cfg_hash, &entry.session_id, cfg.target_sample_rate_hz, &rows))?;
    }
    Ok(rows)
}

/// The three assembled splits. Only train is undersampled.
#[derive(Debug, Clone)]
pub struct Splits {
    pub assignment: SplitAssignment,
    pub train: LabeledFeatureSet,
    pub validation: LabeledFeatureSet,
    pub test: LabeledFeatureSet,
}

/// Extract features for every session, label windows, route rows by their
/// patient's split, and undersample the training set.
pub fn build_splits(
    index: &CorpusIndex,
    cfg: &PipelineConfig,
    ratios: (f64, f64, f64),
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<Splits> {
    let assignment = patient_split(index, ratios, seed)?;
    let mut train = LabeledFeatureSet::default();
    let mut validation = LabeledFeatureSet::default();
    let mut test = LabeledFeatureSet::default();
    for entry in &index.entries {
        let rows = labeled_rows_for_entry(entry, cfg, cache_dir)?;
        let target = match assignment.set_for(&entry.patient_id) {
            Some("train") => &mut train,
            Some("validation") => &mut validation,
            Some("test") => &mut test,
            _ => continue,
        };
        target.rows.extend(rows);
    }
    let train = undersample(&train, seed)?;
    Ok(Splits { assignment, train, validation, test })
}
