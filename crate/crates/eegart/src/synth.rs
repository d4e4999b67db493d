//! Deterministic synthetic EEG corpus generator. Produces EDF recordings
//! with class-dependent artifact signatures plus matching annotation CSVs,
//! so the whole pipeline can run in CI without any licensed data.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::edf::{
    corpus_scan, write_edf, AnnotationEvent, AnnotationSet, ArtifactClass, ChannelScope,
    CorpusIndex, Recording, ScanConfig,
};
use crate::{Error, Result};

pub const SYNTH_SAMPLE_RATE_HZ: f64 = 256.0;

/// The 19 referential electrodes needed to derive the full TCP chain.
pub const SYNTH_ELECTRODES: [&str; 19] = [
    "FP1", "FP2", "F3", "F4", "F7", "F8", "C3", "C4", "CZ", "P3", "P4", "T3", "T4", "T5", "T6",
    "O1", "O2", "A1", "A2",
];

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub patients: usize,
    pub sessions_per_patient: usize,
    /// Whole seconds per session.
    pub duration_s: usize,
    /// Expected artifact events per second of recording.
    pub artifact_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            patients: 4,
            sessions_per_patient: 1,
            duration_s: 120,
            artifact_rate: 0.08,
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn electrode_index(name: &str) -> usize {
    SYNTH_ELECTRODES.iter().position(|&e| e == name).unwrap()
}

/// Add one artifact's signature to the referential signals over
/// `[start_s, stop_s)`. Amplitudes stay well inside the writer's ±1000 µV
/// physical range.
fn add_artifact(
    signals: &mut [Vec<f64>],
    class: ArtifactClass,
    start_s: usize,
    stop_s: usize,
    rng: &mut impl Rng,
) {
    let fs = SYNTH_SAMPLE_RATE_HZ;
    let lo = (start_s as f64 * fs) as usize;
    let hi = (stop_s as f64 * fs) as usize;
    let tau = std::f64::consts::TAU;
    match class {
        ArtifactClass::Eyem => {
            // slow, large frontal deflections
            let phase = rng.gen_range(0.0..tau);
            for name in ["FP1", "FP2", "F7", "F8"] {
                let gain = if name.starts_with("FP") { 180.0 } else { 90.0 };
                let ch = &mut signals[electrode_index(name)];
                for (i, v) in ch[lo..hi].iter_mut().enumerate() {
                    let t = (lo + i) as f64 / fs;
                    *v += gain * (tau * 1.5 * t + phase).sin();
                }
            }
        }
        ArtifactClass::Chew => {
            // rhythmic 3 Hz bursts over the temporal chain
            let phase = rng.gen_range(0.0..tau);
            for name in ["T3", "T4", "F7", "F8"] {
                let ch = &mut signals[electrode_index(name)];
                for (i, v) in ch[lo..hi].iter_mut().enumerate() {
                    let t = (lo + i) as f64 / fs;
                    let envelope = (tau * 0.5 * t).sin().abs();
                    *v += 140.0 * envelope * (tau * 3.0 * t + phase).sin();
                }
            }
        }
        ArtifactClass::Shiv => {
            // faint widespread ~7 Hz tremor, barely above the background
            let phase = rng.gen_range(0.0..tau);
            for name in ["F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2"] {
                let ch = &mut signals[electrode_index(name)];
                for (i, v) in ch[lo..hi].iter_mut().enumerate() {
                    let t = (lo + i) as f64 / fs;
                    *v += 18.0 * (tau * 7.0 * t + phase).sin() + 6.0 * gaussian(rng);
                }
            }
        }
        ArtifactClass::Elpp => {
            // single electrode pops: a square alternation on one channel
            let victim = rng.gen_range(0..SYNTH_ELECTRODES.len());
            let ch = &mut signals[victim];
            for (i, v) in ch[lo..hi].iter_mut().enumerate() {
                let t = (lo + i) as f64 / fs;
                let sign = if (tau * 1.0 * t).sin() >= 0.0 { 1.0 } else { -1.0 };
                *v += 250.0 * sign;
            }
        }
        ArtifactClass::Musc => {
            // broadband high-frequency noise on central/temporal leads
            for name in ["C3", "C4", "T3", "T4", "CZ", "F3", "F4"] {
                let ch = &mut signals[electrode_index(name)];
                for v in &mut ch[lo..hi] {
                    *v += 70.0 * gaussian(rng);
                }
            }
        }
        ArtifactClass::Null => unreachable!("null is not an artifact event"),
    }
}

/// Generate one session's referential recording and annotations.
fn synth_session(
    patient_id: &str,
    session_id: &str,
    params: &SynthParams,
    rng: &mut ChaCha8Rng,
) -> (Recording, AnnotationSet) {
    let fs = SYNTH_SAMPLE_RATE_HZ;
    let n = params.duration_s * fs as usize;

    // background: per-electrode noise plus a shared posterior alpha rhythm
    let mut signals: Vec<Vec<f64>> = Vec::with_capacity(SYNTH_ELECTRODES.len());
    for name in SYNTH_ELECTRODES {
        let alpha_gain = match name {
            "O1" | "O2" | "P3" | "P4" => 12.0,
            _ => 3.0,
        };
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut ch = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / fs;
            ch.push(
                10.0 * gaussian(rng)
                    + alpha_gain * (std::f64::consts::TAU * 10.0 * t + phase).sin(),
            );
        }
        signals.push(ch);
    }

    // non-overlapping integer-second artifact events
    let n_events = ((params.duration_s as f64 * params.artifact_rate).round() as usize).max(1);
    let mut events = Vec::new();
    let mut cursor = rng.gen_range(1..4usize);
    for k in 0..n_events {
        let span = rng.gen_range(2..=5usize);
        if cursor + span + 1 > params.duration_s {
            break;
        }
        let class = ArtifactClass::ARTIFACTS[k % ArtifactClass::ARTIFACTS.len()];
        add_artifact(&mut signals, class, cursor, cursor + span, rng);
        events.push(AnnotationEvent {
            scope: ChannelScope::AllChannels,
            start_s: cursor as f64,
            stop_s: (cursor + span) as f64,
            label: class,
        });
        cursor += span + rng.gen_range(2..6usize);
    }

    let rec = Recording {
        patient_id: patient_id.to_string(),
        session_id: session_id.to_string(),
        sample_rate_hz: fs,
        channel_labels: SYNTH_ELECTRODES.iter().map(|e| format!("EEG {e}-REF")).collect(),
        signals,
    };
    (rec, AnnotationSet { events })
}

/// Write a synthetic corpus under `out_dir` (layout
/// `out_dir/<patient>/<session>.edf` + `.csv`) and index it. Identical
/// seeds and parameters produce identical bytes on disk.
pub fn synth_corpus(out_dir: &Path, seed: u64, params: &SynthParams) -> Result<CorpusIndex> {
    if params.patients == 0 || params.sessions_per_patient == 0 || params.duration_s == 0 {
        return Err(Error::Config("synthetic corpus needs at least one patient, session, and second".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    for p in 0..params.patients {
        let patient_id = format!("p{p:03}");
        let patient_dir = out_dir.join(&patient_id);
        std::fs::create_dir_all(&patient_dir)?;
        for s in 0..params.sessions_per_patient {
            let session_id = format!("{patient_id}_s{s:03}");
            // independent stream per session so files never interact
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (p as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (s as u64) << 32,
            );
            let (rec, ann) = synth_session(&patient_id, &session_id, params, &mut rng);
            std::fs::write(patient_dir.join(format!("{session_id}.edf")), write_edf(&rec)?)?;
            std::fs::write(patient_dir.join(format!("{session_id}.csv")), ann.to_csv())?;
        }
    }
    corpus_scan(out_dir, &ScanConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edf::{load_annotations, load_recording, parse_edf};

    fn small_params() -> SynthParams {
        SynthParams { patients: 2, sessions_per_patient: 1, duration_s: 30, artifact_rate: 0.1 }
    }

    #[test]
    fn output_parses_and_matches_layout() {
        let dir = tempfile::tempdir().unwrap();
        let idx = synth_corpus(dir.path(), 7, &small_params()).unwrap();
        assert_eq!(idx.entries.len(), 2);
        assert_eq!(idx.patients.len(), 2);
        for entry in &idx.entries {
            let rec = load_recording(entry, SYNTH_SAMPLE_RATE_HZ).unwrap();
            assert_eq!(rec.signals.len(), 19);
            assert_eq!(rec.duration_s(), 30.0);
            let ann = load_annotations(entry, rec.duration_s()).unwrap();
            assert!(!ann.events.is_empty());
            crate::montage::to_tcp(&rec).unwrap();
        }
    }

    #[test]
    fn roundtrip_within_one_quantization_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (rec, _) = synth_session("p000", "p000_s000", &small_params(), &mut rng);
        let parsed = parse_edf(&write_edf(&rec).unwrap()).unwrap();
        let step = 2000.0 / 65535.0;
        for (a, b) in rec.signals.iter().zip(&parsed.signals) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= step, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn identical_bytes_per_seed() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let a = synth_corpus(d1.path(), 42, &small_params()).unwrap();
        let b = synth_corpus(d2.path(), 42, &small_params()).unwrap();
        assert_eq!(a.entries.len(), b.entries.len());
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert_eq!(
                std::fs::read(&ea.edf_path).unwrap(),
                std::fs::read(&eb.edf_path).unwrap()
            );
            assert_eq!(
                std::fs::read(&ea.annotation_path).unwrap(),
                std::fs::read(&eb.annotation_path).unwrap()
            );
        }
        // and a different seed changes the data
        let d3 = tempfile::tempdir().unwrap();
        let c = synth_corpus(d3.path(), 43, &small_params()).unwrap();
        assert_ne!(
            std::fs::read(&a.entries[0].edf_path).unwrap(),
            std::fs::read(&c.entries[0].edf_path).unwrap()
        );
    }

    #[test]
    fn every_artifact_class_appears_in_a_long_session() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            patients: 1,
            sessions_per_patient: 1,
            duration_s: 120,
            artifact_rate: 0.1,
        };
        let idx = synth_corpus(dir.path(), 1, &params).unwrap();
        let ann = load_annotations(&idx.entries[0], 120.0).unwrap();
        for class in ArtifactClass::ARTIFACTS {
            assert!(
                ann.events.iter().any(|e| e.label == class),
                "missing {class}"
            );
        }
    }

    #[test]
    fn empty_params_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams { patients: 0, ..small_params() };
        assert!(synth_corpus(dir.path(), 0, &params).is_err());
    }
}
