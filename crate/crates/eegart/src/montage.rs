//! Conversion of referential recordings to the 22-channel transverse central
//! parietal (TCP) bipolar montage.
//!
//! Each output channel is the sample-wise difference of an anode/cathode
//! electrode pair. The pair list follows the standard ACNS TCP chain and can
//! be overridden from a plain-text montage file (one `ANODE-CATHODE` per
//! line, order significant).

use std::collections::HashMap;
use std::path::Path;

use crate::edf::Recording;
use crate::{Error, Result};

/// The standard ACNS TCP chain, 22 bipolar derivations.
pub const TCP_PAIRS: [(&str, &str); 22] = [
    ("FP1", "F7"),
    ("F7", "T3"),
    ("T3", "T5"),
    ("T5", "O1"),
    ("FP2", "F8"),
    ("F8", "T4"),
    ("T4", "T6"),
    ("T6", "O2"),
    ("A1", "T3"),
    ("T3", "C3"),
    ("C3", "CZ"),
    ("CZ", "C4"),
    ("C4", "T4"),
    ("T4", "A2"),
    ("FP1", "F3"),
    ("F3", "C3"),
    ("C3", "P3"),
    ("P3", "O1"),
    ("FP2", "F4"),
    ("F4", "C4"),
    ("C4", "P4"),
    ("P4", "O2"),
];

/// An ordered list of anode/cathode electrode pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Montage {
    pub pairs: Vec<(String, String)>,
}

impl Montage {
    /// The built-in 22-pair TCP montage.
    pub fn tcp() -> Self {
        Montage {
            pairs: TCP_PAIRS
                .iter()
                .map(|(a, c)| (a.to_string(), c.to_string()))
                .collect(),
        }
    }

    /// Parse a montage definition: one `ANODE-CATHODE` pair per line, `#`
    /// starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, c) = line.split_once('-').ok_or_else(|| {
                Error::Montage(format!("line {}: expected ANODE-CATHODE, got {line:?}", lineno + 1))
            })?;
            pairs.push((a.trim().to_uppercase(), c.trim().to_uppercase()));
        }
        if pairs.is_empty() {
            return Err(Error::Montage("montage file defines no pairs".into()));
        }
        Ok(Montage { pairs })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Channel names in output order, e.g. `FP1-F7`.
    pub fn channel_names(&self) -> Vec<String> {
        self.pairs.iter().map(|(a, c)| format!("{a}-{c}")).collect()
    }
}

/// A recording re-referenced to bipolar derivations.
#[derive(Debug, Clone)]
pub struct MontagedRecording {
    pub patient_id: String,
    pub session_id: String,
    pub sample_rate_hz: f64,
    /// Derivation names, e.g. `FP1-F7`; length equals `signals.len()`.
    pub channels: Vec<String>,
    /// channels x samples, microvolts.
    pub signals: Vec<Vec<f64>>,
}

impl MontagedRecording {
    pub fn duration_s(&self) -> f64 {
        if self.signals.is_empty() {
            0.0
        } else {
            self.signals[0].len() as f64 / self.sample_rate_hz
        }
    }
}

/// Map a raw channel label to a bare electrode name: strips the modality
/// prefix and reference suffix, case-insensitive (`"EEG FP1-REF"` -> `"FP1"`).
pub fn resolve_channel(label: &str) -> Result<String> {
    let mut s = label.trim().to_uppercase();
    if let Some(rest) = s.strip_prefix("EEG ") {
        s = rest.to_string();
    }
    for suffix in ["-REF", "-LE"] {
        if let Some(rest) = s.strip_suffix(suffix) {
            s = rest.to_string();
            break;
        }
    }
    let known = [
        "FP1", "FP2", "F3", "F4", "F7", "F8", "FZ", "C3", "C4", "CZ", "P3", "P4", "PZ", "T3",
        "T4", "T5", "T6", "O1", "O2", "A1", "A2",
    ];
    if known.contains(&s.as_str()) {
        Ok(s)
    } else {
        Err(Error::Montage(format!("label {label:?} unresolvable for TCP")))
    }
}

/// Convert a referential recording into the given bipolar montage. Channel
/// `k` of the output is `anode_k - cathode_k` element-wise.
pub fn apply_montage(rec: &Recording, montage: &Montage) -> Result<MontagedRecording> {
    let mut by_electrode: HashMap<String, usize> = HashMap::new();
    for (i, label) in rec.channel_labels.iter().enumerate() {
        if let Ok(name) = resolve_channel(label) {
            if let Some(prev) = by_electrode.insert(name.clone(), i) {
                return Err(Error::Montage(format!(
                    "ambiguous electrode {name}: labels {:?} and {:?} both resolve to it",
                    rec.channel_labels[prev], label
                )));
            }
        }
    }
    let mut signals = Vec::with_capacity(montage.pairs.len());
    for (anode, cathode) in &montage.pairs {
        let ai = *by_electrode
            .get(anode)
            .ok_or_else(|| Error::Montage(format!("missing electrode {anode}")))?;
        let ci = *by_electrode
            .get(cathode)
            .ok_or_else(|| Error::Montage(format!("missing electrode {cathode}")))?;
        let diff: Vec<f64> = rec.signals[ai]
            .iter()
            .zip(&rec.signals[ci])
            .map(|(a, c)| a - c)
            .collect();
        signals.push(diff);
    }
    Ok(MontagedRecording {
        patient_id: rec.patient_id.clone(),
        session_id: rec.session_id.clone(),
        sample_rate_hz: rec.sample_rate_hz,
        channels: montage.channel_names(),
        signals,
    })
}

/// Convenience: apply the built-in TCP montage.
pub fn to_tcp(rec: &Recording) -> Result<MontagedRecording> {
    apply_montage(rec, &Montage::tcp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn referential(channel_values: &[(&str, f64)], samples: usize) -> Recording {
        Recording {
            patient_id: "p0".into(),
            session_id: "s0".into(),
            sample_rate_hz: 256.0,
            channel_labels: channel_values
                .iter()
                .map(|(n, _)| format!("EEG {n}-REF"))
                .collect(),
            signals: channel_values
                .iter()
                .map(|(_, v)| vec![*v; samples])
                .collect(),
        }
    }

    /// All 19 TCP electrodes at a constant per-electrode value.
    fn full_recording(value: impl Fn(&str) -> f64) -> Recording {
        let electrodes = [
            "FP1", "FP2", "F3", "F4", "F7", "F8", "C3", "C4", "CZ", "P3", "P4", "T3", "T4",
            "T5", "T6", "O1", "O2", "A1", "A2",
        ];
        let vals: Vec<(&str, f64)> = electrodes.iter().map(|&e| (e, value(e))).collect();
        referential(&vals, 64)
    }

    #[test]
    fn resolve_strips_prefix_and_suffix() {
        assert_eq!(resolve_channel("EEG FP1-REF").unwrap(), "FP1");
        assert_eq!(resolve_channel("eeg t3-le").unwrap(), "T3");
        assert!(resolve_channel("EKG1").is_err());
    }

    #[test]
    fn bipolar_difference() {
        let rec = full_recording(|e| match e {
            "FP1" => 5.0,
            "F7" => 2.0,
            _ => 0.0,
        });
        let out = to_tcp(&rec).unwrap();
        assert_eq!(out.channels.len(), 22);
        let idx = out.channels.iter().position(|c| c == "FP1-F7").unwrap();
        assert!(out.signals[idx].iter().all(|&x| (x - 3.0).abs() < 1e-12));
    }

    #[test]
    fn identical_signals_cancel() {
        let rec = full_recording(|_| 7.5);
        let out = to_tcp(&rec).unwrap();
        for ch in &out.signals {
            assert!(ch.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn missing_electrode_named_in_error() {
        let mut rec = full_recording(|_| 1.0);
        let cz = rec.channel_labels.iter().position(|l| l == "EEG CZ-REF").unwrap();
        rec.channel_labels.remove(cz);
        rec.signals.remove(cz);
        let err = to_tcp(&rec).unwrap_err();
        assert!(err.to_string().contains("missing electrode CZ"), "{err}");
    }

    #[test]
    fn ambiguous_label_rejected() {
        let mut rec = full_recording(|_| 1.0);
        rec.channel_labels.push("EEG CZ-LE".into());
        rec.signals.push(vec![0.0; 64]);
        assert!(to_tcp(&rec).is_err());
    }

    #[test]
    fn montage_is_linear() {
        let x = full_recording(|e| e.len() as f64);
        let y = full_recording(|e| e.bytes().map(|b| b as f64).sum::<f64>());
        let (a, b) = (2.5, -1.25);
        let mut combo = x.clone();
        for (ci, ch) in combo.signals.iter_mut().enumerate() {
            for (si, v) in ch.iter_mut().enumerate() {
                *v = a * x.signals[ci][si] + b * y.signals[ci][si];
            }
        }
        let mx = to_tcp(&x).unwrap();
        let my = to_tcp(&y).unwrap();
        let mc = to_tcp(&combo).unwrap();
        for ci in 0..22 {
            for si in 0..64 {
                let expect = a * mx.signals[ci][si] + b * my.signals[ci][si];
                assert!((mc.signals[ci][si] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn montage_file_roundtrip() {
        let m = Montage::tcp();
        let text: String = m
            .pairs
            .iter()
            .map(|(a, c)| format!("{a}-{c}\n"))
            .collect();
        assert_eq!(Montage::parse(&text).unwrap(), m);
    }
}
