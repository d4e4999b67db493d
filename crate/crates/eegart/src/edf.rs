//! EDF ingestion: binary recording parser/writer, artifact annotation CSV,
//! and corpus directory indexing.
//!
//! EDF files carry ASCII fixed-width headers (256 bytes global, 256 per
//! signal) followed by data records of 16-bit little-endian two's-complement
//! samples. Samples are rescaled to physical units with the per-signal
//! linear map `physical = physical_min + (digital - digital_min) *
//! (physical_max - physical_min) / (digital_max - digital_min)`.
//!
//! Annotations live in separate CSV files, one event per line:
//! `scope,start_s,stop_s,label` where scope is `TERM` (all channels) or a
//! channel label and `#` begins a comment.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::{Error, Result};

/// The six per-second classes: five artifacts plus the implicit null class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum ArtifactClass {
    Eyem = 0,
    Chew = 1,
    Shiv = 2,
    Elpp = 3,
    Musc = 4,
    Null = 5,
}

impl ArtifactClass {
    pub const ALL: [ArtifactClass; 6] = [
        ArtifactClass::Eyem,
        ArtifactClass::Chew,
        ArtifactClass::Shiv,
        ArtifactClass::Elpp,
        ArtifactClass::Musc,
        ArtifactClass::Null,
    ];

    /// The five artifact classes (everything but null).
    pub const ARTIFACTS: [ArtifactClass; 5] = [
        ArtifactClass::Eyem,
        ArtifactClass::Chew,
        ArtifactClass::Shiv,
        ArtifactClass::Elpp,
        ArtifactClass::Musc,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ArtifactClass::Eyem => "eyem",
            ArtifactClass::Chew => "chew",
            ArtifactClass::Shiv => "shiv",
            ArtifactClass::Elpp => "elpp",
            ArtifactClass::Musc => "musc",
            ArtifactClass::Null => "null",
        }
    }

    /// Parse an artifact label. `null` is intentionally not accepted here:
    /// annotation files mark artifacts only, null is the absence of one.
    pub fn parse_artifact(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "eyem" => Some(ArtifactClass::Eyem),
            "chew" => Some(ArtifactClass::Chew),
            "shiv" => Some(ArtifactClass::Shiv),
            "elpp" => Some(ArtifactClass::Elpp),
            "musc" => Some(ArtifactClass::Musc),
            _ => None,
        }
    }
}

impl fmt::Display for ArtifactClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A raw referential multichannel recording in physical units.
#[derive(Debug, Clone)]
pub struct Recording {
    pub patient_id: String,
    pub session_id: String,
    pub sample_rate_hz: f64,
    /// Referential labels, e.g. `EEG FP1-REF`.
    pub channel_labels: Vec<String>,
    /// channels x samples, microvolts. All channels have equal length.
    pub signals: Vec<Vec<f64>>,
}

impl Recording {
    pub fn samples_per_channel(&self) -> usize {
        self.signals.first().map_or(0, |c| c.len())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples_per_channel() as f64 / self.sample_rate_hz
    }

    /// Resample every channel to `target_hz` by linear interpolation. A
    /// no-op when the rate already matches.
    pub fn resample(&mut self, target_hz: f64) {
        if (self.sample_rate_hz - target_hz).abs() < 1e-9 {
            return;
        }
        let src_n = self.samples_per_channel();
        if src_n == 0 {
            self.sample_rate_hz = target_hz;
            return;
        }
        let dst_n = ((src_n as f64) * target_hz / self.sample_rate_hz).round() as usize;
        let ratio = self.sample_rate_hz / target_hz;
        for ch in &mut self.signals {
            let mut out = Vec::with_capacity(dst_n);
            for i in 0..dst_n {
                let pos = i as f64 * ratio;
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                let a = ch[lo.min(src_n - 1)];
                let b = ch[(lo + 1).min(src_n - 1)];
                out.push(a + frac * (b - a));
            }
            *ch = out;
        }
        self.sample_rate_hz = target_hz;
    }
}

/// Whether an annotation event applies to the whole record or one channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelScope {
    AllChannels,
    Channel(String),
}

/// One timed, labeled artifact event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub scope: ChannelScope,
    pub start_s: f64,
    pub stop_s: f64,
    pub label: ArtifactClass,
}

/// All artifact events of one session, sorted by start time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub events: Vec<AnnotationEvent>,
}

impl AnnotationSet {
    /// Serialize back to the canonical CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let scope = match &e.scope {
                ChannelScope::AllChannels => "TERM",
                ChannelScope::Channel(c) => c.as_str(),
            };
            out.push_str(&format!("{scope},{},{},{}\n", e.start_s, e.stop_s, e.label));
        }
        out
    }
}

/// Parse the canonical annotation CSV. Events are validated against the
/// recording duration and returned sorted by start time.
pub fn parse_annotations(text: &str, duration_s: f64) -> Result<AnnotationSet> {
    let mut events = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Annotation(format!(
                "line {}: expected scope,start_s,stop_s,label",
                lineno + 1
            )));
        }
        let start_s: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Annotation(format!("line {}: bad start {:?}", lineno + 1, fields[1])))?;
        let stop_s: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Annotation(format!("line {}: bad stop {:?}", lineno + 1, fields[2])))?;
        let label = ArtifactClass::parse_artifact(fields[3]).ok_or_else(|| {
            Error::Annotation(format!("line {}: unknown label {:?}", lineno + 1, fields[3]))
        })?;
        if stop_s <= start_s {
            return Err(Error::Annotation(format!(
                "line {}: stop {stop_s} <= start {start_s}",
                lineno + 1
            )));
        }
        if start_s < 0.0 {
            return Err(Error::Annotation(format!("line {}: negative start", lineno + 1)));
        }
        if stop_s > duration_s + 1e-9 {
            return Err(Error::Annotation(format!(
                "line {}: stop {stop_s} beyond recording duration {duration_s}",
                lineno + 1
            )));
        }
        let scope = if fields[0].eq_ignore_ascii_case("TERM") {
            ChannelScope::AllChannels
        } else {
            ChannelScope::Channel(fields[0].to_string())
        };
        events.push(AnnotationEvent { scope, start_s, stop_s, label });
    }
    events.sort_by(|a, b| a.start_s.partial_cmp(&b.start_s).unwrap());
    Ok(AnnotationSet { events })
}

// ---------------------------------------------------------------------------
// EDF binary format
// ---------------------------------------------------------------------------

struct SignalHeader {
    label: String,
    physical_min: f64,
    physical_max: f64,
    digital_min: i32,
    digital_max: i32,
    samples_per_record: usize,
}

fn ascii_field(bytes: &[u8], start: usize, len: usize) -> Result<&str> {
    let slice = bytes
        .get(start..start + len)
        .ok_or_else(|| Error::EdfParse("truncated header".into()))?;
    std::str::from_utf8(slice)
        .map(str::trim)
        .map_err(|_| Error::EdfParse("non-ASCII header field".into()))
}

fn numeric_field<T: std::str::FromStr>(bytes: &[u8], start: usize, len: usize, what: &str) -> Result<T> {
    let s = ascii_field(bytes, start, len)?;
    s.parse()
        .map_err(|_| Error::EdfParse(format!("non-numeric {what} field: {s:?}")))
}

fn is_annotation_channel(label: &str) -> bool {
    label.to_uppercase().contains("ANNOTATION")
}

/// Parse a complete EDF byte stream into a `Recording` at its native sample
/// rate. Annotation pseudo-channels are excluded from the output. Patient
/// and session ids are filled in by the corpus loader, not the parser.
pub fn parse_edf(bytes: &[u8]) -> Result<Recording> {
    if bytes.len() < 256 {
        return Err(Error::EdfParse("truncated file: missing fixed header".into()));
    }
    let n_records: i64 = numeric_field(bytes, 236, 8, "record count")?;
    let record_duration_s: f64 = numeric_field(bytes, 244, 8, "record duration")?;
    let n_signals: usize = numeric_field(bytes, 252, 4, "signal count")?;
    if n_signals == 0 {
        return Err(Error::EdfParse("zero signals".into()));
    }
    if record_duration_s <= 0.0 {
        return Err(Error::EdfParse("non-positive record duration".into()));
    }
    let header_len = 256 + 256 * n_signals;
    if bytes.len() < header_len {
        return Err(Error::EdfParse("truncated file: missing signal headers".into()));
    }

    let mut headers = Vec::with_capacity(n_signals);
    for i in 0..n_signals {
        let label = ascii_field(bytes, 256 + 16 * i, 16)?.to_string();
        let base = 256 + n_signals * (16 + 80 + 8);
        let physical_min: f64 = numeric_field(bytes, base + 8 * i, 8, "physical_min")?;
        let physical_max: f64 = numeric_field(bytes, base + n_signals * 8 + 8 * i, 8, "physical_max")?;
        let digital_min: i32 = numeric_field(bytes, base + n_signals * 16 + 8 * i, 8, "digital_min")?;
        let digital_max: i32 = numeric_field(bytes, base + n_signals * 24 + 8 * i, 8, "digital_max")?;
        let spr_base = 256 + n_signals * (16 + 80 + 8 + 32 + 80);
        let samples_per_record: usize = numeric_field(bytes, spr_base + 8 * i, 8, "samples_per_record")?;
        if digital_min == digital_max {
            return Err(Error::EdfParse(format!(
                "signal {label:?}: digital_min equals digital_max (degenerate scaling)"
            )));
        }
        headers.push(SignalHeader {
            label,
            physical_min,
            physical_max,
            digital_min,
            digital_max,
            samples_per_record,
        });
    }

    let record_samples: usize = headers.iter().map(|h| h.samples_per_record).sum();
    let record_bytes = record_samples * 2;
    let data = &bytes[header_len..];
    let n_records = if n_records < 0 {
        // unknown record count: derive from the payload size
        (data.len() / record_bytes.max(1)) as i64
    } else {
        n_records
    };
    if data.len() < n_records as usize * record_bytes {
        return Err(Error::EdfParse("truncated file: incomplete data records".into()));
    }

    let keep: Vec<usize> = (0..n_signals)
        .filter(|&i| !is_annotation_channel(&headers[i].label))
        .collect();
    if keep.is_empty() {
        return Err(Error::EdfParse("zero signals after excluding annotation channels".into()));
    }
    let sample_rate_hz = headers[keep[0]].samples_per_record as f64 / record_duration_s;
    for &i in &keep {
        let rate = headers[i].samples_per_record as f64 / record_duration_s;
        if (rate - sample_rate_hz).abs() > 1e-9 {
            return Err(Error::EdfParse(format!(
                "mixed sample rates across signals ({rate} vs {sample_rate_hz} Hz)"
            )));
        }
    }

    let mut signals: Vec<Vec<f64>> =
        keep.iter().map(|&i| Vec::with_capacity(n_records as usize * headers[i].samples_per_record)).collect();
    let mut offset = 0usize;
    for _ in 0..n_records {
        for (sig, h) in headers.iter().enumerate() {
            let nbytes = h.samples_per_record * 2;
            let chunk = &data[offset..offset + nbytes];
            if let Some(out_idx) = keep.iter().position(|&k| k == sig) {
                let gain = (h.physical_max - h.physical_min)
                    / (h.digital_max - h.digital_min) as f64;
                let out = &mut signals[out_idx];
                for pair in chunk.chunks_exact(2) {
                    let digital = i16::from_le_bytes([pair[0], pair[1]]) as f64;
                    out.push(h.physical_min + (digital - h.digital_min as f64) * gain);
                }
            }
            offset += nbytes;
        }
    }

    let labels: Vec<String> = keep.iter().map(|&i| headers[i].label.clone()).collect();
    {
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::EdfParse(format!("duplicate channel label {l:?}")));
            }
        }
    }
    Ok(Recording {
        patient_id: String::new(),
        session_id: String::new(),
        sample_rate_hz,
        channel_labels: labels,
        signals,
    })
}

fn pad_field(s: &str, len: usize) -> Vec<u8> {
    let mut b = s.as_bytes().to_vec();
    assert!(b.len() <= len, "EDF header field overflow: {s:?}");
    b.resize(len, b' ');
    b
}

/// Physical range used by the writer; digital range is the full i16 span.
pub const WRITE_PHYSICAL_RANGE: (f64, f64) = (-1000.0, 1000.0);
const WRITE_DIGITAL_RANGE: (i32, i32) = (-32768, 32767);

/// Serialize a recording to EDF bytes with 1-second data records and the
/// default physical range.
pub fn write_edf(rec: &Recording) -> Result<Vec<u8>> {
    write_edf_with_range(rec, WRITE_PHYSICAL_RANGE)
}

/// As [`write_edf`] but with an explicit physical range. The sample rate
/// must be a positive integer and each channel length a multiple of it.
/// Values outside the range are clipped.
pub fn write_edf_with_range(rec: &Recording, physical_range: (f64, f64)) -> Result<Vec<u8>> {
    let fs = rec.sample_rate_hz;
    if fs <= 0.0 || (fs - fs.round()).abs() > 1e-9 {
        return Err(Error::EdfParse(format!("writer requires integer sample rate, got {fs}")));
    }
    let spr = fs.round() as usize;
    let n = rec.samples_per_channel();
    if !n.is_multiple_of(spr) {
        return Err(Error::EdfParse("writer requires whole seconds of data".into()));
    }
    let n_records = n / spr;
    let ns = rec.signals.len();
    if ns == 0 {
        return Err(Error::EdfParse("zero signals".into()));
    }

    let (pmin, pmax) = physical_range;
    let (dmin, dmax) = WRITE_DIGITAL_RANGE;
    let header_len = 256 + 256 * ns;

    let mut out = Vec::with_capacity(header_len + n_records * ns * spr * 2);
    out.extend(pad_field("0", 8));
    out.extend(pad_field(&rec.patient_id, 80));
    out.extend(pad_field(&rec.session_id, 80));
    out.extend(pad_field("01.01.20", 8));
    out.extend(pad_field("00.00.00", 8));
    out.extend(pad_field(&header_len.to_string(), 8));
    out.extend(pad_field("", 44));
    out.extend(pad_field(&n_records.to_string(), 8));
    out.extend(pad_field("1", 8));
    out.extend(pad_field(&ns.to_string(), 4));

    for label in &rec.channel_labels {
        out.extend(pad_field(label, 16));
    }
    for _ in 0..ns {
        out.extend(pad_field("", 80)); // transducer
    }
    for _ in 0..ns {
        out.extend(pad_field("uV", 8));
    }
    for _ in 0..ns {
        out.extend(pad_field(&format!("{pmin}"), 8));
    }
    for _ in 0..ns {
        out.extend(pad_field(&format!("{pmax}"), 8));
    }
    for _ in 0..ns {
        out.extend(pad_field(&dmin.to_string(), 8));
    }
    for _ in 0..ns {
        out.extend(pad_field(&dmax.to_string(), 8));
    }
    for _ in 0..ns {
        out.extend(pad_field("", 80)); // prefiltering
    }
    for _ in 0..ns {
        out.extend(pad_field(&spr.to_string(), 8));
    }
    for _ in 0..ns {
        out.extend(pad_field("", 32)); // reserved
    }

    let gain = (dmax - dmin) as f64 / (pmax - pmin);
    for r in 0..n_records {
        for ch in &rec.signals {
            for &x in &ch[r * spr..(r + 1) * spr] {
                let clipped = x.clamp(pmin, pmax);
                let digital = (dmin as f64 + (clipped - pmin) * gain).round() as i32;
                let digital = digital.clamp(dmin, dmax) as i16;
                out.extend(digital.to_le_bytes());
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Corpus indexing
// ---------------------------------------------------------------------------

/// One session of the corpus: paired recording and annotation files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub patient_id: String,
    pub session_id: String,
    pub edf_path: PathBuf,
    pub annotation_path: PathBuf,
}

/// Index of a corpus directory tree, ordered lexicographically by EDF path.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub entries: Vec<CorpusEntry>,
    pub patients: BTreeSet<String>,
    /// Sessions skipped during the scan, e.g. for a missing annotation file.
    pub warnings: Vec<String>,
}

/// How to derive the patient id from an EDF path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Path-component index relative to the corpus root. When unset the
    /// parent directory of the EDF file is used.
    pub patient_component: Option<usize>,
    /// Fallback applied to the file stem when no directory component is
    /// available; the first capture group becomes the patient id.
    pub patient_regex: String,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            patient_component: None,
            patient_regex: r"^([A-Za-z0-9]+?)_".to_string(),
        }
    }
}

fn patient_id_for(root: &Path, edf_path: &Path, cfg: &ScanConfig, re: &Regex) -> Result<String> {
    let rel = edf_path.strip_prefix(root).unwrap_or(edf_path);
    let components: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().to_string())
        .collect();
    if let Some(idx) = cfg.patient_component {
        return components
            .get(idx)
            .cloned()
            .ok_or_else(|| Error::Corpus(format!("path {rel:?} has no component {idx}")));
    }
    if components.len() >= 2 {
        return Ok(components[components.len() - 2].clone());
    }
    let stem = edf_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    if let Some(cap) = re.captures(&stem) {
        return Ok(cap[1].to_string());
    }
    Err(Error::Corpus(format!("cannot derive patient id from {rel:?}")))
}

/// Index a corpus directory: every `.edf` file paired with a same-stem
/// `.csv` annotation file. Sessions missing their annotation file are
/// reported in `warnings` and skipped.
pub fn corpus_scan(root: &Path, cfg: &ScanConfig) -> Result<CorpusIndex> {
    if !root.is_dir() {
        return Err(Error::Corpus(format!("unreadable directory {root:?}")));
    }
    let re = Regex::new(&cfg.patient_regex)
        .map_err(|e| Error::Corpus(format!("bad patient regex: {e}")))?;
    let mut edf_paths: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("edf")))
        .collect();
    edf_paths.sort();

    let mut index = CorpusIndex::default();
    let mut seen = BTreeSet::new();
    for edf_path in edf_paths {
        let annotation_path = edf_path.with_extension("csv");
        if !annotation_path.exists() {
            index
                .warnings
                .push(format!("skipping {}: no annotation file", edf_path.display()));
            continue;
        }
        let patient_id = patient_id_for(root, &edf_path, cfg, &re)?;
        let session_id = edf_path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        if !seen.insert((patient_id.clone(), session_id.clone())) {
            return Err(Error::Corpus(format!(
                "duplicate (patient, session) pair ({patient_id}, {session_id})"
            )));
        }
        index.patients.insert(patient_id.clone());
        index.entries.push(CorpusEntry { patient_id, session_id, edf_path, annotation_path });
    }
    if index.entries.is_empty() {
        return Err(Error::Corpus(format!("empty corpus under {}", root.display())));
    }
    Ok(index)
}

/// Load and resample one corpus entry; fills in patient/session ids.
pub fn load_recording(entry: &CorpusEntry, target_hz: f64) -> Result<Recording> {
    let bytes = std::fs::read(&entry.edf_path)?;
    let mut rec = parse_edf(&bytes)?;
    rec.patient_id = entry.patient_id.clone();
    rec.session_id = entry.session_id.clone();
    rec.resample(target_hz);
    Ok(rec)
}

/// Load the annotations paired with a corpus entry.
pub fn load_annotations(entry: &CorpusEntry, duration_s: f64) -> Result<AnnotationSet> {
    let text = std::fs::read_to_string(&entry.annotation_path)?;
    parse_annotations(&text, duration_s)
}
