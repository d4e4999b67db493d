//! EEG artifact recognition benchmark toolkit.
//!
//! The pipeline: EDF recordings are parsed ([`edf`]), converted to the
//! 22-channel TCP bipolar montage ([`montage`]), sliced into overlapping
//! one-second windows and mapped to eigenvalue features of the inter-channel
//! spectral correlation matrix ([`features`]). Windows are labeled from
//! artifact annotations and assembled into patient-disjoint splits
//! ([`dataset`]), eight classifier families are trained and tuned
//! ([`classifiers`], [`tuning`]), and per-second predictions are scored with
//! confusion-matrix metrics ([`metrics`]). [`bench`] orchestrates multi-run
//! benchmarks and [`synth`] generates a synthetic corpus for dataset-free CI.

pub mod bench;
pub mod classifiers;
pub mod dataset;
pub mod dsp;
pub mod edf;
pub mod features;
pub mod metrics;
pub mod montage;
pub mod synth;
pub mod tuning;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
