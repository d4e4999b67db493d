//! Per-window spectral eigen-features.
//!
//! A montaged recording is sliced into overlapping one-second windows. Each
//! window maps, per channel, to a magnitude spectrum restricted to the 1 Hz
//! bins from 1 to 24 Hz, optionally log-scaled, then z-scored across bins.
//! The Pearson correlation matrix between channel spectra is eigendecomposed
//! and the sorted absolute eigenvalues form the 22-dimensional feature
//! vector.

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::montage::MontagedRecording;
use crate::{Error, Result};

/// Guard added inside the logarithm so flat spectra stay finite.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    ZscorePerChannel,
    None,
}

/// Windowing and spectrum parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window_s: f64,
    /// Fraction of a window shared with its successor; 0.75 gives a 0.25 s
    /// stride.
    pub overlap_fraction: f64,
    pub band_lo_hz: usize,
    pub band_hi_hz: usize,
    pub normalization: Normalization,
    pub log_magnitude: bool,
    /// Append the flattened upper-triangle correlations to the eigenvalue
    /// features (off by default; feature dimension stays 22).
    pub append_correlations: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window_s: 1.0,
            overlap_fraction: 0.75,
            band_lo_hz: 1,
            band_hi_hz: 24,
            normalization: Normalization::ZscorePerChannel,
            log_magnitude: true,
            append_correlations: false,
        }
    }
}

impl FeatureConfig {
    pub fn stride_s(&self) -> f64 {
        self.window_s * (1.0 - self.overlap_fraction)
    }

    pub fn n_bins(&self) -> usize {
        self.band_hi_hz - self.band_lo_hz + 1
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Feature(format!(
                "overlap_fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        if self.band_lo_hz >= self.band_hi_hz || (self.band_hi_hz as f64) >= sample_rate_hz / 2.0 {
            return Err(Error::Feature(format!(
                "band [{}, {}] Hz invalid for fs {} Hz",
                self.band_lo_hz, self.band_hi_hz, sample_rate_hz
            )));
        }
        let samples = self.window_s * sample_rate_hz;
        if (samples - samples.round()).abs() > 1e-9 || samples < 1.0 {
            return Err(Error::Feature(format!(
                "window_s {} x fs {} is not a whole number of samples",
                self.window_s, sample_rate_hz
            )));
        }
        Ok(())
    }

    /// Stable hash of the configuration, used as a feature-cache key part.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One window of montaged signal.
#[derive(Debug, Clone)]
pub struct Window {
    pub start_s: f64,
    /// channels x samples.
    pub samples: Vec<Vec<f64>>,
}

/// channels x frequency-bins spectra after normalization.
#[derive(Debug, Clone)]
pub struct NormalizedSpectrum {
    pub values: Vec<Vec<f64>>,
}

/// Symmetric inter-channel correlation matrix, row-major.
#[derive(Debug, Clone)]
pub struct CorrMatrix {
    pub values: Vec<f64>,
    pub n: usize,
}

impl CorrMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Slice a recording into full-length windows starting at 0 with stride
/// `window_s * (1 - overlap)`. Trailing partial windows are dropped.
pub fn window_slice(rec: &MontagedRecording, cfg: &FeatureConfig) -> Result<Vec<Window>> {
    cfg.validate(rec.sample_rate_hz)?;
    let duration = rec.duration_s();
    if duration + 1e-9 < cfg.window_s {
        return Err(Error::Feature(format!(
            "recording of {duration} s shorter than one {} s window",
            cfg.window_s
        )));
    }
    let window_n = (cfg.window_s * rec.sample_rate_hz).round() as usize;
    let stride_n = (cfg.stride_s() * rec.sample_rate_hz).round() as usize;
    if stride_n == 0 {
        return Err(Error::Feature("stride rounds to zero samples".into()));
    }
    let total_n = rec.signals.first().map_or(0, |c| c.len());
    let count = (total_n - window_n) / stride_n + 1;
    let mut windows = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * stride_n;
        let samples = rec
            .signals
            .iter()
            .map(|ch| ch[start..start + window_n].to_vec())
            .collect();
        windows.push(Window {
            start_s: start as f64 / rec.sample_rate_hz,
            samples,
        });
    }
    Ok(windows)
}

fn zscore_row(row: &mut [f64]) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        row.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let sd = var.sqrt();
    row.iter_mut().for_each(|x| *x = (*x - mean) / sd);
}

/// Per-channel magnitude spectrum restricted to the configured 1 Hz bins,
/// optionally log-scaled, then normalized.
pub fn spectral_features(
    window: &Window,
    sample_rate_hz: f64,
    cfg: &FeatureConfig,
) -> NormalizedSpectrum {
    let padded = dsp::next_pow2((cfg.window_s * sample_rate_hz).round() as usize);
    let values = window
        .samples
        .iter()
        .map(|ch| {
            let mags = dsp::magnitude_spectrum(ch);
            let mut row: Vec<f64> = (cfg.band_lo_hz..=cfg.band_hi_hz)
                .map(|f| {
                    // nearest padded-transform bin to integer frequency f
                    let bin = ((f as f64) * padded as f64 / sample_rate_hz).round() as usize;
                    mags[bin.min(mags.len() - 1)]
                })
                .collect();
            if cfg.log_magnitude {
                row.iter_mut().for_each(|x| *x = (*x + LOG_EPSILON).log10());
            }
            if cfg.normalization == Normalization::ZscorePerChannel {
                zscore_row(&mut row);
            }
            row
        })
        .collect();
    NormalizedSpectrum { values }
}

/// Pearson correlation between channel rows. Zero-variance rows get a unit
/// diagonal and zero off-diagonals.
pub fn correlation_matrix(spectrum: &NormalizedSpectrum) -> CorrMatrix {
    let n = spectrum.values.len();
    let bins = spectrum.values.first().map_or(0, |r| r.len()) as f64;
    let centered: Vec<(Vec<f64>, f64)> = spectrum
        .values
        .iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / bins;
            let c: Vec<f64> = row.iter().map(|x| x - mean).collect();
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            (c, norm)
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let (ci, ni) = &centered[i];
            let (cj, nj) = &centered[j];
            let r = if *ni == 0.0 || *nj == 0.0 {
                0.0
            } else {
                let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                (dot / (ni * nj)).clamp(-1.0, 1.0)
            };
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    CorrMatrix { values, n }
}

/// Absolute eigenvalues of the correlation matrix, sorted descending.
pub fn eigen_features(corr: &CorrMatrix) -> Result<Vec<f64>> {
    let mut vals = dsp::sym_eigenvalues(&corr.values, corr.n)?;
    vals.iter_mut().for_each(|x| *x = x.abs());
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Full pipeline: window, spectrum, correlation, eigenvalues. Returns one
/// `(start_s, features)` pair per window, in window order.
pub fn extract_features(
    rec: &MontagedRecording,
    cfg: &FeatureConfig,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let windows = window_slice(rec, cfg)?;
    windows
        .iter()
        .map(|w| {
            let spectrum = spectral_features(w, rec.sample_rate_hz, cfg);
            let corr = correlation_matrix(&spectrum);
            let mut feats = eigen_features(&corr)?;
            if cfg.append_correlations {
                for i in 0..corr.n {
                    for j in (i + 1)..corr.n {
                        feats.push(corr.get(i, j));
                    }
                }
            }
            Ok((w.start_s, feats))
        })
        .collect()
}
