use thiserror::Error;

/// Error type shared across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("EDF parse error: {0}")]
    EdfParse(String),
    #[error("annotation parse error: {0}")]
    Annotation(String),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("montage error: {0}")]
    Montage(String),
    #[error("feature extraction error: {0}")]
    Feature(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("classifier error: {0}")]
    Classifier(String),
    #[error("tuning error: {0}")]
    Tuning(String),
    #[error("metrics error: {0}")]
    Metrics(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
