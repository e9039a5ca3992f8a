//! Sliding-window extended dynamic mode decomposition with an episodic memory
//! of past spectra.
//!
//! A univariate series is delay embedded, each window of `ω` snapshot pairs is
//! lifted through a Gaussian RBF dictionary, and a finite Koopman
//! approximation is fitted. The leading eigenvalues and modes form a window
//! signature. Signatures are kept in a [`MemoryBank`]; when the current window
//! resembles a stored one, the value that followed the stored window is
//! recalled as the forecast.

pub mod assignment;
pub mod dictionary;
pub mod edmd;
pub mod error;
pub mod forecast;
pub mod linalg;
pub mod memory;
pub mod metrics;
pub mod series;
pub mod similarity;

pub use num_complex::Complex64;

pub use dictionary::{build_dictionary, Dictionary, DictionaryConfig};
pub use edmd::{
    edmd_fit, extract_signature, predict_sliding, window_signature, EdmdConfig, KoopmanModel, SlidingPrediction,
    SpectralSignature, WindowOrigin,
};
pub use error::{Error, Result};
pub use forecast::{
    recall_prediction, run, run_with_bank, ForecastConfig, ForecastRecord, ForecastRun, Mode, Profile, RecordFlags,
    Source,
};
pub use memory::{MatchResult, MatchThresholds, MemoryBank, MemoryRecord};
pub use metrics::{abs_errors, improvement, median, median_relative_error, ErrorSummary, Improvement};
pub use series::{
    delay_embed, gen_piecewise_exponential, load_csv, read_csv, window_pair, ColumnSelector, CsvOptions,
    EmbeddedState, Embedding, PiecewiseExponential, SnapshotPair, SyntheticSeries, TimeSeries,
};
pub use similarity::{mode_distance, signature_distance, wasserstein1, SignatureDistance};
