//! Scalar time series: ingestion, synthetic generation, delay embedding and
//! sliding snapshot windows.
//!
//! Time indices used throughout the crate are positions in
//! [`TimeSeries::values`], starting at 0. `start_index` only records where the
//! first retained value sat in the source file.

use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Ordered scalar observations with uniform sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_index: usize,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_start(values, 0)
    }

    pub fn with_start(values: Vec<f64>, start_index: usize) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            values,
            start_index,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<f64> {
        self.values.get(t).copied()
    }

    /// Series restricted to indices `0..len`.
    pub fn truncated(&self, len: usize) -> Self {
        Self {
            values: self.values[..len.min(self.values.len())].to_vec(),
            start_index: self.start_index,
        }
    }
}

/// Which CSV column holds the series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnSelector::Name(n) => write!(f, "{n}"),
            ColumnSelector::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Linearly interpolate interior missing values instead of failing.
    pub interpolate: bool,
    pub missing_markers: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            interpolate: false,
            missing_markers: vec![String::new(), "NA".to_string()],
        }
    }
}

/// Load one column of a headered CSV file as a [`TimeSeries`].
pub fn load_csv(
    path: impl AsRef<Path>,
    column: &ColumnSelector,
    options: &CsvOptions,
) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, column, options)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(
    reader: R,
    column: &ColumnSelector,
    options: &CsvOptions,
) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let col = match column {
        ColumnSelector::Name(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?,
        ColumnSelector::Index(i) if *i < headers.len() => *i,
        ColumnSelector::Index(i) => return Err(Error::MissingColumn(format!("#{i}"))),
    };

    let mut cells: Vec<Option<f64>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row, header excluded
        let row = i + 1;
        let raw = record.get(col).unwrap_or("").trim();
        let cell = if options.missing_markers.iter().any(|m| m == raw) {
            None
        } else {
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                Ok(_) => None,
                Err(_) => {
                    return Err(Error::NonNumeric {
                        row,
                        value: raw.to_string(),
                    })
                }
            }
        };
        if cell.is_none() && !options.interpolate {
            return Err(Error::MissingValue { row });
        }
        cells.push(cell);
    }

    let first = cells.iter().position(Option::is_some);
    let last = cells.iter().rposition(Option::is_some);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::TooFewRows { needed: 2, found: 0 }),
    };
    let found = cells[first..=last].iter().filter(|c| c.is_some()).count();
    if found < 2 {
        return Err(Error::TooFewRows { needed: 2, found });
    }

    let values = interpolate_gaps(&cells[first..=last]);
    TimeSeries::with_start(values, first)
}

/// Fill `None` gaps by linear interpolation. Endpoints must be present.
fn interpolate_gaps(cells: &[Option<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(cells.len());
    let mut prev: Option<(usize, f64)> = None;
    for (i, cell) in cells.iter().enumerate() {
        if let Some(v) = *cell {
            if let Some((pi, pv)) = prev {
                let span = (i - pi) as f64;
                for k in (pi + 1)..i {
                    let w = (k - pi) as f64 / span;
                    out.push(pv + w * (v - pv));
                }
            }
            out.push(v);
            prev = Some((i, v));
        }
    }
    out
}

/// Regime multipliers of the piecewise exponential system.
pub const REGIME_LAMBDAS: [f64; 4] = [-1.0101, -0.99, 0.99, 1.0101];

/// Parameters of the switched multiplicative system
/// `x_t = λ_t x_{t-1} (1 + η ξ_t)`, `ξ_t ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseExponential {
    /// Number of emitted values, `x_0` included.
    pub steps: usize,
    pub switch_period: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Default for PiecewiseExponential {
    fn default() -> Self {
        Self {
            steps: 1000,
            switch_period: 10,
            eta: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    pub series: TimeSeries,
    /// `lambdas[t]` is the multiplier that produced `x_t`; `lambdas[0]` repeats
    /// the first regime.
    pub lambdas: Vec<f64>,
}

/// Generate the piecewise exponential benchmark series.
///
/// The multiplier is redrawn uniformly every `switch_period` steps, rejecting
/// candidates whose sign matches the outgoing regime.
pub fn gen_piecewise_exponential(params: &PiecewiseExponential) -> Result<SyntheticSeries> {
    if params.steps < 1 {
        return Err(Error::Config("steps must be >= 1".into()));
    }
    if params.switch_period < 1 {
        return Err(Error::Config("switch_period must be >= 1".into()));
    }
    if !(params.eta >= 0.0 && params.eta.is_finite()) {
        return Err(Error::Config("eta must be finite and >= 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut lambdas = Vec::with_capacity(params.steps);
    let mut current = REGIME_LAMBDAS[rng.random_range(0..REGIME_LAMBDAS.len())];
    lambdas.push(current);
    for t in 1..params.steps {
        if t > 1 && (t - 1) % params.switch_period == 0 {
            current = loop {
                let candidate = REGIME_LAMBDAS[rng.random_range(0..REGIME_LAMBDAS.len())];
                if candidate.signum() != current.signum() {
                    break candidate;
                }
            };
        }
        lambdas.push(current);
    }

    let noise: Vec<f64> = (1..params.steps)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let values = evolve_multiplicative(1.0, &lambdas[1..], &noise, params.eta);
    Ok(SyntheticSeries {
        series: TimeSeries::new(values)?,
        lambdas,
    })
}

/// Iterate `x_t = λ_t x_{t-1} (1 + η ξ_t)` from `x0`. Returns `x0` followed by
/// one value per multiplier.
pub fn evolve_multiplicative(x0: f64, lambdas: &[f64], noise: &[f64], eta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lambdas.len() + 1);
    let mut x = x0;
    out.push(x);
    for (i, &lambda) in lambdas.iter().enumerate() {
        let xi = noise.get(i).copied().unwrap_or(0.0);
        x = lambda * x * (1.0 + eta * xi);
        out.push(x);
    }
    out
}

/// Delay-embedded state `[x_{t-n_delays}, ..., x_t]`, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedState(pub Vec<f64>);

impl EmbeddedState {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The raw value at the state's own time index.
    pub fn current(&self) -> f64 {
        *self.0.last().expect("embedded states are non-empty")
    }
}

/// All delay-embedded states of a series. State `t` exists for `t >= n_delays`.
#[derive(Debug, Clone)]
pub struct Embedding {
    states: Vec<EmbeddedState>,
    n_delays: usize,
}

impl Embedding {
    pub fn n_delays(&self) -> usize {
        self.n_delays
    }

    pub fn dim(&self) -> usize {
        self.n_delays + 1
    }

    pub fn states(&self) -> &[EmbeddedState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// One past the last valid time index.
    pub fn end(&self) -> usize {
        self.states.len() + self.n_delays
    }

    /// State at series time index `t`.
    pub fn at(&self, t: usize) -> Option<&EmbeddedState> {
        t.checked_sub(self.n_delays).and_then(|i| self.states.get(i))
    }
}

pub fn delay_embed(series: &TimeSeries, n_delays: usize) -> Result<Embedding> {
    let values = series.values();
    if values.len() <= n_delays {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            needed: n_delays + 1,
        });
    }
    let states = values
        .windows(n_delays + 1)
        .map(|w| EmbeddedState(w.to_vec()))
        .collect();
    Ok(Embedding { states, n_delays })
}

/// Snapshot matrices of one sliding window.
///
/// Columns of `X` are the states at `t-ω .. t-1`, columns of `Y` those at
/// `t-ω+1 ..= t`. Both views share one buffer, so `Y` is an exact one-step
/// shift of `X`.
#[derive(Debug, Clone)]
pub struct SnapshotPair {
    states: Vec<EmbeddedState>,
    t: usize,
}

impl SnapshotPair {
    pub fn x(&self) -> &[EmbeddedState] {
        &self.states[..self.states.len() - 1]
    }

    pub fn y(&self) -> &[EmbeddedState] {
        &self.states[1..]
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn omega(&self) -> usize {
        self.states.len() - 1
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].dim()
    }

    /// State at the window's end index `t`.
    pub fn current(&self) -> &EmbeddedState {
        self.states.last().expect("window holds at least two states")
    }

    /// Raw values covered by the window, `x_{t-ω-n_delays} ..= x_t`.
    pub fn raw_window(&self) -> Vec<f64> {
        let mut raw = self.states[0].coords().to_vec();
        raw.extend(self.states[1..].iter().map(EmbeddedState::current));
        raw
    }

    /// First raw value covered by the window.
    pub fn anchor(&self) -> f64 {
        self.states[0].coords()[0]
    }
}

/// Extract the snapshot pair whose `Y` block ends at time index `t`.
pub fn window_pair(embedding: &Embedding, t: usize, omega: usize) -> Result<SnapshotPair> {
    if omega < 1 {
        return Err(Error::Config("omega must be >= 1".into()));
    }
    let min = omega + embedding.n_delays();
    let max = embedding.end().saturating_sub(1);
    if t < min || t > max {
        return Err(Error::InsufficientHistory { t, min, max });
    }
    let first = t - omega - embedding.n_delays();
    let states = embedding.states()[first..=first + omega].to_vec();
    Ok(SnapshotPair { states, t })
}
