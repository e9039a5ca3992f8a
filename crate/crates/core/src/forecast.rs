//! The forecasting loop: sliding EDMD, optionally backed by episodic memory.
//!
//! At every issue index `t` the loop fits the window ending at `t`, looks for
//! an admissible past window with a matching signature, predicts `x_{t+Δ}`
//! either by recalling what followed that window or from the current spectrum,
//! and only then stores the current signature. A window can therefore never
//! match itself.

use serde::{Deserialize, Serialize};

use crate::dictionary::DictionaryConfig;
use crate::edmd::{predict_sliding, window_signature, EdmdConfig, SpectralSignature};
use crate::error::{Error, Result};
use crate::memory::{MatchResult, MatchThresholds, MemoryBank};
use crate::series::{delay_embed, window_pair, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Plain sliding EDMD; the memory bank is never touched.
    Sliding,
    /// Sliding EDMD with episodic recall.
    Memory,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sliding" => Ok(Mode::Sliding),
            "memory" => Ok(Mode::Memory),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sliding => "sliding",
            Mode::Memory => "memory",
        })
    }
}

/// Hyperparameter presets matching the three reference datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Piecewise exponential benchmark: ω=5, Δ=5, one delay, ε=(0.05, 0.10),
    /// rescaling on.
    Synthetic,
    /// Weekly flu counts: ω=3, Δ=1, four delays, ε=(0.05, 0.25).
    Flu,
    /// Hourly bike share counts: ω=3, Δ=1, one delay, ε=(0.1, 0.2).
    Bike,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Profile::Synthetic),
            "flu" => Ok(Profile::Flu),
            "bike" => Ok(Profile::Bike),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub mode: Mode,
    pub omega: usize,
    pub delta: usize,
    pub n_delays: usize,
    pub eps_lambda: f64,
    /// Defaults to `eps_lambda * (n_delays + 1)`.
    pub eps_v: Option<f64>,
    pub n_rbf: usize,
    /// Defaults to `min(omega, lifted_dim)`.
    pub n_keep: Option<usize>,
    pub include_identity: bool,
    pub sigma_floor: f64,
    pub rel_tol: f64,
    pub residual_tol: f64,
    pub magnitude_cap: f64,
    pub anchor_floor: f64,
    /// Scale recalled values by the ratio of window anchors.
    pub rescale: bool,
    /// Memory bank capacity; unbounded when `None`.
    pub capacity: Option<usize>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let dict = DictionaryConfig::default();
        let edmd = EdmdConfig::default();
        Self {
            mode: Mode::Memory,
            omega: 5,
            delta: 1,
            n_delays: 1,
            eps_lambda: 0.05,
            eps_v: None,
            n_rbf: dict.n_rbf,
            n_keep: None,
            include_identity: dict.include_identity,
            sigma_floor: dict.sigma_floor,
            rel_tol: edmd.rel_tol,
            residual_tol: edmd.residual_tol,
            magnitude_cap: 1e12,
            anchor_floor: 1e-12,
            rescale: false,
            capacity: None,
        }
    }
}

impl ForecastConfig {
    pub fn profile(profile: Profile) -> Self {
        let base = Self::default();
        match profile {
            Profile::Synthetic => Self {
                omega: 5,
                delta: 5,
                n_delays: 1,
                eps_lambda: 0.05,
                eps_v: Some(0.10),
                rescale: true,
                ..base
            },
            Profile::Flu => Self {
                omega: 3,
                delta: 1,
                n_delays: 4,
                eps_lambda: 0.05,
                eps_v: Some(0.25),
                ..base
            },
            Profile::Bike => Self {
                omega: 3,
                delta: 1,
                n_delays: 1,
                eps_lambda: 0.1,
                eps_v: Some(0.2),
                ..base
            },
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn eps_v(&self) -> f64 {
        self.eps_v
            .unwrap_or(self.eps_lambda * (self.n_delays + 1) as f64)
    }

    pub fn lifted_dim(&self) -> usize {
        self.n_rbf + if self.include_identity { self.n_delays + 1 } else { 0 }
    }

    pub fn n_keep(&self) -> usize {
        self.n_keep.unwrap_or(self.omega.min(self.lifted_dim()))
    }

    /// Shortest series the loop accepts.
    pub fn min_series_len(&self) -> usize {
        self.omega + self.n_delays + self.delta + 1
    }

    pub fn dictionary(&self) -> DictionaryConfig {
        DictionaryConfig {
            n_rbf: self.n_rbf,
            sigma_floor: self.sigma_floor,
            include_identity: self.include_identity,
        }
    }

    pub fn edmd(&self) -> EdmdConfig {
        EdmdConfig {
            rel_tol: self.rel_tol,
            residual_tol: self.residual_tol,
        }
    }

    pub fn thresholds(&self) -> MatchThresholds {
        MatchThresholds {
            eps_lambda: self.eps_lambda,
            eps_v: self.eps_v(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.omega < 1 {
            return fail("omega must be >= 1".into());
        }
        if self.delta < 1 {
            return fail("delta must be >= 1".into());
        }
        if !(self.eps_lambda > 0.0) {
            return fail(format!("eps_lambda must be > 0, got {}", self.eps_lambda));
        }
        if !(self.eps_v() > 0.0) {
            return fail(format!("eps_v must be > 0, got {}", self.eps_v()));
        }
        if self.n_rbf < 1 {
            return fail("n_rbf must be >= 1".into());
        }
        if self.n_keep() < 1 {
            return fail("n_keep must be >= 1".into());
        }
        if !(self.sigma_floor > 0.0) {
            return fail("sigma_floor must be > 0".into());
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol < 1.0) {
            return fail(format!("rel_tol must lie in [0, 1), got {}", self.rel_tol));
        }
        if !(self.magnitude_cap > 0.0) {
            return fail("magnitude_cap must be > 0".into());
        }
        if !(self.anchor_floor >= 0.0) {
            return fail("anchor_floor must be >= 0".into());
        }
        if self.capacity == Some(0) {
            return fail("capacity must be >= 1 when set".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Memory,
    Sliding,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// The spectral prediction was clamped to the magnitude cap.
    pub overflow: bool,
    /// The recalled anchor was too small to divide by; the ratio was forced to 1.
    pub anchor_guard: bool,
    /// This window's signature was unusable; an earlier one was used instead.
    pub fallback: bool,
}

impl RecordFlags {
    pub fn any(&self) -> bool {
        self.overflow || self.anchor_guard || self.fallback
    }

    /// `|`-separated flag names, empty when none are set.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.overflow {
            parts.push("overflow");
        }
        if self.anchor_guard {
            parts.push("anchor_guard");
        }
        if self.fallback {
            parts.push("fallback");
        }
        parts.join("|")
    }
}

/// One prediction of `x_{t+Δ}` issued at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub t: usize,
    pub target_t: usize,
    pub prediction: f64,
    pub source: Source,
    pub matched: Option<MatchResult>,
    pub imag_residual: f64,
    pub flags: RecordFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recall {
    pub value: f64,
    pub anchor_guarded: bool,
}

/// What followed the matched window: `y_{t_min+Δ}`, optionally multiplied by
/// `current_anchor / recalled_anchor`.
pub fn recall_prediction(
    series: &TimeSeries,
    matched: &MatchResult,
    delta: usize,
    current_anchor: f64,
    rescale: bool,
    anchor_floor: f64,
) -> Result<Recall> {
    let idx = matched.t_min + delta;
    let recalled = series.get(idx).ok_or(Error::SeriesTooShort {
        len: series.len(),
        needed: idx + 1,
    })?;
    if !rescale {
        return Ok(Recall {
            value: recalled,
            anchor_guarded: false,
        });
    }
    if matched.recalled_anchor.abs() < anchor_floor || matched.recalled_anchor == 0.0 {
        return Ok(Recall {
            value: recalled,
            anchor_guarded: true,
        });
    }
    Ok(Recall {
        value: recalled * (current_anchor / matched.recalled_anchor),
        anchor_guarded: false,
    })
}

/// Records of one run together with the final state of the bank.
#[derive(Debug, Clone)]
pub struct ForecastRun {
    pub records: Vec<ForecastRecord>,
    pub bank: MemoryBank,
}

impl ForecastRun {
    pub fn match_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let matched = self.records.iter().filter(|r| r.source == Source::Memory).count();
        matched as f64 / self.records.len() as f64
    }
}

/// Run the loop over every issue index `t ∈ [ω + n_delays, m − Δ − 1]`.
pub fn run(config: &ForecastConfig, series: &TimeSeries) -> Result<ForecastRun> {
    run_with_bank(config, series, MemoryBank::new(config.capacity))
}

/// Same as [`run`], starting from an existing bank. Windows already present
/// in the bank are not stored again.
pub fn run_with_bank(config: &ForecastConfig, series: &TimeSeries, mut bank: MemoryBank) -> Result<ForecastRun> {
    config.validate()?;
    let m = series.len();
    if m < config.min_series_len() {
        return Err(Error::SeriesTooShort {
            len: m,
            needed: config.min_series_len(),
        });
    }

    let embedding = delay_embed(series, config.n_delays)?;
    let dict_config = config.dictionary();
    let edmd_config = config.edmd();
    let thresholds = config.thresholds();
    let n_keep = config.n_keep();
    let delta_u32 = u32::try_from(config.delta).map_err(|_| Error::Config("delta too large".into()))?;

    let first = config.omega + config.n_delays;
    let last = m - config.delta - 1;
    let mut records = Vec::with_capacity(last + 1 - first);
    let mut last_viable: Option<SpectralSignature> = None;

    for t in first..=last {
        let pair = window_pair(&embedding, t, config.omega)?;
        let signature = match window_signature(&pair, &dict_config, &edmd_config, n_keep) {
            Ok(sig) if !sig.fallback => Some(sig),
            Ok(_) | Err(Error::Eigendecomposition) => None,
            Err(e) => return Err(e),
        };
        let mut flags = RecordFlags {
            fallback: signature.is_none(),
            ..RecordFlags::default()
        };

        let matched = match (&signature, config.mode) {
            (Some(sig), Mode::Memory) => bank.find_match(sig, t, config.delta, thresholds)?,
            _ => None,
        };

        let (prediction, source, imag_residual) = if let Some(m) = &matched {
            let recall = recall_prediction(series, m, config.delta, pair.anchor(), config.rescale, config.anchor_floor)?;
            flags.anchor_guard = recall.anchor_guarded;
            bank.mark_matched(m.t_min);
            (recall.value, Source::Memory, 0.0)
        } else if let Some(sig) = signature.as_ref().or(last_viable.as_ref()) {
            let p = predict_sliding(sig, delta_u32, config.magnitude_cap);
            flags.overflow = p.overflow;
            (p.value, Source::Sliding, p.imag_residual)
        } else {
            // no usable spectrum yet: persistence
            (pair.current().current(), Source::Sliding, 0.0)
        };

        records.push(ForecastRecord {
            t,
            target_t: t + config.delta,
            prediction,
            source,
            matched,
            imag_residual,
            flags,
        });

        if let Some(sig) = signature {
            let already_stored = bank.records().last().is_some_and(|r| r.t_prime >= t);
            if config.mode == Mode::Memory && !already_stored {
                bank.store(t, sig.clone())?;
            }
            last_viable = Some(sig);
        }
    }

    Ok(ForecastRun { records, bank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{gen_piecewise_exponential, PiecewiseExponential};

    fn matched(t_min: usize, recalled_anchor: f64) -> MatchResult {
        MatchResult {
            t_min,
            d_lambda: 0.0,
            d_v: 0.0,
            combined: 0.0,
            recalled_anchor,
        }
    }

    #[test]
    fn recall_without_rescale() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0, 10.0]).unwrap();
        let r = recall_prediction(&s, &matched(1, 2.0), 2, 4.0, false, 1e-12).unwrap();
        assert_eq!(r.value, 10.0);
    }

    #[test]
    fn recall_with_rescale() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0, 10.0]).unwrap();
        let r = recall_prediction(&s, &matched(1, 2.0), 2, 4.0, true, 1e-12).unwrap();
        assert_eq!(r.value, 20.0);
        assert!(!r.anchor_guarded);
    }

    #[test]
    fn recall_zero_anchor_is_guarded() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0, 10.0]).unwrap();
        let r = recall_prediction(&s, &matched(1, 0.0), 2, 4.0, true, 1e-12).unwrap();
        assert_eq!(r.value, 10.0);
        assert!(r.anchor_guarded);
    }

    #[test]
    fn eps_v_defaults_from_delays() {
        let c = ForecastConfig {
            eps_lambda: 0.05,
            n_delays: 4,
            eps_v: None,
            ..ForecastConfig::default()
        };
        assert!((c.eps_v() - 0.25).abs() < 1e-15);
        assert_eq!(ForecastConfig::profile(Profile::Bike).eps_v(), 0.2);
    }

    #[test]
    fn n_keep_default() {
        let c = ForecastConfig::profile(Profile::Synthetic);
        assert_eq!(c.lifted_dim(), 12);
        assert_eq!(c.n_keep(), 5);
    }

    #[test]
    fn validation() {
        let base = ForecastConfig::default();
        assert!(base.validate().is_ok());
        assert!(ForecastConfig { omega: 0, ..base.clone() }.validate().is_err());
        assert!(ForecastConfig { delta: 0, ..base.clone() }.validate().is_err());
        assert!(ForecastConfig { eps_lambda: 0.0, ..base.clone() }.validate().is_err());
        assert!(ForecastConfig { eps_v: Some(-1.0), ..base.clone() }.validate().is_err());
        assert!(ForecastConfig { capacity: Some(0), ..base }.validate().is_err());
    }

    #[test]
    fn one_record_per_issue_index() {
        let g = gen_piecewise_exponential(&PiecewiseExponential { steps: 120, seed: 2, ..Default::default() }).unwrap();
        let cfg = ForecastConfig::profile(Profile::Synthetic);
        let run = run(&cfg, &g.series).unwrap();
        let ts: Vec<usize> = run.records.iter().map(|r| r.t).collect();
        let expected: Vec<usize> = (cfg.omega + cfg.n_delays..=120 - cfg.delta - 1).collect();
        assert_eq!(ts, expected);
        for r in &run.records {
            assert_eq!(r.target_t, r.t + cfg.delta);
            assert_eq!(r.source == Source::Memory, r.matched.is_some());
            assert!(r.prediction.is_finite());
        }
    }

    #[test]
    fn sliding_mode_ignores_bank() {
        let g = gen_piecewise_exponential(&PiecewiseExponential { steps: 150, seed: 9, ..Default::default() }).unwrap();
        let cfg = ForecastConfig::profile(Profile::Synthetic).with_mode(Mode::Sliding);
        let cold = run(&cfg, &g.series).unwrap();
        let primed = run(&cfg.clone().with_mode(Mode::Memory), &g.series).unwrap().bank;
        assert!(!primed.is_empty());
        let warm = run_with_bank(&cfg, &g.series, primed.clone()).unwrap();
        assert_eq!(cold.records, warm.records);
        assert!(cold.bank.is_empty());
        assert_eq!(warm.bank.len(), primed.len());
        assert!(cold.records.iter().all(|r| r.source == Source::Sliding));
    }

    #[test]
    fn too_short_series_is_rejected() {
        let cfg = ForecastConfig::profile(Profile::Synthetic);
        let s = TimeSeries::new(vec![1.0; cfg.min_series_len() - 1]).unwrap();
        assert!(matches!(run(&cfg, &s), Err(Error::SeriesTooShort { .. })));
        let s = TimeSeries::new(vec![1.0; cfg.min_series_len()]).unwrap();
        assert_eq!(run(&cfg, &s).unwrap().records.len(), 1);
    }

    #[test]
    fn bounded_bank_respects_capacity() {
        let g = gen_piecewise_exponential(&PiecewiseExponential { steps: 200, seed: 4, ..Default::default() }).unwrap();
        let cfg = ForecastConfig {
            capacity: Some(25),
            ..ForecastConfig::profile(Profile::Synthetic)
        };
        let r = run(&cfg, &g.series).unwrap();
        assert_eq!(r.bank.len(), 25);
    }
}
