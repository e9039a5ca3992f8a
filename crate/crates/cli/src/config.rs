//! Layered run configuration: profile, then config file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use episodic_koopman::{ForecastConfig, Mode, Profile};
use serde::Deserialize;

/// Hyperparameter flags shared by `forecast` and `compare`.
#[derive(Debug, Clone, Default, Args)]
pub struct TuningArgs {
    /// Built-in preset: synthetic, flu or bike
    #[arg(long)]
    pub profile: Option<String>,
    /// TOML file of `key = value` overrides, applied on top of the profile
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Window length ω (snapshot pairs per fit)
    #[arg(long)]
    pub omega: Option<usize>,
    /// Forecast horizon Δ
    #[arg(long)]
    pub delta: Option<usize>,
    /// Number of delay coordinates
    #[arg(long)]
    pub delays: Option<usize>,
    #[arg(long)]
    pub eps_lambda: Option<f64>,
    /// Mode-distance threshold; defaults to eps-lambda * (delays + 1)
    #[arg(long)]
    pub eps_v: Option<f64>,
    #[arg(long)]
    pub n_rbf: Option<usize>,
    #[arg(long)]
    pub n_keep: Option<usize>,
    /// Memory bank capacity (unbounded if omitted)
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Rescale recalled values by the anchor ratio
    #[arg(long)]
    pub rescale: Option<bool>,
    /// Relative singular value cutoff for pseudoinverses
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

/// Keys accepted in a config file. Names follow the library's field names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub profile: Option<String>,
    pub mode: Option<String>,
    pub omega: Option<usize>,
    pub delta: Option<usize>,
    pub n_delays: Option<usize>,
    pub eps_lambda: Option<f64>,
    pub eps_v: Option<f64>,
    pub n_rbf: Option<usize>,
    pub n_keep: Option<usize>,
    pub include_identity: Option<bool>,
    pub sigma_floor: Option<f64>,
    pub rel_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub magnitude_cap: Option<f64>,
    pub anchor_floor: Option<f64>,
    pub rescale: Option<bool>,
    pub capacity: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Resolve the final configuration. `mode` comes from the command line when
/// given and overrides everything else.
pub fn resolve(args: &TuningArgs, mode: Option<Mode>) -> Result<ForecastConfig> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };

    let profile = args.profile.as_deref().or(file.profile.as_deref());
    let mut cfg = match profile {
        Some(name) => ForecastConfig::profile(name.parse::<Profile>()?),
        None => ForecastConfig::default(),
    };

    if let Some(m) = &file.mode {
        cfg.mode = m.parse()?;
    }
    set(&mut cfg.omega, file.omega);
    set(&mut cfg.delta, file.delta);
    set(&mut cfg.n_delays, file.n_delays);
    set(&mut cfg.eps_lambda, file.eps_lambda);
    if file.eps_v.is_some() {
        cfg.eps_v = file.eps_v;
    }
    set(&mut cfg.n_rbf, file.n_rbf);
    if file.n_keep.is_some() {
        cfg.n_keep = file.n_keep;
    }
    set(&mut cfg.include_identity, file.include_identity);
    set(&mut cfg.sigma_floor, file.sigma_floor);
    set(&mut cfg.rel_tol, file.rel_tol);
    set(&mut cfg.residual_tol, file.residual_tol);
    set(&mut cfg.magnitude_cap, file.magnitude_cap);
    set(&mut cfg.anchor_floor, file.anchor_floor);
    set(&mut cfg.rescale, file.rescale);
    if file.capacity.is_some() {
        cfg.capacity = file.capacity;
    }

    set(&mut cfg.mode, mode);
    set(&mut cfg.omega, args.omega);
    set(&mut cfg.delta, args.delta);
    set(&mut cfg.n_delays, args.delays);
    set(&mut cfg.eps_lambda, args.eps_lambda);
    if args.eps_v.is_some() {
        cfg.eps_v = args.eps_v;
    }
    set(&mut cfg.n_rbf, args.n_rbf);
    if args.n_keep.is_some() {
        cfg.n_keep = args.n_keep;
    }
    if args.capacity.is_some() {
        cfg.capacity = args.capacity;
    }
    set(&mut cfg.rescale, args.rescale);
    set(&mut cfg.rel_tol, args.rel_tol);

    cfg.validate()?;
    // pin derived defaults so the manifest echoes the values actually used
    cfg.eps_v = Some(cfg.eps_v());
    cfg.n_keep = Some(cfg.n_keep());
    Ok(cfg)
}
