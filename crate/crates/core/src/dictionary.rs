//! Gaussian radial basis dictionary, rebuilt for every window.

use crate::error::{Error, Result};
use crate::series::EmbeddedState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictionaryConfig {
    pub n_rbf: usize,
    /// Lower bound on the bandwidth.
    pub sigma_floor: f64,
    /// Append the embedded state coordinates after the RBF block.
    pub include_identity: bool,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            n_rbf: 10,
            sigma_floor: 1e-8,
            include_identity: true,
        }
    }
}

/// Observable dictionary `Ψ(x) = [ψ_1(x), ..., ψ_l(x)]`.
///
/// RBF coordinates come first, then (optionally) the raw state coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    centers: Vec<Vec<f64>>,
    sigma: f64,
    include_identity: bool,
    state_dim: usize,
}

impl Dictionary {
    pub fn new(
        centers: Vec<Vec<f64>>,
        sigma: f64,
        include_identity: bool,
        state_dim: usize,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        for c in &centers {
            if c.len() != state_dim {
                return Err(Error::DimensionMismatch {
                    expected: state_dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("non-finite RBF center".into()));
            }
        }
        if centers.is_empty() && !include_identity {
            return Err(Error::Config("dictionary would be empty".into()));
        }
        Ok(Self {
            centers,
            sigma,
            include_identity,
            state_dim,
        })
    }

    /// Identity-only dictionary (plain DMD on the embedded states).
    pub fn identity(state_dim: usize) -> Self {
        Self {
            centers: Vec::new(),
            sigma: 1.0,
            include_identity: true,
            state_dim,
        }
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn include_identity(&self) -> bool {
        self.include_identity
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn n_rbf(&self) -> usize {
        self.centers.len()
    }

    pub fn lifted_dim(&self) -> usize {
        self.centers.len() + if self.include_identity { self.state_dim } else { 0 }
    }

    /// Offset of the identity block in the lifted vector, if present.
    pub fn identity_offset(&self) -> Option<usize> {
        self.include_identity.then_some(self.centers.len())
    }

    pub fn lift(&self, state: &EmbeddedState) -> Result<Vec<f64>> {
        let x = state.coords();
        if x.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim,
                got: x.len(),
            });
        }
        let denom = 2.0 * self.sigma * self.sigma;
        let mut out = Vec::with_capacity(self.lifted_dim());
        out.extend(self.centers.iter().map(|c| {
            let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2 / denom).exp()
        }));
        if self.include_identity {
            out.extend_from_slice(x);
        }
        Ok(out)
    }
}

/// Build the dictionary for one window of raw values.
///
/// Centers are `n_rbf` points evenly spaced over `[min, max]` of the window,
/// each repeated across all `n_delays + 1` coordinates. The bandwidth is the
/// largest absolute value in the window, floored at `sigma_floor`.
pub fn build_dictionary(
    window_raw: &[f64],
    n_delays: usize,
    config: &DictionaryConfig,
) -> Result<Dictionary> {
    if window_raw.is_empty() {
        return Err(Error::Config("empty window".into()));
    }
    if window_raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite value in window".into()));
    }
    if config.n_rbf < 1 {
        return Err(Error::Config("n_rbf must be >= 1".into()));
    }
    if !(config.sigma_floor > 0.0) {
        return Err(Error::Config("sigma_floor must be positive".into()));
    }

    let min = window_raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = window_raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_abs = window_raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sigma = max_abs.max(config.sigma_floor);

    let dim = n_delays + 1;
    let centers = (0..config.n_rbf)
        .map(|j| {
            let c = if config.n_rbf == 1 {
                0.5 * (min + max)
            } else {
                min + (max - min) * j as f64 / (config.n_rbf - 1) as f64
            };
            vec![c; dim]
        })
        .collect();

    Dictionary::new(centers, sigma, config.include_identity, dim)
}
