//! Windowed EDMD: operator fit, Koopman spectral signature, and Δ-step
//! spectral prediction.
//!
//! Orientation: the operator acts on lifted column vectors, so that
//! `Ψ(y) ≈ K Ψ(x)`. The Gram matrices are assembled with row-vector lifts,
//! `G = (1/ω) Σ Ψ(x_i)ᵀ Ψ(x_i)` and `A = (1/ω) Σ Ψ(x_i)ᵀ Ψ(y_i)`, which
//! gives the row-acting `G⁺A`; `K` is its transpose.

use std::cmp::Ordering;

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dictionary::{build_dictionary, Dictionary, DictionaryConfig};
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, pseudoinverse, to_complex, vec_norm};
use crate::series::{EmbeddedState, SnapshotPair};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdmdConfig {
    /// Relative singular value cutoff for every pseudoinverse.
    pub rel_tol: f64,
    /// Maximum `‖Kξ − λξ‖ / ‖ξ‖` for a retained eigenpair.
    pub residual_tol: f64,
}

impl Default for EdmdConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            residual_tol: 1e-8,
        }
    }
}

/// Finite-dimensional Koopman approximation for one window.
#[derive(Debug, Clone)]
pub struct KoopmanModel {
    operator: Mat<f64>,
    eigenvalues: Vec<Complex64>,
    eigenvectors: Mat<Complex64>,
    state_readout: Mat<Complex64>,
    config: EdmdConfig,
}

impl KoopmanModel {
    /// `K`, acting on lifted column vectors.
    pub fn operator(&self) -> MatRef<'_, f64> {
        self.operator.as_ref()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Right eigenvectors as columns.
    pub fn eigenvectors(&self) -> MatRef<'_, Complex64> {
        self.eigenvectors.as_ref()
    }

    /// Maps a lifted vector to embedded-state coordinates.
    pub fn state_readout(&self) -> MatRef<'_, Complex64> {
        self.state_readout.as_ref()
    }

    pub fn lifted_dim(&self) -> usize {
        self.operator.nrows()
    }

    /// `‖Kξ_i − λ_i ξ_i‖ / ‖ξ_i‖`.
    pub fn eigen_residual(&self, i: usize) -> f64 {
        let xi: Vec<Complex64> = self.eigenvectors.col(i).iter().copied().collect();
        let k = to_complex(self.operator.as_ref());
        let kxi = mat_vec(k.as_ref(), &xi);
        let lambda = self.eigenvalues[i];
        let r: Vec<Complex64> = kxi.iter().zip(&xi).map(|(a, b)| a - lambda * b).collect();
        let n = vec_norm(&xi);
        if n == 0.0 {
            return 0.0;
        }
        vec_norm(&r) / n
    }
}

fn lift_columns(dict: &Dictionary, states: &[EmbeddedState]) -> Result<Mat<f64>> {
    let l = dict.lifted_dim();
    let mut m = Mat::<f64>::zeros(l, states.len());
    for (j, s) in states.iter().enumerate() {
        for (i, v) in dict.lift(s)?.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Fit the windowed EDMD operator and its eigendecomposition.
pub fn edmd_fit(pair: &SnapshotPair, dict: &Dictionary, config: &EdmdConfig) -> Result<KoopmanModel> {
    if pair.state_dim() != dict.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.state_dim(),
            got: pair.state_dim(),
        });
    }
    let omega = pair.omega();
    let l = dict.lifted_dim();
    let psi_x = lift_columns(dict, pair.x())?;
    let psi_y = lift_columns(dict, pair.y())?;

    let scale = 1.0 / omega as f64;
    let g = Mat::<f64>::from_fn(l, l, |i, j| {
        scale * (0..omega).map(|k| psi_x[(i, k)] * psi_x[(j, k)]).sum::<f64>()
    });
    let a = Mat::<f64>::from_fn(l, l, |i, j| {
        scale * (0..omega).map(|k| psi_x[(i, k)] * psi_y[(j, k)]).sum::<f64>()
    });

    let g_pinv = pseudoinverse(to_complex(g.as_ref()).as_ref(), config.rel_tol);
    let k_row = &g_pinv * to_complex(a.as_ref());
    let operator = Mat::<f64>::from_fn(l, l, |i, j| k_row[(j, i)].re);
    if (0..l).any(|i| (0..l).any(|j| !operator[(i, j)].is_finite())) {
        return Err(Error::Eigendecomposition);
    }

    let eig = operator.eigen().map_err(|_| Error::Eigendecomposition)?;
    let s = eig.S().column_vector();
    let eigenvalues: Vec<Complex64> = (0..l).map(|i| s[i]).collect();
    let eigenvectors = eig.U().to_owned();

    let state_readout = readout(dict, pair, config)?;

    Ok(KoopmanModel {
        operator,
        eigenvalues,
        eigenvectors,
        state_readout,
        config: *config,
    })
}

fn readout(dict: &Dictionary, pair: &SnapshotPair, config: &EdmdConfig) -> Result<Mat<Complex64>> {
    let d = dict.state_dim();
    let l = dict.lifted_dim();
    if let Some(offset) = dict.identity_offset() {
        return Ok(Mat::from_fn(d, l, |i, j| {
            if j == offset + i {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        }));
    }
    // least-squares map from lifted coordinates back to the state, fitted on
    // every state in the window
    let mut states = pair.x().to_vec();
    states.push(pair.current().clone());
    let psi = to_complex(lift_columns(dict, &states)?.as_ref());
    let raw = Mat::from_fn(d, states.len(), |i, j| Complex64::new(states[j].coords()[i], 0.0));
    Ok(&raw * pseudoinverse(psi.as_ref(), config.rel_tol))
}

/// Where a signature came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowOrigin {
    /// Window end index.
    pub t: usize,
    /// First raw value covered by the window.
    pub anchor: f64,
}

/// Retained Koopman eigenvalues and scaled modes of one window.
///
/// Row `i` of `modes` is `φ_i(x_t) v_i` restricted to the embedded-state
/// coordinates. Eigenvalues are sorted by descending modulus, then ascending
/// argument, then ascending imaginary part; missing entries are zero-padded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSignature {
    pub t: usize,
    pub anchor: f64,
    pub eigenvalues: Vec<Complex64>,
    pub modes: Vec<Vec<Complex64>>,
    /// Set when a retained eigenpair failed the residual check; such
    /// signatures are never compared or stored.
    #[serde(default)]
    pub fallback: bool,
}

impl SpectralSignature {
    pub fn n_keep(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn state_dim(&self) -> usize {
        self.modes.first().map_or(0, Vec::len)
    }

    /// `Σ_i λ_i^k · modes[i]`.
    pub fn evolve(&self, k: u32) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.state_dim()];
        for (lambda, row) in self.eigenvalues.iter().zip(&self.modes) {
            let w = lambda.powu(k);
            for (o, m) in out.iter_mut().zip(row) {
                *o += w * m;
            }
        }
        out
    }
}

fn cmp_desc_modulus(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm().total_cmp(&a.norm())
}

fn cmp_arg_then_im(a: &Complex64, b: &Complex64) -> Ordering {
    a.arg().total_cmp(&b.arg()).then(a.im.total_cmp(&b.im))
}

/// Canonical order of `(eigenvalue, mode row)` pairs.
///
/// Moduli within `1e-9` (relative) of their neighbour form one tie group,
/// ordered by argument then imaginary part. This keeps conjugate partners,
/// whose computed moduli can differ in the last bits, in a stable order.
pub fn canonical_sort(pairs: &mut Vec<(Complex64, Vec<Complex64>)>) {
    pairs.sort_by(|a, b| cmp_desc_modulus(&a.0, &b.0));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() {
            let prev = pairs[end - 1].0.norm();
            let cur = pairs[end].0.norm();
            if (prev - cur).abs() <= 1e-9 * prev.max(1.0) {
                end += 1;
            } else {
                break;
            }
        }
        pairs[start..end].sort_by(|a, b| cmp_arg_then_im(&a.0, &b.0));
        start = end;
    }
}

/// Project the current lifted state onto the eigenvectors and keep the
/// `n_keep` eigenpairs with the largest `|a_i λ_i|`.
pub fn extract_signature(
    model: &KoopmanModel,
    current_lifted: &[f64],
    current_state: &EmbeddedState,
    n_keep: usize,
    origin: WindowOrigin,
) -> Result<SpectralSignature> {
    let l = model.lifted_dim();
    if current_lifted.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: current_lifted.len(),
        });
    }
    let d = model.state_readout.nrows();
    if current_state.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: current_state.dim(),
        });
    }

    let z: Vec<Complex64> = current_lifted.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let v_pinv = pseudoinverse(model.eigenvectors.as_ref(), model.config.rel_tol);
    let amplitudes = mat_vec(v_pinv.as_ref(), &z);

    let weights: Vec<f64> = amplitudes
        .iter()
        .zip(&model.eigenvalues)
        .map(|(a, lambda)| (a * lambda).norm())
        .collect();
    let max_weight = weights.iter().copied().fold(0.0f64, f64::max);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]));

    let mut fallback = weights.iter().any(|w| !w.is_finite());
    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n_keep);
    for &i in order.iter().take(n_keep) {
        if !(weights[i] > model.config.rel_tol * max_weight) {
            break;
        }
        if model.eigen_residual(i) > model.config.residual_tol {
            fallback = true;
        }
        let xi: Vec<Complex64> = model.eigenvectors.col(i).iter().copied().collect();
        let mode: Vec<Complex64> = mat_vec(model.state_readout.as_ref(), &xi)
            .into_iter()
            .map(|m| amplitudes[i] * m)
            .collect();
        pairs.push((model.eigenvalues[i], mode));
    }
    canonical_sort(&mut pairs);
    pairs.resize(n_keep, (ZERO, vec![ZERO; d]));

    let (eigenvalues, modes) = pairs.into_iter().unzip();
    Ok(SpectralSignature {
        t: origin.t,
        anchor: origin.anchor,
        eigenvalues,
        modes,
        fallback,
    })
}

/// Dictionary, fit and signature for one window in a single call.
pub fn window_signature(
    pair: &SnapshotPair,
    dict_config: &DictionaryConfig,
    edmd_config: &EdmdConfig,
    n_keep: usize,
) -> Result<SpectralSignature> {
    let n_delays = pair.state_dim() - 1;
    let dict = build_dictionary(&pair.raw_window(), n_delays, dict_config)?;
    let model = edmd_fit(pair, &dict, edmd_config)?;
    let lifted = dict.lift(pair.current())?;
    extract_signature(
        &model,
        &lifted,
        pair.current(),
        n_keep,
        WindowOrigin {
            t: pair.t(),
            anchor: pair.anchor(),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingPrediction {
    pub value: f64,
    /// Imaginary part left over in the current-value slot.
    pub imag_residual: f64,
    pub overflow: bool,
}

/// `Re[Σ_i λ_i^Δ · modes[i]]` at the current-value coordinate, clamped to
/// `±magnitude_cap`.
pub fn predict_sliding(sig: &SpectralSignature, delta: u32, magnitude_cap: f64) -> SlidingPrediction {
    let y = sig.evolve(delta).last().copied().unwrap_or(ZERO);
    if y.re.is_finite() && y.re.abs() <= magnitude_cap {
        SlidingPrediction {
            value: y.re,
            imag_residual: y.im.abs(),
            overflow: false,
        }
    } else {
        let sign = if y.re.is_nan() { 1.0 } else { y.re.signum() };
        SlidingPrediction {
            value: sign * magnitude_cap,
            imag_residual: y.im.abs(),
            overflow: true,
        }
    }
}
