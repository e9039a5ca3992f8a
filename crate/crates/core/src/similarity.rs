//! Distances between spectral signatures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assignment::linear_sum_assignment;
use crate::edmd::SpectralSignature;
use crate::error::{Error, Result};

/// Eigenvalue and mode distance between two signatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureDistance {
    pub d_lambda: f64,
    pub d_v: f64,
    pub combined: f64,
}

impl SignatureDistance {
    pub fn new(d_lambda: f64, d_v: f64) -> Self {
        Self {
            d_lambda,
            d_v,
            combined: d_lambda + d_v,
        }
    }
}

/// 1-Wasserstein distance between two equal-size eigenvalue sets, each read
/// as a uniform empirical measure on ℂ with the Euclidean ground metric:
/// `(1/N) min_σ Σ_i |a_i − b_σ(i)|`.
pub fn wasserstein1(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::CardinalityMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| (x - y).norm()))
        .collect();
    let (assignment, _) = linear_sum_assignment(&cost, n, n);
    // sum in sorted order so that swapping the arguments gives the same bits
    let mut matched: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    matched.sort_by(f64::total_cmp);
    Ok(matched.iter().sum::<f64>() / n as f64)
}

fn frobenius(m: &[Vec<Complex64>]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .map(Complex64::norm_sqr)
        .sum::<f64>()
        .sqrt()
}

fn shape(m: &[Vec<Complex64>]) -> (usize, usize) {
    (m.len(), m.first().map_or(0, Vec::len))
}

/// `‖Va − Vb‖_F / (‖Va‖_F + ‖Vb‖_F)`, defined as 0 when both are zero.
pub fn mode_distance(va: &[Vec<Complex64>], vb: &[Vec<Complex64>]) -> Result<f64> {
    let (sa, sb) = (shape(va), shape(vb));
    let ragged = |m: &[Vec<Complex64>], cols: usize| m.iter().any(|r| r.len() != cols);
    if sa != sb || ragged(va, sa.1) || ragged(vb, sb.1) {
        return Err(Error::ShapeMismatch(sa, sb));
    }
    let denom = frobenius(va) + frobenius(vb);
    if denom == 0.0 {
        return Ok(0.0);
    }
    let diff = va
        .iter()
        .zip(vb)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).norm_sqr()))
        .sum::<f64>()
        .sqrt();
    // rounding can push the ratio a hair past 1
    Ok((diff / denom).min(1.0))
}

pub fn signature_distance(sa: &SpectralSignature, sb: &SpectralSignature) -> Result<SignatureDistance> {
    if sa.fallback {
        return Err(Error::FallbackSignature(sa.t));
    }
    if sb.fallback {
        return Err(Error::FallbackSignature(sb.t));
    }
    let d_lambda = wasserstein1(&sa.eigenvalues, &sb.eigenvalues)?;
    let d_v = mode_distance(&sa.modes, &sb.modes)?;
    Ok(SignatureDistance::new(d_lambda, d_v))
}
