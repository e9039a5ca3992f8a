//! Dense complex helpers on top of `faer`.

use faer::{Mat, MatRef};
use num_complex::Complex64;

/// Moore–Penrose pseudoinverse via thin SVD.
///
/// Singular values at or below `rel_tol * σ_max` are treated as zero. A zero
/// matrix maps to the zero matrix of transposed shape.
pub fn pseudoinverse(m: MatRef<'_, Complex64>, rel_tol: f64) -> Mat<Complex64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return Mat::zeros(cols, rows);
    }
    let svd = match m.thin_svd() {
        Ok(svd) => svd,
        Err(_) => return Mat::zeros(cols, rows),
    };
    let s = svd.S().column_vector();
    let k = s.nrows();
    let s_max = (0..k).map(|i| s[i].re).fold(0.0f64, f64::max);
    if s_max == 0.0 || !s_max.is_finite() {
        return Mat::zeros(cols, rows);
    }
    let cutoff = rel_tol * s_max;
    let inv: Vec<f64> = (0..k)
        .map(|i| if s[i].re > cutoff { 1.0 / s[i].re } else { 0.0 })
        .collect();

    let u = svd.U();
    let v = svd.V();
    // M⁺ = V diag(1/σ) Uᴴ
    Mat::from_fn(cols, rows, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, &w) in inv.iter().enumerate() {
            if w != 0.0 {
                acc += v[(i, r)] * u[(j, r)].conj() * w;
            }
        }
        acc
    })
}

/// Numerical rank under the same truncation rule as [`pseudoinverse`].
pub fn rank(m: MatRef<'_, Complex64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let Ok(s) = m.singular_values() else {
        return 0;
    };
    let s_max = s.iter().copied().fold(0.0f64, f64::max);
    if s_max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * s_max).count()
}

pub fn to_complex(m: MatRef<'_, f64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

pub fn frobenius(m: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// `m · v` for a column vector given as a slice.
pub fn mat_vec(m: MatRef<'_, Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(m.ncols(), v.len());
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_abs_diff(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
        let mut m = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<Complex64> {
        Mat::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_maps_to_identity() {
        let i3 = Mat::<Complex64>::identity(3, 3);
        let p = pseudoinverse(i3.as_ref(), 1e-10);
        assert!(max_abs_diff(p.as_ref(), i3.as_ref()) < 1e-14);
    }

    #[test]
    fn diagonal_with_zero() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j && i == 0 { c(2.0) } else { c(0.0) });
        let p = pseudoinverse(m.as_ref(), 1e-10);
        assert!((p[(0, 0)] - c(0.5)).norm() < 1e-15);
        assert_eq!(p[(1, 1)], c(0.0));
        assert_eq!(p[(0, 1)], c(0.0));
    }

    #[test]
    fn zero_matrix() {
        let m = Mat::<Complex64>::zeros(2, 3);
        let p = pseudoinverse(m.as_ref(), 1e-10);
        assert_eq!((p.nrows(), p.ncols()), (3, 2));
        assert!(frobenius(p.as_ref()) == 0.0);
        assert_eq!(rank(m.as_ref(), 1e-10), 0);
    }

    #[test]
    fn penrose_identities_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(r, cdim) in &[(5, 3), (3, 5), (4, 4), (6, 2)] {
            for _ in 0..20 {
                let m = random(r, cdim, &mut rng);
                let p = pseudoinverse(m.as_ref(), 1e-10);
                let mpm = &m * &p * &m;
                let pmp = &p * &m * &p;
                let mp = &m * &p;
                let pm = &p * &m;
                assert!(max_abs_diff(mpm.as_ref(), m.as_ref()) < 1e-8);
                assert!(max_abs_diff(pmp.as_ref(), p.as_ref()) < 1e-8);
                assert!(max_abs_diff(mp.as_ref(), mp.adjoint().to_owned().as_ref()) < 1e-8);
                assert!(max_abs_diff(pm.as_ref(), pm.adjoint().to_owned().as_ref()) < 1e-8);
            }
        }
    }

    #[test]
    fn penrose_identities_on_rank_deficient_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(6, 2, &mut rng);
        let b = random(2, 5, &mut rng);
        let m = &a * &b;
        assert_eq!(rank(m.as_ref(), 1e-10), 2);
        let p = pseudoinverse(m.as_ref(), 1e-10);
        let mpm = &m * &p * &m;
        let pmp = &p * &m * &p;
        assert!(max_abs_diff(mpm.as_ref(), m.as_ref()) < 1e-8);
        assert!(max_abs_diff(pmp.as_ref(), p.as_ref()) < 1e-8);
    }
}
