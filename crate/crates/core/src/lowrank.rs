//! Low-rank state container and factor algebra.
//!
//! A field f(x, v) sampled on the grids is factored as f = X S V^T with
//! X weighted-orthonormal under <.,.>_x and V under <.,.>_v. Because the
//! quadrature weights are constant scalars (dx and dv^d_v), weighted
//! factorizations reduce to plain ones on rescaled matrices: a matrix M with
//! weight w is orthonormalized by scaling with sqrt(w), applying QR/SVD, and
//! unscaling.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Rank-reduction target for the SVD truncation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep exactly this many singular values (possibly zero ones).
    FixedRank(usize),
    /// Keep the smallest leading block whose discarded tail has
    /// l2 norm (sqrt of sum of squared singular values) at most the threshold.
    Threshold(f64),
}

/// Factored solution f = X S V^T with weighted-orthonormal X and V.
#[derive(Debug, Clone)]
pub struct LowRankState {
    /// n_x x r spatial basis samples, orthonormal under <.,.>_x.
    pub x: DMatrix<f64>,
    /// r x r coefficient matrix.
    pub s: DMatrix<f64>,
    /// n_v^d_v x r velocity basis samples, orthonormal under <.,.>_v.
    pub v: DMatrix<f64>,
}

impl LowRankState {
    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    /// Dense reconstruction X S V^T (n_x x n_v^d_v).
    pub fn evaluate_full(&self) -> DMatrix<f64> {
        &self.x * &self.s * self.v.transpose()
    }

    /// K = X S, the spatial coefficient columns of the velocity basis.
    pub fn k_matrix(&self) -> DMatrix<f64> {
        &self.x * &self.s
    }

    /// Largest orthonormality defect of both factors under their weights.
    pub fn orthonormality_defect(&self, wx: f64, wv: f64) -> f64 {
        let gx = self.x.transpose() * &self.x * wx;
        let gv = self.v.transpose() * &self.v * wv;
        let r = self.rank();
        let id = DMatrix::<f64>::identity(r, r);
        ((gx - &id).abs().max()).max((gv - id).abs().max())
    }
}

/// Thin QR of `m` under the constant quadrature weight `w`:
/// returns (Q, R) with m = Q R and Q^T Q w = I.
pub fn qr_weighted(m: &DMatrix<f64>, w: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let sw = w.sqrt();
    let qr = (m * sw).qr();
    let q = qr.q() / sw;
    (q, qr.r())
}

/// Best weighted-Frobenius rank-r approximation of a full field.
pub fn from_full(field: &DMatrix<f64>, r: usize, wx: f64, wv: f64) -> Result<LowRankState> {
    let (n1, n2) = field.shape();
    if r == 0 || r > n1.min(n2) {
        return Err(Error::Contract(format!(
            "from_full: rank {r} out of range for {n1} x {n2} field"
        )));
    }
    if field.amax() == 0.0 {
        // canonical orthonormal columns keep downstream shapes fixed
        let mut x = DMatrix::zeros(n1, r);
        let mut v = DMatrix::zeros(n2, r);
        for j in 0..r {
            x[(j, j)] = 1.0 / wx.sqrt();
            v[(j, j)] = 1.0 / wv.sqrt();
        }
        return Ok(LowRankState { x, s: DMatrix::zeros(r, r), v });
    }
    let svd = field.clone().svd(true, true);
    let u = svd.u.expect("svd uses compute_u");
    let vt = svd.v_t.expect("svd uses compute_v");
    let scale = (wx * wv).sqrt();
    let mut x = DMatrix::zeros(n1, r);
    let mut v = DMatrix::zeros(n2, r);
    let mut s = DMatrix::zeros(r, r);
    for j in 0..r {
        x.set_column(j, &(u.column(j) / wx.sqrt()));
        v.set_column(j, &(vt.row(j).transpose() / wv.sqrt()));
        s[(j, j)] = svd.singular_values[j] * scale;
    }
    Ok(LowRankState { x, s, v })
}

/// Extend a weighted-orthonormal basis by new directions.
///
/// The first r columns of the result equal `x` exactly. Extras are
/// orthogonalized by block Gram-Schmidt with one re-orthogonalization pass;
/// residual columns with weighted norm below 1e-10 times the largest extras
/// column norm are dropped. Returns the extended basis and the number of
/// columns actually added.
pub fn orthonormalize_augment(
    x: &DMatrix<f64>,
    extras: &DMatrix<f64>,
    w: f64,
) -> (DMatrix<f64>, usize) {
    let n = x.nrows();
    let r = x.ncols();
    let m = extras.ncols();
    if m == 0 {
        return (x.clone(), 0);
    }
    assert_eq!(extras.nrows(), n, "extras row count must match basis");

    let col_norm = |c: nalgebra::DVectorView<f64>| (c.dot(&c) * w).sqrt();
    let largest = (0..m).map(|j| col_norm(extras.column(j))).fold(0.0, f64::max);
    if largest == 0.0 {
        return (x.clone(), 0);
    }
    let drop_tol = 1e-10 * largest;

    let mut accepted: Vec<nalgebra::DVector<f64>> = Vec::new();
    for j in 0..m {
        let mut e = extras.column(j).clone_owned();
        // two Gram-Schmidt passes against x and the already accepted columns
        for _ in 0..2 {
            let coeffs = x.transpose() * &e * w;
            e -= x * coeffs;
            for a in &accepted {
                let c = a.dot(&e) * w;
                e -= a * c;
            }
        }
        let nrm = (e.dot(&e) * w).sqrt();
        if nrm > drop_tol {
            accepted.push(e / nrm);
        }
    }

    let added = accepted.len();
    let mut out = DMatrix::zeros(n, r + added);
    out.view_mut((0, 0), (n, r)).copy_from(x);
    for (j, a) in accepted.iter().enumerate() {
        out.set_column(r + j, a);
    }
    (out, added)
}

/// SVD truncation of an augmented factorization Xhat Shat Vhat^T.
///
/// Shat is decomposed as Xs Sigma Vs^T with descending singular values; the
/// new factors are X = Xhat Xs(:, 1:r), S = Sigma(1:r, 1:r), V = Vhat Vs(:, 1:r),
/// where r is fixed or chosen as the smallest count whose discarded tail
/// satisfies the threshold.
pub fn truncate(
    xhat: &DMatrix<f64>,
    shat: &DMatrix<f64>,
    vhat: &DMatrix<f64>,
    target: Truncation,
) -> Result<LowRankState> {
    let big_r = shat.nrows();
    assert_eq!(shat.ncols(), big_r, "Shat must be square");
    assert_eq!(xhat.ncols(), big_r, "Xhat column count must match Shat");
    assert_eq!(vhat.ncols(), big_r, "Vhat column count must match Shat");

    let svd = shat.clone().svd(true, true);
    let u = svd.u.expect("svd uses compute_u");
    let vt = svd.v_t.expect("svd uses compute_v");
    let sigma = &svd.singular_values;

    let r = match target {
        Truncation::FixedRank(r) => {
            if r == 0 || r > big_r {
                return Err(Error::Contract(format!(
                    "truncate: target rank {r} out of range for augmented rank {big_r}"
                )));
            }
            r
        }
        Truncation::Threshold(theta) => {
            // suffix sums of sigma^2, smallest k with sqrt(tail) <= theta
            let mut tail = 0.0;
            let mut r = big_r;
            for k in (1..=big_r).rev() {
                tail += sigma[k - 1] * sigma[k - 1];
                if tail.sqrt() <= theta {
                    r = k - 1;
                } else {
                    break;
                }
            }
            r.max(1)
        }
    };

    let mut s = DMatrix::zeros(r, r);
    for j in 0..r {
        s[(j, j)] = sigma[j];
    }
    let x = xhat * u.columns(0, r);
    let v = vhat * vt.rows(0, r).transpose();
    Ok(LowRankState { x, s, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn weighted_fro(m: &DMatrix<f64>, wx: f64, wv: f64) -> f64 {
        (m.iter().map(|v| v * v).sum::<f64>() * wx * wv).sqrt()
    }

    fn random_orthonormal(n: usize, r: usize, w: f64, rng: &mut impl Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, r, |_, _| rng.gen::<f64>() - 0.5);
        qr_weighted(&m, w).0
    }

    #[test]
    fn evaluate_full_rank_one_constant() {
        // X = 1/sqrt(|Omega_x|), V = 1/sqrt(|Omega_v|), S = [c]
        let (n_x, n_v, wx, wv) = (10, 8, 0.1, 0.5);
        let x = DMatrix::from_element(n_x, 1, 1.0 / (wx * n_x as f64).sqrt());
        let v = DMatrix::from_element(n_v, 1, 1.0 / (wv * n_v as f64).sqrt());
        let c = 3.25;
        let state = LowRankState { x, s: DMatrix::from_element(1, 1, c), v };
        let full = state.evaluate_full();
        let expect = c / ((wx * n_x as f64) * (wv * n_v as f64)).sqrt();
        for val in full.iter() {
            assert_relative_eq!(*val, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn from_full_round_trip_exact_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (wx, wv) = (0.02, 0.3);
        let a = DMatrix::from_fn(20, 3, |_, _| rng.gen::<f64>() - 0.5);
        let b = DMatrix::from_fn(15, 3, |_, _| rng.gen::<f64>() - 0.5);
        let field = &a * b.transpose(); // rank 3
        let state = from_full(&field, 3, wx, wv).unwrap();
        let err = weighted_fro(&(state.evaluate_full() - &field), wx, wv);
        assert!(err <= 1e-12 * weighted_fro(&field, wx, wv));
        assert!(state.orthonormality_defect(wx, wv) <= 1e-10);

        // rank-2 field at r = 3: third singular value is numerically zero
        let field2 = a.columns(0, 2) * b.columns(0, 2).transpose();
        let s3 = from_full(&field2, 3, wx, wv).unwrap();
        assert!(s3.s[(2, 2)] <= 1e-13 * s3.s[(0, 0)]);
    }

    #[test]
    fn from_full_outer_product_singular_value() {
        let (wx, wv) = (0.01, 0.2);
        let a = DVector::from_fn(30, |i, _| (0.3 * i as f64).sin() + 1.5);
        let b = DVector::from_fn(12, |i, _| (0.7 * i as f64).cos() - 0.2);
        let field = &a * b.transpose();
        let state = from_full(&field, 1, wx, wv).unwrap();
        let norm_a = (a.dot(&a) * wx).sqrt();
        let norm_b = (b.dot(&b) * wv).sqrt();
        assert_relative_eq!(state.s[(0, 0)], norm_a * norm_b, epsilon = 1e-12);
    }

    #[test]
    fn from_full_maxwellian_with_uniform_moments_is_rank_one() {
        // f(x, v) = rho(x) * g(v) exactly when u, T are x-independent
        let n_x = 40;
        let rho: Vec<f64> = (0..n_x).map(|i| 1.0 + 0.5 * (i as f64 * 0.2).sin()).collect();
        let n_v = 16;
        let dv = 2.0 * 6.0 / n_v as f64;
        let g: Vec<f64> = (0..n_v * n_v)
            .map(|w| {
                let v1 = -6.0 + (w / n_v) as f64 * dv;
                let v2 = -6.0 + (w % n_v) as f64 * dv;
                (-(v1 * v1 + v2 * v2) / 2.0).exp() / (2.0 * PI)
            })
            .collect();
        let field = DMatrix::from_fn(n_x, n_v * n_v, |i, w| rho[i] * g[w]);
        let state = from_full(&field, 1, 1.0 / n_x as f64, dv * dv).unwrap();
        let err = (state.evaluate_full() - &field).abs().max();
        assert!(err <= 1e-12 * field.abs().max());
    }

    #[test]
    fn from_full_zero_matrix_keeps_shapes() {
        let state = from_full(&DMatrix::zeros(10, 8), 4, 0.1, 0.5).unwrap();
        assert_eq!(state.rank(), 4);
        assert_eq!(state.s.amax(), 0.0);
        assert!(state.orthonormality_defect(0.1, 0.5) <= 1e-14);
    }

    #[test]
    fn augment_subset_of_span_adds_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = 0.05;
        let x = random_orthonormal(30, 4, w, &mut rng);
        let mix = DMatrix::from_fn(4, 2, |_, _| rng.gen::<f64>() - 0.5);
        let extras = &x * mix;
        let (xhat, added) = orthonormalize_augment(&x, &extras, w);
        assert_eq!(added, 0);
        assert_eq!(xhat, x);
    }

    #[test]
    fn augment_orthogonal_direction() {
        let w = 0.1_f64;
        let mut x = DMatrix::<f64>::zeros(6, 1);
        x[(0, 0)] = 1.0 / w.sqrt();
        let mut extras = DMatrix::zeros(6, 1);
        extras[(1, 0)] = 2.0;
        let (xhat, added) = orthonormalize_augment(&x, &extras, w);
        assert_eq!(added, 1);
        assert_eq!(xhat.column(0), x.column(0));
        assert_relative_eq!(xhat[(1, 1)], 1.0 / w.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn augment_gram_matrix_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = 1.0 / 100.0;
        for _ in 0..20 {
            let x = random_orthonormal(100, 4, w, &mut rng);
            let extras = DMatrix::from_fn(100, 4, |_, _| rng.gen::<f64>() - 0.5);
            let (xhat, added) = orthonormalize_augment(&x, &extras, w);
            assert_eq!(xhat.columns(0, 4), x.columns(0, 4));
            let gram = xhat.transpose() * &xhat * w;
            let id = DMatrix::<f64>::identity(4 + added, 4 + added);
            assert!((gram - id).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn truncate_diagonal_example() {
        let xhat = DMatrix::<f64>::identity(8, 4);
        let vhat = DMatrix::<f64>::identity(6, 4);
        let shat = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0, 1e-16]));
        let state = truncate(&xhat, &shat, &vhat, Truncation::FixedRank(3)).unwrap();
        let kept: Vec<f64> = (0..3).map(|j| state.s[(j, j)]).collect();
        assert_eq!(kept, vec![3.0, 2.0, 1.0]);
        let err = (state.evaluate_full() - xhat * shat * vhat.transpose()).norm();
        assert!(err <= 2e-16);
    }

    #[test]
    fn truncate_low_rank_input_unchanged() {
        // rank-3 Shat truncated to r = 6 out of R = 12: reconstruction unchanged
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = 0.2;
        let xhat = random_orthonormal(40, 12, w, &mut rng);
        let vhat = random_orthonormal(25, 12, w, &mut rng);
        let a = DMatrix::from_fn(12, 3, |_, _| rng.gen::<f64>() - 0.5);
        let b = DMatrix::from_fn(12, 3, |_, _| rng.gen::<f64>() - 0.5);
        let shat = &a * b.transpose();
        let full = &xhat * &shat * vhat.transpose();
        let state = truncate(&xhat, &shat, &vhat, Truncation::FixedRank(6)).unwrap();
        let err = (state.evaluate_full() - full).abs().max();
        assert!(err <= 1e-12 * shat.abs().max());
    }

    #[test]
    fn truncate_matches_eckart_young() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = 1.0_f64;
        let xhat = random_orthonormal(30, 8, w, &mut rng);
        let vhat = random_orthonormal(30, 8, w, &mut rng);
        let shat = DMatrix::from_fn(8, 8, |_, _| rng.gen::<f64>() - 0.5);
        let state = truncate(&xhat, &shat, &vhat, Truncation::FixedRank(5)).unwrap();
        let err = (state.evaluate_full() - &xhat * &shat * vhat.transpose()).norm();
        // dense SVD oracle: error must equal the l2 norm of discarded values
        let mut sv = shat.clone().svd(false, false).singular_values.as_slice().to_vec();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expect = (sv[5..].iter().map(|s| s * s).sum::<f64>()).sqrt();
        assert_relative_eq!(err, expect, epsilon = 1e-12);
    }

    #[test]
    fn truncate_threshold_mode_keeps_tail_below_theta() {
        let xhat = DMatrix::<f64>::identity(10, 5);
        let vhat = DMatrix::<f64>::identity(10, 5);
        let shat =
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1e-3, 1e-8, 1e-9]));
        let state = truncate(&xhat, &shat, &vhat, Truncation::Threshold(1e-6)).unwrap();
        assert_eq!(state.rank(), 3);
        let state2 = truncate(&xhat, &shat, &vhat, Truncation::Threshold(10.0)).unwrap();
        assert_eq!(state2.rank(), 1); // never below rank 1
    }

    #[test]
    fn truncate_rejects_rank_above_augmented() {
        let xhat = DMatrix::<f64>::identity(5, 3);
        let vhat = DMatrix::<f64>::identity(5, 3);
        let shat = DMatrix::<f64>::identity(3, 3);
        assert!(truncate(&xhat, &shat, &vhat, Truncation::FixedRank(4)).is_err());
    }

    #[test]
    fn from_full_sine_maxwellian_truncation_error() {
        // Initial condition of the sine benchmark, truncated to r = 6; the
        // reconstruction error must match the SVD tail and sit below 1e-6.
        let n_x = 100;
        let n_v = 32;
        let l_v = 8.4;
        let dx = 1.0 / n_x as f64;
        let dv = 2.0 * l_v / n_v as f64;
        let field = DMatrix::from_fn(n_x, n_v * n_v, |i, w| {
            let x = (i as f64 + 0.5) * dx;
            let rho = (2.0 + (2.0 * PI * x).sin()) / 3.0;
            let t = (3.0 + (2.0 * PI * x).cos()) / 4.0;
            let v1 = -l_v + (w / n_v) as f64 * dv;
            let v2 = -l_v + (w % n_v) as f64 * dv;
            let du = (v1 - 0.2) * (v1 - 0.2) + v2 * v2;
            rho / (2.0 * PI * t) * (-du / (2.0 * t)).exp()
        });
        let (wx, wv) = (dx, dv * dv);
        let state = from_full(&field, 6, wx, wv).unwrap();
        let err = weighted_fro(&(state.evaluate_full() - &field), wx, wv);
        let rel = err / weighted_fro(&field, wx, wv);
        assert!(rel <= 1e-6, "relative truncation error {rel} above 1e-6");
        // oracle: the full spectrum's tail norm
        let sv = field.clone().svd(false, false).singular_values;
        let mut s2: Vec<f64> = sv.iter().map(|s| s * s * wx * wv).collect();
        s2.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let tail = s2[6..].iter().sum::<f64>().sqrt();
        assert_relative_eq!(err, tail, epsilon = 1e-10 * s2[0].sqrt());
    }
}
