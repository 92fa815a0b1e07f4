//! Fourier spectral evaluation of the 2D Boltzmann collision operator for the
//! constant kernel B = 1/(2pi).
//!
//! Fields on the velocity grid are expanded in modes e^{i (pi/L) l.v} with
//! wave vectors l in {-n_v/2, ..., n_v/2 - 1}^2. The bilinear form becomes
//!
//!   Qhat_k = sum_{l+m=k} ghat_l fhat_m [beta(l, m) - beta(l, l)],
//!
//! where the kernel mode beta(l, m) depends only on (|l+m|^2, |l-m|^2) and
//! reduces to a Lommel integral of Bessel functions evaluated in closed form.
//! The sum is carried out directly (O(n_v^4) per call) over a precomputed
//! table; mass conservation is exact because the k = 0 weights vanish
//! identically by the symmetry beta(l, -l) = beta(l, l).

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Precomputed kernel-mode table for `q_bilinear` on a fixed velocity grid.
pub struct KernelModes {
    n_v: usize,
    l: f64,
    r_support: f64,
    /// Unique gain modes keyed by (|l+m|^2, |l-m|^2).
    gain: HashMap<(u64, u64), f64>,
    /// Loss modes beta(l, l) per flat wave vector.
    loss: Vec<f64>,
    /// k-major combined table: wk[k * nf + l] = beta(l, k-l) - beta(l, l),
    /// zero where k - l falls outside the mode box.
    wk: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    calls: AtomicU64,
}

impl std::fmt::Debug for KernelModes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelModes")
            .field("n_v", &self.n_v)
            .field("l", &self.l)
            .field("r_support", &self.r_support)
            .field("unique_gain_modes", &self.gain.len())
            .finish()
    }
}

/// 2 pi * int_0^R xi J0(a xi) J0(b xi) d xi via the Lommel closed form.
fn lommel(a: f64, b: f64, r: f64) -> f64 {
    use libm::{j0, j1};
    use std::f64::consts::PI;
    if a == 0.0 && b == 0.0 {
        return PI * r * r;
    }
    // the two quadratic arguments come from integer mode pairs, so exact
    // equality is the right degeneracy test
    if a == b {
        return PI * r * r * (j0(a * r).powi(2) + j1(a * r).powi(2));
    }
    let num = a * j1(a * r) * j0(b * r) - b * j0(a * r) * j1(b * r);
    2.0 * PI * r * num / (a * a - b * b)
}

impl KernelModes {
    /// Number of `q_bilinear` evaluations performed with this table.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn spectral_half_width(&self) -> f64 {
        self.l
    }

    pub fn support_radius(&self) -> f64 {
        self.r_support
    }

    /// Gain mode for the squared-norm pair (|l+m|^2, |l-m|^2).
    pub fn gain_mode(&self, p: u64, q: u64) -> Option<f64> {
        let key = if p <= q { (p, q) } else { (q, p) };
        self.gain.get(&key).copied()
    }

    pub fn unique_gain_modes(&self) -> usize {
        self.gain.len()
    }
}

/// Build the kernel-mode table for an n_v^2 grid with spectral half-width `l`
/// and support truncation radius `r_support`.
pub fn build_kernel_modes(n_v: usize, l: f64, r_support: f64) -> Result<KernelModes> {
    if n_v % 2 != 0 || n_v < 4 {
        return Err(Error::Config(format!("kernel modes need even n_v >= 4, got {n_v}")));
    }
    if !(r_support > 0.0) || r_support > 2.0 * l {
        return Err(Error::Config(format!(
            "support radius must satisfy 0 < R <= 2 L, got R = {r_support}, L = {l}"
        )));
    }
    use std::f64::consts::PI;

    let half = (n_v / 2) as i64;
    let n = n_v as i64;
    let nf = n_v * n_v;
    let freq = PI / (2.0 * l);

    let mut gain: HashMap<(u64, u64), f64> = HashMap::new();
    let mut eval = |p: u64, q: u64| -> f64 {
        let key = if p <= q { (p, q) } else { (q, p) };
        *gain
            .entry(key)
            .or_insert_with(|| lommel(freq * (key.0 as f64).sqrt(), freq * (key.1 as f64).sqrt(), r_support))
    };

    // flat wave-vector components, v1-major
    let comp = |flat: usize| -> (i64, i64) {
        ((flat as i64 / n) - half, (flat as i64 % n) - half)
    };

    let mut loss = vec![0.0; nf];
    for (lf, slot) in loss.iter_mut().enumerate() {
        let (l1, l2) = comp(lf);
        *slot = eval((4 * (l1 * l1 + l2 * l2)) as u64, 0);
    }

    let mut wk = vec![0.0; nf * nf];
    for kf in 0..nf {
        let (k1, k2) = comp(kf);
        let row = &mut wk[kf * nf..(kf + 1) * nf];
        for (lf, slot) in row.iter_mut().enumerate() {
            let (l1, l2) = comp(lf);
            let (m1, m2) = (k1 - l1, k2 - l2);
            if m1 < -half || m1 >= half || m2 < -half || m2 >= half {
                continue;
            }
            let p = ((l1 + m1) * (l1 + m1) + (l2 + m2) * (l2 + m2)) as u64;
            let q = ((l1 - m1) * (l1 - m1) + (l2 - m2) * (l2 - m2)) as u64;
            *slot = eval(p, q) - loss[lf];
        }
    }

    for v in gain.values() {
        if !v.is_finite() {
            return Err(Error::Config("non-finite kernel mode".into()));
        }
    }

    let mut planner = FftPlanner::new();
    Ok(KernelModes {
        n_v,
        l,
        r_support,
        gain,
        loss,
        wk,
        fft_fwd: planner.plan_fft_forward(n_v),
        fft_inv: planner.plan_fft_inverse(n_v),
        calls: AtomicU64::new(0),
    })
}

/// In-place 2D FFT over an n x n complex buffer (rows then columns).
fn fft2(buf: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    for row in buf.chunks_exact_mut(n) {
        plan.process(row);
    }
    // columns via transpose
    let mut col = vec![Complex64::default(); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        plan.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

impl KernelModes {
    /// Collocation coefficients ghat_l = (1/n^2) sum_k g_k e^{-i (pi/L) l . v_k}
    /// in shifted (ascending l) order.
    ///
    /// The unpaired Nyquist row and column (l_i = -n/2) are zeroed so that the
    /// retained mode set is closed under l -> -l; this keeps Qhat Hermitian
    /// and the returned collision field real to roundoff.
    fn forward_modes(&self, g: &[f64]) -> Vec<Complex64> {
        let n = self.n_v;
        let nf = n * n;
        let mut buf: Vec<Complex64> =
            g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft2(&mut buf, n, &self.fft_fwd);
        let half = n / 2;
        let inv = 1.0 / nf as f64;
        let mut out = vec![Complex64::default(); nf];
        for l1i in 1..n {
            let l1 = l1i as i64 - half as i64;
            let j1 = l1.rem_euclid(n as i64) as usize;
            for l2i in 1..n {
                let l2 = l2i as i64 - half as i64;
                let j2 = l2.rem_euclid(n as i64) as usize;
                let sign = if (l1 + l2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                out[l1i * n + l2i] = buf[j1 * n + j2] * (sign * inv);
            }
        }
        out
    }

    /// Field values sum_l Qhat_l e^{i (pi/L) l . v_k}; returns the real part
    /// and the largest imaginary residue.
    fn inverse_field(&self, qhat: &[Complex64]) -> (Vec<f64>, f64) {
        let n = self.n_v;
        let nf = n * n;
        let half = n / 2;
        let mut buf = vec![Complex64::default(); nf];
        for l1i in 0..n {
            let l1 = l1i as i64 - half as i64;
            let j1 = l1.rem_euclid(n as i64) as usize;
            for l2i in 0..n {
                let l2 = l2i as i64 - half as i64;
                let j2 = l2.rem_euclid(n as i64) as usize;
                let sign = if (l1 + l2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[j1 * n + j2] = qhat[l1i * n + l2i] * sign;
            }
        }
        fft2(&mut buf, n, &self.fft_inv);
        let imag = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        (buf.iter().map(|c| c.re).collect(), imag)
    }
}

/// Bilinear collision operator Q(g, f) on the 2D velocity grid.
pub fn q_bilinear(g: &[f64], f: &[f64], modes: &KernelModes) -> Result<Vec<f64>> {
    Ok(q_bilinear_with_residual(g, f, modes)?.0)
}

/// Like [`q_bilinear`] but also returns the largest imaginary residue that
/// was discarded when taking the real part.
pub fn q_bilinear_with_residual(
    g: &[f64],
    f: &[f64],
    modes: &KernelModes,
) -> Result<(Vec<f64>, f64)> {
    let n = modes.n_v;
    let nf = n * n;
    if g.len() != nf || f.len() != nf {
        return Err(Error::Contract(format!(
            "q_bilinear: field lengths {} and {} must equal n_v^2 = {nf}",
            g.len(),
            f.len()
        )));
    }
    modes.calls.fetch_add(1, Ordering::Relaxed);

    let gh = modes.forward_modes(g);
    let fh = modes.forward_modes(f);

    // split planes; f is stored reversed and zero-padded so the inner loop
    // runs over three unit-stride streams
    let (mut ghr, mut ghi) = (vec![0.0; nf], vec![0.0; nf]);
    for (i, c) in gh.iter().enumerate() {
        ghr[i] = c.re;
        ghi[i] = c.im;
    }
    let pad = 3 * nf;
    let (mut frr, mut fri) = (vec![0.0; pad], vec![0.0; pad]);
    for (i, c) in fh.iter().enumerate() {
        // frev[j] = fpad[pad - 1 - j] with fpad[m + nf] = fh[m]
        frr[pad - 1 - (i + nf)] = c.re;
        fri[pad - 1 - (i + nf)] = c.im;
    }

    let half = n / 2;
    let shift = half * (n + 1) + nf;
    let mut qhat = vec![Complex64::default(); nf];
    for (kf, q) in qhat.iter_mut().enumerate() {
        // output Nyquist modes stay zero, mirroring the input projection
        if kf / n == 0 || kf % n == 0 {
            continue;
        }
        // fpad index is (kf + shift) - l; in reversed storage that is
        // off + l with off = pad - 1 - kf - shift
        let off = pad - 1 - kf - shift;
        let row = &modes.wk[kf * nf..(kf + 1) * nf];
        let fr = &frr[off..off + nf];
        let fi = &fri[off..off + nf];
        let mut sr = 0.0;
        let mut si = 0.0;
        for l in 0..nf {
            let w = row[l];
            sr += w * (ghr[l] * fr[l] - ghi[l] * fi[l]);
            si += w * (ghr[l] * fi[l] + ghi[l] * fr[l]);
        }
        *q = Complex64::new(sr, si);
    }

    let (field, imag) = modes.inverse_field(&qhat);
    Ok((field, imag))
}

/// Q(f, f).
pub fn q_quadratic(f: &[f64], modes: &KernelModes) -> Result<Vec<f64>> {
    q_bilinear(f, f, modes)
}

/// Penalty estimate lambda = sup_x rho(x).
///
/// For the constant kernel B = 1/(2pi) in two dimensions the loss rate is
/// Q^-(f) = rho, so the supremum of the density bounds the loss part.
pub fn loss_bound(rho: &[f64]) -> f64 {
    rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Sampled 2D Maxwellian on the velocity grid (helper shared by tests and
/// the moments module).
pub fn sample_maxwellian_2v(
    grid: &VelocityGrid,
    rho: f64,
    u1: f64,
    u2: f64,
    t: f64,
) -> Vec<f64> {
    use std::f64::consts::PI;
    let v1 = grid.component(0);
    let v2 = grid.component(1);
    v1.iter()
        .zip(&v2)
        .map(|(&a, &b)| {
            let d = (a - u1) * (a - u1) + (b - u2) * (b - u2);
            rho / (2.0 * PI * t) * (-d / (2.0 * t)).exp()
        })
        .collect()
}
