//! Strided batches of small matrices and the half-precision variant.

use super::cmat::C64;
use super::LinalgError;
use half::f16;

/// Immutable view of `count` dense n×n complex matrices laid out at a
/// constant stride.
#[derive(Clone, Copy)]
pub struct SmallMatBatch<'a> {
    pub count: usize,
    pub n: usize,
    pub stride: usize,
    pub storage: &'a [C64],
}

/// Mutable counterpart of [`SmallMatBatch`].
pub struct SmallMatBatchMut<'a> {
    pub count: usize,
    pub n: usize,
    pub stride: usize,
    pub storage: &'a mut [C64],
}

fn check_layout(count: usize, n: usize, stride: usize, len: usize) -> Result<(), LinalgError> {
    if stride < n * n {
        return Err(LinalgError::BadBatchLayout(format!(
            "stride {stride} < n² = {}",
            n * n
        )));
    }
    let need = if count == 0 {
        0
    } else {
        (count - 1) * stride + n * n
    };
    if len < need {
        return Err(LinalgError::BadBatchLayout(format!(
            "storage holds {len} elements, batch needs {need}"
        )));
    }
    Ok(())
}

impl<'a> SmallMatBatch<'a> {
    pub fn new(
        count: usize,
        n: usize,
        stride: usize,
        storage: &'a [C64],
    ) -> Result<Self, LinalgError> {
        check_layout(count, n, stride, storage.len())?;
        Ok(Self {
            count,
            n,
            stride,
            storage,
        })
    }

    #[inline]
    pub fn mat(&self, k: usize) -> &[C64] {
        &self.storage[k * self.stride..k * self.stride + self.n * self.n]
    }
}

impl<'a> SmallMatBatchMut<'a> {
    pub fn new(
        count: usize,
        n: usize,
        stride: usize,
        storage: &'a mut [C64],
    ) -> Result<Self, LinalgError> {
        check_layout(count, n, stride, storage.len())?;
        Ok(Self {
            count,
            n,
            stride,
            storage,
        })
    }

    #[inline]
    pub fn mat_mut(&mut self, k: usize) -> &mut [C64] {
        &mut self.storage[k * self.stride..k * self.stride + self.n * self.n]
    }
}

/// Batched `C[k] (+)= A[k] · B[k]` over all k. No padding: exactly
/// `count · n³` complex multiply-adds are performed, and that count is
/// returned.
pub fn sbsmm(
    a: &SmallMatBatch<'_>,
    b: &SmallMatBatch<'_>,
    c: &mut SmallMatBatchMut<'_>,
    accumulate: bool,
) -> Result<u64, LinalgError> {
    if a.count != b.count || a.count != c.count {
        return Err(LinalgError::DimensionMismatch(format!(
            "batch counts {} / {} / {}",
            a.count, b.count, c.count
        )));
    }
    if a.n != b.n || a.n != c.n {
        return Err(LinalgError::DimensionMismatch(format!(
            "batch dims {} / {} / {}",
            a.n, b.n, c.n
        )));
    }
    let n = a.n;
    for k in 0..a.count {
        let am = a.mat(k);
        let bm = b.mat(k);
        let cm = c.mat_mut(k);
        if !accumulate {
            cm.fill(C64::new(0.0, 0.0));
        }
        for i in 0..n {
            for l in 0..n {
                let v = am[i * n + l];
                for j in 0..n {
                    cm[i * n + j] += v * bm[l * n + j];
                }
            }
        }
    }
    Ok((a.count * n * n * n) as u64)
}

fn max_component(values: &[C64]) -> f64 {
    let mut m = 0.0f64;
    for v in values {
        m = m.max(v.re.abs()).max(v.im.abs());
    }
    m
}

fn pow2_scale_to(values: &[C64], target_exp: i32) -> f64 {
    let m = max_component(values);
    if m == 0.0 || !m.is_finite() {
        return 1.0;
    }
    // smallest k with 2^k >= m
    let mut k = m.log2().ceil() as i32;
    while 2f64.powi(k) < m {
        k += 1;
    }
    while k > i32::MIN + 1 && 2f64.powi(k - 1) >= m {
        k -= 1;
    }
    2f64.powi(target_exp - k)
}

/// Largest power of two `s` such that `s · max|entry| ≤ 1024`. The headroom
/// below the half-precision maximum keeps a few-hundred-term accumulation of
/// unit-scale products finite. An all-zero input returns 1.
pub fn compute_scale(values: &[C64]) -> f64 {
    pow2_scale_to(values, 10)
}

/// Power-of-two scales for the two operands of a half-precision multiply,
/// placing each scaled operand near 2⁵ so their products stay at the 1024
/// headroom target of [`compute_scale`].
pub fn compute_pair_scales(a: &[C64], b: &[C64]) -> (f64, f64) {
    (pow2_scale_to(a, 5), pow2_scale_to(b, 5))
}

/// Split-complex batch of n×n matrices stored as half-precision reals,
/// zero-padded to tiles of `npad = 16·ceil(n/16)`, pre-multiplied by a
/// power-of-two `scale`. Out-of-range values are clamped to the largest
/// finite half value.
#[derive(Clone, Debug)]
pub struct HalfComplexBatch {
    pub count: usize,
    pub n: usize,
    pub npad: usize,
    pub scale: f64,
    re: Vec<f16>,
    im: Vec<f16>,
}

fn clamp_to_f16(v: f64) -> f16 {
    let max = f64::from(f16::MAX);
    f16::from_f64(v.clamp(-max, max))
}

impl HalfComplexBatch {
    /// Convert a full-precision batch, normalizing by `scale`.
    pub fn from_batch(src: &SmallMatBatch<'_>, scale: f64) -> Self {
        let n = src.n;
        let npad = 16 * n.div_ceil(16);
        let tile = npad * npad;
        let mut re = vec![f16::from_f64(0.0); src.count * tile];
        let mut im = vec![f16::from_f64(0.0); src.count * tile];
        for k in 0..src.count {
            let m = src.mat(k);
            for i in 0..n {
                for j in 0..n {
                    let v = m[i * n + j];
                    re[k * tile + i * npad + j] = clamp_to_f16(v.re * scale);
                    im[k * tile + i * npad + j] = clamp_to_f16(v.im * scale);
                }
            }
        }
        Self {
            count: src.count,
            n,
            npad,
            scale,
            re,
            im,
        }
    }

    #[inline]
    fn at(&self, k: usize, i: usize, j: usize) -> (f32, f32) {
        let idx = k * self.npad * self.npad + i * self.npad + j;
        (self.re[idx].to_f32(), self.im[idx].to_f32())
    }
}

/// Batched multiply of half-precision split-complex inputs with
/// full-precision accumulation: `Cacc[k] += (A[k]·B[k]) / (scale_A·scale_B)`.
///
/// Each complex multiply runs as four real sub-products; inputs and products
/// are rounded to half precision, the running sums are kept in f64. Returns
/// the half multiply-adds charged at the padded tile size `count · npad³`.
pub fn sbsmm_half(
    a: &HalfComplexBatch,
    b: &HalfComplexBatch,
    c: &mut SmallMatBatchMut<'_>,
) -> Result<u64, LinalgError> {
    if a.count != b.count || a.count != c.count {
        return Err(LinalgError::DimensionMismatch(format!(
            "half batch counts {} / {} / {}",
            a.count, b.count, c.count
        )));
    }
    if a.n != b.n || a.n != c.n {
        return Err(LinalgError::DimensionMismatch(format!(
            "half batch dims {} / {} / {}",
            a.n, b.n, c.n
        )));
    }
    let n = a.n;
    let denorm = 1.0 / (a.scale * b.scale);
    for k in 0..a.count {
        let cm = c.mat_mut(k);
        for i in 0..n {
            for j in 0..n {
                let mut sum_re = 0.0f64;
                let mut sum_im = 0.0f64;
                for l in 0..n {
                    let (ar, ai) = a.at(k, i, l);
                    let (br, bi) = b.at(k, l, j);
                    // four real sub-products, each rounded to half with
                    // out-of-range values clamped
                    let p1 = clamp_to_f16((ar * br) as f64).to_f64();
                    let p2 = clamp_to_f16((ai * bi) as f64).to_f64();
                    let p3 = clamp_to_f16((ar * bi) as f64).to_f64();
                    let p4 = clamp_to_f16((ai * br) as f64).to_f64();
                    sum_re += p1 - p2;
                    sum_im += p3 + p4;
                }
                cm[i * n + j] += C64::new(sum_re * denorm, sum_im * denorm);
            }
        }
    }
    Ok((a.count * a.npad * a.npad * a.npad) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_batch(count: usize, n: usize, seed: u64) -> Vec<C64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count * n * n)
            .map(|_| C64::new(2.0 * uniform(&mut rng) - 1.0, 2.0 * uniform(&mut rng) - 1.0))
            .collect()
    }

    #[test]
    fn identity_batch() {
        let n = 12;
        let id = CMat::eye(n);
        let a: Vec<C64> = id.data().to_vec();
        let mut c = vec![C64::new(0.0, 0.0); n * n];
        let ops = sbsmm(
            &SmallMatBatch::new(1, n, n * n, &a).unwrap(),
            &SmallMatBatch::new(1, n, n * n, &a).unwrap(),
            &mut SmallMatBatchMut::new(1, n, n * n, &mut c).unwrap(),
            false,
        )
        .unwrap();
        assert_eq!(ops, (n * n * n) as u64);
        assert_eq!(CMat::from_rows(n, n, c).max_abs_diff(&id), 0.0);
    }

    #[test]
    fn batch_matches_per_matrix_oracle() {
        let (count, n) = (210, 12);
        let a = random_batch(count, n, 5);
        let b = random_batch(count, n, 6);
        let mut c = vec![C64::new(0.0, 0.0); count * n * n];
        sbsmm(
            &SmallMatBatch::new(count, n, n * n, &a).unwrap(),
            &SmallMatBatch::new(count, n, n * n, &b).unwrap(),
            &mut SmallMatBatchMut::new(count, n, n * n, &mut c).unwrap(),
            false,
        )
        .unwrap();
        for k in 0..count {
            let am = CMat::from_rows(n, n, a[k * n * n..(k + 1) * n * n].to_vec());
            let bm = CMat::from_rows(n, n, b[k * n * n..(k + 1) * n * n].to_vec());
            let want = am.mul(&bm);
            let got = CMat::from_rows(n, n, c[k * n * n..(k + 1) * n * n].to_vec());
            assert!(got.max_abs_diff(&want) <= 1e-13);
        }
    }

    #[test]
    fn accumulate_is_order_independent() {
        let (count, n) = (16, 4);
        let a = random_batch(count, n, 7);
        let b = random_batch(count, n, 8);
        let ab = |sel: &[usize], c: &mut [C64]| {
            for &k in sel {
                let av = &a[k * n * n..(k + 1) * n * n];
                let bv = &b[k * n * n..(k + 1) * n * n];
                sbsmm(
                    &SmallMatBatch::new(1, n, n * n, av).unwrap(),
                    &SmallMatBatch::new(1, n, n * n, bv).unwrap(),
                    &mut SmallMatBatchMut::new(1, n, n * n, c).unwrap(),
                    true,
                )
                .unwrap();
            }
        };
        let fwd: Vec<usize> = (0..count).collect();
        let rev: Vec<usize> = (0..count).rev().collect();
        let mut c1 = vec![C64::new(0.0, 0.0); n * n];
        let mut c2 = vec![C64::new(0.0, 0.0); n * n];
        ab(&fwd, &mut c1);
        ab(&rev, &mut c2);
        let m1 = CMat::from_rows(n, n, c1);
        let m2 = CMat::from_rows(n, n, c2);
        assert!(m1.max_abs_diff(&m2) <= 1e-12 * m1.max_abs().max(1.0));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = random_batch(2, 3, 1);
        let b = random_batch(3, 3, 2);
        let mut c = vec![C64::new(0.0, 0.0); 2 * 9];
        let err = sbsmm(
            &SmallMatBatch::new(2, 3, 9, &a).unwrap(),
            &SmallMatBatch::new(3, 3, 9, &b).unwrap(),
            &mut SmallMatBatchMut::new(2, 3, 9, &mut c).unwrap(),
            false,
        )
        .unwrap_err();
        assert!(matches!(err, LinalgError::DimensionMismatch(_)));
        assert!(SmallMatBatch::new(2, 3, 8, &a).is_err());
    }

    #[test]
    fn scale_examples() {
        assert_eq!(compute_scale(&[C64::new(1.0, 0.0)]), 1024.0);
        assert_eq!(compute_scale(&[C64::new(0.0, 65536.0)]), 2f64.powi(-6));
        assert_eq!(compute_scale(&[C64::new(0.0, 0.0)]), 1.0);
        // headroom: s·max never exceeds 1024, and 2s·max does
        for m in [0.3, 1.5, 7.0, 300.0, 1e-6, 1e9] {
            let s = compute_scale(&[C64::new(m, 0.0)]);
            assert!(s * m <= 1024.0 + 1e-9, "m = {m}");
            assert!(2.0 * s * m > 1024.0, "m = {m}");
        }
    }

    #[test]
    fn half_identity_is_exact() {
        let n = 12;
        let id: Vec<C64> = CMat::eye(n).data().to_vec();
        let src = SmallMatBatch::new(1, n, n * n, &id).unwrap();
        let ha = HalfComplexBatch::from_batch(&src, 1.0);
        let hb = HalfComplexBatch::from_batch(&src, 1.0);
        let mut c = vec![C64::new(0.0, 0.0); n * n];
        let ops = sbsmm_half(
            &ha,
            &hb,
            &mut SmallMatBatchMut::new(1, n, n * n, &mut c).unwrap(),
        )
        .unwrap();
        assert_eq!(ops, 16 * 16 * 16); // padded tile model
        assert_eq!(CMat::from_rows(n, n, c).max_abs_diff(&CMat::eye(n)), 0.0);
    }

    #[test]
    fn half_error_bound_on_unit_inputs() {
        let (count, n) = (8, 12);
        let a = random_batch(count, n, 21);
        let b = random_batch(count, n, 22);
        let sa = SmallMatBatch::new(count, n, n * n, &a).unwrap();
        let sb = SmallMatBatch::new(count, n, n * n, &b).unwrap();
        let (scale_a, scale_b) = compute_pair_scales(&a, &b);
        let ha = HalfComplexBatch::from_batch(&sa, scale_a);
        let hb = HalfComplexBatch::from_batch(&sb, scale_b);
        let mut c_half = vec![C64::new(0.0, 0.0); count * n * n];
        let mut c_full = vec![C64::new(0.0, 0.0); count * n * n];
        sbsmm_half(
            &ha,
            &hb,
            &mut SmallMatBatchMut::new(count, n, n * n, &mut c_half).unwrap(),
        )
        .unwrap();
        sbsmm(
            &sa,
            &sb,
            &mut SmallMatBatchMut::new(count, n, n * n, &mut c_full).unwrap(),
            false,
        )
        .unwrap();
        for (h, f) in c_half.iter().zip(&c_full) {
            let denom = f.norm().max(1.0);
            assert!(
                (h - f).norm() / denom <= 5e-3,
                "half error {:e} vs {:e}",
                (h - f).norm(),
                denom
            );
        }
    }

    #[test]
    fn scaling_roundtrip_is_exact_for_powers_of_two() {
        let (count, n) = (4, 8);
        let base = random_batch(count, n, 33);
        let boosted: Vec<C64> = base.iter().map(|v| v * 2f64.powi(20)).collect();
        let sa = SmallMatBatch::new(count, n, n * n, &base).unwrap();
        let sb = SmallMatBatch::new(count, n, n * n, &base).unwrap();
        let (sc, _) = compute_pair_scales(&base, &base);
        let ha = HalfComplexBatch::from_batch(&sa, sc);
        let hb = HalfComplexBatch::from_batch(&sb, sc);
        let mut c_ref = vec![C64::new(0.0, 0.0); count * n * n];
        sbsmm_half(
            &ha,
            &hb,
            &mut SmallMatBatchMut::new(count, n, n * n, &mut c_ref).unwrap(),
        )
        .unwrap();

        // same data pre-scaled by 2^20; the batch scale compensates exactly
        let sba = SmallMatBatch::new(count, n, n * n, &boosted).unwrap();
        let (sc2, _) = compute_pair_scales(&boosted, &boosted);
        let ha2 = HalfComplexBatch::from_batch(&sba, sc2);
        let hb2 = HalfComplexBatch::from_batch(&sba, sc2);
        let mut c_scaled = vec![C64::new(0.0, 0.0); count * n * n];
        sbsmm_half(
            &ha2,
            &hb2,
            &mut SmallMatBatchMut::new(count, n, n * n, &mut c_scaled).unwrap(),
        )
        .unwrap();
        for (r, s) in c_ref.iter().zip(&c_scaled) {
            // c_scaled computes (2^20 base)² with scales undone: divide by 2^40
            let back = s * 2f64.powi(-40);
            assert!((r - back).norm() <= 1e-12 * r.norm().max(1.0));
        }
    }

    #[test]
    fn unscaled_small_inputs_underflow() {
        let (count, n) = (4, 8);
        let base = random_batch(count, n, 44);
        let tiny: Vec<C64> = base.iter().map(|v| v * 1e-5).collect();
        let st = SmallMatBatch::new(count, n, n * n, &tiny).unwrap();
        let mut full = vec![C64::new(0.0, 0.0); count * n * n];
        sbsmm(
            &st,
            &st,
            &mut SmallMatBatchMut::new(count, n, n * n, &mut full).unwrap(),
            false,
        )
        .unwrap();
        let run = |scale: f64| -> Vec<C64> {
            let h = HalfComplexBatch::from_batch(&st, scale);
            let mut c = vec![C64::new(0.0, 0.0); count * n * n];
            sbsmm_half(
                &h,
                &h,
                &mut SmallMatBatchMut::new(count, n, n * n, &mut c).unwrap(),
            )
            .unwrap();
            c
        };
        let scaled = run(compute_pair_scales(&tiny, &tiny).0);
        let unscaled = run(1.0);
        let err = |c: &[C64]| -> f64 {
            c.iter()
                .zip(&full)
                .map(|(a, b)| (a - b).norm())
                .sum::<f64>()
                / full.iter().map(|v| v.norm()).sum::<f64>()
        };
        assert!(
            err(&unscaled) > err(&scaled),
            "unscaled {:.3e} must exceed scaled {:.3e}",
            err(&unscaled),
            err(&scaled)
        );
    }
}
