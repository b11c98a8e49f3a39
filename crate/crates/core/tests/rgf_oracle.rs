//! RGF against the dense-inverse oracle.
//!
//! The oracle never goes through the recursion: G^R is the dense inverse of
//! the assembled matrix, G^≷ the dense triple product G^R·Σ^≷·G^A.

use negfmini_core::linalg::{BlockTriMatrix, CMat, C64};
use negfmini_core::rgf::{rgf_point, OffdiagMode};
use rand_core::{RngCore, SeedableRng};

fn uniform(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_mat(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        C64::new(2.0 * uniform(rng) - 1.0, 2.0 * uniform(rng) - 1.0)
    })
}

fn random_hermitian(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> CMat {
    let m = random_mat(n, rng);
    m.add(&m.adjoint()).scale(C64::new(0.5, 0.0))
}

/// Random Hermitian block-tridiagonal system plus iη on the diagonal.
fn random_system(bnum: usize, d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> BlockTriMatrix {
    let mut a = BlockTriMatrix::zeros(bnum, d);
    for i in 0..bnum {
        let mut blk = random_hermitian(d, rng);
        for r in 0..d {
            blk[(r, r)] += C64::new(0.0, 0.5); // broadening keeps pivots regular
        }
        *a.diag_mut(i) = blk;
    }
    for i in 0..bnum - 1 {
        let up = random_mat(d, rng);
        *a.lower_mut(i) = up.adjoint();
        *a.upper_mut(i) = up;
    }
    a
}

struct DenseOracle {
    g_r: CMat,
    g_l: CMat,
    g_g: CMat,
}

fn dense_oracle(a: &BlockTriMatrix, sl: &[CMat], sg: &[CMat]) -> DenseOracle {
    let dim = a.dim();
    let d = a.blockdim();
    let g_r = a.to_dense().inverse().unwrap();
    let g_a = g_r.adjoint();
    let embed = |blocks: &[CMat]| {
        let mut m = CMat::zeros(dim, dim);
        for (i, b) in blocks.iter().enumerate() {
            m.set_block(i * d, i * d, b);
        }
        m
    };
    let g_l = g_r.mul(&embed(sl)).mul(&g_a);
    let g_g = g_r.mul(&embed(sg)).mul(&g_a);
    DenseOracle { g_r, g_l, g_g }
}

#[test]
fn rgf_matches_dense_inverse_on_all_sizes() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for &bnum in &[1usize, 2, 4, 8] {
        for &d in &[4usize, 8, 16] {
            for _ in 0..20 {
                let a = random_system(bnum, d, &mut rng);
                let sl: Vec<CMat> = (0..bnum).map(|_| random_mat(d, &mut rng)).collect();
                let sg: Vec<CMat> = (0..bnum).map(|_| random_mat(d, &mut rng)).collect();
                let out = rgf_point(&a, &sl, &sg, OffdiagMode::Both).unwrap();
                let oracle = dense_oracle(&a, &sl, &sg);
                for q in 0..bnum {
                    let (r0, c0) = (q * d, q * d);
                    let err_r = out.g_r_diag[q].max_abs_diff(&oracle.g_r.sub_block(r0, c0, d, d));
                    let err_l =
                        out.g_lesser_diag[q].max_abs_diff(&oracle.g_l.sub_block(r0, c0, d, d));
                    let err_g =
                        out.g_greater_diag[q].max_abs_diff(&oracle.g_g.sub_block(r0, c0, d, d));
                    assert!(err_r <= 1e-10, "bnum={bnum} d={d} q={q}: G^R err {err_r:.3e}");
                    assert!(err_l <= 1e-10, "bnum={bnum} d={d} q={q}: G^< err {err_l:.3e}");
                    assert!(err_g <= 1e-10, "bnum={bnum} d={d} q={q}: G^> err {err_g:.3e}");
                }
                for q in 0..bnum - 1 {
                    let up = (q * d, (q + 1) * d);
                    let dn = ((q + 1) * d, q * d);
                    let e1 = out.g_lesser_up[q].max_abs_diff(&oracle.g_l.sub_block(up.0, up.1, d, d));
                    let e2 = out.g_lesser_dn[q].max_abs_diff(&oracle.g_l.sub_block(dn.0, dn.1, d, d));
                    let e3 =
                        out.g_greater_up[q].max_abs_diff(&oracle.g_g.sub_block(up.0, up.1, d, d));
                    let e4 =
                        out.g_greater_dn[q].max_abs_diff(&oracle.g_g.sub_block(dn.0, dn.1, d, d));
                    for (name, e) in [("l_up", e1), ("l_dn", e2), ("g_up", e3), ("g_dn", e4)] {
                        assert!(e <= 1e-10, "bnum={bnum} d={d} q={q} {name}: err {e:.3e}");
                    }
                }
            }
        }
    }
}

#[test]
fn single_block_recursion_degenerates_to_direct_solve() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let d = 8;
    let a = random_system(1, d, &mut rng);
    let sl = vec![random_mat(d, &mut rng)];
    let sg = vec![random_mat(d, &mut rng)];
    let out = rgf_point(&a, &sl, &sg, OffdiagMode::None).unwrap();
    let direct = a.diag(0).inverse().unwrap();
    assert!(out.g_r_diag[0].max_abs_diff(&direct) <= 1e-12);
    let want_l = direct.mul(&sl[0]).mul(&direct.adjoint());
    assert!(out.g_lesser_diag[0].max_abs_diff(&want_l) <= 1e-12);
}

#[test]
fn anti_hermitian_injection_gives_anti_hermitian_lesser() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let (bnum, d) = (4, 6);
    let a = random_system(bnum, d, &mut rng);
    // anti-Hermitian Σ^≷, as the physics produces
    let anti = |rng: &mut rand_chacha::ChaCha8Rng| {
        let m = random_mat(d, rng);
        m.sub(&m.adjoint()).scale(C64::new(0.5, 0.0))
    };
    let sl: Vec<CMat> = (0..bnum).map(|_| anti(&mut rng)).collect();
    let sg: Vec<CMat> = (0..bnum).map(|_| anti(&mut rng)).collect();
    let out = rgf_point(&a, &sl, &sg, OffdiagMode::Lesser).unwrap();
    for q in 0..bnum {
        let defect = out.g_lesser_diag[q]
            .add(&out.g_lesser_diag[q].adjoint())
            .max_abs();
        assert!(defect <= 1e-12, "block {q}: {defect:.3e}");
    }
    // off-diagonal pairs: G^<(n,n+1) = −G^<(n+1,n)†
    for q in 0..bnum - 1 {
        let defect = out.g_lesser_up[q]
            .add(&out.g_lesser_dn[q].adjoint())
            .max_abs();
        assert!(defect <= 1e-12, "offdiag {q}: {defect:.3e}");
    }
}
