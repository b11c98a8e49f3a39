//! Recursive Green's function solve of one spectral point.
//!
//! For a block-tridiagonal system matrix A (boundary and scattering terms
//! already folded in) the forward sweep builds left-connected blocks, the
//! backward sweep assembles the diagonal blocks of G^R and of
//! G^≷ = G^R·Σ^≷·G^A, plus the first off-diagonal blocks the observables
//! and phonon neighbor extraction need. Everything stays in full precision.
//!
//! Flop accounting: one n×n complex multiply-add unit is charged 8n³ real
//! flops; a dense inversion (getrf + getri) is charged one unit as well.

use crate::linalg::{BlockTriMatrix, CMat, LinalgError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RgfError {
    #[error("singular pivot in block {block} during forward pass (insufficient broadening?): {source}")]
    SingularBlock {
        block: usize,
        #[source]
        source: LinalgError,
    },
    #[error("system has {expected} diagonal blocks, self-energy list has {got}")]
    SigmaLength { expected: usize, got: usize },
}

/// Which first off-diagonal blocks to assemble besides the diagonals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffdiagMode {
    /// Diagonal blocks only.
    None,
    /// Lesser off-diagonals (bond currents).
    Lesser,
    /// Lesser and greater off-diagonals (phonon neighbor blocks).
    Both,
}

/// Selected blocks of the retarded/lesser/greater Green's functions.
#[derive(Debug)]
pub struct RgfOutput {
    pub g_r_diag: Vec<CMat>,
    pub g_lesser_diag: Vec<CMat>,
    pub g_greater_diag: Vec<CMat>,
    /// G^<(n, n+1), present for `OffdiagMode::Lesser` and `Both`.
    pub g_lesser_up: Vec<CMat>,
    /// G^<(n+1, n).
    pub g_lesser_dn: Vec<CMat>,
    /// G^>(n, n+1), present for `OffdiagMode::Both`.
    pub g_greater_up: Vec<CMat>,
    /// G^>(n+1, n).
    pub g_greater_dn: Vec<CMat>,
    /// Real flops of the dense block operations.
    pub flops: u64,
}

/// Solve one point: `a` is the full system matrix E·S − H − Σ^R (or the
/// phonon analogue), `sigma_lesser`/`sigma_greater` its block-diagonal
/// injection self-energies.
pub fn rgf_point(
    a: &BlockTriMatrix,
    sigma_lesser: &[CMat],
    sigma_greater: &[CMat],
    mode: OffdiagMode,
) -> Result<RgfOutput, RgfError> {
    let b = a.bnum();
    if sigma_lesser.len() != b || sigma_greater.len() != b {
        return Err(RgfError::SigmaLength {
            expected: b,
            got: sigma_lesser.len().min(sigma_greater.len()),
        });
    }
    let d = a.blockdim() as u64;
    let unit = 8 * d * d * d;
    let mut units = 0u64;

    let inv = |m: &CMat, block: usize| -> Result<CMat, RgfError> {
        m.inverse()
            .map_err(|source| RgfError::SingularBlock { block, source })
    };

    // forward sweep: left-connected retarded, lesser, greater
    let mut gl: Vec<CMat> = Vec::with_capacity(b);
    let mut gls: Vec<CMat> = Vec::with_capacity(b);
    let mut ggs: Vec<CMat> = Vec::with_capacity(b);
    for q in 0..b {
        let g = if q == 0 {
            units += 1;
            inv(a.diag(0), 0)?
        } else {
            let t = a.lower(q - 1).mul(&gl[q - 1]).mul(a.upper(q - 1));
            units += 3;
            inv(&a.diag(q).sub(&t), q)?
        };
        let g_adj = g.adjoint();
        {
            let mut build = |sigma: &CMat, prev: Option<&CMat>| -> CMat {
                let mut inj = sigma.clone();
                if let Some(p) = prev {
                    let al = a.lower(q - 1);
                    inj.add_assign(&al.mul(p).mul(&al.adjoint()));
                    units += 2;
                }
                units += 2;
                g.mul(&inj).mul(&g_adj)
            };
            let l = build(&sigma_lesser[q], if q > 0 { Some(&gls[q - 1]) } else { None });
            let gg = build(&sigma_greater[q], if q > 0 { Some(&ggs[q - 1]) } else { None });
            gls.push(l);
            ggs.push(gg);
        }
        gl.push(g);
    }

    // backward sweep
    let mut g_r: Vec<CMat> = gl.clone();
    let mut g_l: Vec<CMat> = gls.clone();
    let mut g_g: Vec<CMat> = ggs.clone();
    let noff = b.saturating_sub(1);
    let zero = CMat::zeros(0, 0);
    let with_lesser = mode != OffdiagMode::None;
    let with_greater = mode == OffdiagMode::Both;
    let mut l_up = vec![zero.clone(); if with_lesser { noff } else { 0 }];
    let mut l_dn = l_up.clone();
    let mut g_up = vec![zero.clone(); if with_greater { noff } else { 0 }];
    let mut g_dn = g_up.clone();
    let minus = crate::linalg::C64::new(-1.0, 0.0);

    for q in (0..noff).rev() {
        let au = a.upper(q);
        let al = a.lower(q);
        let p = gl[q].mul(au);
        let t = p.mul(&g_r[q + 1]);
        let ta = t.mul(al);
        let mut r = gl[q].clone();
        r.add_assign(&ta.mul(&gl[q]));
        units += 4;
        let q_mat = g_r[q + 1].mul(al);
        units += 1;
        let ta_adj = ta.adjoint();
        let p_adj = p.adjoint();
        let gl_adj = gl[q].adjoint();

        // lesser
        let v = p.mul(&g_l[q + 1]);
        let mut l = gls[q].clone();
        l.add_assign(&ta.mul(&gls[q]));
        l.add_assign(&gls[q].mul(&ta_adj));
        l.add_assign(&v.mul(&p_adj));
        units += 4;
        if with_lesser {
            let mut dn = q_mat.mul(&gls[q]);
            dn.add_assign(&g_l[q + 1].mul(&au.adjoint()).mul(&gl_adj));
            l_dn[q] = dn.scale(minus);
            let mut up = gls[q].mul(&q_mat.adjoint());
            up.add_assign(&v);
            l_up[q] = up.scale(minus);
            units += 4;
        }

        // greater
        let vg = p.mul(&g_g[q + 1]);
        let mut gg = ggs[q].clone();
        gg.add_assign(&ta.mul(&ggs[q]));
        gg.add_assign(&ggs[q].mul(&ta_adj));
        gg.add_assign(&vg.mul(&p_adj));
        units += 4;
        if with_greater {
            let mut dn = q_mat.mul(&ggs[q]);
            dn.add_assign(&g_g[q + 1].mul(&au.adjoint()).mul(&gl_adj));
            g_dn[q] = dn.scale(minus);
            let mut up = ggs[q].mul(&q_mat.adjoint());
            up.add_assign(&vg);
            g_up[q] = up.scale(minus);
            units += 4;
        }

        g_r[q] = r;
        g_l[q] = l;
        g_g[q] = gg;
    }

    Ok(RgfOutput {
        g_r_diag: g_r,
        g_lesser_diag: g_l,
        g_greater_diag: g_g,
        g_lesser_up: l_up,
        g_lesser_dn: l_dn,
        g_greater_up: g_up,
        g_greater_dn: g_dn,
        flops: units * unit,
    })
}

/// Dense-model flop count of one RGF point (the published closed form).
pub fn rgf_model_flops(bnum: usize, blockdim: usize) -> u64 {
    let d = blockdim as u64;
    8 * (26 * bnum as u64 - 25) * d * d * d
}
