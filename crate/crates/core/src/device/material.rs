//! Toy material operators: nearest-neighbor tight-binding Hamiltonian,
//! overlap, spring-model dynamical matrix and Hamiltonian derivatives.
//!
//! All drawn couplings are real, so H(−kz) = H(kz)ᵀ and Φ(−qz) = Φ(qz)ᵀ
//! (time-reversal symmetry); complex arithmetic enters only through the
//! momentum phases, broadenings and self-energies.

use super::{c64, uniform, DeviceStructure, N3D};
use crate::linalg::{BlockTriMatrix, CMat, C64};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const HOP_MIN: f64 = 0.5; // eV
const HOP_MAX: f64 = 2.0;
const HOP_MIX: f64 = 0.25;
const ONSITE_SPREAD: f64 = 0.3;
const ONSITE_MIX: f64 = 0.1;
const ZHOP_FACTOR: f64 = 0.25;
const OVERLAP: f64 = 0.02;
const SPRING_SCALE: f64 = 1.0e-3; // eV², sets the phonon bandwidth
const SPRING_ISO: f64 = 0.2;
const DH_SCALE: f64 = 0.15; // eV per unit displacement

/// Per-pair, per-direction Hamiltonian derivative blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct DhTensor {
    na: usize,
    nb: usize,
    norb: usize,
    mats: Vec<CMat>, // [a][slot][dir]
}

impl DhTensor {
    pub(super) fn zeros(na: usize, nb: usize, norb: usize) -> Self {
        Self {
            na,
            nb,
            norb,
            mats: vec![CMat::zeros(norb, norb); na * nb * N3D],
        }
    }

    #[inline]
    fn idx(&self, a: usize, slot: usize, dir: usize) -> usize {
        (a * self.nb + slot) * N3D + dir
    }

    /// ∇_dir H for the ordered pair (a, neighbors[a][slot]).
    pub fn mat(&self, a: usize, slot: usize, dir: usize) -> &CMat {
        &self.mats[self.idx(a, slot, dir)]
    }

    pub fn set(&mut self, a: usize, slot: usize, dir: usize, m: CMat) {
        let i = self.idx(a, slot, dir);
        self.mats[i] = m;
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    /// Largest |entry| over the whole tensor.
    pub fn max_abs(&self) -> f64 {
        self.mats.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }

    pub fn flat_values(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.mats.len() * self.norb * self.norb);
        for m in &self.mats {
            v.extend_from_slice(m.data());
        }
        v
    }
}

/// kz/qz-dependent operators of the device. The periodic direction enters as
/// X(kz) = X0 + X1·e^{ikz} + X1†·e^{−ikz}, where X1 couples each atom to its
/// own periodic image and therefore never widens the block-tridiagonal
/// profile.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialOperators {
    pub norb: usize,
    pub h0: BlockTriMatrix,
    pub h1: BlockTriMatrix,
    pub s0: BlockTriMatrix,
    pub s1: BlockTriMatrix,
    pub phi0: BlockTriMatrix,
    pub phi1: BlockTriMatrix,
    pub dh: DhTensor,
}

fn phase_combine(x0: &BlockTriMatrix, x1: &BlockTriMatrix, k: f64) -> BlockTriMatrix {
    let e_plus = c64(k.cos(), k.sin());
    let e_minus = e_plus.conj();
    let bnum = x0.bnum();
    let mut out = x0.clone();
    for i in 0..bnum {
        let d = out.diag_mut(i);
        let b = x1.diag(i);
        let badj = b.adjoint();
        d.add_scaled_assign(b, e_plus);
        d.add_scaled_assign(&badj, e_minus);
    }
    for i in 0..bnum.saturating_sub(1) {
        let u1 = x1.upper(i).clone();
        let l1 = x1.lower(i).clone();
        out.upper_mut(i).add_scaled_assign(&u1, e_plus);
        out.upper_mut(i).add_scaled_assign(&l1.adjoint(), e_minus);
        out.lower_mut(i).add_scaled_assign(&l1, e_plus);
        out.lower_mut(i).add_scaled_assign(&u1.adjoint(), e_minus);
    }
    out
}

impl MaterialOperators {
    pub fn hamiltonian_at(&self, kz: f64) -> BlockTriMatrix {
        phase_combine(&self.h0, &self.h1, kz)
    }

    pub fn overlap_at(&self, kz: f64) -> BlockTriMatrix {
        phase_combine(&self.s0, &self.s1, kz)
    }

    pub fn dynamical_at(&self, qz: f64) -> BlockTriMatrix {
        phase_combine(&self.phi0, &self.phi1, qz)
    }

    /// Max-norm residual of the blockwise acoustic sum rule Σ_b Φ_ab = 0,
    /// evaluated at qz = 0 where translation invariance must hold exactly.
    pub fn acoustic_sum_rule_residual(&self, structure: &DeviceStructure) -> f64 {
        let phi = self.dynamical_at(0.0).to_dense();
        let na = structure.na;
        let mut worst = 0.0f64;
        for a in 0..na {
            let mut sum = CMat::zeros(N3D, N3D);
            for b in 0..na {
                sum.add_assign(&phi.sub_block(a * N3D, b * N3D, N3D, N3D));
            }
            worst = worst.max(sum.max_abs());
        }
        worst
    }

    /// All operator-level invariants (used by the loader).
    pub fn validate(&self, structure: &DeviceStructure) -> Result<(), super::DeviceError> {
        let checks: [(&str, &BlockTriMatrix); 3] =
            [("H0", &self.h0), ("S0", &self.s0), ("Phi0", &self.phi0)];
        for (name, op) in checks {
            for i in 0..op.bnum() {
                if op.diag(i).hermiticity_error() != 0.0 {
                    return Err(super::DeviceError::NonHermitian {
                        operator: name.into(),
                        block: format!("diag[{i}]"),
                        defect: op.diag(i).hermiticity_error(),
                    });
                }
            }
            for i in 0..op.bnum().saturating_sub(1) {
                let defect = op.upper(i).max_abs_diff(&op.lower(i).adjoint());
                if defect != 0.0 {
                    return Err(super::DeviceError::NonHermitian {
                        operator: name.into(),
                        block: format!("offdiag[{i}]"),
                        defect,
                    });
                }
            }
        }
        // derivative pairs: ∇H_ba = (∇H_ab)†
        for a in 0..structure.na {
            for (slot, &b) in structure.neighbors[a].iter().enumerate() {
                if b == a {
                    continue;
                }
                let rev = structure.slot_of(b, a).ok_or_else(|| {
                    super::DeviceError::DimensionMismatch(format!(
                        "neighbor tables miss reverse pair ({b}, {a})"
                    ))
                })?;
                for dir in 0..N3D {
                    let fwd = self.dh.mat(a, slot, dir);
                    let bwd = self.dh.mat(b, rev, dir);
                    let defect = bwd.max_abs_diff(&fwd.adjoint());
                    if defect != 0.0 {
                        return Err(super::DeviceError::NonHermitian {
                            operator: "dH".into(),
                            block: format!("pair ({a}, {b}) dir {dir}"),
                            defect,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Canonical in-cell key of a bond, used to tile one drawn parameter set
/// over all blocks.
fn bond_key(a: usize, b: usize, apb: usize) -> (usize, usize) {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let cell = lo / apb;
    (lo - cell * apb, hi - cell * apb)
}

struct BondParams {
    hop: CMat,    // Norb×Norb, real
    overlap: f64, // scalar times the orbital identity
    spring: f64,  // eV²
    dh: CMat,     // Norb×Norb, real
}

struct AtomParams {
    onsite: CMat, // real symmetric Norb×Norb
    z_hop: Vec<f64>,
    z_spring: f64,
}

fn real_mat(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| c64(uniform(rng, lo, hi), 0.0))
}

fn symmetric_mat(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = c64(uniform(rng, -spread, spread), 0.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub(super) fn generate_operators(structure: &DeviceStructure, rng: &mut ChaCha8Rng) -> MaterialOperators {
    let na = structure.na;
    let norb = structure.norb;
    let apb = structure.atoms_per_block();
    let bnum = structure.bnum;

    // physical bonds, each once with a < b
    let mut bonds: Vec<(usize, usize)> = Vec::new();
    for a in 0..na {
        for &b in &structure.neighbors[a] {
            if b > a {
                bonds.push((a, b));
            }
        }
    }
    bonds.sort_unstable();
    bonds.dedup();

    // one parameter set per in-cell bond key, drawn in key order
    let mut keys: Vec<(usize, usize)> = bonds
        .iter()
        .map(|&(a, b)| bond_key(a, b, apb))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let mut bond_params: BTreeMap<(usize, usize), BondParams> = BTreeMap::new();
    for key in keys {
        let magnitude = uniform(rng, HOP_MIN, HOP_MAX);
        let mut hop = real_mat(rng, norb, -HOP_MIX, HOP_MIX);
        for o in 0..norb {
            hop[(o, o)] = c64(-magnitude, 0.0);
        }
        bond_params.insert(
            key,
            BondParams {
                hop,
                overlap: uniform(rng, -OVERLAP, OVERLAP),
                spring: uniform(rng, HOP_MIN, HOP_MAX) * SPRING_SCALE,
                dh: real_mat(rng, norb, -DH_SCALE, DH_SCALE),
            },
        );
    }

    let atom_params: Vec<AtomParams> = (0..apb)
        .map(|_| {
            let mut onsite = symmetric_mat(rng, norb, ONSITE_MIX);
            for o in 0..norb {
                onsite[(o, o)] = c64(uniform(rng, -ONSITE_SPREAD, ONSITE_SPREAD), 0.0);
            }
            AtomParams {
                onsite,
                z_hop: (0..norb)
                    .map(|_| uniform(rng, HOP_MIN, HOP_MAX) * ZHOP_FACTOR)
                    .collect(),
                z_spring: uniform(rng, HOP_MIN, HOP_MAX) * SPRING_SCALE,
            }
        })
        .collect();

    let dim_e = apb * norb;
    let dim_ph = apb * N3D;
    let mut h0 = BlockTriMatrix::zeros(bnum, dim_e);
    let mut h1 = BlockTriMatrix::zeros(bnum, dim_e);
    let mut s0 = BlockTriMatrix::zeros(bnum, dim_e);
    let s1 = BlockTriMatrix::zeros(bnum, dim_e);
    let mut phi0 = BlockTriMatrix::zeros(bnum, dim_ph);
    let mut phi1 = BlockTriMatrix::zeros(bnum, dim_ph);
    let mut dh = DhTensor::zeros(na, structure.nb, norb);

    // linear potential drop over the device length
    let xs: Vec<f64> = structure.positions.iter().map(|p| p[0]).collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let span = (xmax - xmin).max(1e-12);
    let potential = |a: usize| -structure.vds * (xs[a] - xmin) / span;

    // onsite terms, z-direction couplings, identity overlap
    for a in 0..na {
        let blk = structure.block_of(a);
        let loc = a - blk * apb;
        let p = &atom_params[loc];
        let r0 = loc * norb;
        for o1 in 0..norb {
            for o2 in 0..norb {
                h0.diag_mut(blk)[(r0 + o1, r0 + o2)] = p.onsite[(o1, o2)];
            }
        }
        for o in 0..norb {
            h0.diag_mut(blk)[(r0 + o, r0 + o)] += c64(potential(a), 0.0);
            h1.diag_mut(blk)[(r0 + o, r0 + o)] = c64(p.z_hop[o], 0.0);
            s0.diag_mut(blk)[(r0 + o, r0 + o)] = c64(1.0, 0.0);
        }
        let rp = loc * N3D;
        let kz = p.z_spring;
        for i in 0..N3D {
            for j in 0..N3D {
                let zz = if i == 2 && j == 2 { 1.0 } else { 0.0 };
                let iso = if i == j { SPRING_ISO } else { 0.0 };
                phi1.diag_mut(blk)[(rp + i, rp + j)] = c64(-kz * (zz + iso), 0.0);
            }
        }
    }

    // bond terms
    let mut phi_row_sum: Vec<CMat> = vec![CMat::zeros(N3D, N3D); na];
    for &(a, b) in &bonds {
        let p = &bond_params[&bond_key(a, b, apb)];
        let (ba, bb) = (structure.block_of(a), structure.block_of(b));
        let (la, lb) = (a - ba * apb, b - bb * apb);
        let dx = structure.positions[b][0] - structure.positions[a][0];
        let dy = structure.positions[b][1] - structure.positions[a][1];
        let norm = (dx * dx + dy * dy).sqrt();
        let dir3 = [dx / norm, dy / norm, 0.0];

        // electron hopping and overlap: place T at (a, b) and T† at (b, a)
        let mut place = |m: &mut BlockTriMatrix, value: &CMat| {
            let (ra, rb) = (la * norb, lb * norb);
            for o1 in 0..norb {
                for o2 in 0..norb {
                    let t = value[(o1, o2)];
                    if ba == bb {
                        m.diag_mut(ba)[(ra + o1, rb + o2)] = t;
                        m.diag_mut(ba)[(rb + o2, ra + o1)] = t.conj();
                    } else {
                        // a < b guarantees ba + 1 == bb here
                        m.upper_mut(ba)[(ra + o1, rb + o2)] = t;
                        m.lower_mut(ba)[(rb + o2, ra + o1)] = t.conj();
                    }
                }
            }
        };
        place(&mut h0, &p.hop);
        let s_block = CMat::from_fn(norb, norb, |o1, o2| {
            if o1 == o2 {
                c64(p.overlap, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        place(&mut s0, &s_block);

        // spring block K_ab = -k (d d^T + iso I); symmetric real
        let spring = CMat::from_fn(N3D, N3D, |i, j| {
            let iso = if i == j { SPRING_ISO } else { 0.0 };
            c64(-p.spring * (dir3[i] * dir3[j] + iso), 0.0)
        });
        let (ra, rb) = (la * N3D, lb * N3D);
        for i in 0..N3D {
            for j in 0..N3D {
                let v = spring[(i, j)];
                if ba == bb {
                    phi0.diag_mut(ba)[(ra + i, rb + j)] = v;
                    phi0.diag_mut(ba)[(rb + j, ra + i)] = v.conj();
                } else {
                    phi0.upper_mut(ba)[(ra + i, rb + j)] = v;
                    phi0.lower_mut(ba)[(rb + j, ra + i)] = v.conj();
                }
            }
        }
        phi_row_sum[a].add_assign(&spring);
        phi_row_sum[b].add_assign(&spring.transpose());

        // Hamiltonian derivatives: ∇_i H_ab = d_i · R, ∇_i H_ba = d_i · Rᵀ
        let slot_ab = structure.slot_of(a, b).unwrap();
        let slot_ba = structure.slot_of(b, a).unwrap();
        for dir in 0..N3D {
            dh.set(a, slot_ab, dir, p.dh.scale(c64(dir3[dir], 0.0)));
            dh.set(b, slot_ba, dir, p.dh.transpose().scale(c64(dir3[dir], 0.0)));
        }
    }

    // acoustic sum rule: diagonal 3x3 blocks absorb the negated row sums,
    // including both z-image springs
    for a in 0..na {
        let blk = structure.block_of(a);
        let loc = a - blk * apb;
        let rp = loc * N3D;
        let z1 = phi1.diag(blk).sub_block(rp, rp, N3D, N3D);
        let z1t = z1.adjoint();
        for i in 0..N3D {
            for j in 0..N3D {
                phi0.diag_mut(blk)[(rp + i, rp + j)] =
                    -(phi_row_sum[a][(i, j)] + z1[(i, j)] + z1t[(i, j)]);
            }
        }
    }

    MaterialOperators {
        norb,
        h0,
        h1,
        s0,
        s1,
        phi0,
        phi1,
        dh,
    }
}
