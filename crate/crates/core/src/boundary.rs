//! Open-boundary self-energies of the semi-infinite source/drain leads.
//!
//! The leads are periodic continuations of the device edge blocks. Retarded
//! surface Green's functions come from decimation: each iteration folds two
//! lead cells into one, so the effective chain length doubles and the
//! coupling residual decays doubly exponentially. The boundary self-energy
//! ΣB = τ·g_s·τ† then folds the lead into the device edge block, and the
//! lesser/greater components follow from the lead occupancies.

use crate::device::Device;
use crate::ledger::FlopLedger;
use crate::linalg::{BlockTriMatrix, CMat, C64};
use rayon::prelude::*;
use thiserror::Error;

/// Imaginary broadening added to the energy (eV).
pub const ETA: f64 = 1e-6;
/// Decimation convergence threshold on the residual coupling norm.
pub const SURFACE_TOL: f64 = 1e-10;
/// Decimation iteration cap.
pub const SURFACE_MAX_ITER: usize = 200;
/// Lead temperature (K).
pub const TEMPERATURE: f64 = 300.0;
/// Boltzmann constant (eV/K).
pub const KB: f64 = 8.617333262e-5;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("surface decimation did not converge after {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("retarded solve needs Im(z) > 0, got {0:.3e}")]
    InvalidBroadening(f64),
    #[error("boundary solve failed at momentum index {ik}, point index {ip}: {source}")]
    PointFailure {
        ik: usize,
        ip: usize,
        #[source]
        source: Box<BoundaryError>,
    },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Fermi-Dirac occupancy.
pub fn fermi(e: f64, mu: f64, kt: f64) -> f64 {
    1.0 / (1.0 + ((e - mu) / kt).exp())
}

/// Bose-Einstein occupancy; defined for ω > 0.
pub fn bose(omega: f64, kt: f64) -> f64 {
    1.0 / ((omega / kt).exp() - 1.0)
}

/// Converged surface Green's function.
pub struct SurfaceResult {
    pub g: CMat,
    pub iterations: usize,
}

/// Retarded surface Green's function of a semi-infinite stack of identical
/// cells. `h01`/`s01` couple each cell to the next one deeper into the lead;
/// `z` carries the broadening (E + iη, or (ω + iη)² for phonons).
pub fn surface_gf(
    h00: &CMat,
    h01: &CMat,
    s00: &CMat,
    s01: &CMat,
    z: C64,
    tol: f64,
    max_iter: usize,
) -> Result<SurfaceResult, BoundaryError> {
    if z.im <= 0.0 {
        return Err(BoundaryError::InvalidBroadening(z.im));
    }
    let onsite = s00.scale(z).sub(h00);
    let mut alpha = s01.scale(z).sub(h01);
    let mut beta = s01.adjoint().scale(z).sub(&h01.adjoint());
    let mut eps_s = onsite.clone();
    let mut eps = onsite;
    let scale = eps_s.max_abs().max(1.0);
    let mut iterations = 0usize;
    loop {
        let residual = alpha.max_abs().max(beta.max_abs()) / scale;
        if residual < tol {
            break;
        }
        if iterations >= max_iter {
            return Err(BoundaryError::NonConvergence {
                iters: iterations,
                residual,
            });
        }
        let g = eps.inverse()?;
        let ga = g.mul(&alpha);
        let gb = g.mul(&beta);
        let agb = alpha.mul(&gb);
        let bga = beta.mul(&ga);
        eps_s.sub_assign(&agb);
        eps.sub_assign(&agb);
        eps.sub_assign(&bga);
        alpha = alpha.mul(&ga);
        beta = beta.mul(&gb);
        iterations += 1;
    }
    Ok(SurfaceResult {
        g: eps_s.inverse()?,
        iterations,
    })
}

/// Which coupled system a boundary table belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Carrier {
    Electron,
    Phonon,
}

/// Retarded boundary self-energies of one spectral point, on the edge
/// blocks of the device.
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub sigma_r_left: CMat,
    pub sigma_r_right: CMat,
}

impl BoundaryPoint {
    /// Lesser fill-in: σ^< = −f·(ΣB − ΣB†), with f the lead occupancy
    /// (Bose occupancy n for phonons).
    pub fn lesser(&self, f_left: f64, f_right: f64) -> (CMat, CMat) {
        let l = self
            .sigma_r_left
            .sub(&self.sigma_r_left.adjoint())
            .scale(C64::new(-f_left, 0.0));
        let r = self
            .sigma_r_right
            .sub(&self.sigma_r_right.adjoint())
            .scale(C64::new(-f_right, 0.0));
        (l, r)
    }

    /// Greater fill-in: σ^> = w·(ΣB − ΣB†), where w = 1 − f for electrons
    /// and w = n + 1 for phonons.
    pub fn greater(&self, w_left: f64, w_right: f64) -> (CMat, CMat) {
        let l = self
            .sigma_r_left
            .sub(&self.sigma_r_left.adjoint())
            .scale(C64::new(w_left, 0.0));
        let r = self
            .sigma_r_right
            .sub(&self.sigma_r_right.adjoint())
            .scale(C64::new(w_right, 0.0));
        (l, r)
    }

    /// Broadening Γ = i(ΣB − ΣB†) of one side; Hermitian and PSD for a
    /// causal self-energy.
    pub fn gamma(&self, left: bool) -> CMat {
        let s = if left {
            &self.sigma_r_left
        } else {
            &self.sigma_r_right
        };
        s.sub(&s.adjoint()).scale(C64::new(0.0, 1.0))
    }
}

/// Boundary self-energy table over all spectral points of one carrier.
pub struct BoundaryTable {
    pub carrier: Carrier,
    pub n_momentum: usize,
    pub n_inner: usize,
    pub points: Vec<BoundaryPoint>,
    pub mu_left: f64,
    pub mu_right: f64,
    pub kt: f64,
}

impl BoundaryTable {
    pub fn at(&self, ik: usize, ip: usize) -> &BoundaryPoint {
        &self.points[ik * self.n_inner + ip]
    }

    /// Occupancy weights of both leads at inner index `ip`: `(f, 1−f)` pairs
    /// for electrons, `(n, n+1)` for phonons, returned as
    /// ((lesser_left, lesser_right), (greater_left, greater_right)).
    pub fn occupancy_weights(&self, values: &[f64], ip: usize) -> ((f64, f64), (f64, f64)) {
        match self.carrier {
            Carrier::Electron => {
                let fl = fermi(values[ip], self.mu_left, self.kt);
                let fr = fermi(values[ip], self.mu_right, self.kt);
                ((fl, fr), (1.0 - fl, 1.0 - fr))
            }
            Carrier::Phonon => {
                let n = bose(values[ip], self.kt);
                ((n, n), (n + 1.0, n + 1.0))
            }
        }
    }
}

fn lead_blocks(op0: &BlockTriMatrix, s0: &BlockTriMatrix, left: bool) -> (CMat, CMat, CMat, CMat) {
    let b = op0.bnum();
    assert!(b >= 2, "lead construction needs bnum >= 2");
    if left {
        // deeper into the left lead = the (block1 -> block0) coupling pattern
        (
            op0.diag(0).clone(),
            op0.lower(0).clone(),
            s0.diag(0).clone(),
            s0.lower(0).clone(),
        )
    } else {
        (
            op0.diag(b - 1).clone(),
            op0.upper(b - 2).clone(),
            s0.diag(b - 1).clone(),
            s0.upper(b - 2).clone(),
        )
    }
}

fn point_self_energy(
    op: &BlockTriMatrix,
    s: &BlockTriMatrix,
    z: C64,
    left: bool,
    ledger: &mut FlopLedger,
) -> Result<CMat, BoundaryError> {
    let (h00, h_deep, s00, s_deep) = lead_blocks(op, s, left);
    let surf = surface_gf(&h00, &h_deep, &s00, &s_deep, z, SURFACE_TOL, SURFACE_MAX_ITER)?;
    ledger.decimation_iters += surf.iterations as u64;
    // dense-operation model: 7 block products per iteration plus the final
    // fold, 8·d³ real flops each
    let d = h00.nrows() as u64;
    ledger.boundary_flops += 8 * d * d * d * (7 * surf.iterations as u64 + 2);
    // coupling device -> lead is the adjoint pattern of the deeper coupling
    let tau_out = s_deep.adjoint().scale(z).sub(&h_deep.adjoint());
    let tau_in = s_deep.scale(z).sub(&h_deep);
    Ok(tau_out.mul(&surf.g).mul(&tau_in))
}

/// Compute the boundary self-energy table of one carrier over all grid
/// points. Per-point solves are independent and run on the current rayon
/// pool.
pub fn boundary_selfenergies(
    dev: &Device,
    carrier: Carrier,
    ledger: &mut FlopLedger,
) -> Result<BoundaryTable, BoundaryError> {
    let grid = &dev.grid;
    let (momenta, inner): (&[f64], Vec<f64>) = match carrier {
        Carrier::Electron => (&grid.kz, grid.energies.clone()),
        Carrier::Phonon => (&grid.qz, grid.frequencies.clone()),
    };
    let tasks: Vec<(usize, usize)> = (0..momenta.len())
        .flat_map(|ik| (0..inner.len()).map(move |ip| (ik, ip)))
        .collect();
    let results: Vec<Result<(BoundaryPoint, FlopLedger), BoundaryError>> = tasks
        .par_iter()
        .map(|&(ik, ip)| {
            let mut local = FlopLedger::new();
            let (op, s, z) = match carrier {
                Carrier::Electron => (
                    dev.ops.hamiltonian_at(grid.kz[ik]),
                    dev.ops.overlap_at(grid.kz[ik]),
                    C64::new(inner[ip], ETA),
                ),
                Carrier::Phonon => {
                    let zw = C64::new(inner[ip], ETA);
                    let phi = dev.ops.dynamical_at(grid.qz[ik]);
                    let eye = identity_overlap(&phi);
                    (phi, eye, zw * zw)
                }
            };
            let mk_err = |e: BoundaryError| BoundaryError::PointFailure {
                ik,
                ip,
                source: Box::new(e),
            };
            let left = point_self_energy(&op, &s, z, true, &mut local).map_err(mk_err)?;
            let right = point_self_energy(&op, &s, z, false, &mut local).map_err(mk_err)?;
            Ok((
                BoundaryPoint {
                    sigma_r_left: left,
                    sigma_r_right: right,
                },
                local,
            ))
        })
        .collect();
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        let (p, local) = r?;
        ledger.merge(&local);
        ledger.boundary_builds += 1;
        points.push(p);
    }
    let (mu_left, mu_right) = match carrier {
        Carrier::Electron => (0.0, -dev.structure.vds),
        Carrier::Phonon => (0.0, 0.0),
    };
    Ok(BoundaryTable {
        carrier,
        n_momentum: momenta.len(),
        n_inner: inner.len(),
        points,
        mu_left,
        mu_right,
        kt: KB * TEMPERATURE,
    })
}

fn identity_overlap(like: &BlockTriMatrix) -> BlockTriMatrix {
    let mut s = BlockTriMatrix::zeros(like.bnum(), like.blockdim());
    for i in 0..like.bnum() {
        *s.diag_mut(i) = CMat::eye(like.blockdim());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{generate_device, DeviceParams, GridParams, LatticeKind};

    #[test]
    fn decoupled_lead_solves_in_one_step() {
        let h00 = CMat::from_fn(3, 3, |i, j| {
            C64::new(if i == j { 0.4 + i as f64 } else { 0.1 }, 0.0)
        });
        let zero = CMat::zeros(3, 3);
        let eye = CMat::eye(3);
        let z = C64::new(0.7, 1e-6);
        let r = surface_gf(&h00, &zero, &eye, &zero, z, 1e-10, 200).unwrap();
        assert_eq!(r.iterations, 0);
        let want = eye.scale(z).sub(&h00).inverse().unwrap();
        assert!(r.g.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn scalar_chain_matches_fixed_point() {
        let t = 0.5;
        let h00 = CMat::zeros(1, 1);
        let mut h01 = CMat::zeros(1, 1);
        h01[(0, 0)] = C64::new(t, 0.0);
        let eye = CMat::eye(1);
        let zero = CMat::zeros(1, 1);
        // generic in-band and evanescent energies; E = 0 is the isolated-cell
        // resonance where the first decimation inversion is 1/(iη) and the
        // result carries the cancellation error of ~1e6-sized intermediates
        for e in [-1.4, -0.8, -0.3, 0.2, 0.45, 0.95] {
            let z = C64::new(e, 1e-6);
            let r = surface_gf(&h00, &h01, &eye, &zero, z, 1e-12, 400).unwrap();
            let g = r.g[(0, 0)];
            // g solves g = (z − t² g)⁻¹
            let residual = (g * (z - t * t * g) - C64::new(1.0, 0.0)).norm();
            assert!(residual <= 1e-10, "E = {e}: residual {residual:.3e}");
            // retarded branch: Im g <= 0
            assert!(g.im <= 1e-12);
        }
    }

    #[test]
    fn decimation_iterations_grow_logarithmically_with_tolerance() {
        let t = 0.6;
        let h00 = CMat::zeros(1, 1);
        let mut h01 = CMat::zeros(1, 1);
        h01[(0, 0)] = C64::new(t, 0.0);
        let eye = CMat::eye(1);
        let zero = CMat::zeros(1, 1);
        let z = C64::new(0.1, 1e-4);
        let iters: Vec<usize> = [1e-4, 1e-8, 1e-12]
            .iter()
            .map(|&tol| {
                surface_gf(&h00, &h01, &eye, &zero, z, tol, 400)
                    .unwrap()
                    .iterations
            })
            .collect();
        assert!(iters[0] <= iters[1] && iters[1] <= iters[2], "{iters:?}");
        // tolerance tightened by 1e8 should cost only a few extra doublings
        assert!(
            iters[2] <= iters[0] + 16,
            "expected logarithmic growth, got {iters:?}"
        );
    }

    #[test]
    fn random_hermitian_lead_is_causal() {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut u =
            |lo: f64, hi: f64| lo + (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * (hi - lo);
        let n = 8;
        let mut h00 = CMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = C64::new(u(-0.5, 0.5), if i == j { 0.0 } else { u(-0.5, 0.5) });
                h00[(i, j)] = v;
                h00[(j, i)] = v.conj();
            }
        }
        let h01 = CMat::from_fn(n, n, |_, _| C64::new(u(-0.4, 0.4), 0.0));
        let eye = CMat::eye(n);
        let zero = CMat::zeros(n, n);
        let r = surface_gf(&h00, &h01, &eye, &zero, C64::new(0.2, 1e-6), 1e-10, 400).unwrap();
        // spectral function of the surface GF must be PSD
        let spectral = r.g.sub(&r.g.adjoint()).scale(C64::new(0.0, 1.0));
        let eigs = spectral.hermitian_eigenvalues();
        assert!(eigs[0] >= -1e-10, "min eigenvalue {:.3e}", eigs[0]);
    }

    #[test]
    fn rejects_nonpositive_broadening() {
        let h = CMat::eye(2);
        let z = C64::new(0.1, 0.0);
        assert!(matches!(
            surface_gf(&h, &h, &h, &h, z, 1e-10, 100),
            Err(BoundaryError::InvalidBroadening(_))
        ));
    }

    fn test_device(vds: f64) -> Device {
        let mut params = DeviceParams::new(LatticeKind::Chain, 8, 2, 2, 4, 1);
        params.vds = vds;
        let grid = GridParams::new(3, 3, 16, 2, -2.5, 2.5);
        generate_device(&params, &grid).unwrap()
    }

    #[test]
    fn electron_table_broadening_is_psd_gridwide() {
        let dev = test_device(0.0);
        let mut ledger = FlopLedger::new();
        let table = boundary_selfenergies(&dev, Carrier::Electron, &mut ledger).unwrap();
        assert_eq!(table.points.len(), 3 * 16);
        assert_eq!(ledger.boundary_builds, 48);
        for p in &table.points {
            for left in [true, false] {
                let eigs = p.gamma(left).hermitian_eigenvalues();
                assert!(eigs[0] >= -1e-10, "gamma eigenvalue {:.3e}", eigs[0]);
            }
        }
    }

    #[test]
    fn phonon_table_broadening_is_psd_gridwide() {
        let dev = test_device(0.0);
        let mut ledger = FlopLedger::new();
        let table = boundary_selfenergies(&dev, Carrier::Phonon, &mut ledger).unwrap();
        for p in &table.points {
            for left in [true, false] {
                let eigs = p.gamma(left).hermitian_eigenvalues();
                assert!(eigs[0] >= -1e-10, "gamma eigenvalue {:.3e}", eigs[0]);
            }
        }
    }

    #[test]
    fn evanescent_energies_have_negligible_broadening() {
        let dev = test_device(0.0);
        // far below the band: |Im ΣB| small
        let h = dev.ops.hamiltonian_at(0.0);
        let s = dev.ops.overlap_at(0.0);
        let mut ledger = FlopLedger::new();
        let sig = point_self_energy(&h, &s, C64::new(-40.0, ETA), true, &mut ledger).unwrap();
        let gamma = sig.sub(&sig.adjoint()).scale(C64::new(0.0, 1.0));
        assert!(gamma.max_abs() <= 1e-8, "gamma = {:.3e}", gamma.max_abs());
    }

    #[test]
    fn equilibrium_occupancies_match() {
        let dev = test_device(0.0);
        let mut ledger = FlopLedger::new();
        let table = boundary_selfenergies(&dev, Carrier::Electron, &mut ledger).unwrap();
        for ip in 0..table.n_inner {
            let ((fl, fr), _) = table.occupancy_weights(&dev.grid.energies, ip);
            assert_eq!(fl, fr);
        }
    }
}
