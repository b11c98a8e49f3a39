//! Synthetic nanostructures: toy chain/ribbon lattices, their operators,
//! spectral grids, and the on-disk device format.

mod grid;
mod io;
mod material;

pub use grid::{GridParams, SpectralGrid};
pub use io::{load_device, save_device};
pub use material::MaterialOperators;

use crate::linalg::C64;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

pub const N3D: usize = 3;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("invalid partition: Na = {na} is not divisible by bnum = {bnum}")]
    InvalidPartition { na: usize, bnum: usize },
    #[error("neighbor count unsatisfiable: {0}")]
    NeighborCount(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("inconsistent dimensions: {0}")]
    DimensionMismatch(String),
    #[error("operator {operator} block {block} is not Hermitian (defect {defect:.3e})")]
    NonHermitian {
        operator: String,
        block: String,
        defect: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    /// Single file of atoms along the transport axis; two neighbors each.
    Chain,
    /// Four-row strip; four neighbors each (left, right, up, down).
    Ribbon,
}

impl LatticeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LatticeKind::Chain => "chain",
            LatticeKind::Ribbon => "ribbon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "chain" => Some(LatticeKind::Chain),
            "ribbon" => Some(LatticeKind::Ribbon),
            _ => None,
        }
    }
}

/// Atomic structure of the simulated device.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceStructure {
    pub kind: LatticeKind,
    pub na: usize,
    /// In-plane coordinates in nm, ordered so that consecutive index ranges
    /// of `na/bnum` atoms form the block-tridiagonal partition.
    pub positions: Vec<[f64; 2]>,
    /// Exactly `nb` entries per atom. Atoms at the transport edges pad the
    /// missing slots with their own index; those pairs carry zero coupling
    /// derivatives and drop out of every scattering sum.
    pub neighbors: Vec<Vec<usize>>,
    pub nb: usize,
    pub norb: usize,
    pub n3d: usize,
    pub bnum: usize,
    pub vds: f64,
    pub vgs: f64,
}

impl DeviceStructure {
    pub fn atoms_per_block(&self) -> usize {
        self.na / self.bnum
    }

    pub fn block_of(&self, atom: usize) -> usize {
        atom / self.atoms_per_block()
    }

    /// Slot of atom `b` inside `neighbors[a]`, if any.
    pub fn slot_of(&self, a: usize, b: usize) -> Option<usize> {
        self.neighbors[a].iter().position(|&x| x == b)
    }

    /// Check all structural invariants.
    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.na == 0 || self.bnum == 0 || self.na % self.bnum != 0 {
            return Err(DeviceError::InvalidPartition {
                na: self.na,
                bnum: self.bnum,
            });
        }
        if self.positions.len() != self.na || self.neighbors.len() != self.na {
            return Err(DeviceError::DimensionMismatch(format!(
                "positions/neighbors hold {}/{} atoms, Na = {}",
                self.positions.len(),
                self.neighbors.len(),
                self.na
            )));
        }
        for (a, nb) in self.neighbors.iter().enumerate() {
            if nb.len() != self.nb {
                return Err(DeviceError::NeighborCount(format!(
                    "atom {a} lists {} neighbors, expected {}",
                    nb.len(),
                    self.nb
                )));
            }
            for &b in nb {
                if b >= self.na {
                    return Err(DeviceError::DimensionMismatch(format!(
                        "atom {a} lists out-of-range neighbor {b}"
                    )));
                }
                if b != a && !self.neighbors[b].contains(&a) {
                    return Err(DeviceError::NeighborCount(format!(
                        "neighbor relation not symmetric for pair ({a}, {b})"
                    )));
                }
                let db = self.block_of(a).abs_diff(self.block_of(b));
                if db > 1 {
                    return Err(DeviceError::NeighborCount(format!(
                        "pair ({a}, {b}) spans blocks {} and {}",
                        self.block_of(a),
                        self.block_of(b)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generation parameters; `na`, `nb`, `norb`, `bnum`, `seed` pin the lattice,
/// the rest carry bias defaults.
#[derive(Clone, Copy, Debug)]
pub struct DeviceParams {
    pub kind: LatticeKind,
    pub na: usize,
    pub nb: usize,
    pub norb: usize,
    pub bnum: usize,
    pub seed: u64,
    pub vds: f64,
    pub vgs: f64,
}

impl DeviceParams {
    pub fn new(kind: LatticeKind, na: usize, nb: usize, norb: usize, bnum: usize, seed: u64) -> Self {
        Self {
            kind,
            na,
            nb,
            norb,
            bnum,
            seed,
            vds: 0.0,
            vgs: 0.0,
        }
    }
}

/// Structure, grid and operators of one simulated device.
#[derive(Clone, Debug, PartialEq)]
pub struct Device {
    pub structure: DeviceStructure,
    pub grid: SpectralGrid,
    pub ops: MaterialOperators,
    /// Seed used at generation time, kept for provenance in the file header.
    pub seed: u64,
}

/// Deterministic uniform draw in `[lo, hi)` from a seeded stream.
pub(crate) fn uniform(rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + u * (hi - lo)
}

fn build_lattice(params: &DeviceParams) -> Result<DeviceStructure, DeviceError> {
    let DeviceParams {
        kind,
        na,
        nb,
        norb,
        bnum,
        vds,
        vgs,
        ..
    } = *params;
    if na == 0 || bnum == 0 || na % bnum != 0 {
        return Err(DeviceError::InvalidPartition { na, bnum });
    }
    const A0: f64 = 0.25; // lattice spacing in nm
    let (positions, neighbor_pairs): (Vec<[f64; 2]>, Vec<(usize, usize)>) = match kind {
        LatticeKind::Chain => {
            if nb != 2 {
                return Err(DeviceError::NeighborCount(format!(
                    "chain lattice has coordination 2, requested Nb = {nb}"
                )));
            }
            let pos = (0..na).map(|i| [i as f64 * A0, 0.0]).collect();
            let pairs = (0..na - 1).map(|i| (i, i + 1)).collect();
            (pos, pairs)
        }
        LatticeKind::Ribbon => {
            if nb != 4 {
                return Err(DeviceError::NeighborCount(format!(
                    "ribbon lattice has coordination 4, requested Nb = {nb}"
                )));
            }
            let width = 4usize;
            if na % width != 0 {
                return Err(DeviceError::NeighborCount(format!(
                    "ribbon needs Na divisible by width {width}, got {na}"
                )));
            }
            let length = na / width;
            if length % bnum != 0 {
                return Err(DeviceError::InvalidPartition { na, bnum });
            }
            // column-major: atom = col*width + row, so blocks are column groups
            let mut pos = Vec::with_capacity(na);
            let mut pairs = Vec::new();
            for col in 0..length {
                for row in 0..width {
                    pos.push([col as f64 * A0, row as f64 * A0]);
                    let idx = col * width + row;
                    if row + 1 < width {
                        pairs.push((idx, idx + 1));
                    }
                    if col + 1 < length {
                        pairs.push((idx, idx + width));
                    }
                }
            }
            (pos, pairs)
        }
    };
    // neighbor slots, padded with the atom's own index
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::with_capacity(nb); na];
    for &(a, b) in &neighbor_pairs {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    for (a, list) in neighbors.iter_mut().enumerate() {
        if list.len() > nb {
            return Err(DeviceError::NeighborCount(format!(
                "atom {a} has {} physical neighbors, Nb = {nb}",
                list.len()
            )));
        }
        list.sort_unstable();
        while list.len() < nb {
            list.push(a);
        }
    }
    let structure = DeviceStructure {
        kind,
        na,
        positions,
        neighbors,
        nb,
        norb,
        n3d: N3D,
        bnum,
        vds,
        vgs,
    };
    structure.validate()?;
    Ok(structure)
}

/// Generate a device: lattice, operators and grid. Deterministic in the
/// parameter set; one block-cell of couplings is drawn and tiled over the
/// blocks, so the structure is homogeneous up to the bias potential.
pub fn generate_device(params: &DeviceParams, grid_params: &GridParams) -> Result<Device, DeviceError> {
    let structure = build_lattice(params)?;
    let grid = grid_params.build()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    let ops = material::generate_operators(&structure, &mut rng);
    Ok(Device {
        structure,
        grid,
        ops,
        seed: params.seed,
    })
}

pub(crate) fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
