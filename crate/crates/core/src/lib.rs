//! Desk-scale dissipative quantum-transport solver.
//!
//! Solves the coupled electron/phonon Green's function equations of a toy
//! nanostructure with the recursive Green's function (RGF) algorithm, closes
//! the self-consistent loop with electron-phonon scattering self-energies
//! (SSE), and ships analytic flop/communication models for the distributed
//! decompositions of the same computation.
//!
//! The crate is organized around the pipeline:
//!
//! * [`device`] — synthetic chain/ribbon structures, their operators and the
//!   on-disk device format,
//! * [`boundary`] — open-boundary self-energies of the semi-infinite leads,
//! * [`rgf`] — per-point solver for retarded/lesser/greater blocks,
//! * [`solver`] — the Green's function phase over all spectral points plus
//!   current observables,
//! * [`sse`] — scattering self-energy kernels (naive, regrouped and
//!   mixed-precision variants),
//! * [`scf`] — the self-consistent driver,
//! * [`decomp`] — flop and communication cost models.

pub mod boundary;
pub mod decomp;
pub mod device;
pub mod ledger;
pub mod linalg;
pub mod rgf;
pub mod scf;
pub mod solver;
pub mod sse;

pub use ledger::FlopLedger;
pub use linalg::{BlockTriMatrix, CMat, C64};
