//! Operation-count bookkeeping shared by the numeric kernels.
//!
//! Counts are models of machine work, not timers: one complex multiply-add is
//! charged 8 real flops, a dense n×n multiply n³ multiply-adds, and a dense
//! LU inversion n³ multiply-adds (getrf + getri at 8n³ real flops total).
//! Kernels fill a local ledger and callers merge them, so counts are exact
//! and deterministic under any thread partition.

/// Per-kernel operation counters. All fields are monotone within a run:
/// kernels only ever add to them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlopLedger {
    /// Real flops of dense electron-RGF block operations.
    pub rgf_flops: u64,
    /// Real flops of dense phonon-RGF block operations.
    pub rgf_phonon_flops: u64,
    /// Real flops spent in boundary decimation solves.
    pub boundary_flops: u64,
    /// Sigma-side Norb×Norb multiply-adds in SSE, in real flops (8·Norb³ per
    /// product). This is the multiplication-dominated term of the SSE cost
    /// model.
    pub sse_sigma_flops: u64,
    /// Pi-side multiply-adds in SSE, in real flops.
    pub sse_pi_flops: u64,
    /// Half-precision multiply-adds issued on padded tiles (npad³ per tile).
    pub sse_half_flops: u64,
    /// Modeled bytes moved by gathers/scatters into batch layouts.
    pub bytes_moved: u64,
    /// Strided-batched multiply calls issued.
    pub batches_issued: u64,
    /// Boundary-condition tables built (cache accounting).
    pub boundary_builds: u64,
    /// Per-point system-matrix specializations built (cache accounting).
    pub spec_builds: u64,
    /// Surface-GF decimation iterations executed.
    pub decimation_iters: u64,
}

impl FlopLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold another ledger into this one.
    pub fn merge(&mut self, other: &FlopLedger) {
        self.rgf_flops += other.rgf_flops;
        self.rgf_phonon_flops += other.rgf_phonon_flops;
        self.boundary_flops += other.boundary_flops;
        self.sse_sigma_flops += other.sse_sigma_flops;
        self.sse_pi_flops += other.sse_pi_flops;
        self.sse_half_flops += other.sse_half_flops;
        self.bytes_moved += other.bytes_moved;
        self.batches_issued += other.batches_issued;
        self.boundary_builds += other.boundary_builds;
        self.spec_builds += other.spec_builds;
        self.decimation_iters += other.decimation_iters;
    }

    /// Total flops attributed to the Green's function phase.
    pub fn gf_flops(&self) -> u64 {
        self.rgf_flops + self.rgf_phonon_flops + self.boundary_flops
    }

    /// Total flops attributed to the SSE phase.
    pub fn sse_flops(&self) -> u64 {
        self.sse_sigma_flops + self.sse_pi_flops
    }
}

/// Useful-work fraction of a padded tile execution: an n×n product computed
/// on npad×npad tiles performs only (n/npad)³ useful multiply-adds.
pub fn padding_useful_ratio(n: usize, npad: usize) -> f64 {
    let r = n as f64 / npad as f64;
    r * r * r
}
