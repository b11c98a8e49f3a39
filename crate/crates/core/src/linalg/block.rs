//! Block-tridiagonal storage and the three-matrix product strategies.

use super::cmat::{C64, CMat};
use super::LinalgError;

/// Compressed storage of one matrix block, kept in row- and column-compressed
/// form at the same time so products from either side avoid transposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseBlock {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_val: Vec<C64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_val: Vec<C64>,
}

impl SparseBlock {
    /// Compress all entries with |v| > 0 of a dense block.
    pub fn from_dense(m: &CMat) -> Self {
        let (nr, nc) = (m.nrows(), m.ncols());
        let mut row_ptr = Vec::with_capacity(nr + 1);
        let mut col_idx = Vec::new();
        let mut row_val = Vec::new();
        row_ptr.push(0);
        for i in 0..nr {
            for j in 0..nc {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(j);
                    row_val.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut col_ptr = Vec::with_capacity(nc + 1);
        let mut row_idx = Vec::new();
        let mut col_val = Vec::new();
        col_ptr.push(0);
        for j in 0..nc {
            for i in 0..nr {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    row_idx.push(i);
                    col_val.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows: nr,
            ncols: nc,
            row_ptr,
            col_idx,
            row_val,
            col_ptr,
            row_idx,
            col_val,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[p])] = self.row_val[p];
            }
        }
        m
    }

    /// `self * dense`, via the row-compressed encoding. Returns the product
    /// and the number of complex multiply-adds performed.
    pub fn mul_dense(&self, b: &CMat) -> (CMat, u64) {
        assert_eq!(self.ncols, b.nrows());
        let n = b.ncols();
        let mut out = CMat::zeros(self.nrows, n);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.row_val[p];
                let k = self.col_idx[p];
                for j in 0..n {
                    out[(i, j)] += a * b[(k, j)];
                }
            }
        }
        (out, (self.nnz() * n) as u64)
    }

    /// `dense * self`, via the column-compressed encoding.
    pub fn rmul_dense(&self, a: &CMat) -> (CMat, u64) {
        assert_eq!(a.ncols(), self.nrows);
        let m = a.nrows();
        let mut out = CMat::zeros(m, self.ncols);
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let v = self.col_val[p];
                let k = self.row_idx[p];
                for i in 0..m {
                    out[(i, j)] += a[(i, k)] * v;
                }
            }
        }
        (out, (self.nnz() * m) as u64)
    }
}

/// Strategy for evaluating `F · gR · E`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleProductStrategy {
    /// Two dense multiplications.
    DenseDense,
    /// Row-compressed F times gR, then a dense multiply by E.
    SparseLeftThenRight,
    /// Row-compressed F times gR, then the column-compressed E from the right.
    SparseBothSides,
}

/// One operand of the triple product: dense data plus its optional
/// compressed encoding.
#[derive(Clone, Copy)]
pub struct TripleOperand<'a> {
    pub dense: &'a CMat,
    pub sparse: Option<&'a SparseBlock>,
}

impl<'a> TripleOperand<'a> {
    pub fn dense_only(dense: &'a CMat) -> Self {
        Self {
            dense,
            sparse: None,
        }
    }
}

/// Evaluate `F · gR · E` under the requested strategy. Returns the product
/// and the complex multiply-add count actually spent.
pub fn triple_product(
    f: TripleOperand<'_>,
    g_r: &CMat,
    e: TripleOperand<'_>,
    strategy: TripleProductStrategy,
) -> Result<(CMat, u64), LinalgError> {
    if f.dense.ncols() != g_r.nrows() || g_r.ncols() != e.dense.nrows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "triple product {}x{} * {}x{} * {}x{}",
            f.dense.nrows(),
            f.dense.ncols(),
            g_r.nrows(),
            g_r.ncols(),
            e.dense.nrows(),
            e.dense.ncols()
        )));
    }
    match strategy {
        TripleProductStrategy::DenseDense => {
            let tmp = f.dense.mul(g_r);
            let out = tmp.mul(e.dense);
            let ops = (f.dense.nrows() * f.dense.ncols() * g_r.ncols()
                + tmp.nrows() * tmp.ncols() * e.dense.ncols()) as u64;
            Ok((out, ops))
        }
        TripleProductStrategy::SparseLeftThenRight => {
            let fs = f
                .sparse
                .ok_or(LinalgError::MissingSparseEncoding(strategy))?;
            let (tmp, ops1) = fs.mul_dense(g_r);
            let out = tmp.mul(e.dense);
            let ops2 = (tmp.nrows() * tmp.ncols() * e.dense.ncols()) as u64;
            Ok((out, ops1 + ops2))
        }
        TripleProductStrategy::SparseBothSides => {
            let fs = f
                .sparse
                .ok_or(LinalgError::MissingSparseEncoding(strategy))?;
            let es = e
                .sparse
                .ok_or(LinalgError::MissingSparseEncoding(strategy))?;
            let (tmp, ops1) = fs.mul_dense(g_r);
            let (out, ops2) = es.rmul_dense(&tmp);
            Ok((out, ops1 + ops2))
        }
    }
}

/// Block-tridiagonal complex operator with `bnum` equally sized diagonal
/// blocks. Off-diagonal blocks optionally carry compressed encodings.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTriMatrix {
    bnum: usize,
    blockdim: usize,
    diag: Vec<CMat>,
    upper: Vec<CMat>,
    lower: Vec<CMat>,
    upper_sparse: Vec<Option<SparseBlock>>,
    lower_sparse: Vec<Option<SparseBlock>>,
}

impl BlockTriMatrix {
    pub fn zeros(bnum: usize, blockdim: usize) -> Self {
        assert!(bnum >= 1);
        Self {
            bnum,
            blockdim,
            diag: vec![CMat::zeros(blockdim, blockdim); bnum],
            upper: vec![CMat::zeros(blockdim, blockdim); bnum.saturating_sub(1)],
            lower: vec![CMat::zeros(blockdim, blockdim); bnum.saturating_sub(1)],
            upper_sparse: vec![None; bnum.saturating_sub(1)],
            lower_sparse: vec![None; bnum.saturating_sub(1)],
        }
    }

    pub fn bnum(&self) -> usize {
        self.bnum
    }

    pub fn blockdim(&self) -> usize {
        self.blockdim
    }

    pub fn dim(&self) -> usize {
        self.bnum * self.blockdim
    }

    pub fn diag(&self, i: usize) -> &CMat {
        &self.diag[i]
    }

    /// Block (i, i+1).
    pub fn upper(&self, i: usize) -> &CMat {
        &self.upper[i]
    }

    /// Block (i+1, i).
    pub fn lower(&self, i: usize) -> &CMat {
        &self.lower[i]
    }

    pub fn diag_mut(&mut self, i: usize) -> &mut CMat {
        &mut self.diag[i]
    }

    pub fn upper_mut(&mut self, i: usize) -> &mut CMat {
        self.upper_sparse[i] = None;
        &mut self.upper[i]
    }

    pub fn lower_mut(&mut self, i: usize) -> &mut CMat {
        self.lower_sparse[i] = None;
        &mut self.lower[i]
    }

    pub fn upper_sparse(&self, i: usize) -> Option<&SparseBlock> {
        self.upper_sparse[i].as_ref()
    }

    pub fn lower_sparse(&self, i: usize) -> Option<&SparseBlock> {
        self.lower_sparse[i].as_ref()
    }

    /// Build the compressed encodings of every off-diagonal block.
    pub fn build_sparse(&mut self) {
        for i in 0..self.bnum.saturating_sub(1) {
            self.upper_sparse[i] = Some(SparseBlock::from_dense(&self.upper[i]));
            self.lower_sparse[i] = Some(SparseBlock::from_dense(&self.lower[i]));
        }
    }

    /// Max-norm Hermiticity defect over all blocks.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err = 0.0f64;
        for d in &self.diag {
            err = err.max(d.hermiticity_error());
        }
        for i in 0..self.bnum.saturating_sub(1) {
            err = err.max(self.upper[i].max_abs_diff(&self.lower[i].adjoint()));
        }
        err
    }

    /// Assemble the full dense matrix (test/oracle use).
    pub fn to_dense(&self) -> CMat {
        let d = self.blockdim;
        let mut m = CMat::zeros(self.dim(), self.dim());
        for (i, blk) in self.diag.iter().enumerate() {
            m.set_block(i * d, i * d, blk);
        }
        for i in 0..self.bnum.saturating_sub(1) {
            m.set_block(i * d, (i + 1) * d, &self.upper[i]);
            m.set_block((i + 1) * d, i * d, &self.lower[i]);
        }
        m
    }

    /// `self + other` blockwise.
    pub fn add(&self, other: &BlockTriMatrix) -> BlockTriMatrix {
        assert_eq!(self.bnum, other.bnum);
        assert_eq!(self.blockdim, other.blockdim);
        let mut out = self.clone();
        for i in 0..self.bnum {
            out.diag[i].add_assign(&other.diag[i]);
        }
        for i in 0..self.bnum.saturating_sub(1) {
            out.upper[i].add_assign(&other.upper[i]);
            out.lower[i].add_assign(&other.lower[i]);
            out.upper_sparse[i] = None;
            out.lower_sparse[i] = None;
        }
        out
    }

    /// Blockwise `alpha * self`.
    pub fn scale(&self, alpha: C64) -> BlockTriMatrix {
        let mut out = self.clone();
        for b in out.diag.iter_mut() {
            *b = b.scale(alpha);
        }
        for i in 0..self.bnum.saturating_sub(1) {
            out.upper[i] = out.upper[i].scale(alpha);
            out.lower[i] = out.lower[i].scale(alpha);
            out.upper_sparse[i] = None;
            out.lower_sparse[i] = None;
        }
        out
    }
}
