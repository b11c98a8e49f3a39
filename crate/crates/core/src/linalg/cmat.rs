//! Dense complex matrices with the handful of operations the solver needs.

use super::LinalgError;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(nrows: usize, ncols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), nrows * ncols);
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// `self * other`.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(
            self.ncols, other.nrows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.nrows, self.ncols, other.nrows, other.ncols
        );
        let mut out = CMat::zeros(self.nrows, other.ncols);
        self.mul_acc_into(other, &mut out, C64::new(1.0, 0.0));
        out
    }

    /// `out += alpha * self * other`, fixed ikj loop order.
    pub fn mul_acc_into(&self, other: &CMat, out: &mut CMat, alpha: C64) {
        assert_eq!(self.ncols, other.nrows);
        assert_eq!(out.nrows, self.nrows);
        assert_eq!(out.ncols, other.ncols);
        let n = other.ncols;
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = alpha * self.data[i * self.ncols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += a * brow[j];
                }
            }
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut out = self.clone();
        for (v, o) in out.data.iter_mut().zip(&other.data) {
            *v -= o;
        }
        out
    }

    pub fn add_assign(&mut self, other: &CMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (v, o) in self.data.iter_mut().zip(&other.data) {
            *v += o;
        }
    }

    pub fn sub_assign(&mut self, other: &CMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (v, o) in self.data.iter_mut().zip(&other.data) {
            *v -= o;
        }
    }

    pub fn add_scaled_assign(&mut self, other: &CMat, s: C64) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (v, o) in self.data.iter_mut().zip(&other.data) {
            *v += s * o;
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.nrows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm of `self − self†`; exactly 0.0 for matrices built by
    /// symmetrization.
    pub fn hermiticity_error(&self) -> f64 {
        assert!(self.is_square());
        let mut err = 0.0f64;
        for i in 0..self.nrows {
            for j in i..self.ncols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                err = err.max(d);
            }
        }
        err
    }

    /// Extract the `rows × cols` sub-block with top-left corner `(r0, c0)`.
    pub fn sub_block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMat) {
        for i in 0..block.nrows {
            for j in 0..block.ncols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Inverse by LU with partial pivoting.
    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        assert!(self.is_square());
        let n = self.nrows;
        let mut lu = self.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut pk = k;
            let mut pmag = lu[k * n + k].norm();
            for r in k + 1..n {
                let m = lu[r * n + k].norm();
                if m > pmag {
                    pmag = m;
                    pk = r;
                }
            }
            if pmag == 0.0 {
                return Err(LinalgError::SingularPivot {
                    row: k,
                    magnitude: pmag,
                });
            }
            if pk != k {
                for c in 0..n {
                    lu.swap(k * n + c, pk * n + c);
                }
                piv.swap(k, pk);
            }
            let inv_pivot = C64::new(1.0, 0.0) / lu[k * n + k];
            for r in k + 1..n {
                let factor = lu[r * n + k] * inv_pivot;
                lu[r * n + k] = factor;
                for c in k + 1..n {
                    let sub = factor * lu[k * n + c];
                    lu[r * n + c] -= sub;
                }
            }
        }

        // Solve A X = I column by column through the permuted LU factors.
        let mut inv = CMat::zeros(n, n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for (i, &p) in piv.iter().enumerate() {
                col[i] = if p == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
            }
            // forward substitution (unit lower)
            for i in 0..n {
                for k in 0..i {
                    let sub = lu[i * n + k] * col[k];
                    col[i] -= sub;
                }
            }
            // back substitution
            for i in (0..n).rev() {
                for k in i + 1..n {
                    let sub = lu[i * n + k] * col[k];
                    col[i] -= sub;
                }
                col[i] /= lu[i * n + i];
            }
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi sweeps.
    /// The Hermitian part of `self` is used; callers guard symmetry.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square());
        let n = self.nrows;
        let mut a = CMat::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        let off = |m: &CMat| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += m[(i, j)].norm_sqr();
                    }
                }
            }
            s
        };
        for _sweep in 0..100 {
            if off(&a) < 1e-26 * (n as f64) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag < 1e-300 {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    // Unitary plane rotation zeroing (p,q): phase removes the
                    // complex angle, then a real Jacobi rotation applies.
                    let phase = apq / mag;
                    let tau = (aqq - app) / (2.0 * mag);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Columns: [p q] <- [p q] * [[c, s*e^{i arg}], [-s*e^{-i arg}, c]]-style
                    let sp = phase * s;
                    for i in 0..n {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip * c - aiq * sp.conj();
                        a[(i, q)] = aip * sp + aiq * c;
                    }
                    for j in 0..n {
                        let apj = a[(p, j)];
                        let aqj = a[(q, j)];
                        a[(p, j)] = apj * c - aqj * sp;
                        a[(q, j)] = apj * sp.conj() + aqj * c;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}
