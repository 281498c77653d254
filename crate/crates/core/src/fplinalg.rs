//! Exact linear algebra over the prime field F_p, plus the bridge between
//! GF(p^n) elements and their F_p matrix/vector representations.
//!
//! Multiplication by a fixed h ∈ GF(p^n) is an F_p-linear map; its n×n
//! matrix (in the basis s^{n-1}, …, s, 1, stacking digit vectors
//! high-to-low) is produced by [`rep_matrix`]. Symbol extension over m
//! channel uses replicates that map block-diagonally ([`extend`]), acting on
//! stacked per-use digit vectors ([`vector_columns`]).

use std::fmt;

use thiserror::Error;

use crate::gf::{FieldCtx, Gfe};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrices are over different prime fields ({0} vs {1})")]
    PrimeMismatch(u64, u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("linear system is underdetermined")]
    Underdetermined,
}

/// A dense matrix over F_p with entries in [0, p).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatFp {
    p: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl fmt::Display for MatFp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|i| {
                let entries: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
                format!("[{}]", entries.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

impl std::ops::Index<(usize, usize)> for MatFp {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.data[i * self.cols + j]
    }
}

impl MatFp {
    pub fn zeros(p: u64, rows: usize, cols: usize) -> MatFp {
        MatFp { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u64, n: usize) -> MatFp {
        let mut m = MatFp::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds from rows of entries (reduced mod p); all rows must have equal
    /// length.
    pub fn from_rows(p: u64, rows: &[Vec<u64>]) -> MatFp {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut m = MatFp::zeros(p, r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    /// Builds from columns given as F_p digit vectors.
    pub fn from_cols(p: u64, rows: usize, cols: &[Vec<u64>]) -> MatFp {
        let mut m = MatFp::zeros(p, rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, &x) in col.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.p;
    }

    pub fn col(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<u64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &MatFp) -> Result<MatFp, LinalgError> {
        if self.p != other.p {
            return Err(LinalgError::PrimeMismatch(self.p, other.p));
        }
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "hstack of {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = MatFp::zeros(self.p, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self[(i, j)]);
            }
            for j in 0..other.cols {
                m.set(i, self.cols + j, other[(i, j)]);
            }
        }
        Ok(m)
    }

    pub fn matmul(&self, other: &MatFp) -> Result<MatFp, LinalgError> {
        if self.p != other.p {
            return Err(LinalgError::PrimeMismatch(self.p, other.p));
        }
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = MatFp::zeros(self.p, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = (m[(i, j)] + a * other[(k, j)]) % self.p;
                    m.data[i * m.cols + j] = v;
                }
            }
        }
        Ok(m)
    }

    pub fn mat_vec(&self, v: &[u64]) -> Result<Vec<u64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0u64; self.rows];
        for i in 0..self.rows {
            let mut acc = 0u64;
            for j in 0..self.cols {
                acc = (acc + self[(i, j)] * (v[j] % self.p)) % self.p;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Row echelon form in place; returns (pivot columns, sign flips).
    fn eliminate(&mut self) -> (Vec<usize>, usize) {
        let p = self.p;
        let mut pivots = Vec::new();
        let mut swaps = 0usize;
        let mut r = 0usize;
        for c in 0..self.cols {
            let Some(pr) = (r..self.rows).find(|&i| self[(i, c)] != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    self.data.swap(r * self.cols + j, pr * self.cols + j);
                }
                swaps += 1;
            }
            let inv = inv_mod(p, self[(r, c)]);
            for j in c..self.cols {
                let v = self[(r, j)] * inv % p;
                self.data[r * self.cols + j] = v;
            }
            for i in 0..self.rows {
                if i != r && self[(i, c)] != 0 {
                    let f = self[(i, c)];
                    for j in c..self.cols {
                        let sub = f * self[(r, j)] % p;
                        let v = (self[(i, j)] + p - sub) % p;
                        self.data[i * self.cols + j] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == self.rows {
                break;
            }
        }
        (pivots, swaps)
    }

    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        let (pivots, _) = work.eliminate();
        pivots.len()
    }

    /// Determinant of a square matrix.
    pub fn det(&self) -> Result<u64, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NonSquare { rows: self.rows, cols: self.cols });
        }
        // Fraction-free forward elimination, tracking the product of pivots.
        let p = self.p;
        let mut work = self.clone();
        let mut det = 1u64;
        let mut sign_flips = 0usize;
        for c in 0..work.cols {
            let Some(pr) = (c..work.rows).find(|&i| work[(i, c)] != 0) else {
                return Ok(0);
            };
            if pr != c {
                for j in 0..work.cols {
                    work.data.swap(c * work.cols + j, pr * work.cols + j);
                }
                sign_flips += 1;
            }
            let pivot = work[(c, c)];
            det = det * pivot % p;
            let inv = inv_mod(p, pivot);
            for i in c + 1..work.rows {
                if work[(i, c)] != 0 {
                    let f = work[(i, c)] * inv % p;
                    for j in c..work.cols {
                        let sub = f * work[(c, j)] % p;
                        let v = (work[(i, j)] + p - sub) % p;
                        work.data[i * work.cols + j] = v;
                    }
                }
            }
        }
        if sign_flips % 2 == 1 {
            det = (p - det) % p;
        }
        Ok(det)
    }

    /// Solves A·x = y for the unique x. The columns of A must be linearly
    /// independent (Underdetermined otherwise); y must lie in their span
    /// (Inconsistent otherwise). A may be tall.
    pub fn solve(&self, y: &[u64]) -> Result<Vec<u64>, LinalgError> {
        if y.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "rhs length {} for {}x{} system",
                y.len(),
                self.rows,
                self.cols
            )));
        }
        let mut aug = MatFp::zeros(self.p, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self[(i, j)]);
            }
            aug.set(i, self.cols, y[i]);
        }
        let (pivots, _) = aug.eliminate();
        // A pivot in the RHS column means y is outside the column span.
        if pivots.contains(&self.cols) {
            return Err(LinalgError::Inconsistent);
        }
        if pivots.len() < self.cols {
            return Err(LinalgError::Underdetermined);
        }
        let mut x = vec![0u64; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug[(r, self.cols)];
        }
        Ok(x)
    }

    /// A basis of the null space {x : A·x = 0}, returned as the columns of a
    /// cols × nullity matrix (empty matrix when the kernel is trivial).
    pub fn kernel(&self) -> MatFp {
        let mut work = self.clone();
        let (pivots, _) = work.eliminate();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = MatFp::zeros(self.p, self.cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            basis.set(fc, k, 1);
            for (r, &pc) in pivots.iter().enumerate() {
                // x_pc = −(row r, col fc)·x_fc
                let v = work[(r, fc)];
                if v != 0 {
                    basis.set(pc, k, self.p - v);
                }
            }
        }
        basis
    }
}

fn inv_mod(p: u64, a: u64) -> u64 {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(p as i128) as u64
}

/// Incremental rank tracking: maintains a reduced echelon basis of inserted
/// columns so greedy searches can test candidates cheaply.
#[derive(Debug, Clone)]
pub struct RankTracker {
    p: u64,
    dim: usize,
    /// Echelon rows, each with its pivot position; kept pivot-normalized.
    basis: Vec<(usize, Vec<u64>)>,
}

impl RankTracker {
    pub fn new(p: u64, dim: usize) -> RankTracker {
        RankTracker { p, dim, basis: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Reduces a vector against the current basis; returns the residual.
    fn residual(&self, v: &[u64]) -> Vec<u64> {
        let p = self.p;
        let mut w: Vec<u64> = v.iter().map(|&x| x % p).collect();
        for (pivot, row) in &self.basis {
            let f = w[*pivot];
            if f != 0 {
                for (wi, ri) in w.iter_mut().zip(row.iter()) {
                    *wi = (*wi + p - f * ri % p) % p;
                }
            }
        }
        w
    }

    /// True iff `v` is independent of the inserted columns.
    pub fn is_independent(&self, v: &[u64]) -> bool {
        self.residual(v).iter().any(|&x| x != 0)
    }

    /// Inserts `v` if independent; returns whether the rank grew.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut w = self.residual(v);
        let Some(pivot) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = inv_mod(self.p, w[pivot]);
        for x in w.iter_mut() {
            *x = *x * inv % self.p;
        }
        self.basis.push((pivot, w));
        true
    }

    /// Tries to insert every column; true iff all were independent (the
    /// tracker keeps whatever prefix was inserted, so callers that need
    /// all-or-nothing semantics should clone first).
    pub fn insert_all(&mut self, cols: &[Vec<u64>]) -> bool {
        cols.iter().all(|c| self.insert(c))
    }

    /// Tests whether inserting all columns would extend the rank by
    /// `cols.len()`, without mutating the tracker.
    pub fn extends_by_all(&self, cols: &[Vec<u64>]) -> bool {
        let mut probe = self.clone();
        probe.insert_all(cols)
    }
}

// ---------------------------------------------------------------------------
// GF(p^n) ↔ F_p bridges.
// ---------------------------------------------------------------------------

/// Digit vector of an element, high-to-low: vec(x) = [x_{n-1}, …, x_1, x_0].
pub fn digit_vec(ctx: &FieldCtx, a: Gfe) -> Vec<u64> {
    let mut d = ctx.digits(a);
    d.reverse();
    d
}

/// The n×n matrix of multiplication by h: M·vec(x) = vec(h·x), with digit
/// vectors stacked high-to-low. Column j is vec(h · s^{n-1-j}).
pub fn rep_matrix(ctx: &FieldCtx, h: Gfe) -> MatFp {
    let n = ctx.n();
    let cols: Vec<Vec<u64>> = (0..n)
        .map(|j| {
            let basis = ctx.pow(ctx.s(), (n - 1 - j) as u64);
            digit_vec(ctx, ctx.mul(h, basis))
        })
        .collect();
    MatFp::from_cols(ctx.p(), n, &cols)
}

/// Block-diagonal symbol extension over m channel uses: m copies of `mat`
/// on the diagonal, acting on per-use digit vectors stacked use-major.
pub fn extend(mat: &MatFp, m: usize) -> MatFp {
    let (r, c) = (mat.rows(), mat.cols());
    let mut out = MatFp::zeros(mat.p(), r * m, c * m);
    for u in 0..m {
        for i in 0..r {
            for j in 0..c {
                out.set(u * r + i, u * c + j, mat[(i, j)]);
            }
        }
    }
    out
}

/// extend(rep_matrix(h), m): the mn×mn matrix of the extended channel
/// H = h·I_m expanded over F_p.
pub fn extend_element(ctx: &FieldCtx, h: Gfe, m: usize) -> MatFp {
    extend(&rep_matrix(ctx, h), m)
}

/// Columns from scalar elements: the n×k matrix whose column j is
/// vec(elems[j]).
pub fn element_columns(ctx: &FieldCtx, elems: &[Gfe]) -> MatFp {
    let cols: Vec<Vec<u64>> = elems.iter().map(|&a| digit_vec(ctx, a)).collect();
    MatFp::from_cols(ctx.p(), ctx.n(), &cols)
}

/// Columns from m-use vectors over GF(p^n): each vector of m entries
/// becomes one stacked mn-dimensional F_p column (use-major, digits
/// high-to-low within each use).
pub fn vector_columns(ctx: &FieldCtx, vectors: &[Vec<Gfe>]) -> MatFp {
    let m = vectors.first().map_or(0, |v| v.len());
    assert!(vectors.iter().all(|v| v.len() == m), "ragged symbol-extension vectors");
    let cols: Vec<Vec<u64>> = vectors
        .iter()
        .map(|v| {
            let mut col = Vec::with_capacity(m * ctx.n());
            for &entry in v {
                col.extend(digit_vec(ctx, entry));
            }
            col
        })
        .collect();
    MatFp::from_cols(ctx.p(), m * ctx.n(), &cols)
}

/// Stacks an m-use received vector into its mn-dimensional F_p digit form
/// (same layout as [`vector_columns`]).
pub fn stack_vector(ctx: &FieldCtx, v: &[Gfe]) -> Vec<u64> {
    let mut col = Vec::with_capacity(v.len() * ctx.n());
    for &entry in v {
        col.extend(digit_vec(ctx, entry));
    }
    col
}
