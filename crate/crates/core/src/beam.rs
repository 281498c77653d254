//! Beamforming matrices over GF(p^n): columns of per-use extension-field
//! entries that multiply prime-field information symbols.
//!
//! A precoder for one message is an m×d matrix (m channel uses, d streams)
//! whose columns are beam directions. Receivers see gain-scaled copies;
//! decodability is a rank condition on the stacked F_p expansion
//! ([`BeamMatrix::fp_columns`]).

use crate::fplinalg::{vector_columns, MatFp};
use crate::gf::{FieldCtx, GfError, Gfe};

/// An m-row matrix over GF(p^n), stored column-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeamMatrix {
    m: usize,
    cols: Vec<Vec<Gfe>>,
}

impl BeamMatrix {
    pub fn new(m: usize) -> BeamMatrix {
        BeamMatrix { m, cols: Vec::new() }
    }

    pub fn from_cols(m: usize, cols: Vec<Vec<Gfe>>) -> BeamMatrix {
        assert!(cols.iter().all(|c| c.len() == m), "beam column length mismatch");
        BeamMatrix { m, cols }
    }

    /// Single-use beams: each element is one scalar column.
    pub fn from_scalars(elems: &[Gfe]) -> BeamMatrix {
        BeamMatrix { m: 1, cols: elems.iter().map(|&e| vec![e]).collect() }
    }

    pub fn uses(&self) -> usize {
        self.m
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &[Gfe] {
        &self.cols[j]
    }

    pub fn cols(&self) -> &[Vec<Gfe>] {
        &self.cols
    }

    pub fn push_col(&mut self, col: Vec<Gfe>) {
        assert_eq!(col.len(), self.m, "beam column length mismatch");
        self.cols.push(col);
    }

    /// Entry-wise multiplication of every column by a gain.
    pub fn scaled(&self, ctx: &FieldCtx, gain: Gfe) -> BeamMatrix {
        BeamMatrix {
            m: self.m,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|&e| ctx.mul(gain, e)).collect())
                .collect(),
        }
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &BeamMatrix) -> BeamMatrix {
        assert_eq!(self.m, other.m, "beam use-count mismatch");
        let mut cols = self.cols.clone();
        cols.extend(other.cols.iter().cloned());
        BeamMatrix { m: self.m, cols }
    }

    /// The mn×d prime-field expansion (stacked digit vectors, use-major).
    pub fn fp_columns(&self, ctx: &FieldCtx) -> MatFp {
        if self.cols.is_empty() {
            return MatFp::zeros(ctx.p(), self.m * ctx.n(), 0);
        }
        vector_columns(ctx, &self.cols)
    }

    pub fn rank(&self, ctx: &FieldCtx) -> usize {
        self.fp_columns(ctx).rank()
    }

    /// Transmit contribution over m uses: Σ_k col_k · b_k with prime-field
    /// symbols b_k.
    pub fn transmit(&self, ctx: &FieldCtx, symbols: &[u64]) -> Vec<Gfe> {
        assert_eq!(symbols.len(), self.cols.len(), "one symbol per beam column");
        let mut out = vec![ctx.zero(); self.m];
        for (col, &b) in self.cols.iter().zip(symbols) {
            let scalar = ctx.scalar(b);
            for (o, &entry) in out.iter_mut().zip(col) {
                *o = ctx.add(*o, ctx.mul(scalar, entry));
            }
        }
        out
    }

    /// Label form for serialization: columns of p-ary labels.
    pub fn to_labels(&self) -> Vec<Vec<u64>> {
        self.cols.iter().map(|c| c.iter().map(|e| e.0).collect()).collect()
    }

    pub fn from_labels(ctx: &FieldCtx, m: usize, labels: &[Vec<u64>]) -> Result<BeamMatrix, GfError> {
        let mut cols = Vec::with_capacity(labels.len());
        for raw in labels {
            if raw.len() != m {
                return Err(GfError::BadElement(format!(
                    "beam column has {} entries, expected {m}",
                    raw.len()
                )));
            }
            let mut col = Vec::with_capacity(m);
            for &l in raw {
                col.push(ctx.element(l)?);
            }
            cols.push(col);
        }
        Ok(BeamMatrix { m, cols })
    }
}

/// Enumerates `m`-entry beam columns by ascending index: entry `r` of
/// candidate `index` is digit `r` of `index` written in base `q`, so the
/// scan covers all of `GF(q)^m` in a fixed order.
pub fn column_candidate(ctx: &FieldCtx, m: usize, index: u64) -> Vec<Gfe> {
    let q = ctx.size();
    let mut rest = index;
    (0..m)
        .map(|_| {
            let digit = rest % q;
            rest /= q;
            Gfe(digit)
        })
        .collect()
}

/// Multiplies every entry of a beam column by a fixed gain.
pub fn scale_col(ctx: &FieldCtx, g: Gfe, col: &[Gfe]) -> Vec<Gfe> {
    col.iter().map(|&e| ctx.mul(g, e)).collect()
}

/// Beams carrying one full GF(p^n) symbol in a single use: 1, s, …, s^{n-1}.
pub fn full_symbol_beams(ctx: &FieldCtx) -> BeamMatrix {
    let cols: Vec<Gfe> = (0..ctx.n()).map(|i| ctx.pow(ctx.s(), i as u64)).collect();
    BeamMatrix::from_scalars(&cols)
}

/// Whether two beam matrices span the same F_p subspace of stacked columns.
pub fn spans_equal(ctx: &FieldCtx, a: &BeamMatrix, b: &BeamMatrix) -> bool {
    let (ra, rb) = (a.rank(ctx), b.rank(ctx));
    ra == rb && a.hstack(b).rank(ctx) == ra
}
