//! Lattice neighbourhoods, difference operators and GMRF precision matrices.
//!
//! Row `(i, j)` of the difference operator `D` holds the summed difference
//! to the in-lattice 4-neighbours, `Δ_ij = Σ_η w_kl (f_kl - f_ij)`, and the
//! prior precision is `Q = DᵀD`. Neighbourhoods are clipped at the lattice
//! boundary so every row of `D` sums to zero.

use crate::error::{invalid, Error, Result};
use crate::raster::SpotMask;

/// Background coupling weight `λ` of the heterogeneous prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeWeights {
    lambda: f64,
}

impl LatticeWeights {
    pub const DEFAULT_LAMBDA: f64 = 50.0;

    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be finite and > 1, got {lambda}")));
        }
        Ok(LatticeWeights { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for LatticeWeights {
    fn default() -> Self {
        LatticeWeights { lambda: Self::DEFAULT_LAMBDA }
    }
}

/// In-lattice members of `{(i-1,j), (i+1,j), (i,j-1), (i,j+1)}`, in that order.
pub fn neighbors(i: usize, j: usize, n1: usize, n2: usize) -> Result<Vec<(usize, usize)>> {
    if i >= n1 || j >= n2 {
        return Err(invalid(format!("pixel ({i}, {j}) outside {n1}x{n2} lattice")));
    }
    Ok(neighbors_unchecked(i, j, n1, n2).collect())
}

pub(crate) fn neighbors_unchecked(
    i: usize,
    j: usize,
    n1: usize,
    n2: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let up = (i > 0).then(|| (i - 1, j));
    let down = (i + 1 < n1).then(|| (i + 1, j));
    let left = (j > 0).then(|| (i, j - 1));
    let right = (j + 1 < n2).then(|| (i, j + 1));
    [up, down, left, right].into_iter().flatten()
}

/// Sparse rows of a square matrix, each row sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                out[r][c] = v;
            }
        }
        out
    }
}

/// Weighted difference operator. `weight(center, neighbour)` gives the
/// coefficient of `f_neighbour - f_center` in the center's row.
fn difference_operator_with(
    n1: usize,
    n2: usize,
    weight: impl Fn((usize, usize), (usize, usize)) -> f64,
) -> SparseRows {
    let n = n1 * n2;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n1 {
        for j in 0..n2 {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
            let mut diag = 0.0;
            for (k, l) in neighbors_unchecked(i, j, n1, n2) {
                let w = weight((i, j), (k, l));
                diag += w;
                row.push((k * n2 + l, w));
            }
            row.push((i * n2 + j, -diag));
            row.sort_by_key(|&(c, _)| c);
            rows.push(row);
        }
    }
    SparseRows { n, rows }
}

fn check_lattice(n1: usize, n2: usize) -> Result<()> {
    if n1 == 0 || n2 == 0 || n1 * n2 < 2 {
        return Err(invalid(format!("lattice {n1}x{n2} needs at least 2 pixels")));
    }
    Ok(())
}

/// Difference operator of the homogeneous (intrinsic) prior.
pub fn igmrf_difference_operator(n1: usize, n2: usize) -> Result<SparseRows> {
    check_lattice(n1, n2)?;
    Ok(difference_operator_with(n1, n2, |_, _| 1.0))
}

/// Difference operator of the heterogeneous prior. A spot center uses unit
/// weights; a background center weights background neighbours by `λ` and
/// spot neighbours by 1.
pub fn higmrf_difference_operator(
    n1: usize,
    n2: usize,
    mask: &SpotMask,
    weights: LatticeWeights,
) -> Result<SparseRows> {
    check_lattice(n1, n2)?;
    if mask.shape() != (n1, n2) {
        return Err(Error::DimensionMismatch {
            expected: (n1, n2),
            found: mask.shape(),
        });
    }
    let lambda = weights.lambda();
    Ok(difference_operator_with(n1, n2, |(i, j), (k, l)| {
        if mask.is_spot(i, j) || mask.is_spot(k, l) {
            1.0
        } else {
            lambda
        }
    }))
}

/// Symmetric sparse matrix in compressed-row form holding both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    n1: usize,
    n2: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl PrecisionMatrix {
    /// Forms `DᵀD`. Each product `D[k,a] D[k,b]` is added to both `(a,b)` and
    /// `(b,a)` in the same order, so the stored matrix is bit-exactly symmetric.
    fn gram(n1: usize, n2: usize, d: &SparseRows) -> Self {
        let n = d.order();
        let mut acc: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(13); n];
        for row in &d.rows {
            for &(a, wa) in row {
                let target = &mut acc[a];
                for &(b, wb) in row {
                    let p = wa * wb;
                    match target.iter_mut().find(|(c, _)| *c == b) {
                        Some((_, v)) => *v += p,
                        None => target.push((b, p)),
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in acc {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        PrecisionMatrix { n1, n2, row_ptr, cols, vals }
    }

    pub fn order(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn lattice(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored `(column, value)` pairs of row `r`, sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order()).map(|r| self.get(r, r)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order(), "vector length must match matrix order");
        (0..self.order())
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `xᵀ Q x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.order())
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Result<Vec<Vec<f64>>> {
        const DENSE_LIMIT: usize = 4096;
        let n = self.order();
        if n > DENSE_LIMIT {
            return Err(invalid(format!(
                "dense conversion limited to {DENSE_LIMIT} pixels, matrix has order {n}"
            )));
        }
        let mut out = vec![vec![0.0; n]; n];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.order()).all(|r| self.row(r).all(|(c, v)| self.get(c, r).to_bits() == v.to_bits()))
    }

    /// Same stored (row, column) pattern as `other`.
    pub fn same_pattern(&self, other: &PrecisionMatrix) -> bool {
        self.row_ptr == other.row_ptr && self.cols == other.cols
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Q + c I`. With `c > 0` this is a proper precision; the constant
    /// vector is no longer in the null space.
    pub fn shifted(&self, c: f64) -> PrecisionMatrix {
        let mut out = self.clone();
        for r in 0..self.order() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let k = self.cols[span.clone()].binary_search(&r).expect("diagonal is always stored");
            out.vals[span.start + k] += c;
        }
        out
    }
}

/// Precision `DᵀD` of the first-order intrinsic GMRF.
pub fn build_igmrf_precision(n1: usize, n2: usize) -> Result<PrecisionMatrix> {
    let d = igmrf_difference_operator(n1, n2)?;
    Ok(PrecisionMatrix::gram(n1, n2, &d))
}

/// Precision `DᵀD` of the heterogeneous intrinsic GMRF for the given mask.
pub fn build_higmrf_precision(
    n1: usize,
    n2: usize,
    mask: &SpotMask,
    weights: LatticeWeights,
) -> Result<PrecisionMatrix> {
    let d = higmrf_difference_operator(n1, n2, mask, weights)?;
    Ok(PrecisionMatrix::gram(n1, n2, &d))
}
