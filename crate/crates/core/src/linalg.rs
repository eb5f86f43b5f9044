//! Exact linear algebra over the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::graph::Coeff;

/// Sparse matrix with exact rational entries; no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseRationalMatrix {
    rows: usize,
    cols: usize,
    /// Column-major: `columns[j]` holds `(row, value)` sorted by row.
    columns: Vec<Vec<(usize, Coeff)>>,
}

impl SparseRationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseRationalMatrix { rows, cols, columns: vec![Vec::new(); cols] }
    }

    /// Builds from arbitrary triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, Coeff)>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "entry ({r},{c}) outside {rows}x{cols}");
            m.columns[c].push((r, v));
        }
        for col in &mut m.columns {
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Coeff)> = Vec::with_capacity(col.len());
            for (r, v) in col.drain(..) {
                match merged.last_mut() {
                    Some((lr, lv)) if *lr == r => *lv += v,
                    _ => merged.push((r, v)),
                }
            }
            merged.retain(|(_, v)| !v.is_zero());
            *col = merged;
        }
        m
    }

    pub fn from_columns(rows: usize, columns: Vec<Vec<(usize, Coeff)>>) -> Self {
        let cols = columns.len();
        let trip = columns
            .into_iter()
            .enumerate()
            .flat_map(|(c, col)| col.into_iter().map(move |(r, v)| (r, c, v)));
        Self::from_triplets(rows, cols, trip)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column(&self, j: usize) -> &[(usize, Coeff)] {
        &self.columns[j]
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &Coeff)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (*r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v.clone())))
    }

    pub fn mul_vec(&self, x: &[Coeff]) -> Vec<Coeff> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Coeff::zero(); self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            if x[j].is_zero() {
                continue;
            }
            for (r, v) in col {
                y[*r] += v * &x[j];
            }
        }
        y
    }

    /// Product `self * other`.
    pub fn mul(&self, other: &SparseRationalMatrix) -> SparseRationalMatrix {
        assert_eq!(self.cols, other.rows);
        let mut cols = Vec::with_capacity(other.cols);
        for j in 0..other.cols {
            let mut acc: std::collections::BTreeMap<usize, Coeff> = Default::default();
            for (k, b) in &other.columns[j] {
                for (r, a) in &self.columns[*k] {
                    *acc.entry(*r).or_insert_with(Coeff::zero) += a * b;
                }
            }
            cols.push(acc.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        }
        SparseRationalMatrix::from_columns(self.rows, cols)
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(Vec::is_empty)
    }

    /// Permuted copy: new row `i` is old row `row_perm[i]`, likewise columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let mut row_inv = vec![0; self.rows];
        for (new, &old) in row_perm.iter().enumerate() {
            row_inv[old] = new;
        }
        let mut col_inv = vec![0; self.cols];
        for (new, &old) in col_perm.iter().enumerate() {
            col_inv[old] = new;
        }
        Self::from_triplets(
            self.rows,
            self.cols,
            self.triplets().map(|(r, c, v)| (row_inv[r], col_inv[c], v.clone())),
        )
    }

    /// Rank by sparse elimination on the columns, sparsest first.
    pub fn rank(&self) -> usize {
        let mut echelon = Echelon::new();
        let mut order: Vec<usize> = (0..self.cols).collect();
        order.sort_by_key(|&j| (self.columns[j].len(), j));
        for j in order {
            echelon.insert(self.columns[j].clone());
        }
        echelon.rank()
    }

    /// Basis of the null space `{x : self * x = 0}`, each vector scaled to
    /// coprime integers.
    pub fn kernel_basis(&self) -> Vec<Vec<Coeff>> {
        // dense RREF of the rows
        let n = self.cols;
        let mut rows: Vec<Vec<Coeff>> = vec![vec![Coeff::zero(); n]; self.rows];
        for (r, c, v) in self.triplets() {
            rows[r][c] = v.clone();
        }
        let mut pivots: Vec<usize> = Vec::new();
        let mut rank = 0;
        for c in 0..n {
            let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
            rows.swap(rank, p);
            let inv = rows[rank][c].recip();
            for x in rows[rank].iter_mut() {
                *x *= &inv;
            }
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && !row[c].is_zero() {
                    let f = row[c].clone();
                    for (x, p) in row.iter_mut().zip(&pivot_row) {
                        if !p.is_zero() {
                            *x -= &f * p;
                        }
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Coeff::zero(); n];
                x[f] = Coeff::one();
                for (k, &p) in pivots.iter().enumerate() {
                    x[p] = -rows[k][f].clone();
                }
                to_primitive_integers(&x)
            })
            .collect()
    }
}

/// Incremental row-echelon form over sparse rational vectors.
#[derive(Debug, Default, Clone)]
pub struct Echelon {
    /// pivot index -> normalized vector with leading entry 1 at that index
    pivots: std::collections::BTreeMap<usize, Vec<(usize, Coeff)>>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduces `v` against the current pivots; returns the remainder.
    pub fn reduce(&self, mut v: Vec<(usize, Coeff)>) -> Vec<(usize, Coeff)> {
        loop {
            let Some(pos) = v.iter().position(|(i, _)| self.pivots.contains_key(i)) else {
                return v;
            };
            let (i, f) = v[pos].clone();
            let p = &self.pivots[&i];
            v = axpy(&v, p, &(-f));
        }
    }

    /// Inserts `v`; returns true when it was independent of the span so far.
    pub fn insert(&mut self, v: Vec<(usize, Coeff)>) -> bool {
        let r = self.reduce(v);
        if r.is_empty() {
            return false;
        }
        let (lead, lc) = r[0].clone();
        let inv = lc.recip();
        let r: Vec<(usize, Coeff)> = r.into_iter().map(|(i, x)| (i, x * &inv)).collect();
        self.pivots.insert(lead, r);
        true
    }

    pub fn contains(&self, v: Vec<(usize, Coeff)>) -> bool {
        self.reduce(v).is_empty()
    }
}

/// `a + f * b` for sparse vectors sorted by index.
fn axpy(a: &[(usize, Coeff)], b: &[(usize, Coeff)], f: &Coeff) -> Vec<(usize, Coeff)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, &b[j].1 * f));
            j += 1;
        } else {
            let s = &a[i].1 + &b[j].1 * f;
            if !s.is_zero() {
                out.push((a[i].0, s));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn dense_to_sparse(x: &[Coeff]) -> Vec<(usize, Coeff)> {
    x.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (i, v.clone())).collect()
}

/// Scales a rational vector to coprime integers with a positive first nonzero
/// entry.
pub fn to_primitive_integers(x: &[Coeff]) -> Vec<Coeff> {
    let mut lcm = BigInt::one();
    for v in x {
        lcm = lcm.lcm(v.denom());
    }
    let ints: Vec<BigInt> = x.iter().map(|v| (v * Coeff::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    if g.is_zero() {
        return x.to_vec();
    }
    let sign = ints.iter().find(|v| !v.is_zero()).map(|v| if v.is_negative() { -1 } else { 1 }).unwrap_or(1);
    ints.into_iter().map(|v| Coeff::from_integer(v / &g * sign)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Coeff {
        Coeff::from_integer(n.into())
    }

    #[test]
    fn rank_and_kernel() {
        // [[1,2,3],[2,4,6],[1,0,1]]
        let m = SparseRationalMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, q(1)), (0, 1, q(2)), (0, 2, q(3)), (1, 0, q(2)), (1, 1, q(4)), (1, 2, q(6)), (2, 0, q(1)), (2, 2, q(1))],
        );
        assert_eq!(m.rank(), 2);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![q(1), q(1), q(-1)]);
        assert!(m.mul_vec(&k[0]).iter().all(Zero::is_zero));
        assert_eq!(m.transpose().rank(), 2);
    }

    #[test]
    fn empty_shapes() {
        let m = SparseRationalMatrix::zeros(0, 4);
        assert_eq!(m.rank(), 0);
        assert_eq!(m.kernel_basis().len(), 4);
        let z = SparseRationalMatrix::zeros(3, 0);
        assert_eq!(z.rank(), 0);
        assert!(z.kernel_basis().is_empty());
    }

    #[test]
    fn duplicates_sum_and_cancel() {
        let m = SparseRationalMatrix::from_triplets(2, 2, vec![(0, 0, q(1)), (0, 0, q(-1)), (1, 1, q(2))]);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn primitive_scaling() {
        let x = vec!["-1/2".parse().unwrap(), q(0), "3/4".parse().unwrap()];
        assert_eq!(to_primitive_integers(&x), vec![q(2), q(0), q(-3)]);
    }
}
