//! Bases of `D^{k,l}`, coboundary matrices and Betti numbers.

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::differential::{delta_with, SignRule};
use crate::graph::{canonicalize, Coeff, Graph, GraphVector, HalfEdgeOrder, Label};
use crate::linalg::{dense_to_sparse, Echelon, SparseRationalMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    #[error("H^{{{0},{1}}} is zero")]
    NoCohomology(i64, i64),
    #[error("delta of basis graph {0} has term {1} outside the target basis")]
    TermOutsideBasis(String, String),
}

/// Canonical basis of `D^{k,l}`, sorted by encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisTable {
    pub k: i64,
    pub l: i64,
    graphs: Vec<Graph>,
    index: HashMap<Graph, usize>,
}

impl BasisTable {
    pub fn from_graphs(k: i64, l: i64, mut graphs: Vec<Graph>) -> Self {
        graphs.sort();
        graphs.dedup();
        let index = graphs.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        BasisTable { k, l, graphs, index }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn index_of(&self, g: &Graph) -> Option<usize> {
        self.index.get(g).copied()
    }

    /// Coordinates of a vector supported on this basis.
    pub fn coordinates(&self, v: &GraphVector) -> Option<Vec<Coeff>> {
        let mut x = vec![Coeff::zero(); self.len()];
        for (g, c) in v.iter() {
            x[self.index_of(g)?] = c.clone();
        }
        Some(x)
    }

    pub fn vector(&self, x: &[Coeff]) -> GraphVector {
        let mut v = GraphVector::new();
        for (g, c) in self.graphs.iter().zip(x) {
            v.add_graph(g, c);
        }
        v
    }
}

/// Vertex counts `(vi, vf, e)` compatible with grading `(k, l)`.
pub fn shapes(k: i64, l: i64) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    if k < 0 || l < 0 {
        return out;
    }
    let mut vf = 0i64;
    loop {
        let vi = 2 * k - vf - l;
        let e = k + vf;
        if vi < 0 {
            break;
        }
        if vi == 0 {
            // only the empty graph is connected without interval vertices
            if vf == 0 && e == 0 {
                out.push((0, 0, 0));
            }
        } else {
            out.push((vi as usize, vf as usize, e as usize));
        }
        vf += 1;
    }
    out
}

#[derive(Clone, Copy)]
enum Slot {
    Edge(Label, Label),
    Loop(Label),
}

struct Gen {
    vi: usize,
    m: usize,
    e: usize,
    excess_budget: usize,
    slots: Vec<Slot>,
}

struct State {
    ends: Vec<usize>,
    chosen: Vec<Slot>,
    excess: usize,
}

impl Gen {
    fn min_ends(&self, v: usize) -> usize {
        if v < self.vi {
            1
        } else {
            3
        }
    }

    fn touch(&self, st: &mut State, v: usize, d: usize) {
        let before = st.ends[v].saturating_sub(self.min_ends(v));
        st.ends[v] += d;
        let after = st.ends[v].saturating_sub(self.min_ends(v));
        st.excess += after - before;
    }

    fn untouch(&self, st: &mut State, v: usize, d: usize) {
        let before = st.ends[v].saturating_sub(self.min_ends(v));
        st.ends[v] -= d;
        let after = st.ends[v].saturating_sub(self.min_ends(v));
        st.excess -= before - after;
    }

    fn deficit(&self, st: &State) -> usize {
        (0..self.m).map(|v| self.min_ends(v).saturating_sub(st.ends[v])).sum()
    }

    fn apply(&self, st: &mut State, s: Slot, add: bool) {
        let (a, b, d) = match s {
            Slot::Edge(a, b) => (a as usize - 1, Some(b as usize - 1), 1),
            Slot::Loop(v) => (v as usize - 1, None, 2),
        };
        if add {
            self.touch(st, a, d);
            if let Some(b) = b {
                self.touch(st, b, 1);
            }
            st.chosen.push(s);
        } else {
            self.untouch(st, a, d);
            if let Some(b) = b {
                self.untouch(st, b, 1);
            }
            st.chosen.pop();
        }
    }

    fn run(&self, from: usize, st: &mut State, out: &mut Vec<Graph>) {
        let left = self.e - st.chosen.len();
        if st.excess > self.excess_budget || self.deficit(st) > 2 * left {
            return;
        }
        if left == 0 {
            let mut edges = Vec::new();
            let mut loops = Vec::new();
            for s in &st.chosen {
                match *s {
                    Slot::Edge(a, b) => edges.push((a, b)),
                    Slot::Loop(v) => loops.push((v, HalfEdgeOrder::Plus)),
                }
            }
            // free vertices with non-increasing valency represent every class
            let vf_ends = &st.ends[self.vi..];
            if vf_ends.windows(2).any(|w| w[0] < w[1]) {
                return;
            }
            if let Ok(g) = Graph::new(self.vi, self.m - self.vi, edges, loops) {
                let sg = canonicalize(&g);
                if sg.sign != 0 {
                    out.push(sg.graph);
                }
            }
            return;
        }
        if self.slots.len() - from < left {
            return;
        }
        for idx in from..self.slots.len() {
            if self.slots.len() - idx < left {
                break;
            }
            let s = self.slots[idx];
            self.apply(st, s, true);
            self.run(idx + 1, st, out);
            self.apply(st, s, false);
        }
    }
}

fn enumerate_shape(vi: usize, vf: usize, e: usize, l: i64) -> Vec<Graph> {
    let m = vi + vf;
    if m == 0 {
        return vec![Graph::new(0, 0, vec![], vec![]).expect("empty graph")];
    }
    let mut slots = Vec::new();
    for v in 1..=vi {
        slots.push(Slot::Loop(v as Label));
    }
    for a in 1..=m {
        for b in a + 1..=m {
            slots.push(Slot::Edge(a as Label, b as Label));
        }
    }
    let gen = Gen { vi, m, e, excess_budget: l as usize, slots };
    // parallelize over the first chosen slot
    let firsts: Vec<usize> = (0..gen.slots.len()).collect();
    let found: Vec<Vec<Graph>> = firsts
        .par_iter()
        .map(|&first| {
            let mut st = State { ends: vec![0; m], chosen: Vec::new(), excess: 0 };
            let mut out = Vec::new();
            if gen.slots.len() - first >= e && e > 0 {
                gen.apply(&mut st, gen.slots[first], true);
                gen.run(first + 1, &mut st, &mut out);
            }
            out
        })
        .collect();
    let set: BTreeSet<Graph> = found.into_iter().flatten().collect();
    set.into_iter().collect()
}

/// All canonical nonzero graphs of grading `(k, l)`.
pub fn enumerate_basis(k: i64, l: i64) -> BasisTable {
    let mut graphs = Vec::new();
    for (vi, vf, e) in shapes(k, l) {
        graphs.extend(enumerate_shape(vi, vf, e, l));
    }
    BasisTable::from_graphs(k, l, graphs)
}

/// Largest degree with a possibly nonempty basis at order `k`.
pub fn max_degree(k: i64) -> i64 {
    if k <= 0 {
        0
    } else {
        2 * k - 1
    }
}

/// Source of bases; lets callers plug in a disk cache.
pub trait BasisSource {
    fn basis(&mut self, k: i64, l: i64) -> BasisTable;

    /// `delta: D^{k,l} -> D^{k,l+1}` between the given bases.
    fn delta_matrix(
        &mut self,
        _k: i64,
        _l: i64,
        source: &BasisTable,
        target: &BasisTable,
        rule: SignRule,
    ) -> Result<SparseRationalMatrix, CohomologyError> {
        delta_matrix_between(source, target, rule)
    }
}

/// In-memory memo over [`enumerate_basis`].
#[derive(Debug, Default)]
pub struct BasisMemo {
    tables: HashMap<(i64, i64), BasisTable>,
}

impl BasisSource for BasisMemo {
    fn basis(&mut self, k: i64, l: i64) -> BasisTable {
        self.tables.entry((k, l)).or_insert_with(|| enumerate_basis(k, l)).clone()
    }
}

/// Column `j` is `delta(source[j])` in the coordinates of `target`.
pub fn delta_matrix_between(
    source: &BasisTable,
    target: &BasisTable,
    rule: SignRule,
) -> Result<SparseRationalMatrix, CohomologyError> {
    let columns: Result<Vec<Vec<(usize, Coeff)>>, CohomologyError> = source
        .graphs()
        .par_iter()
        .map(|g| {
            let d = delta_with(g, rule);
            d.iter()
                .map(|(t, c)| {
                    target
                        .index_of(t)
                        .map(|r| (r, c.clone()))
                        .ok_or_else(|| CohomologyError::TermOutsideBasis(g.to_string(), t.to_string()))
                })
                .collect()
        })
        .collect();
    Ok(SparseRationalMatrix::from_columns(target.len(), columns?))
}

/// Summary of one cohomology group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiReport {
    pub k: i64,
    pub l: i64,
    pub dim: usize,
    /// rank of delta out of degree l
    pub rank_out: usize,
    /// rank of delta into degree l
    pub rank_in: usize,
    /// `dim - rank_out - rank_in`; negative only when delta does not square
    /// to zero
    pub betti: i64,
}

/// The complex `D^{k,*}` with all bases and coboundary matrices.
pub struct Complex {
    pub k: i64,
    pub rule: SignRule,
    bases: Vec<BasisTable>,
    deltas: Vec<SparseRationalMatrix>,
}

impl Complex {
    pub fn build(k: i64, source: &mut dyn BasisSource) -> Result<Self, CohomologyError> {
        Self::build_with(k, source, SignRule::default())
    }

    pub fn build_with(k: i64, source: &mut dyn BasisSource, rule: SignRule) -> Result<Self, CohomologyError> {
        let top = max_degree(k);
        let bases: Vec<BasisTable> = (0..=top + 1).map(|l| source.basis(k, l)).collect();
        let mut deltas = Vec::new();
        for l in 0..=top {
            deltas.push(source.delta_matrix(k, l, &bases[l as usize], &bases[l as usize + 1], rule)?);
        }
        Ok(Complex { k, rule, bases, deltas })
    }

    pub fn max_degree(&self) -> i64 {
        self.deltas.len() as i64 - 1
    }

    pub fn basis(&self, l: i64) -> Option<&BasisTable> {
        usize::try_from(l).ok().and_then(|l| self.bases.get(l))
    }

    pub fn dim(&self, l: i64) -> usize {
        self.basis(l).map_or(0, BasisTable::len)
    }

    /// `delta: D^{k,l} -> D^{k,l+1}`; empty matrices outside the range.
    pub fn delta(&self, l: i64) -> SparseRationalMatrix {
        match usize::try_from(l).ok().and_then(|l| self.deltas.get(l)) {
            Some(m) => m.clone(),
            None => SparseRationalMatrix::zeros(self.dim(l + 1), self.dim(l)),
        }
    }

    pub fn rank(&self, l: i64) -> usize {
        match usize::try_from(l).ok().and_then(|l| self.deltas.get(l)) {
            Some(m) => m.rank(),
            None => 0,
        }
    }

    pub fn betti(&self, l: i64) -> BettiReport {
        let dim = self.dim(l);
        let rank_out = self.rank(l);
        let rank_in = self.rank(l - 1);
        BettiReport { k: self.k, l, dim, rank_out, rank_in, betti: dim as i64 - rank_out as i64 - rank_in as i64 }
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.max_degree() + 1)
            .map(|l| if l % 2 == 0 { self.dim(l) as i64 } else { -(self.dim(l) as i64) })
            .sum()
    }

    /// `delta_{l+1} * delta_l == 0` for every `l`.
    pub fn delta_squared_vanishes(&self) -> bool {
        (0..self.max_degree()).all(|l| self.delta(l + 1).mul(&self.delta(l)).is_zero())
    }

    /// Cocycles spanning `H^{k,l}` (complement of the coboundaries inside the
    /// kernel), as primitive integer vectors.
    pub fn kernel_representatives(&self, l: i64) -> Result<Vec<GraphVector>, CohomologyError> {
        let Some(basis) = self.basis(l) else { return Err(CohomologyError::NoCohomology(self.k, l)) };
        let kernel = self.delta(l).kernel_basis();
        let incoming = self.delta(l - 1);
        let mut ech = Echelon::new();
        for j in 0..incoming.cols() {
            ech.insert(incoming.column(j).to_vec());
        }
        let mut reps = Vec::new();
        for z in kernel {
            if ech.insert(dense_to_sparse(&z)) {
                reps.push(basis.vector(&z));
            }
        }
        if reps.is_empty() {
            return Err(CohomologyError::NoCohomology(self.k, l));
        }
        Ok(reps)
    }

    /// Coordinates of the coboundaries into degree `l` (columns of the
    /// incoming matrix).
    pub fn coboundary_columns(&self, l: i64) -> Vec<Vec<Coeff>> {
        let m = self.delta(l - 1);
        (0..m.cols())
            .map(|j| {
                let mut x = vec![Coeff::zero(); m.rows()];
                for (r, v) in m.column(j) {
                    x[*r] = v.clone();
                }
                x
            })
            .collect()
    }

    /// Whether `v` (in degree `l`) is a cocycle.
    pub fn is_cocycle(&self, v: &GraphVector, l: i64) -> Option<bool> {
        let x = self.basis(l)?.coordinates(v)?;
        Some(self.delta(l).mul_vec(&x).iter().all(Zero::is_zero))
    }
}

/// Betti number of `D^{k,l}` with the default convention.
pub fn betti(k: i64, l: i64) -> BettiReport {
    let mut memo = BasisMemo::default();
    let source = memo.basis(k, l);
    let below = memo.basis(k, l - 1);
    let above = memo.basis(k, l + 1);
    let rule = SignRule::default();
    let out = delta_matrix_between(&source, &above, rule).expect("delta closes on bases");
    let rank_out = out.rank();
    let rank_in = if l >= 1 {
        delta_matrix_between(&below, &source, rule).expect("delta closes on bases").rank()
    } else {
        0
    };
    BettiReport { k, l, dim: source.len(), rank_out, rank_in, betti: source.len() as i64 - rank_out as i64 - rank_in as i64 }
}

pub fn euler_characteristic(k: i64) -> i64 {
    (0..=max_degree(k) + 1)
        .map(|l| {
            let d = enumerate_basis(k, l).len() as i64;
            if l % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .sum()
}

/// Outcome of [`sparse_representative_search`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSearch {
    /// Sparsest exact representative found, primitive integers.
    pub vector: Vec<Coeff>,
    pub support: usize,
}

/// Searches `rep + span(coboundaries)` for a representative with small
/// support. Candidate supports come from iteratively reweighted least
/// squares (an L1 surrogate) in floating point; each candidate is then
/// re-solved exactly, so the returned vector is an exact member of the class.
pub fn sparse_representative_search(rep: &[Coeff], coboundaries: &[Vec<Coeff>], restarts: usize, seed: u64) -> SparseSearch {
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};

    let mut ech = Echelon::new();
    let mut gens: Vec<&Vec<Coeff>> = Vec::new();
    for c in coboundaries {
        if ech.insert(dense_to_sparse(c)) {
            gens.push(c);
        }
    }
    let m = rep.len();
    let r = gens.len();
    let support = |x: &[Coeff]| x.iter().filter(|v| !v.is_zero()).count();
    let mut best = crate::linalg::to_primitive_integers(rep);
    if r == 0 {
        let support = support(&best);
        return SparseSearch { vector: best, support };
    }
    let g: Vec<f64> = rep.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect();
    let d: Vec<Vec<f64>> = gens.iter().map(|c| c.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..restarts.max(1) {
        let mut w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
        let mut x = g.clone();
        let mut eps = 1.0;
        for _ in 0..60 {
            // weighted least squares: (D^T W D) a = -D^T W g
            let dm = nalgebra::DMatrix::from_fn(m, r, |i, p| d[p][i] * w[i].sqrt());
            let gm = nalgebra::DVector::from_fn(m, |i, _| -g[i] * w[i].sqrt());
            let Ok(a) = dm.svd(true, true).solve(&gm, 1e-12) else { break };
            for i in 0..m {
                x[i] = g[i] + (0..r).map(|p| d[p][i] * a[p]).sum::<f64>();
            }
            for i in 0..m {
                w[i] = 1.0 / (x[i].abs() + eps);
            }
            eps = (eps * 0.7).max(1e-8);
        }
        let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cand: Vec<bool> = x.iter().map(|v| v.abs() > 1e-6 * scale).collect();
        if let Some(exact) = solve_on_support(rep, &gens, &cand) {
            if support(&exact) < support(&best) {
                best = crate::linalg::to_primitive_integers(&exact);
            }
        }
    }
    let support = support(&best);
    SparseSearch { vector: best, support }
}

/// Exact `rep + D a` vanishing outside `keep`, if one exists.
fn solve_on_support(rep: &[Coeff], gens: &[&Vec<Coeff>], keep: &[bool]) -> Option<Vec<Coeff>> {
    let r = gens.len();
    let mut trip = Vec::new();
    let mut row = 0;
    for i in 0..rep.len() {
        if keep[i] {
            continue;
        }
        for (p, gp) in gens.iter().enumerate() {
            if !gp[i].is_zero() {
                trip.push((row, p, gp[i].clone()));
            }
        }
        if !rep[i].is_zero() {
            trip.push((row, r, rep[i].clone()));
        }
        row += 1;
    }
    let m = SparseRationalMatrix::from_triplets(row, r + 1, trip);
    let v = m.kernel_basis().into_iter().find(|v| !v[r].is_zero())?;
    let t = v[r].clone();
    let mut x = rep.to_vec();
    for (p, gp) in gens.iter().enumerate() {
        let a = &v[p] / &t;
        if a.is_zero() {
            continue;
        }
        for (xi, gi) in x.iter_mut().zip(gp.iter()) {
            if !gi.is_zero() {
                *xi += &a * gi;
            }
        }
    }
    Some(x)
}

/// Sorted absolute values of the nonzero entries.
pub fn abs_coefficient_multiset(x: &[Coeff]) -> Vec<Coeff> {
    use num_traits::Signed;
    let mut v: Vec<Coeff> = x.iter().filter(|c| !c.is_zero()).map(|c| c.abs()).collect();
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    #[test]
    fn single_chord_in_order_one() {
        let b = enumerate_basis(1, 0);
        assert!(b.index_of(&parse_graph("G[2,0;E{1>2}]").unwrap()).is_some());
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn order_two_degree_zero() {
        let b = enumerate_basis(2, 0);
        for s in ["G[4,0;E{1>3,2>4}]", "G[3,1;E{1>4,2>4,3>4}]", "G[4,0;E{1>2,3>4}]", "G[4,0;E{1>4,2>3}]"] {
            assert!(b.index_of(&parse_graph(s).unwrap()).is_some(), "{s}");
        }
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn shapes_respect_bounds() {
        assert_eq!(shapes(1, 0), vec![(2, 0, 1), (1, 1, 2)]);
        assert_eq!(shapes(0, 0), vec![(0, 0, 0)]);
        assert!(shapes(3, 6).iter().all(|&(vi, _, _)| vi >= 1 || vi == 0));
    }

    #[test]
    fn empty_target_matrix_shape() {
        let mut memo = BasisMemo::default();
        let c = Complex::build(1, &mut memo).unwrap();
        let top = c.delta(c.max_degree());
        assert_eq!(top.rows(), 0);
        assert_eq!(top.cols(), c.dim(c.max_degree()));
    }

    #[test]
    fn order_one_kills_isolated_chord() {
        let mut memo = BasisMemo::default();
        let c = Complex::build(1, &mut memo).unwrap();
        assert_eq!(c.betti(0).betti, 0);
        assert!(c.delta_squared_vanishes());
    }

    #[test]
    fn order_two_generator() {
        let mut memo = BasisMemo::default();
        let c = Complex::build(2, &mut memo).unwrap();
        assert!(c.delta_squared_vanishes());
        let reps = c.kernel_representatives(0).unwrap();
        assert_eq!(reps.len(), 1);
        let v1 = parse_graph("G[4,0;E{1>3,2>4}]").unwrap();
        let v2 = parse_graph("G[3,1;E{1>4,2>4,3>4}]").unwrap();
        let r = &reps[0];
        assert_eq!(r.len(), 2);
        assert_eq!(r.coeff(&v1).unwrap(), &-r.coeff(&v2).unwrap().clone());
    }
}
