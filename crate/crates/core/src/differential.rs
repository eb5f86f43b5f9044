//! The coboundary `delta`: signed sum over contractions of edges with a free
//! endpoint and of arcs between consecutive interval vertices.
//!
//! Merging vertices `i < j` keeps label `i`, drops `j` and shifts every higher
//! label down by one. The contraction of an edge or arc with endpoints
//! `i < j` carries the local sign `(-1)^(j+1)`, negated when the contracted
//! edge points `j -> i`. Alternative local rules are kept in [`SignRule`] so
//! the convention can be checked against `delta^2 = 0`.

use thiserror::Error;

use crate::graph::{canonicalize, Coeff, Graph, GraphVector, Grading, HalfEdgeOrder, Label, SignedGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("edge {0} joins two interval vertices and cannot be contracted")]
    IllegalEdge(usize),
    #[error("edge index {0} out of range")]
    NoSuchEdge(usize),
    #[error("arc {0} out of range (graph has {1} interval vertices)")]
    NoSuchArc(usize, usize),
    #[error("terms of mixed gradings {0:?} and {1:?}")]
    MixedGrading(Grading, Grading),
    #[error("contraction produced an invalid graph: {0}")]
    InvalidResult(String),
}

/// What to contract. Arc `i` joins interval vertices `i` and `i+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionKind {
    Edge(usize),
    Arc(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignExponent {
    /// `(-1)^(j+1)`
    Upper,
    /// `(-1)^(i+1)`
    Lower,
    /// `(-1)^(i+j)`
    Sum,
}

/// Local sign convention for a contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignRule {
    pub exponent: SignExponent,
    /// Extra factor applied to arc contractions only.
    pub arc_factor: i8,
}

impl Default for SignRule {
    fn default() -> Self {
        SignRule { exponent: SignExponent::Upper, arc_factor: 1 }
    }
}

impl SignRule {
    pub fn all() -> Vec<SignRule> {
        let mut out = Vec::new();
        for exponent in [SignExponent::Upper, SignExponent::Lower, SignExponent::Sum] {
            for arc_factor in [1, -1] {
                out.push(SignRule { exponent, arc_factor });
            }
        }
        out
    }

    fn sign(&self, i: usize, j: usize, reversed: bool, arc: bool) -> i8 {
        let e = match self.exponent {
            SignExponent::Upper => j + 1,
            SignExponent::Lower => i + 1,
            SignExponent::Sum => i + j,
        };
        let mut s = if e % 2 == 0 { 1 } else { -1 };
        if reversed {
            s = -s;
        }
        if arc {
            s *= self.arc_factor;
        }
        s
    }
}

/// A single contraction before canonicalization.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub kind: ContractionKind,
    /// `None` when the merge creates a self-edge from a parallel pair (the
    /// input had a double edge and is zero anyway).
    pub result: Option<Graph>,
    pub local_sign: i8,
}

/// All legal contractions of `g`, in a fixed order: edges by index, then arcs.
pub fn legal_contractions(g: &Graph) -> Vec<ContractionKind> {
    let mut out: Vec<ContractionKind> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| !(g.is_interval(a) && g.is_interval(b)))
        .map(|(k, _)| ContractionKind::Edge(k))
        .collect();
    out.extend((1..g.vi()).map(ContractionKind::Arc));
    out
}

pub fn contraction(g: &Graph, kind: ContractionKind, rule: SignRule) -> Result<Contraction, DiffError> {
    let (i, j, reversed, skip_edge, arc) = match kind {
        ContractionKind::Edge(k) => {
            let &(a, b) = g.edges().get(k).ok_or(DiffError::NoSuchEdge(k))?;
            if g.is_interval(a) && g.is_interval(b) {
                return Err(DiffError::IllegalEdge(k));
            }
            (a.min(b), a.max(b), a > b, Some(k), false)
        }
        ContractionKind::Arc(k) => {
            if k == 0 || k >= g.vi() {
                return Err(DiffError::NoSuchArc(k, g.vi()));
            }
            (k as Label, k as Label + 1, false, None, true)
        }
    };
    let map = |x: Label| -> Label {
        if x < j {
            x
        } else if x == j {
            i
        } else {
            x - 1
        }
    };
    let mut edges = Vec::with_capacity(g.edges().len());
    let mut loops: Vec<(Label, HalfEdgeOrder)> = g.loops().iter().map(|&(v, o)| (map(v), o)).collect();
    let mut degenerate = false;
    for (k, &(a, b)) in g.edges().iter().enumerate() {
        if Some(k) == skip_edge {
            continue;
        }
        let (ma, mb) = (map(a), map(b));
        if ma == mb {
            if arc {
                // the half-edge at the lower vertex comes first along the line
                let o = if a == i { HalfEdgeOrder::Plus } else { HalfEdgeOrder::Minus };
                loops.push((ma, o));
            } else {
                degenerate = true;
            }
        } else {
            edges.push((ma, mb));
        }
    }
    let (vi, vf) = if arc || g.is_interval(j) {
        (g.vi() - 1, g.vf())
    } else {
        (g.vi(), g.vf() - 1)
    };
    let local_sign = rule.sign(i as usize, j as usize, reversed, arc);
    let result = if degenerate {
        None
    } else {
        let r = Graph::unchecked(vi, vf, edges, loops).map_err(|e| DiffError::InvalidResult(e.to_string()))?;
        Some(r)
    };
    Ok(Contraction { kind, result, local_sign })
}

/// Contract and canonicalize, with the default sign rule.
pub fn contract(g: &Graph, kind: ContractionKind) -> Result<SignedGraph, DiffError> {
    contract_with(g, kind, SignRule::default())
}

pub fn contract_with(g: &Graph, kind: ContractionKind, rule: SignRule) -> Result<SignedGraph, DiffError> {
    let c = contraction(g, kind, rule)?;
    let Some(r) = c.result else {
        return Ok(SignedGraph { graph: g.clone(), sign: 0 });
    };
    let sg = canonicalize(&r);
    if sg.sign != 0 {
        Graph::new(r.vi(), r.vf(), r.edges().to_vec(), r.loops().to_vec())
            .map_err(|e| DiffError::InvalidResult(format!("{r}: {e}")))?;
    }
    Ok(SignedGraph { graph: sg.graph, sign: sg.sign * c.local_sign })
}

pub fn delta(g: &Graph) -> GraphVector {
    delta_with(g, SignRule::default())
}

pub fn delta_with(g: &Graph, rule: SignRule) -> GraphVector {
    let one = Coeff::from_integer(1.into());
    let mut out = GraphVector::new();
    for kind in legal_contractions(g) {
        let sg = contract_with(g, kind, rule).unwrap_or_else(|e| panic!("delta({g}): {e}"));
        out.add_signed(&sg, &one);
    }
    out
}

/// Linear extension of [`delta`].
pub fn delta_vec(v: &GraphVector) -> Result<GraphVector, DiffError> {
    delta_vec_with(v, SignRule::default())
}

pub fn delta_vec_with(v: &GraphVector, rule: SignRule) -> Result<GraphVector, DiffError> {
    let mut first: Option<Grading> = None;
    let mut out = GraphVector::new();
    for (g, c) in v.iter() {
        let gr = g.grading();
        match first {
            None => first = Some(gr),
            Some(f) if f != gr => return Err(DiffError::MixedGrading(f, gr)),
            _ => {}
        }
        out.add_vector(&delta_with(g, rule), c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    fn g(s: &str) -> Graph {
        parse_graph(s).unwrap()
    }

    #[test]
    fn tripod_edge_contraction() {
        let t = g("G[3,1;E{1>4,2>4,3>4}]");
        let r = contract(&t, ContractionKind::Edge(2)).unwrap();
        assert_eq!(r.graph, g("G[3,0;E{1>3,2>3}]"));
        // (-1)^(4+1), no reversal needed
        assert_eq!(r.sign, -1);
    }

    #[test]
    fn chord_arc_contractions() {
        let v = g("G[4,0;E{1>3,2>4}]");
        let a1 = contract(&v, ContractionKind::Arc(1)).unwrap();
        assert_eq!(a1.graph, g("G[3,0;E{1>2,1>3}]"));
        let a3 = contract(&v, ContractionKind::Arc(3)).unwrap();
        assert_eq!(a3.graph, g("G[3,0;E{1>3,2>3}]"));
        assert_ne!(a3.sign, 0);
    }

    #[test]
    fn arc_turns_chord_into_loop() {
        let c = g("G[2,0;E{1>2}]");
        let r = contract(&c, ContractionKind::Arc(1)).unwrap();
        assert_eq!(r.graph, g("G[1,0;E{};L{1+}]"));
        let rev = contract(&g("G[2,0;E{2>1}]"), ContractionKind::Arc(1)).unwrap();
        assert_eq!(rev.graph, r.graph);
        assert_eq!(rev.sign, -r.sign);
    }

    #[test]
    fn illegal_contractions() {
        let v = g("G[4,0;E{1>3,2>4}]");
        assert_eq!(contract(&v, ContractionKind::Edge(0)), Err(DiffError::IllegalEdge(0)));
        assert_eq!(contract(&v, ContractionKind::Arc(4)), Err(DiffError::NoSuchArc(4, 4)));
        assert_eq!(contract(&v, ContractionKind::Arc(0)), Err(DiffError::NoSuchArc(0, 4)));
    }

    #[test]
    fn trivalent_cocycle() {
        let mut v = GraphVector::from_graph(&g("G[4,0;E{1>3,2>4}]"));
        v.add_graph(&g("G[3,1;E{1>4,2>4,3>4}]"), &Coeff::from_integer((-1).into()));
        assert!(delta_vec(&v).unwrap().is_zero());
        assert!(!delta(&g("G[3,1;E{1>4,2>4,3>4}]")).is_zero());
    }

    #[test]
    fn grading_shift() {
        let x = g("G[5,0;E{1>3,1>4,2>5}]");
        let d = delta(&x);
        assert!(!d.is_zero());
        for (t, _) in d.iter() {
            assert_eq!(t.grading(), Grading { ord: 3, deg: 2 });
        }
    }

    #[test]
    fn linearity_and_mixed() {
        let x = g("G[5,0;E{1>3,1>4,2>5}]");
        let q: Coeff = "3/7".parse().unwrap();
        let mut v = GraphVector::new();
        v.add_graph(&x, &q);
        assert_eq!(delta_vec(&v).unwrap(), delta(&x).scaled(&q));
        assert!(delta_vec(&GraphVector::new()).unwrap().is_zero());
        let mut m = GraphVector::from_graph(&x);
        m.add_graph(&g("G[2,0;E{1>2}]"), &q);
        assert!(matches!(delta_vec(&m), Err(DiffError::MixedGrading(..))));
    }
}
