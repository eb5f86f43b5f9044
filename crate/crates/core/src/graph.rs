//! Decorated graphs on the special line.
//!
//! A [`Graph`] has `vi` interval vertices labelled `1..=vi` in line order and
//! `vf` free vertices labelled `vi+1..=vi+vf`. Edges are ordered pairs of
//! labels; small loops live on interval vertices and carry a half-edge order.
//!
//! Graphs are identified up to relabelling the free vertices and reversing
//! edges, with the sign `parity(sigma) * (-1)^(reversals)`. Interval labels are
//! never permuted. [`canonicalize`] picks a representative and reports the
//! sign relating the input to it, or zero when the graph vanishes (double
//! edges, loops at free vertices, repeated loops, odd self-symmetries).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex label, 1-based.
pub type Label = u8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph is not connected through the special line")]
    DisconnectedGraph,
    #[error("vertex {vertex} has valency {valency} < 3")]
    ValencyTooLow { vertex: Label, valency: usize },
    #[error("label {label} out of range 1..={max}")]
    BadLabel { label: usize, max: usize },
    #[error("edge {0}>{0} joins a vertex to itself; use a small loop")]
    SelfEdge(Label),
    #[error("small loop at free vertex {0}")]
    LoopAtFreeVertex(Label),
    #[error("too many vertices ({0})")]
    TooManyVertices(usize),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
}

/// Order of the two half-edges of a small loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HalfEdgeOrder {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl HalfEdgeOrder {
    pub fn flipped(self) -> Self {
        match self {
            HalfEdgeOrder::Plus => HalfEdgeOrder::Minus,
            HalfEdgeOrder::Minus => HalfEdgeOrder::Plus,
        }
    }

    fn symbol(self) -> char {
        match self {
            HalfEdgeOrder::Plus => '+',
            HalfEdgeOrder::Minus => '-',
        }
    }
}

/// Bigrading `(ord, deg)` of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Grading {
    pub ord: i64,
    pub deg: i64,
}

/// A validated graph. Field order gives the derived `Ord`, which is the
/// encoding order used for canonical representatives and basis sorting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    vi: u8,
    vf: u8,
    edges: Vec<(Label, Label)>,
    loops: Vec<(Label, HalfEdgeOrder)>,
}

impl Graph {
    /// Validating constructor.
    pub fn new(
        vi: usize,
        vf: usize,
        edges: Vec<(Label, Label)>,
        loops: Vec<(Label, HalfEdgeOrder)>,
    ) -> Result<Self, GraphError> {
        let g = Self::unchecked(vi, vf, edges, loops)?;
        g.validate()?;
        Ok(g)
    }

    /// Builds a graph checking labels only (no valency/connectivity).
    pub(crate) fn unchecked(
        vi: usize,
        vf: usize,
        edges: Vec<(Label, Label)>,
        loops: Vec<(Label, HalfEdgeOrder)>,
    ) -> Result<Self, GraphError> {
        let m = vi + vf;
        if m > 120 {
            return Err(GraphError::TooManyVertices(m));
        }
        for &(a, b) in &edges {
            for x in [a, b] {
                if x == 0 || x as usize > m {
                    return Err(GraphError::BadLabel { label: x as usize, max: m });
                }
            }
            if a == b {
                return Err(GraphError::SelfEdge(a));
            }
        }
        for &(v, _) in &loops {
            if v == 0 || v as usize > m {
                return Err(GraphError::BadLabel { label: v as usize, max: m });
            }
            if v as usize > vi {
                return Err(GraphError::LoopAtFreeVertex(v));
            }
        }
        Ok(Graph { vi: vi as u8, vf: vf as u8, edges, loops })
    }

    fn validate(&self) -> Result<(), GraphError> {
        let m = self.num_vertices();
        for v in 1..=m as Label {
            let val = self.valency(v);
            if val < 3 {
                return Err(GraphError::ValencyTooLow { vertex: v, valency: val });
            }
        }
        if !self.is_connected() {
            return Err(GraphError::DisconnectedGraph);
        }
        Ok(())
    }

    pub fn vi(&self) -> usize {
        self.vi as usize
    }

    pub fn vf(&self) -> usize {
        self.vf as usize
    }

    pub fn num_vertices(&self) -> usize {
        self.vi() + self.vf()
    }

    pub fn edges(&self) -> &[(Label, Label)] {
        &self.edges
    }

    pub fn loops(&self) -> &[(Label, HalfEdgeOrder)] {
        &self.loops
    }

    /// Edge count, small loops included.
    pub fn num_edges(&self) -> usize {
        self.edges.len() + self.loops.len()
    }

    pub fn is_interval(&self, v: Label) -> bool {
        (v as usize) <= self.vi()
    }

    /// Incident edge-ends (loops count twice), plus the two line arcs for an
    /// interval vertex.
    pub fn valency(&self, v: Label) -> usize {
        let ends = self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
            + 2 * self.loops.iter().filter(|&&(w, _)| w == v).count();
        if self.is_interval(v) {
            ends + 2
        } else {
            ends
        }
    }

    /// Connectivity with the special line joining all interval vertices.
    /// The empty graph (just the line) counts as connected; free vertices with
    /// no interval vertex to attach to do not.
    pub fn is_connected(&self) -> bool {
        let m = self.num_vertices();
        if m == 0 {
            return true;
        }
        if self.vi == 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let union = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra] = rb;
            }
        };
        for i in 1..self.vi() {
            union(&mut parent, 0, i);
        }
        for &(a, b) in &self.edges {
            union(&mut parent, a as usize - 1, b as usize - 1);
        }
        let r = find(&mut parent, 0);
        (0..m).all(|x| find(&mut parent, x) == r)
    }

    pub fn grading(&self) -> Grading {
        let e = self.num_edges() as i64;
        let vf = self.vf as i64;
        let vi = self.vi as i64;
        Grading { ord: e - vf, deg: 2 * e - 3 * vf - vi }
    }

    /// Same graph with one edge reversed.
    pub fn with_edge_reversed(&self, idx: usize) -> Graph {
        let mut g = self.clone();
        let (a, b) = g.edges[idx];
        g.edges[idx] = (b, a);
        g
    }

    /// Same graph with one loop's half-edge order flipped.
    pub fn with_loop_flipped(&self, idx: usize) -> Graph {
        let mut g = self.clone();
        g.loops[idx].1 = g.loops[idx].1.flipped();
        g
    }

    /// Relabels free vertices: `perm[k]` is the new offset (0-based, among free
    /// vertices) of the free vertex with offset `k`.
    pub fn relabel_free(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.vf());
        let vi = self.vi;
        let map = |x: Label| -> Label {
            if x <= vi {
                x
            } else {
                vi + 1 + perm[(x - vi - 1) as usize] as Label
            }
        };
        Graph {
            vi: self.vi,
            vf: self.vf,
            edges: self.edges.iter().map(|&(a, b)| (map(a), map(b))).collect(),
            loops: self.loops.clone(),
        }
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vi: self.vi(),
            vf: self.vf(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            loops: self.loops.iter().map(|&(v, o)| (v, o)).collect(),
        }
    }
}

/// JSON form of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vi: usize,
    pub vf: usize,
    pub edges: Vec<[Label; 2]>,
    #[serde(default)]
    pub loops: Vec<(Label, HalfEdgeOrder)>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<Self, Self::Error> {
        Graph::new(j.vi, j.vf, j.edges.into_iter().map(|[a, b]| (a, b)).collect(), j.loops)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G[{},{};E{{", self.vi, self.vf)?;
        for (k, (a, b)) in self.edges.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}>{b}")?;
        }
        f.write_str("}")?;
        if !self.loops.is_empty() {
            f.write_str(";L{")?;
            for (k, (v, o)) in self.loops.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}{}", o.symbol())?;
            }
            f.write_str("}")?;
        }
        f.write_str("]")
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, GraphError> {
        Err(GraphError::Parse { offset: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), GraphError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected '{}'", c as char)),
        }
    }

    fn int(&mut self) -> Result<usize, GraphError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        s.parse::<usize>().map_err(|_| GraphError::Parse {
            offset: start,
            message: "integer overflow".into(),
        })
    }

    fn label(&mut self) -> Result<Label, GraphError> {
        let at = self.pos;
        let v = self.int()?;
        Label::try_from(v).map_err(|_| GraphError::Parse { offset: at, message: "label too large".into() })
    }
}

/// Parses the `G[vi,vf;E{a>b,...};L{v+,...}]` form.
pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    let mut c = Cursor { bytes: text.as_bytes(), pos: 0 };
    c.expect(b'G')?;
    c.expect(b'[')?;
    let vi = c.int()?;
    c.expect(b',')?;
    let vf = c.int()?;
    c.expect(b';')?;
    c.expect(b'E')?;
    c.expect(b'{')?;
    let mut edges = Vec::new();
    if c.peek() != Some(b'}') {
        loop {
            let a = c.label()?;
            c.expect(b'>')?;
            let b = c.label()?;
            edges.push((a, b));
            if c.peek() == Some(b',') {
                c.pos += 1;
            } else {
                break;
            }
        }
    }
    c.expect(b'}')?;
    let mut loops = Vec::new();
    if c.peek() == Some(b';') {
        c.pos += 1;
        c.expect(b'L')?;
        c.expect(b'{')?;
        loop {
            let v = c.label()?;
            let o = match c.peek() {
                Some(b'+') => HalfEdgeOrder::Plus,
                Some(b'-') => HalfEdgeOrder::Minus,
                _ => return c.err("expected '+' or '-'"),
            };
            c.pos += 1;
            loops.push((v, o));
            if c.peek() == Some(b',') {
                c.pos += 1;
            } else {
                break;
            }
        }
        c.expect(b'}')?;
    }
    c.expect(b']')?;
    if c.peek().is_some() {
        return c.err("trailing input");
    }
    Graph::new(vi, vf, edges, loops)
}

pub fn format_graph(g: &Graph) -> String {
    g.to_string()
}

impl FromStr for Graph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_graph(s)
    }
}

/// A canonical graph together with the sign relating the original to it:
/// `original = sign * graph`. `sign == 0` means the original vanishes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedGraph {
    pub graph: Graph,
    pub sign: i8,
}

impl SignedGraph {
    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }
}

fn permutation_parity(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = perm[x];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Colour refinement of free vertices, interval vertices fixed. Returns one
/// colour per free vertex; colours are isomorphism invariant.
fn refine_free_colours(g: &Graph) -> Vec<u32> {
    let vi = g.vi();
    let vf = g.vf();
    let m = vi + vf;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(a, b) in &g.edges {
        adj[a as usize - 1].push(b as usize - 1);
        adj[b as usize - 1].push(a as usize - 1);
    }
    // interval vertex x gets colour x; free vertices start at vi
    let mut colour: Vec<u32> = (0..m).map(|x| if x < vi { x as u32 } else { vi as u32 }).collect();
    let mut classes = usize::MAX;
    loop {
        let mut sigs: Vec<(Vec<u32>, usize)> = (vi..m)
            .map(|x| {
                let mut s: Vec<u32> = adj[x].iter().map(|&y| colour[y]).collect();
                s.sort_unstable();
                s.insert(0, colour[x]);
                (s, x)
            })
            .collect();
        sigs.sort();
        let mut next = colour.clone();
        let mut c = vi as u32;
        for k in 0..sigs.len() {
            if k > 0 && sigs[k].0 != sigs[k - 1].0 {
                c += 1;
            }
            next[sigs[k].1] = c;
        }
        let n_classes = if sigs.is_empty() { 0 } else { (c - vi as u32 + 1) as usize };
        colour = next;
        if n_classes == classes {
            break;
        }
        classes = n_classes;
    }
    colour[vi..].to_vec()
}

/// Normalized edge list under a free relabelling, with the count of edges
/// that had to be reversed.
fn encode(g: &Graph, perm: &[usize]) -> (Vec<(Label, Label)>, usize) {
    let vi = g.vi;
    let map = |x: Label| -> Label {
        if x <= vi {
            x
        } else {
            vi + 1 + perm[(x - vi - 1) as usize] as Label
        }
    };
    let mut reversed = 0;
    let mut out: Vec<(Label, Label)> = g
        .edges
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (map(a), map(b));
            if a > b {
                reversed += 1;
                (b, a)
            } else {
                (a, b)
            }
        })
        .collect();
    out.sort_unstable();
    (out, reversed)
}

/// Canonical representative and sign. See the module docs for the relation.
pub fn canonicalize(g: &Graph) -> SignedGraph {
    let zero = |graph: Graph| SignedGraph { graph, sign: 0 };
    let vi = g.vi;
    if g.loops.iter().any(|&(v, _)| v > vi) {
        return zero(g.clone());
    }
    let mut loop_sign = 1i8;
    let mut loops: Vec<(Label, HalfEdgeOrder)> = Vec::with_capacity(g.loops.len());
    for &(v, o) in &g.loops {
        if o == HalfEdgeOrder::Minus {
            loop_sign = -loop_sign;
        }
        loops.push((v, HalfEdgeOrder::Plus));
    }
    loops.sort_unstable();
    let repeated_loop = loops.windows(2).any(|w| w[0].0 == w[1].0);

    let vf = g.vf();
    let colours = refine_free_colours(g);
    // free offsets sorted by colour; each colour class occupies a contiguous
    // block of new offsets
    let mut order: Vec<usize> = (0..vf).collect();
    order.sort_by_key(|&k| colours[k]);
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=vf {
        if k == vf || colours[order[k]] != colours[order[start]] {
            blocks.push((start, k));
            start = k;
        }
    }

    let mut best: Option<(Vec<(Label, Label)>, i8)> = None;
    let mut odd_symmetry = false;
    let mut perm = vec![0usize; vf];
    let mut used = vec![false; vf];
    let mut visit = |perm: &[usize]| {
        let (enc, rev) = encode(g, perm);
        let s = permutation_parity(perm) * if rev % 2 == 0 { 1 } else { -1 };
        match &best {
            Some((b, bs)) if enc == *b => {
                if *bs != s {
                    odd_symmetry = true;
                }
            }
            Some((b, _)) if enc > *b => {}
            _ => {
                best = Some((enc, s));
                odd_symmetry = false;
            }
        }
    };
    // assign new offset `pos` to some unused old vertex from the block's class
    fn rec(
        pos: usize,
        order: &[usize],
        blocks: &[(usize, usize)],
        perm: &mut [usize],
        used: &mut [bool],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pos == perm.len() {
            visit(perm);
            return;
        }
        let &(lo, hi) = blocks.iter().find(|&&(lo, hi)| lo <= pos && pos < hi).unwrap();
        for &old in &order[lo..hi] {
            if !used[old] {
                used[old] = true;
                perm[old] = pos;
                rec(pos + 1, order, blocks, perm, used, visit);
                used[old] = false;
            }
        }
    }
    rec(0, &order, &blocks, &mut perm, &mut used, &mut visit);
    let (edges, s) = best.expect("at least one labelling");

    let double_edge = edges.windows(2).any(|w| w[0] == w[1]);
    let graph = Graph { vi: g.vi, vf: g.vf, edges, loops };
    if double_edge || repeated_loop || odd_symmetry {
        return zero(graph);
    }
    SignedGraph { graph, sign: s * loop_sign }
}

/// Exact rational coefficient.
pub type Coeff = num_rational::BigRational;

/// Formal linear combination of canonical graphs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphVector {
    terms: BTreeMap<Graph, Coeff>,
}

impl GraphVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_graph(g: &Graph) -> Self {
        let mut v = Self::new();
        v.add_graph(g, &Coeff::from_integer(1.into()));
        v
    }

    /// Adds `coeff * g`, canonicalizing `g` first.
    pub fn add_graph(&mut self, g: &Graph, coeff: &Coeff) {
        let sg = canonicalize(g);
        self.add_signed(&sg, coeff);
    }

    pub fn add_signed(&mut self, sg: &SignedGraph, coeff: &Coeff) {
        if sg.sign == 0 {
            return;
        }
        let c = if sg.sign > 0 { coeff.clone() } else { -coeff.clone() };
        self.add_canonical(sg.graph.clone(), c);
    }

    /// Adds a term whose graph is already canonical with sign +1.
    pub(crate) fn add_canonical(&mut self, g: Graph, c: Coeff) {
        use num_traits::Zero;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(g) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_vector(&mut self, other: &GraphVector, scale: &Coeff) {
        for (g, c) in &other.terms {
            self.add_canonical(g.clone(), c * scale);
        }
    }

    pub fn scaled(&self, s: &Coeff) -> GraphVector {
        let mut out = GraphVector::new();
        out.add_vector(self, s);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, g: &Graph) -> Option<&Coeff> {
        self.terms.get(g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Graph, &Coeff)> {
        self.terms.iter()
    }

    /// Common grading of all terms, `None` for the zero vector.
    pub fn grading(&self) -> Result<Option<Grading>, Grading> {
        let mut it = self.terms.keys().map(Graph::grading);
        let Some(first) = it.next() else { return Ok(None) };
        for gr in it {
            if gr != first {
                return Err(gr);
            }
        }
        Ok(Some(first))
    }

    pub fn to_cochain_json(&self) -> Vec<CochainTerm> {
        self.terms
            .iter()
            .map(|(g, c)| CochainTerm { coeff: c.to_string(), graph: g.to_string() })
            .collect()
    }

    pub fn from_cochain_json(terms: &[CochainTerm]) -> Result<Self, CochainError> {
        let mut v = GraphVector::new();
        for t in terms {
            let c: Coeff = t
                .coeff
                .trim()
                .parse()
                .map_err(|_| CochainError::Coefficient(t.coeff.clone()))?;
            let g = parse_graph(&t.graph)?;
            v.add_graph(&g, &c);
        }
        Ok(v)
    }
}

impl std::ops::Add for &GraphVector {
    type Output = GraphVector;

    fn add(self, rhs: &GraphVector) -> GraphVector {
        let mut out = self.clone();
        out.add_vector(rhs, &Coeff::from_integer(1.into()));
        out
    }
}

impl std::ops::Sub for &GraphVector {
    type Output = GraphVector;

    fn sub(self, rhs: &GraphVector) -> GraphVector {
        let mut out = self.clone();
        out.add_vector(rhs, &Coeff::from_integer((-1).into()));
        out
    }
}

impl fmt::Display for GraphVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (g, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})*{g}")?;
        }
        Ok(())
    }
}

/// One entry of a cochain file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CochainTerm {
    pub coeff: String,
    pub graph: String,
}

#[derive(Debug, Error)]
pub enum CochainError {
    #[error("bad coefficient {0:?}")]
    Coefficient(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn read_cochain(text: &str) -> Result<GraphVector, CochainError> {
    let terms: Vec<CochainTerm> = serde_json::from_str(text)?;
    GraphVector::from_cochain_json(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Graph {
        parse_graph(s).unwrap()
    }

    #[test]
    fn paper_graphs_are_valid() {
        let g2 = Graph::new(5, 0, vec![(1, 3), (1, 4), (2, 5)], vec![]).unwrap();
        assert_eq!(g2.grading(), Grading { ord: 3, deg: 1 });
        let g6 = Graph::new(4, 1, vec![(1, 3), (1, 5), (2, 5), (4, 5)], vec![]).unwrap();
        assert_eq!(g6.grading(), Grading { ord: 3, deg: 1 });
        assert_eq!(g("G[4,0;E{1>3,2>4}]").grading(), Grading { ord: 2, deg: 0 });
    }

    #[test]
    fn lone_interval_vertex_has_low_valency() {
        assert_eq!(
            Graph::new(1, 0, vec![], vec![]),
            Err(GraphError::ValencyTooLow { vertex: 1, valency: 2 })
        );
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(Graph::new(2, 0, vec![(1, 3)], vec![]), Err(GraphError::BadLabel { .. })));
        assert!(matches!(
            Graph::new(1, 1, vec![(1, 2)], vec![(2, HalfEdgeOrder::Plus)]),
            Err(GraphError::LoopAtFreeVertex(2))
        ));
        // free triangle hanging off nothing
        assert_eq!(
            Graph::new(2, 3, vec![(1, 2), (3, 4), (4, 5), (3, 5), (3, 4)], vec![]),
            Err(GraphError::ValencyTooLow { vertex: 5, valency: 2 })
        );
        assert_eq!(
            Graph::new(2, 4, vec![(1, 2), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6)], vec![]),
            Err(GraphError::DisconnectedGraph)
        );
    }

    #[test]
    fn loop_graph_validity() {
        // vertex 1: loop (2) + edge (1) + line (2) = 5; vertex 2: 1 + 2 = 3
        let lg = g("G[2,0;E{1>2};L{1+}]");
        assert_eq!(lg.valency(1), 5);
        assert_eq!(lg.grading(), Grading { ord: 2, deg: 2 });
    }

    #[test]
    fn reversed_edge_gives_minus() {
        let a = canonicalize(&g("G[5,0;E{3>1,1>4,2>5}]"));
        assert_eq!(a.sign, -1);
        assert_eq!(a.graph, g("G[5,0;E{1>3,1>4,2>5}]"));
    }

    #[test]
    fn double_edge_is_zero() {
        assert_eq!(canonicalize(&g("G[4,0;E{1>3,1>3,2>4}]")).sign, 0);
    }

    #[test]
    fn tripod_is_canonical() {
        let t = g("G[3,1;E{1>4,2>4,3>4}]");
        let c = canonicalize(&t);
        assert_eq!(c, SignedGraph { graph: t, sign: 1 });
    }

    #[test]
    fn loop_flip_and_repeat() {
        let a = canonicalize(&g("G[2,0;E{1>2};L{1-}]"));
        assert_eq!(a.sign, -1);
        assert_eq!(a.graph, g("G[2,0;E{1>2};L{1+}]"));
        assert_eq!(canonicalize(&g("G[2,0;E{1>2};L{1+,1+}]")).sign, 0);
    }

    #[test]
    fn odd_symmetry_kills_graph() {
        // two free vertices swapped by an automorphism that also reverses the
        // edge between them: parity -1, one reversal -> net +1 (survives)
        let h = g("G[4,2;E{1>5,2>5,3>6,4>6,5>6}]");
        assert_ne!(canonicalize(&h).sign, 0);
        // free vertices 4,5 hang symmetrically on 1..3 ; swap is odd, no
        // edge reversal -> zero
        let k = g("G[3,2;E{1>4,1>5,2>4,2>5,3>4,3>5}]");
        assert_eq!(canonicalize(&k).sign, 0);
    }

    #[test]
    fn parse_format_round_trip() {
        for s in ["G[5,0;E{1>3,1>4,2>5}]", "G[3,1;E{1>4,2>4,3>4}]", "G[2,0;E{1>2};L{1+}]"] {
            let x = g(s);
            assert_eq!(x.to_string(), s);
        }
        assert_eq!(g(" G[ 3 , 1 ; E{ 1>4 ,2>4,3>4 } ] ").to_string(), "G[3,1;E{1>4,2>4,3>4}]");
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match parse_graph("G[3,1;E{1>4,2>4,3-4}]") {
            Err(GraphError::Parse { offset, .. }) => assert_eq!(offset, 17),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_graph("G[2,0;E{1>2}]x"), Err(GraphError::Parse { offset: 13, .. })));
    }

    #[test]
    fn json_round_trip() {
        let x = g("G[2,0;E{1>2};L{1-}]");
        let js = serde_json::to_string(&x.to_json()).unwrap();
        assert_eq!(js, r#"{"vi":2,"vf":0,"edges":[[1,2]],"loops":[[1,"-"]]}"#);
        let back: GraphJson = serde_json::from_str(&js).unwrap();
        assert_eq!(Graph::try_from(back).unwrap(), x);
    }

    #[test]
    fn vector_arithmetic() {
        let a = g("G[4,0;E{1>3,2>4}]");
        let b = g("G[4,0;E{3>1,2>4}]");
        let mut v = GraphVector::from_graph(&a);
        v.add_graph(&b, &Coeff::from_integer(1.into()));
        assert!(v.is_zero());
        let cj = (&GraphVector::from_graph(&a) - &GraphVector::from_graph(&g("G[3,1;E{1>4,2>4,3>4}]")))
            .to_cochain_json();
        let back = GraphVector::from_cochain_json(&cj).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.grading().unwrap().is_some());
    }
}
