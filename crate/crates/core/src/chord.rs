//! Chord diagrams on an oriented line and the algebra they span modulo
//! the 4-term and 1-term relations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::graph::{Coeff, Graph};
use crate::linalg::{dense_to_sparse, Echelon};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChordError {
    #[error("position {0} is out of range 1..={1}")]
    BadPosition(usize, usize),
    #[error("position {0} is used twice")]
    RepeatedPosition(usize),
    #[error("chord with equal endpoints at {0}")]
    DegenerateChord(usize),
    #[error("positions do not cover 1..={0}")]
    Incomplete(usize),
    #[error("cannot parse chord diagram: {0}")]
    Parse(String),
}

/// A perfect matching on positions `0..2k`, stored as the partner of each
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChordDiagram {
    partner: Vec<usize>,
}

impl ChordDiagram {
    /// Builds from 1-based position pairs.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self, ChordError> {
        let m = 2 * pairs.len();
        let mut partner = vec![usize::MAX; m];
        for &(a, b) in pairs {
            for p in [a, b] {
                if p == 0 || p > m {
                    return Err(ChordError::BadPosition(p, m));
                }
            }
            if a == b {
                return Err(ChordError::DegenerateChord(a));
            }
            for p in [a, b] {
                if partner[p - 1] != usize::MAX {
                    return Err(ChordError::RepeatedPosition(p));
                }
            }
            partner[a - 1] = b - 1;
            partner[b - 1] = a - 1;
        }
        if partner.contains(&usize::MAX) {
            return Err(ChordError::Incomplete(m));
        }
        Ok(ChordDiagram { partner })
    }

    fn from_partner(partner: Vec<usize>) -> Self {
        debug_assert!(partner.iter().enumerate().all(|(i, &j)| j != i && partner[j] == i));
        ChordDiagram { partner }
    }

    pub fn order(&self) -> usize {
        self.partner.len() / 2
    }

    pub fn partner(&self, p: usize) -> usize {
        self.partner[p]
    }

    /// Chords as 0-based `(low, high)` pairs sorted by the low end.
    pub fn chords(&self) -> Vec<(usize, usize)> {
        (0..self.partner.len()).filter(|&p| p < self.partner[p]).map(|p| (p, self.partner[p])).collect()
    }

    /// A chord is isolated when no other chord has exactly one end inside it.
    pub fn has_isolated_chord(&self) -> bool {
        self.chords().into_iter().any(|(a, b)| (a + 1..b).all(|p| (a..=b).contains(&self.partner[p])))
    }

    /// Concatenation along the line.
    pub fn concat(&self, other: &ChordDiagram) -> ChordDiagram {
        let off = self.partner.len();
        let mut partner = self.partner.clone();
        partner.extend(other.partner.iter().map(|&q| q + off));
        ChordDiagram { partner }
    }

    /// The graph with one edge per chord, oriented from the lower end.
    pub fn to_graph(&self) -> Graph {
        let edges = self.chords().into_iter().map(|(a, b)| ((a + 1) as u8, (b + 1) as u8)).collect();
        Graph::new(self.partner.len(), 0, edges, vec![]).expect("chord diagrams are valid graphs")
    }
}

impl fmt::Display for ChordDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.chords().iter().map(|(a, b)| format!("{}-{}", a + 1, b + 1)).collect();
        write!(f, "C[{}]", body.join(","))
    }
}

impl FromStr for ChordDiagram {
    type Err = ChordError;

    fn from_str(s: &str) -> Result<Self, ChordError> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = s
            .strip_prefix("C[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| ChordError::Parse("expected C[...]".into()))?;
        let mut pairs = Vec::new();
        if !body.is_empty() {
            for item in body.split(',') {
                let (a, b) = item.split_once('-').ok_or_else(|| ChordError::Parse(format!("bad chord `{item}`")))?;
                let a = a.parse().map_err(|_| ChordError::Parse(format!("bad position `{a}`")))?;
                let b = b.parse().map_err(|_| ChordError::Parse(format!("bad position `{b}`")))?;
                pairs.push((a, b));
            }
        }
        ChordDiagram::from_pairs(&pairs)
    }
}

/// All `(2k-1)!!` diagrams with `k` chords, in lexicographic order of the
/// partner array.
pub fn enumerate_chords(k: usize) -> Vec<ChordDiagram> {
    fn go(partner: &mut Vec<usize>, out: &mut Vec<ChordDiagram>) {
        let Some(first) = partner.iter().position(|&p| p == usize::MAX) else {
            out.push(ChordDiagram::from_partner(partner.clone()));
            return;
        };
        for q in first + 1..partner.len() {
            if partner[q] == usize::MAX {
                partner[first] = q;
                partner[q] = first;
                go(partner, out);
                partner[first] = usize::MAX;
                partner[q] = usize::MAX;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut vec![usize::MAX; 2 * k], &mut out);
    out.sort();
    out
}

/// Moves the end at position `from` so that it sits at position `to` of the
/// resulting sequence; other ends keep their relative order.
fn move_end(d: &ChordDiagram, from: usize, to: usize) -> ChordDiagram {
    let mut order: Vec<usize> = (0..d.partner.len()).filter(|&p| p != from).collect();
    order.insert(to, from);
    let mut pos = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let mut partner = vec![0; order.len()];
    for (old, &q) in d.partner.iter().enumerate() {
        partner[pos[old]] = pos[q];
    }
    ChordDiagram::from_partner(partner)
}

/// Four-term relations of order `k` as signed diagram lists.
///
/// One end `p` of a chord is slid past each end `x` of another chord `c`:
/// `[p before x] - [p after x]` summed over both ends of `c`, which must
/// vanish.
pub fn four_term_relations(k: usize) -> Vec<Vec<(ChordDiagram, i64)>> {
    let mut rels = Vec::new();
    for d in enumerate_chords(k) {
        let m = d.partner.len();
        for p in 0..m {
            // positions with `p` removed
            let rest: Vec<usize> = (0..m).filter(|&q| q != p).collect();
            let idx = |q: usize| rest.iter().position(|&r| r == q).expect("present");
            for (a, b) in d.chords() {
                if a == p || b == p || d.partner[p] == a || d.partner[p] == b {
                    continue;
                }
                let (x, y) = (idx(a), idx(b));
                let terms = vec![
                    (move_end(&d, p, x), 1),
                    (move_end(&d, p, x + 1), -1),
                    (move_end(&d, p, y), 1),
                    (move_end(&d, p, y + 1), -1),
                ];
                rels.push(terms);
            }
        }
    }
    rels
}

/// Dimension of the degree-`k` part of the chord algebra modulo 4T, and
/// modulo 1T as well when `use_1t` is set.
pub fn algebra_dimension(k: usize, use_1t: bool) -> usize {
    let basis = enumerate_chords(k);
    let index: HashMap<&ChordDiagram, usize> = basis.iter().enumerate().map(|(i, d)| (d, i)).collect();
    let mut ech = Echelon::new();
    let unit = |i: usize| {
        let mut v = vec![Coeff::zero(); basis.len()];
        v[i] = Coeff::one();
        v
    };
    if use_1t {
        for (i, d) in basis.iter().enumerate() {
            if d.has_isolated_chord() {
                ech.insert(dense_to_sparse(&unit(i)));
            }
        }
    }
    for rel in four_term_relations(k) {
        let mut v = vec![Coeff::zero(); basis.len()];
        for (d, c) in rel {
            v[index[&d]] += Coeff::from_integer(c.into());
        }
        ech.insert(dense_to_sparse(&v));
    }
    basis.len() - ech.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(enumerate_chords(1).len(), 1);
        assert_eq!(enumerate_chords(2).len(), 3);
        assert_eq!(enumerate_chords(3).len(), 15);
        assert_eq!(enumerate_chords(4).len(), 105);
    }

    #[test]
    fn text_round_trip() {
        let d: ChordDiagram = "C[1-3, 2-4]".parse().unwrap();
        assert_eq!(d.to_string(), "C[1-3,2-4]");
        assert_eq!(d.to_graph().to_string(), "G[4,0;E{1>3,2>4}]");
        assert!("C[1-2,2-3]".parse::<ChordDiagram>().is_err());
        assert!("C[1-5,2-3]".parse::<ChordDiagram>().is_err());
    }

    #[test]
    fn isolated() {
        let nested: ChordDiagram = "C[1-4,2-3]".parse().unwrap();
        let crossed: ChordDiagram = "C[1-3,2-4]".parse().unwrap();
        assert!(nested.has_isolated_chord());
        assert!(!crossed.has_isolated_chord());
        assert!(crossed.concat(&crossed).to_string() == "C[1-3,2-4,5-7,6-8]");
    }

    #[test]
    fn dimensions() {
        assert_eq!(algebra_dimension(2, true), 1);
        assert_eq!(algebra_dimension(3, true), 1);
        assert_eq!(algebra_dimension(4, true), 3);
        assert_eq!(algebra_dimension(2, false), 2);
        assert_eq!(algebra_dimension(3, false), 3);
    }
}
