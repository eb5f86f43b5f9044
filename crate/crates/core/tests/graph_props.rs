use std::sync::OnceLock;

use graphcomplex::cohomology::{enumerate_basis, max_degree};
use graphcomplex::differential::{delta, delta_vec};
use graphcomplex::graph::{canonicalize, format_graph, parse_graph, Graph, GraphVector};
use proptest::prelude::*;

/// Every basis graph with ord <= 3.
fn pool() -> &'static [Graph] {
    static POOL: OnceLock<Vec<Graph>> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut out = Vec::new();
        for k in 1..=3 {
            for l in 0..=max_degree(k) {
                out.extend(enumerate_basis(k, l).graphs().iter().cloned());
            }
        }
        out
    })
}

fn parity(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1;
    for i in 0..perm.len() {
        if seen[i] {
            continue;
        }
        let mut len = 0;
        let mut j = i;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn graph_and_moves() -> impl Strategy<Value = (Graph, Vec<usize>, Vec<bool>, Vec<bool>)> {
    (0..pool().len()).prop_flat_map(|i| {
        let g = pool()[i].clone();
        let vf = g.vf();
        let e = g.edges().len();
        let l = g.loops().len();
        (Just(g), Just((0..vf).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), e), prop::collection::vec(any::<bool>(), l))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn canonical_form_is_a_fixed_point(i in 0..pool().len()) {
        let g = &pool()[i];
        let sg = canonicalize(g);
        prop_assert_eq!(sg.sign, 1);
        prop_assert_eq!(&sg.graph, g);
    }

    #[test]
    fn relabeling_and_reversal_track_signs((g, perm, flips, loop_flips) in graph_and_moves()) {
        let mut h = g.relabel_free(&perm);
        let mut expected = parity(&perm);
        for (idx, f) in flips.iter().enumerate() {
            if *f {
                h = h.with_edge_reversed(idx);
                expected = -expected;
            }
        }
        for (idx, f) in loop_flips.iter().enumerate() {
            if *f {
                h = h.with_loop_flipped(idx);
                expected = -expected;
            }
        }
        let sg = canonicalize(&h);
        prop_assert_eq!(&sg.graph, &g);
        prop_assert_eq!(sg.sign, expected);
    }

    #[test]
    fn text_form_round_trips(i in 0..pool().len()) {
        let g = &pool()[i];
        prop_assert_eq!(&parse_graph(&format_graph(g)).unwrap(), g);
    }

    #[test]
    fn delta_commutes_with_relabeling((g, perm, flips, _l) in graph_and_moves()) {
        let mut h = g.relabel_free(&perm);
        for (idx, f) in flips.iter().enumerate() {
            if *f {
                h = h.with_edge_reversed(idx);
            }
        }
        let sign = canonicalize(&h).sign;
        let dh = delta(&h);
        let dg = delta(&g);
        let mut diff = dh.clone();
        diff.add_vector(&dg, &graphcomplex::graph::Coeff::from_integer((-sign).into()));
        prop_assert!(diff.is_zero());
    }

    #[test]
    fn delta_raises_degree_and_squares_to_zero(i in 0..pool().len()) {
        let g = &pool()[i];
        let gr = g.grading();
        let d = delta(g);
        for (h, _) in d.iter() {
            let hg = h.grading();
            prop_assert_eq!((hg.ord, hg.deg), (gr.ord, gr.deg + 1));
        }
        prop_assert!(delta_vec(&d).unwrap().is_zero());
    }
}

#[test]
fn degrees_are_nonnegative_and_vanish_exactly_on_trivalent_graphs() {
    for k in 1..=4 {
        for l in 0..=max_degree(k) {
            for g in enumerate_basis(k, l).graphs() {
                let gr = g.grading();
                assert!(gr.ord >= 0 && gr.deg >= 0);
                // interval valency counts the two line arcs
                let trivalent = (1..=g.num_vertices() as u8).all(|v| g.valency(v) == 3);
                assert_eq!(gr.deg == 0, trivalent, "{g}");
            }
        }
    }
}

#[test]
fn vector_sums_cancel() {
    let g = parse_graph("G[4,0;E{1>3,2>4}]").unwrap();
    let mut v = GraphVector::from_graph(&g);
    v.add_graph(&g.with_edge_reversed(0), &graphcomplex::graph::Coeff::from_integer(1.into()));
    assert!(v.is_zero());
}
