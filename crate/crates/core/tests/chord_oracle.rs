mod common;

use common::{all_words, oracle_dimension};
use graphcomplex::chord::{algebra_dimension, enumerate_chords};

#[test]
fn word_enumeration_matches() {
    for k in 1..=5 {
        assert_eq!(all_words(k).len(), enumerate_chords(k).len());
    }
}

#[test]
fn oracle_agrees_with_library() {
    for k in 1..=4 {
        for one_term in [true, false] {
            assert_eq!(oracle_dimension(k, one_term), algebra_dimension(k, one_term), "k={k} 1T={one_term}");
        }
    }
}

#[test]
fn oracle_known_values() {
    assert_eq!(oracle_dimension(2, true), 1);
    assert_eq!(oracle_dimension(3, true), 1);
    assert_eq!(oracle_dimension(4, true), 3);
}
