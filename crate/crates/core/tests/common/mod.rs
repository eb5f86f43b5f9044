// Brute-force chord algebra dimensions, coded without the library's
// relation generator: diagrams are Gauss words, relations come from
// inserting a dangling end into a word with one end missing, and rank is
// taken modulo a large prime.

use std::collections::HashMap;

const P: u64 = 2_147_483_647;

fn canon(word: &[u8]) -> Vec<u8> {
    let mut map = HashMap::new();
    word.iter()
        .map(|c| {
            let next = map.len() as u8;
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

pub fn all_words(k: usize) -> Vec<Vec<u8>> {
    fn go(word: &mut Vec<u8>, open: &mut Vec<u8>, next: u8, k: usize, out: &mut Vec<Vec<u8>>) {
        if word.len() == 2 * k {
            out.push(word.clone());
            return;
        }
        // start a new chord
        if (next as usize) < k {
            word.push(next);
            open.push(next);
            go(word, open, next + 1, k, out);
            open.pop();
            word.pop();
        }
        // close any open chord
        for i in 0..open.len() {
            let c = open.remove(i);
            word.push(c);
            go(word, open, next, k, out);
            word.pop();
            open.insert(i, c);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut Vec::new(), 0, k, &mut out);
    out
}

fn isolated(word: &[u8]) -> bool {
    (0..word.len()).any(|i| {
        let j = (i + 1..word.len()).find(|&j| word[j] == word[i]);
        match j {
            Some(j) => {
                let inside = &word[i + 1..j];
                inside.iter().all(|c| inside.iter().filter(|d| *d == c).count() == 2)
            }
            None => false,
        }
    })
}

fn rank_mod_p(mut rows: Vec<Vec<u64>>, cols: usize) -> usize {
    let inv = |a: u64| {
        let (mut r, mut b, mut e) = (1u64, a % P, P - 2);
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % P;
            }
            b = b * b % P;
            e >>= 1;
        }
        r
    };
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else { continue };
        rows.swap(rank, p);
        let iv = inv(rows[rank][c]);
        let pivot: Vec<u64> = rows[rank].iter().map(|x| x * iv % P).collect();
        for r in rank + 1..rows.len() {
            let f = rows[r][c];
            if f != 0 {
                for (x, y) in rows[r].iter_mut().zip(&pivot) {
                    *x = (*x + P - f * y % P) % P;
                }
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    rank
}

pub fn oracle_dimension(k: usize, one_term: bool) -> usize {
    let words = all_words(k);
    let index: HashMap<Vec<u8>, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let mut rows = Vec::new();
    if one_term {
        for (i, w) in words.iter().enumerate() {
            if isolated(w) {
                let mut row = vec![0; words.len()];
                row[i] = 1;
                rows.push(row);
            }
        }
    }
    // every word with one end of chord `d` deleted; reinsert it beside the
    // ends of another chord
    for w in &words {
        for drop in 0..w.len() {
            let d = w[drop];
            let mut base = w.clone();
            base.remove(drop);
            for c in 0..k as u8 {
                if c == d {
                    continue;
                }
                let ends: Vec<usize> = (0..base.len()).filter(|&i| base[i] == c).collect();
                let mut row = vec![0u64; words.len()];
                for &at in &ends {
                    for (shift, sign) in [(0usize, 1i64), (1, -1)] {
                        let mut nw = base.clone();
                        nw.insert(at + shift, d);
                        let j = index[&canon(&nw)];
                        row[j] = (row[j] + if sign > 0 { 1 } else { P - 1 }) % P;
                    }
                }
                rows.push(row);
            }
        }
    }
    words.len() - rank_mod_p(rows, words.len())
}
