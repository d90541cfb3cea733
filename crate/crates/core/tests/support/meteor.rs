//! Frozen METEOR expectations and an exhaustive alignment search.

use interpqe::meteor::{align, meteor_score, Matcher, MeteorConfig};

/// (hypothesis, reference, matches, chunks, score); values from an
/// exhaustive reference implementation, frozen here.
pub const HAND_CASES: &[(&str, &str, usize, usize, f64)] = &[
    ("the cat sat on the mat", "the cat sat on the mat", 6, 1, 0.9976851851851852),
    ("a b c d e f g h i j", "a b c d e f g h i j", 10, 1, 0.9995),
    ("the cat", "the dog", 1, 1, 0.25),
    ("", "the cat", 0, 0, 0.0),
    ("a b c d", "d c b a", 4, 4, 0.5),
    ("the cat sat", "sat the cat", 3, 2, 0.8518518518518519),
    ("cats sat", "cat sits", 1, 1, 0.25),
    ("walked home", "walking home", 2, 1, 0.9375),
    ("the the the", "the", 1, 1, 0.41666666666666663),
    ("a b a b", "b a b a", 4, 2, 0.9375),
    ("The Cat", "the cat", 2, 1, 0.9375),
    ("well the cat um sat", "the cat sat", 3, 2, 0.7986111111111112),
    ("x y", "a b", 0, 0, 0.0),
    ("yes", "yes", 1, 1, 0.5),
    ("the quick brown fox", "the brown quick fox", 4, 4, 0.5),
    ("runs run", "run runs", 2, 2, 0.5),
    ("played games", "plays game", 1, 1, 0.25),
    (
        "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12 w13 w14 w15 w16 w17 w18 w19",
        "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12 w13 w14 w15 w16 w17 w18 w19",
        20,
        1,
        0.9999375,
    ),
    ("the cat the cat", "the cat", 2, 1, 0.8522727272727273),
    ("the", "the cat the cat", 1, 1, 0.13513513513513511),
    ("b a", "a b c", 2, 2, 0.3448275862068965),
    ("the parliament approved the budget", "parliament the approved budget the", 5, 5, 0.5),
    ("he was jumping and singing", "she jumped and sang", 2, 1, 0.45731707317073167),
];

/// Maximum matching size, then fewest chunks, over every injective
/// alignment of equal tokens.
pub fn brute_force(h: &[u8], r: &[u8]) -> (usize, usize) {
    fn go(h: &[u8], r: &[u8], i: usize, used: u32, last: Option<(usize, usize)>, m: usize, ch: usize, best: &mut (usize, usize)) {
        if i == h.len() {
            if m > best.0 || (m == best.0 && ch < best.1) {
                *best = (m, ch);
            }
            return;
        }
        // Even matching every remaining token cannot beat the best size.
        if m + (h.len() - i) < best.0 {
            return;
        }
        for j in 0..r.len() {
            if used & (1 << j) == 0 && h[i] == r[j] {
                let extends = matches!(last, Some((a, b)) if a + 1 == i && b + 1 == j);
                go(h, r, i + 1, used | (1 << j), Some((i, j)), m + 1, ch + usize::from(!extends), best);
            }
        }
        go(h, r, i + 1, used, last, m, ch, best);
    }
    let mut best = (0, 0);
    go(h, r, 0, 0, None, 0, 0, &mut best);
    best
}

pub fn all_sequences(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u8>| {
                (0..3u8).map(move |c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}


/// Checks every hand case; returns how many were checked.
pub fn check_hand_cases() -> Result<usize, String> {
    let cfg = MeteorConfig::default();
    for &(hyp, reference, m, ch, expected) in HAND_CASES {
        let h: Vec<&str> = hyp.split_whitespace().collect();
        let r: Vec<&str> = reference.split_whitespace().collect();
        let s = meteor_score(&h, &r, &cfg).map_err(|e| format!("{hyp:?} / {reference:?}: {e}"))?;
        if (s.matches, s.chunks) != (m, ch) || (s.score - expected).abs() > 1e-9 {
            return Err(format!(
                "{hyp:?} / {reference:?}: got ({}, {}, {}), expected ({m}, {ch}, {expected})",
                s.matches, s.chunks, s.score
            ));
        }
    }
    Ok(HAND_CASES.len())
}

/// Compares the aligner with [`brute_force`] on every pair of sequences of
/// length at most 6 over three symbols; returns the number of pairs.
pub fn check_exhaustive() -> Result<usize, String> {
    const SYMBOLS: [&str; 3] = ["x", "y", "z"];
    let cfg = MeteorConfig {
        matchers: vec![Matcher::Exact],
        ..MeteorConfig::default()
    };
    let seqs = all_sequences(6);
    let words: Vec<Vec<&str>> = seqs.iter().map(|s| s.iter().map(|&c| SYMBOLS[c as usize]).collect()).collect();
    let mut pairs = 0;
    for (h, hw) in seqs.iter().zip(&words) {
        for (r, rw) in seqs.iter().zip(&words) {
            let a = align(hw, rw, &cfg);
            let mut seen_r = 0u32;
            for &(i, j) in &a.pairs {
                if h[i] != r[j] || seen_r & (1 << j) != 0 {
                    return Err(format!("{hw:?} / {rw:?}: invalid pair ({i}, {j})"));
                }
                seen_r |= 1 << j;
            }
            let expected = brute_force(h, r);
            if (a.matches(), a.chunks()) != expected {
                return Err(format!(
                    "{hw:?} / {rw:?}: got ({}, {}), expected {expected:?}",
                    a.matches(),
                    a.chunks()
                ));
            }
            pairs += 1;
        }
    }
    Ok(pairs)
}
