//! Degenerate text for robustness checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const PIECES: &[&str] = &[
    "", " ", "...", "-", "--", "euh", "ehm", "えー", "a-", "。", "、", "!!!", "?", "l'", "'", "’", "42", "3.14", "テスト",
    "日本語", "é", "ÉCOLE", "🙂", "\t", "x", "the", "le", "il", "これ", "ça", "(", ")", "\"", "…", "—", "a-b-", "..", "....",
];

pub fn junk(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..6);
    (0..n)
        .map(|_| PIECES[rng.random_range(0..PIECES.len())])
        .collect::<Vec<_>>()
        .join(if rng.random_bool(0.5) { " " } else { "" })
}

