use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::LmError;

/// Source-side token standing for "aligned to nothing".
pub const NULL_WORD: &str = "<null>";

const FORMAT: &str = "lex-v1";

/// Lexical translation probabilities `t(target | source)`, one row per
/// source word (including [`NULL_WORD`]). Each row sums to one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LexicalTable {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Serialize, Deserialize)]
struct LexDoc {
    format: String,
    t: BTreeMap<String, BTreeMap<String, f64>>,
}

impl LexicalTable {
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.rows
            .get(source)
            .and_then(|row| row.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, source: &str) -> Option<&BTreeMap<String, f64>> {
        self.rows.get(source)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, f64>)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn from_rows(rows: BTreeMap<String, BTreeMap<String, f64>>) -> Self {
        LexicalTable { rows }
    }

    /// Number of target words with `t(target | source_word) > threshold`.
    pub fn translations_per_word(&self, source_word: &str, threshold: f64) -> usize {
        self.rows
            .get(source_word)
            .map_or(0, |row| row.values().filter(|&&p| p > threshold).count())
    }

    /// Training-data log-likelihood under Model 1 (uniform alignment prior).
    pub fn log_likelihood<S: AsRef<str>>(&self, parallel: &[(Vec<S>, Vec<S>)]) -> f64 {
        parallel
            .iter()
            .map(|(src, tgt)| {
                let norm = (src.len() + 1) as f64;
                tgt.iter()
                    .map(|f| {
                        let f = f.as_ref();
                        let mass = self.prob(NULL_WORD, f)
                            + src.iter().map(|e| self.prob(e.as_ref(), f)).sum::<f64>();
                        (mass / norm).ln()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        let doc = LexDoc {
            format: FORMAT.to_string(),
            t: self.rows.clone(),
        };
        serde_json::to_string_pretty(&serde_json::to_value(doc).expect("plain data")).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self, LmError> {
        let doc: LexDoc = serde_json::from_str(text)?;
        if doc.format != FORMAT {
            return Err(LmError::Format {
                expected: FORMAT,
                found: doc.format,
            });
        }
        Ok(LexicalTable { rows: doc.t })
    }
}

/// IBM Model 1 trained by expectation-maximization, starting from uniform
/// translation probabilities. Sentence pairs are visited in order, so the
/// result is bit-for-bit deterministic.
pub fn train_model1<S: AsRef<str>>(
    parallel: &[(Vec<S>, Vec<S>)],
    iterations: usize,
) -> Result<LexicalTable, LmError> {
    if iterations == 0 {
        return Err(LmError::ZeroIterations);
    }
    if parallel.iter().all(|(_, tgt)| tgt.is_empty()) {
        return Err(LmError::EmptyCorpus);
    }

    let mut src_vocab: HashMap<&str, usize> = HashMap::from([(NULL_WORD, 0)]);
    let mut src_words = vec![NULL_WORD];
    let mut tgt_vocab: HashMap<&str, usize> = HashMap::new();
    let mut tgt_words = Vec::new();
    let pairs: Vec<(Vec<usize>, Vec<usize>)> = parallel
        .iter()
        .map(|(src, tgt)| {
            let mut s = vec![0];
            for w in src {
                let w = w.as_ref();
                s.push(*src_vocab.entry(w).or_insert_with(|| {
                    src_words.push(w);
                    src_words.len() - 1
                }));
            }
            let t = tgt
                .iter()
                .map(|w| {
                    let w = w.as_ref();
                    *tgt_vocab.entry(w).or_insert_with(|| {
                        tgt_words.push(w);
                        tgt_words.len() - 1
                    })
                })
                .collect();
            (s, t)
        })
        .collect();

    let uniform = 1.0 / tgt_words.len() as f64;
    let mut t: HashMap<(usize, usize), f64> = HashMap::new();
    for (s, f) in &pairs {
        for &fj in f {
            for &ei in s {
                t.insert((ei, fj), uniform);
            }
        }
    }

    for _ in 0..iterations {
        let mut counts: HashMap<(usize, usize), f64> = HashMap::with_capacity(t.len());
        let mut totals = vec![0.0; src_words.len()];
        for (s, f) in &pairs {
            for &fj in f {
                let denom: f64 = s.iter().map(|&ei| t[&(ei, fj)]).sum();
                for &ei in s {
                    let share = t[&(ei, fj)] / denom;
                    *counts.entry((ei, fj)).or_insert(0.0) += share;
                    totals[ei] += share;
                }
            }
        }
        for (key, c) in counts {
            t.insert(key, c / totals[key.0]);
        }
    }

    let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for ((ei, fj), p) in t {
        rows.entry(src_words[ei].to_string())
            .or_default()
            .insert(tgt_words[fj].to_string(), p);
    }
    Ok(LexicalTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(raw: &[(&str, &str)]) -> Vec<(Vec<String>, Vec<String>)> {
        raw.iter()
            .map(|(s, t)| {
                (
                    s.split_whitespace().map(String::from).collect(),
                    t.split_whitespace().map(String::from).collect(),
                )
            })
            .collect()
    }

    /// Straight-line EM over dense tables, written independently of the
    /// interned implementation.
    fn reference_em(corpus: &[(Vec<String>, Vec<String>)], iterations: usize) -> BTreeMap<(String, String), f64> {
        let mut src: Vec<String> = vec![NULL_WORD.into()];
        let mut tgt: Vec<String> = Vec::new();
        for (s, t) in corpus {
            for w in s {
                if !src.contains(w) {
                    src.push(w.clone());
                }
            }
            for w in t {
                if !tgt.contains(w) {
                    tgt.push(w.clone());
                }
            }
        }
        let mut table = vec![vec![1.0 / tgt.len() as f64; tgt.len()]; src.len()];
        let idx = |v: &Vec<String>, w: &String| v.iter().position(|x| x == w).unwrap();
        for _ in 0..iterations {
            let mut count = vec![vec![0.0; tgt.len()]; src.len()];
            for (s, t) in corpus {
                let es: Vec<usize> = std::iter::once(0).chain(s.iter().map(|w| idx(&src, w))).collect();
                for f in t {
                    let fj = idx(&tgt, f);
                    let z: f64 = es.iter().map(|&e| table[e][fj]).sum();
                    for &e in &es {
                        count[e][fj] += table[e][fj] / z;
                    }
                }
            }
            for e in 0..src.len() {
                let total: f64 = count[e].iter().sum();
                if total > 0.0 {
                    for f in 0..tgt.len() {
                        table[e][f] = count[e][f] / total;
                    }
                }
            }
        }
        let mut out = BTreeMap::new();
        for (e, row) in table.iter().enumerate() {
            for (f, &p) in row.iter().enumerate() {
                out.insert((src[e].clone(), tgt[f].clone()), p);
            }
        }
        out
    }

    #[test]
    fn cat_dog_prefers_the_shared_article() {
        let corpus = pairs(&[("the cat", "le chat"), ("the dog", "le chien")]);
        let table = train_model1(&corpus, 5).unwrap();
        assert!(table.prob("the", "le") > table.prob("the", "chat"));

        let oracle = reference_em(&corpus, 5);
        for ((e, f), p) in &oracle {
            assert!((table.prob(e, f) - p).abs() < 1e-12, "t({f}|{e})");
        }
    }

    #[test]
    fn single_pair_rows_normalize() {
        let table = train_model1(&pairs(&[("a", "x")]), 3).unwrap();
        assert!((table.prob("a", "x") - 1.0).abs() < 1e-12);
        assert!((table.prob(NULL_WORD, "x") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rows_sum_to_one() {
        let corpus = pairs(&[
            ("the house is small", "la maison est petite"),
            ("the house", "la maison"),
            ("a small house", "une petite maison"),
            ("it is", "c' est"),
        ]);
        let table = train_model1(&corpus, 5).unwrap();
        for (_, row) in table.rows() {
            let total: f64 = row.values().sum();
            assert!((total - 1.0).abs() < 1e-6);
            assert!(row.values().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn likelihood_never_decreases() {
        let corpus = pairs(&[
            ("the house is small", "la maison est petite"),
            ("the house", "la maison"),
            ("a small book", "un petit livre"),
            ("the book is small", "le livre est petit"),
        ]);
        let lls: Vec<f64> = (1..=8)
            .map(|k| train_model1(&corpus, k).unwrap().log_likelihood(&corpus))
            .collect();
        assert!(lls.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{lls:?}");
    }

    #[test]
    fn translation_counts() {
        let rows = BTreeMap::from([(
            "w".to_string(),
            BTreeMap::from([("x".to_string(), 0.5), ("y".to_string(), 0.3), ("z".to_string(), 0.2)]),
        )]);
        let table = LexicalTable::from_rows(rows);
        assert_eq!(table.translations_per_word("w", 0.25), 2);
        assert_eq!(table.translations_per_word("unknown", 0.25), 0);

        let det = train_model1(&pairs(&[("a", "x")]), 5).unwrap();
        assert_eq!(det.translations_per_word("a", 0.2), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(train_model1(&pairs(&[("a", "x")]), 0), Err(LmError::ZeroIterations)));
        assert!(matches!(train_model1::<String>(&[], 5), Err(LmError::EmptyCorpus)));
    }

    #[test]
    fn json_round_trip() {
        let table = train_model1(&pairs(&[("the cat", "le chat"), ("the dog", "le chien")]), 5).unwrap();
        let text = table.to_json();
        let back = LexicalTable::from_json(&text).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.to_json(), text);
    }
}
