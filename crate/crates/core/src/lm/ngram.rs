use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::LmError;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const FORMAT: &str = "ngram-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuartileClass {
    Q1,
    Q2,
    Q3,
    Q4,
    Unseen,
}

/// Count thresholds splitting the observed n-grams of each order into four
/// frequency classes. `thresholds[n - 1] = [q1, q2, q3]`, where `qk` is the
/// count found `k/4` of the way up the ascending list of counts. An n-gram
/// with count `c` is Q4 if `c >= q3`, Q3 if `c >= q2`, Q2 if `c >= q1`,
/// otherwise Q1, so equal counts always share a class and the most frequent
/// n-gram is always Q4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyQuartiles {
    pub thresholds: Vec<[u64; 3]>,
}

impl FrequencyQuartiles {
    fn from_counts(counts: &[HashMap<String, u64>]) -> Self {
        let thresholds = counts
            .iter()
            .map(|table| {
                let mut sorted: Vec<u64> = table.values().copied().collect();
                sorted.sort_unstable();
                if sorted.is_empty() {
                    return [u64::MAX; 3];
                }
                let at = |k: usize| sorted[k * sorted.len() / 4];
                [at(1), at(2), at(3)]
            })
            .collect();
        FrequencyQuartiles { thresholds }
    }

    pub fn classify(&self, order: usize, count: u64) -> QuartileClass {
        if count == 0 || order == 0 || order > self.thresholds.len() {
            return QuartileClass::Unseen;
        }
        let [q1, q2, q3] = self.thresholds[order - 1];
        if count >= q3 {
            QuartileClass::Q4
        } else if count >= q2 {
            QuartileClass::Q3
        } else if count >= q1 {
            QuartileClass::Q2
        } else {
            QuartileClass::Q1
        }
    }
}

/// Count-based n-gram model with add-one smoothing and back-off to shorter
/// histories when a history was never observed.
///
/// Unigram estimates are `(c(w) + 1) / (N + V)` over the training vocabulary;
/// out-of-vocabulary tokens map to `<unk>` with count 0. For higher orders the
/// predicted event space is the vocabulary plus `</s>`, so estimates are
/// `(c(h w) + 1) / (c(h) + V + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    /// `counts[n - 1]` maps space-joined n-grams to counts.
    counts: Vec<HashMap<String, u64>>,
    /// `contexts[n - 1]` maps space-joined histories of length `n - 1` to the
    /// number of times they were followed by anything. Empty for `n = 1`.
    contexts: Vec<HashMap<String, u64>>,
    vocab_size: usize,
    total_tokens: u64,
    min_sentence_logprob: f64,
    quartiles: FrequencyQuartiles,
}

#[derive(Serialize, Deserialize)]
struct NgramDoc {
    format: String,
    order: usize,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    vocab_size: usize,
    total_tokens: u64,
    min_sentence_logprob: f64,
}

/// The n-grams of `tokens` as space-joined keys. Orders above one are padded
/// with `n - 1` start symbols and a single end symbol.
pub fn padded_ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Vec<String> {
    if n == 0 || tokens.is_empty() {
        return Vec::new();
    }
    if n == 1 {
        return tokens.iter().map(|t| t.as_ref().to_string()).collect();
    }
    let mut padded: Vec<&str> = vec![BOS; n - 1];
    padded.extend(tokens.iter().map(AsRef::as_ref));
    padded.push(EOS);
    padded.windows(n).map(|w| w.join(" ")).collect()
}

pub fn train_ngram<S: AsRef<str>>(corpus: &[Vec<S>], order: usize) -> Result<NgramModel, LmError> {
    if !(1..=3).contains(&order) {
        return Err(LmError::InvalidOrder(order));
    }
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let mut counts = vec![HashMap::new(); order];
    let mut total_tokens = 0u64;
    for sentence in corpus.iter().filter(|s| !s.is_empty()) {
        for t in sentence {
            let t = t.as_ref();
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(LmError::InvalidToken(t.to_string()));
            }
        }
        total_tokens += sentence.len() as u64;
        for (n, table) in counts.iter_mut().enumerate() {
            for key in padded_ngrams(sentence, n + 1) {
                *table.entry(key).or_insert(0) += 1;
            }
        }
    }
    if total_tokens == 0 {
        return Err(LmError::EmptyCorpus);
    }
    let mut model = NgramModel::assemble(order, counts, total_tokens, 0.0);
    model.min_sentence_logprob = corpus
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| model.logprob(s).expect("nonempty sentence"))
        .fold(f64::INFINITY, f64::min);
    Ok(model)
}

impl NgramModel {
    fn assemble(order: usize, counts: Vec<HashMap<String, u64>>, total_tokens: u64, min_lp: f64) -> Self {
        let mut contexts = vec![HashMap::new(); order];
        for n in 2..=order {
            for (key, &c) in &counts[n - 1] {
                let history = key.rsplit_once(' ').map_or("", |(h, _)| h);
                *contexts[n - 1].entry(history.to_string()).or_insert(0) += c;
            }
        }
        let quartiles = FrequencyQuartiles::from_counts(&counts);
        NgramModel {
            order,
            vocab_size: counts[0].len(),
            counts,
            contexts,
            total_tokens,
            min_sentence_logprob: min_lp,
            quartiles,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn quartiles(&self) -> &FrequencyQuartiles {
        &self.quartiles
    }

    /// Lowest length-normalized log-probability over the training sentences.
    pub fn min_sentence_logprob(&self) -> f64 {
        self.min_sentence_logprob
    }

    /// Count of a space-joined n-gram (0 if unseen or longer than the order).
    pub fn count(&self, key: &str) -> u64 {
        let n = key.split(' ').count();
        if n == 0 || n > self.order {
            return 0;
        }
        self.counts[n - 1].get(key).copied().unwrap_or(0)
    }

    pub fn unigram_count(&self, token: &str) -> u64 {
        self.counts[0].get(token).copied().unwrap_or(0)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.counts[0].keys().map(String::as_str)
    }

    /// Smoothed probability of `word` after `history` (oldest first), backing
    /// off while the history is unseen. Both are expected to be already mapped
    /// through the vocabulary (`<unk>` for unknown words).
    pub fn prob(&self, history: &[&str], word: &str) -> f64 {
        let keep = history.len().min(self.order - 1);
        let mut history = &history[history.len() - keep..];
        let v = self.vocab_size as f64;
        loop {
            if history.is_empty() {
                let c = self.unigram_count(word) as f64;
                return (c + 1.0) / (self.total_tokens as f64 + v);
            }
            let n = history.len() + 1;
            let h = history.join(" ");
            if let Some(&ch) = self.contexts[n - 1].get(&h) {
                let c = self.counts[n - 1].get(&format!("{h} {word}")).copied().unwrap_or(0);
                return (c as f64 + 1.0) / (ch as f64 + v + 1.0);
            }
            history = &history[1..];
        }
    }

    /// Mean per-token natural-log probability of `tokens`.
    pub fn logprob<S: AsRef<str>>(&self, tokens: &[S]) -> Result<f64, LmError> {
        if tokens.is_empty() {
            return Err(LmError::EmptyInput);
        }
        let mapped: Vec<&str> = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                if self.counts[0].contains_key(t) {
                    t
                } else {
                    UNK
                }
            })
            .collect();
        let mut padded: Vec<&str> = vec![BOS; self.order - 1];
        padded.extend(&mapped);
        let offset = self.order - 1;
        let total: f64 = (0..mapped.len())
            .map(|i| {
                let at = offset + i;
                self.prob(&padded[i..at], padded[at]).ln()
            })
            .sum();
        Ok(total / mapped.len() as f64)
    }

    pub fn quartile_class<S: AsRef<str>>(&self, ngram: &[S]) -> QuartileClass {
        let n = ngram.len();
        if n == 0 || n > self.order {
            return QuartileClass::Unseen;
        }
        let key = ngram.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
        self.quartiles.classify(n, self.count(&key))
    }

    /// Class of an already space-joined n-gram key.
    pub fn quartile_class_of_key(&self, key: &str) -> QuartileClass {
        let n = key.split(' ').count();
        self.quartiles.classify(n, self.count(key))
    }

    pub fn to_json(&self) -> String {
        let doc = NgramDoc {
            format: FORMAT.to_string(),
            order: self.order,
            counts: self
                .counts
                .iter()
                .enumerate()
                .map(|(i, t)| ((i + 1).to_string(), t.iter().map(|(k, &v)| (k.clone(), v)).collect()))
                .collect(),
            vocab_size: self.vocab_size,
            total_tokens: self.total_tokens,
            min_sentence_logprob: self.min_sentence_logprob,
        };
        let value = serde_json::to_value(doc).expect("plain data");
        serde_json::to_string_pretty(&value).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self, LmError> {
        let doc: NgramDoc = serde_json::from_str(text)?;
        if doc.format != FORMAT {
            return Err(LmError::Format {
                expected: FORMAT,
                found: doc.format,
            });
        }
        if !(1..=3).contains(&doc.order) {
            return Err(LmError::InvalidOrder(doc.order));
        }
        let mut counts = vec![HashMap::new(); doc.order];
        for (n, table) in doc.counts {
            let n: usize = n.parse().map_err(|_| LmError::Corrupt(format!("bad order key `{n}`")))?;
            if n == 0 || n > doc.order {
                return Err(LmError::Corrupt(format!("order {n} exceeds model order")));
            }
            counts[n - 1] = table.into_iter().collect();
        }
        let model = NgramModel::assemble(doc.order, counts, doc.total_tokens, doc.min_sentence_logprob);
        if model.vocab_size != doc.vocab_size {
            return Err(LmError::Corrupt("vocab_size does not match unigram table".into()));
        }
        Ok(model)
    }
}
