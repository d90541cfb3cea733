//! METEOR-style scoring of interpreter output against a reference.
//!
//! Tokens are aligned in stages: exact (case-folded) matches first, then
//! matches on a light suffix-stripping stem among the tokens left over. Each
//! stage adds as many matches as possible and, among those maximal sets,
//! picks one giving the fewest chunks overall; remaining ties go to the
//! leftmost pairing. The score is
//!
//! ```text
//! Fmean   = P·R / (alpha·P + (1 − alpha)·R)
//! penalty = gamma · (chunks / matches)^beta
//! score   = Fmean · (1 − penalty)
//! ```
//!
//! and 0 when nothing matches.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::text::{tokenize, Lang, TextError};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MeteorError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("invalid metric configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Exact,
    Stem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteorConfig {
    /// Precision/recall balance, in (0, 1).
    pub alpha: f64,
    /// Fragmentation exponent, > 0.
    pub beta: f64,
    /// Fragmentation penalty weight, in [0, 1).
    pub gamma_pen: f64,
    pub matchers: Vec<Matcher>,
    /// Language whose stemmer the `stem` stage uses.
    pub lang: Lang,
}

impl Default for MeteorConfig {
    fn default() -> Self {
        MeteorConfig {
            alpha: 0.9,
            beta: 3.0,
            gamma_pen: 0.5,
            matchers: vec![Matcher::Exact, Matcher::Stem],
            lang: Lang::En,
        }
    }
}

impl MeteorConfig {
    pub fn for_lang(lang: Lang) -> Self {
        MeteorConfig {
            lang,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MeteorError> {
        let bad = |m: &str| Err(MeteorError::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma_pen) {
            return bad("gamma_pen must lie in [0, 1)");
        }
        if self.matchers.first() != Some(&Matcher::Exact) {
            return bad("matcher list must begin with `exact`");
        }
        let mut seen = self.matchers.clone();
        seen.dedup();
        if seen.len() != self.matchers.len() || (seen.len() == 2 && seen[1] != Matcher::Stem) {
            return bad("matchers must be `exact` optionally followed by `stem`");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorScore {
    pub score: f64,
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
}

const EN_SUFFIXES: &[&str] = &["ing", "ed", "es", "s"];
const FR_SUFFIXES: &[&str] = &[
    "ement", "ment", "ation", "ions", "ons", "ées", "ée", "és", "er", "ez", "es", "é", "e", "s",
];
const IT_SUFFIXES: &[&str] = &[
    "mente", "zione", "zioni", "ando", "endo", "are", "ere", "ire", "ato", "ata", "ati", "ate", "i", "e",
    "a", "o",
];
const MIN_STEM_CHARS: usize = 3;

/// Lowercases and strips the longest listed suffix that leaves at least
/// three characters. Japanese tokens are returned unchanged.
pub fn stem(token: &str, lang: Lang) -> String {
    let lower = token.to_lowercase();
    let suffixes = match lang {
        Lang::En => EN_SUFFIXES,
        Lang::Fr => FR_SUFFIXES,
        Lang::It => IT_SUFFIXES,
        Lang::Ja => return lower,
    };
    let len = lower.chars().count();
    suffixes
        .iter()
        .filter(|s| lower.ends_with(*s) && len - s.chars().count() >= MIN_STEM_CHARS)
        .max_by_key(|s| s.chars().count())
        .map(|s| lower[..lower.len() - s.len()].to_string())
        .unwrap_or(lower)
}

/// Matched `(hypothesis index, reference index)` pairs, sorted by hypothesis
/// index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
}

impl Alignment {
    pub fn matches(&self) -> usize {
        self.pairs.len()
    }

    /// Number of maximal runs that are contiguous in both sequences.
    pub fn chunks(&self) -> usize {
        count_chunks(&self.pairs)
    }
}

/// Chunk count of a set of one-to-one pairs (any order).
pub fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    sorted
        .iter()
        .enumerate()
        .filter(|&(k, &(h, r))| k == 0 || !(sorted[k - 1].0 + 1 == h && sorted[k - 1].1 + 1 == r))
        .count()
}

/// Beyond this many memoized states a stage falls back to greedy pairing.
const SEARCH_BUDGET: usize = 250_000;

#[derive(Clone, Copy)]
enum Choice {
    Skip,
    Take(usize),
}

struct StageSearch<'a> {
    /// Fixed ref index per hypothesis position from earlier stages.
    fixed: &'a [Option<usize>],
    /// Key id per hypothesis position, for positions open in this stage.
    hyp_key: Vec<Option<usize>>,
    /// Open reference positions per key, ascending.
    refs_by_key: Vec<Vec<usize>>,
    quota: Vec<usize>,
    /// `open_after[i][k]`: open hypothesis positions with key `k` after `i`.
    open_after: Vec<Vec<usize>>,
    words: usize,
    memo: HashMap<(usize, usize, Vec<u64>), (usize, Choice)>,
    over_budget: bool,
}

const NONE: usize = usize::MAX;

impl StageSearch<'_> {
    fn continues(prev: usize, j: usize) -> bool {
        prev != NONE && prev + 1 == j
    }

    fn solve(&mut self, i: usize, prev: usize, used: &mut Vec<u64>, needed: &mut [usize]) -> usize {
        if i == self.fixed.len() || self.over_budget {
            return 0;
        }
        if let Some(j) = self.fixed[i] {
            let step = usize::from(!Self::continues(prev, j));
            return step + self.solve(i + 1, j, used, needed);
        }
        let Some(k) = self.hyp_key[i].filter(|&k| needed[k] > 0) else {
            return self.solve(i + 1, NONE, used, needed);
        };
        let key = (i, prev, used.clone());
        if let Some(&(cost, _)) = self.memo.get(&key) {
            return cost;
        }
        if self.memo.len() >= SEARCH_BUDGET {
            self.over_budget = true;
            return 0;
        }
        let mut best = (usize::MAX, Choice::Skip);
        for idx in 0..self.refs_by_key[k].len() {
            let j = self.refs_by_key[k][idx];
            if used[j / 64] & (1 << (j % 64)) != 0 {
                continue;
            }
            used[j / 64] |= 1 << (j % 64);
            needed[k] -= 1;
            let cost = usize::from(!Self::continues(prev, j)) + self.solve(i + 1, j, used, needed);
            needed[k] += 1;
            used[j / 64] &= !(1 << (j % 64));
            if cost < best.0 {
                best = (cost, Choice::Take(j));
            }
        }
        if self.open_after[i][k] >= needed[k] {
            let cost = self.solve(i + 1, NONE, used, needed);
            if cost < best.0 {
                best = (cost, Choice::Skip);
            }
        }
        self.memo.insert(key, best);
        best.0
    }

    /// Replays memoized choices into an assignment.
    fn reconstruct(&self, mut needed: Vec<usize>) -> Vec<Option<usize>> {
        let mut used = vec![0u64; self.words];
        let mut out = self.fixed.to_vec();
        let mut prev = NONE;
        for i in 0..self.fixed.len() {
            if let Some(j) = self.fixed[i] {
                prev = j;
                continue;
            }
            let choice = match self.hyp_key[i].filter(|&k| needed[k] > 0) {
                Some(_) => self.memo[&(i, prev, used.clone())].1,
                None => Choice::Skip,
            };
            match choice {
                Choice::Take(j) => {
                    used[j / 64] |= 1 << (j % 64);
                    needed[self.hyp_key[i].expect("open")] -= 1;
                    out[i] = Some(j);
                    prev = j;
                }
                Choice::Skip => prev = NONE,
            }
        }
        out
    }

    /// Deterministic fallback: match every open position while its quota
    /// lasts, preferring the pairing that extends the current chunk.
    fn greedy(&self) -> Vec<Option<usize>> {
        let mut used = vec![false; self.refs_by_key.iter().flatten().max().map_or(0, |m| m + 1)];
        let mut needed = self.quota.clone();
        let mut out = self.fixed.to_vec();
        let mut prev = NONE;
        for i in 0..self.fixed.len() {
            if let Some(j) = self.fixed[i] {
                prev = j;
                continue;
            }
            let pick = self.hyp_key[i].filter(|&k| needed[k] > 0).and_then(|k| {
                let free: Vec<usize> = self.refs_by_key[k].iter().copied().filter(|&j| !used[j]).collect();
                free.iter().copied().find(|&j| Self::continues(prev, j)).or(free.first().copied())
            });
            match pick {
                Some(j) => {
                    used[j] = true;
                    needed[self.hyp_key[i].expect("open")] -= 1;
                    out[i] = Some(j);
                    prev = j;
                }
                None => prev = NONE,
            }
        }
        out
    }
}

fn run_stage(hyp_keys: &[String], ref_keys: &[String], fixed: &[Option<usize>]) -> Vec<Option<usize>> {
    let ref_taken: Vec<bool> = {
        let mut t = vec![false; ref_keys.len()];
        for j in fixed.iter().flatten() {
            t[*j] = true;
        }
        t
    };
    let mut key_ids: HashMap<&str, usize> = HashMap::new();
    let mut refs_by_key: Vec<Vec<usize>> = Vec::new();
    for (j, key) in ref_keys.iter().enumerate() {
        if ref_taken[j] {
            continue;
        }
        let id = *key_ids.entry(key).or_insert_with(|| {
            refs_by_key.push(Vec::new());
            refs_by_key.len() - 1
        });
        refs_by_key[id].push(j);
    }
    let hyp_key: Vec<Option<usize>> = hyp_keys
        .iter()
        .zip(fixed)
        .map(|(key, f)| if f.is_some() { None } else { key_ids.get(key.as_str()).copied() })
        .collect();
    let mut hyp_open = vec![0usize; refs_by_key.len()];
    for k in hyp_key.iter().flatten() {
        hyp_open[*k] += 1;
    }
    let quota: Vec<usize> = hyp_open.iter().zip(&refs_by_key).map(|(&h, r)| h.min(r.len())).collect();
    if quota.iter().all(|&q| q == 0) {
        return fixed.to_vec();
    }
    let mut open_after = vec![vec![0usize; quota.len()]; hyp_keys.len()];
    let mut running = vec![0usize; quota.len()];
    for i in (0..hyp_keys.len()).rev() {
        open_after[i].clone_from(&running);
        if let Some(k) = hyp_key[i] {
            running[k] += 1;
        }
    }
    let words = ref_keys.len().div_ceil(64).max(1);
    let mut search = StageSearch {
        fixed,
        hyp_key,
        refs_by_key,
        quota: quota.clone(),
        open_after,
        words,
        memo: HashMap::new(),
        over_budget: false,
    };
    let mut used = vec![0u64; words];
    let mut needed = quota.clone();
    search.solve(0, NONE, &mut used, &mut needed);
    if search.over_budget {
        log::debug!("alignment search exceeded {SEARCH_BUDGET} states; using greedy pairing");
        search.greedy()
    } else {
        search.reconstruct(quota)
    }
}

/// Aligns case-folded tokens stage by stage.
pub fn align<S: AsRef<str>>(hyp: &[S], reference: &[S], config: &MeteorConfig) -> Alignment {
    let mut fixed: Vec<Option<usize>> = vec![None; hyp.len()];
    for matcher in &config.matchers {
        let key = |t: &S| match matcher {
            Matcher::Exact => t.as_ref().to_lowercase(),
            Matcher::Stem => stem(t.as_ref(), config.lang),
        };
        let hyp_keys: Vec<String> = hyp.iter().map(key).collect();
        let ref_keys: Vec<String> = reference.iter().map(key).collect();
        fixed = run_stage(&hyp_keys, &ref_keys, &fixed);
    }
    Alignment {
        pairs: fixed
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect(),
    }
}

/// Score from alignment statistics alone.
pub fn score_from_counts(matches: usize, chunks: usize, hyp_len: usize, ref_len: usize, config: &MeteorConfig) -> MeteorScore {
    if matches == 0 {
        return MeteorScore {
            score: 0.0,
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
        };
    }
    let m = matches as f64;
    let precision = m / hyp_len as f64;
    let recall = m / ref_len as f64;
    let fmean = precision * recall / (config.alpha * precision + (1.0 - config.alpha) * recall);
    let penalty = config.gamma_pen * (chunks as f64 / m).powf(config.beta);
    MeteorScore {
        score: fmean * (1.0 - penalty),
        matches,
        chunks,
        precision,
        recall,
    }
}

pub fn meteor_score<S: AsRef<str>>(hyp: &[S], reference: &[S], config: &MeteorConfig) -> Result<MeteorScore, MeteorError> {
    config.validate()?;
    if reference.is_empty() {
        return Err(MeteorError::EmptyReference);
    }
    let alignment = align(hyp, reference, config);
    Ok(score_from_counts(
        alignment.matches(),
        alignment.chunks(),
        hyp.len(),
        reference.len(),
        config,
    ))
}

/// Tokenizes both sides in `lang` and scores them.
pub fn score_texts(hyp: &str, reference: &str, config: &MeteorConfig) -> Result<MeteorScore, MeteorError> {
    let h = tokenize(hyp, config.lang).tokens;
    let r = tokenize(reference, config.lang).tokens;
    meteor_score(&h, &r, config)
}

#[derive(Debug, Clone)]
pub struct CorpusScores {
    /// One entry per record, in corpus order.
    pub scores: Vec<(String, Result<MeteorScore, MeteorError>)>,
}

impl CorpusScores {
    /// Mean over the records that scored successfully.
    pub fn mean(&self) -> Option<f64> {
        let ok: Vec<f64> = self.scores.iter().filter_map(|(_, s)| s.as_ref().ok().map(|s| s.score)).collect();
        (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &MeteorError)> {
        self.scores
            .iter()
            .filter_map(|(id, s)| s.as_ref().err().map(|e| (id.as_str(), e)))
    }

    /// `utterance_id  meteor  matches  chunks`, successful records only.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("utterance_id\tmeteor\tmatches\tchunks\n");
        for (id, s) in &self.scores {
            if let Ok(s) = s {
                writeln!(out, "{id}\t{}\t{}\t{}", s.score, s.matches, s.chunks).expect("string write");
            }
        }
        out
    }
}

/// Scores every record's interpretation against its reference, in the
/// corpus's target language. Per-record failures are kept, not raised.
pub fn score_corpus(corpus: &Corpus, config: &MeteorConfig) -> CorpusScores {
    let lang = corpus.lang_pair().target_lang();
    let scores = corpus
        .records()
        .iter()
        .map(|r| {
            let result = lang.clone().map_err(MeteorError::from).and_then(|lang| {
                let cfg = MeteorConfig {
                    lang,
                    ..config.clone()
                };
                score_texts(&r.interp, &r.reference, &cfg)
            });
            (r.id.clone(), result)
        })
        .collect();
    CorpusScores { scores }
}

/// Reads the first two columns of a label TSV.
pub fn parse_labels(text: &str) -> Result<Vec<(String, f64)>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.starts_with("utterance_id\tmeteor") => {}
        _ => return Err("missing `utterance_id\\tmeteor` header".into()),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut cols = l.split('\t');
            let id = cols.next().unwrap_or_default().to_string();
            let value = cols
                .next()
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| format!("line {}: bad meteor column", i + 1))?;
            Ok((id, value))
        })
        .collect()
}
