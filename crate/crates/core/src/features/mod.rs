//! Feature manifests, per-utterance extraction and standardization.
//!
//! Every extractor run computes the whole [`CATALOGUE`]; manifests are
//! projections of it, so values shared between manifests are bit-equal.
//!
//! | id | definition |
//! |----|------------|
//! | `src_token_count` | source tokens |
//! | `tgt_token_count` | interpreter tokens |
//! | `src_avg_token_length` | mean characters per source token |
//! | `src_lm_logprob` | mean log-probability of the source under the source LM |
//! | `tgt_lm_logprob` | same for the interpretation under the target LM; empty output scores the LM's worst sentence minus one |
//! | `tgt_type_token_avg` | interpreter tokens per distinct type |
//! | `src_avg_translations_p02` | mean number of translations with `t > 0.2` per source token |
//! | `src_avg_translations_p001_invfreq` | mean of `translations(t > 0.01) / count(w)` per source token (0 for unseen words) |
//! | `src_unigram_q1_pct`, `src_unigram_q4_pct` | share of source unigrams in the lowest / highest frequency quartile |
//! | `src_bigram_q1_pct`, `src_bigram_q4_pct` | same for padded bigrams |
//! | `src_trigram_q1_pct`, `src_trigram_q4_pct` | same for padded trigrams |
//! | `src_seen_unigram_pct` | share of source tokens seen in LM training |
//! | `src_punct_count`, `tgt_punct_count` | punctuation tokens |
//! | `pause_ratio`, `filler_ratio`, `incomplete_ratio` | annotated tokens of each kind over all interpreter tokens |
//! | `nonspecific_ratio` | content tokens found in the seed list |
//! | `cognate_ratio` | content tokens that look borrowed from the source |
//! | `len_ratio` | source words over `max(1, interpreter words)` |
//! | `punct_ratio` | source over interpreter punctuation, 1 when both are 0, else `src / max(1, tgt)` |
//! | `len_diff_ratio` | `|source words − interpreter words| / max(1, source words)` |
//!
//! "Words" and "content tokens" exclude punctuation and, on the interpreter
//! side, tokens flagged as pauses, fillers or incomplete words.

mod extract;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_word_list, CorpusError};
use crate::lm::LmError;
use crate::text::{Lang, TextError};

pub use extract::{
    feat_cognates, feat_disfluency, feat_length_punct, feat_nonspecific, prepare, train_resources, FeatureExtractor,
    PreparedRecord, Resources, MODEL1_ITERATIONS, NGRAM_ORDER,
};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("resource `{0}` is missing")]
    MissingResource(&'static str),
    #[error("unsupported language pair `{0}`")]
    UnsupportedPair(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` listed twice")]
    DuplicateFeature(String),
    #[error("manifest mismatch: expected `{expected}`, found `{found}`")]
    ManifestMismatch { expected: String, found: String },
    #[error("standardizing needs at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("vector has {found} values, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("feature `{feature}` of `{utterance}` is not finite")]
    NonFinite { feature: String, utterance: String },
    #[error("feature table: {0}")]
    Tsv(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Every feature the extractor knows, in canonical order.
pub const CATALOGUE: [&str; 25] = [
    "src_token_count",
    "tgt_token_count",
    "src_avg_token_length",
    "src_lm_logprob",
    "tgt_lm_logprob",
    "tgt_type_token_avg",
    "src_avg_translations_p02",
    "src_avg_translations_p001_invfreq",
    "src_unigram_q1_pct",
    "src_unigram_q4_pct",
    "src_bigram_q1_pct",
    "src_bigram_q4_pct",
    "src_trigram_q1_pct",
    "src_trigram_q4_pct",
    "src_seen_unigram_pct",
    "src_punct_count",
    "tgt_punct_count",
    "pause_ratio",
    "filler_ratio",
    "incomplete_ratio",
    "nonspecific_ratio",
    "cognate_ratio",
    "len_ratio",
    "punct_ratio",
    "len_diff_ratio",
];

const BASELINE_LEN: usize = 17;
const TRIMMED_OUT: [&str; 5] = [
    "src_bigram_q1_pct",
    "src_bigram_q4_pct",
    "src_trigram_q1_pct",
    "src_trigram_q4_pct",
    "src_punct_count",
];
pub const DISFLUENCY_FEATURES: [&str; 3] = ["pause_ratio", "filler_ratio", "incomplete_ratio"];
const PROPOSED_EXTRA: [&str; 6] = [
    "pause_ratio",
    "filler_ratio",
    "incomplete_ratio",
    "nonspecific_ratio",
    "cognate_ratio",
    "len_diff_ratio",
];

pub fn catalogue_index(id: &str) -> Option<usize> {
    CATALOGUE.iter().position(|f| *f == id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub name: String,
    pub features: Vec<String>,
}

impl FeatureManifest {
    /// Builds a manifest after checking every id is known and listed once.
    pub fn custom(name: impl Into<String>, features: impl IntoIterator<Item = impl Into<String>>) -> Result<Self, FeatureError> {
        let features: Vec<String> = features.into_iter().map(Into::into).collect();
        for (i, f) in features.iter().enumerate() {
            if catalogue_index(f).is_none() {
                return Err(FeatureError::UnknownFeature(f.clone()));
            }
            if features[..i].contains(f) {
                return Err(FeatureError::DuplicateFeature(f.clone()));
            }
        }
        Ok(FeatureManifest {
            name: name.into(),
            features,
        })
    }

    pub fn baseline() -> Self {
        Self::custom("baseline", CATALOGUE[..BASELINE_LEN].iter().copied()).expect("static")
    }

    pub fn trimmed() -> Self {
        let kept = CATALOGUE[..BASELINE_LEN].iter().copied().filter(|f| !TRIMMED_OUT.contains(f));
        Self::custom("trimmed", kept).expect("static")
    }

    pub fn proposed() -> Self {
        let trimmed = Self::trimmed();
        Self::custom("proposed", trimmed.features.iter().map(String::as_str).chain(PROPOSED_EXTRA)).expect("static")
    }

    /// `baseline`, `trimmed` or `proposed`.
    pub fn named(name: &str) -> Result<Self, FeatureError> {
        match name {
            "baseline" => Ok(Self::baseline()),
            "trimmed" => Ok(Self::trimmed()),
            "proposed" => Ok(Self::proposed()),
            other => Err(FeatureError::UnknownFeature(format!("manifest {other}"))),
        }
    }

    /// A copy without the listed features, under a new name.
    pub fn without(&self, name: impl Into<String>, drop: &[&str]) -> Self {
        FeatureManifest {
            name: name.into(),
            features: self.features.iter().filter(|f| !drop.contains(&f.as_str())).cloned().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Catalogue positions of this manifest's features.
    pub fn indices(&self) -> Vec<usize> {
        self.features
            .iter()
            .map(|f| catalogue_index(f).expect("validated manifest"))
            .collect()
    }

    /// Selects this manifest's values from a full catalogue row.
    pub fn project(&self, full: &[f64]) -> Vec<f64> {
        self.indices().into_iter().map(|i| full[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub manifest: Arc<FeatureManifest>,
    pub utterance_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(manifest: Arc<FeatureManifest>, utterance_id: impl Into<String>, values: Vec<f64>) -> Result<Self, FeatureError> {
        let utterance_id = utterance_id.into();
        if values.len() != manifest.len() {
            return Err(FeatureError::Dimension {
                expected: manifest.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                feature: manifest.features[i].clone(),
                utterance: utterance_id,
            });
        }
        Ok(FeatureVector {
            manifest,
            utterance_id,
            values,
        })
    }
}

/// Pronouns, demonstratives and placeholder nouns for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList {
    pub lang: Lang,
    pub words: std::collections::BTreeSet<String>,
}

impl SeedList {
    pub fn parse(lang: Lang, text: &str) -> Self {
        SeedList {
            lang,
            words: parse_word_list(text),
        }
    }

    /// The list shipped in `resources/seeds/`.
    pub fn builtin(lang: Lang) -> Self {
        let text = match lang {
            Lang::En => include_str!("../../resources/seeds/en.txt"),
            Lang::Fr => include_str!("../../resources/seeds/fr.txt"),
            Lang::It => include_str!("../../resources/seeds/it.txt"),
            Lang::Ja => include_str!("../../resources/seeds/ja.txt"),
        };
        Self::parse(lang, text)
    }

    /// Loads `<dir>/<lang>.txt`.
    pub fn load(dir: &Path, lang: Lang) -> Result<Self, FeatureError> {
        let path = dir.join(format!("{}.txt", lang.code()));
        let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(lang, &text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(&token.to_lowercase())
    }
}

/// Per-feature z-scoring fitted on training rows (population deviation).
/// Constant columns keep a deviation of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, FeatureError> {
        if rows.len() < 2 {
            return Err(FeatureError::TooFewVectors(rows.len()));
        }
        let d = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(FeatureError::Dimension {
                expected: d,
                found: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 * (1.0 + mean[j].abs()) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// Fits on `rows` and returns the transformed rows alongside.
pub fn standardize(rows: &[Vec<f64>]) -> Result<(Standardizer, Vec<Vec<f64>>), FeatureError> {
    let s = Standardizer::fit(rows)?;
    let out = rows.iter().map(|r| s.transform(r)).collect();
    Ok((s, out))
}

/// A feature matrix as exchanged on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub features: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

const LABEL_COLUMN: &str = "meteor";

impl FeatureTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("utterance_id");
        for f in &self.features {
            out.push('\t');
            out.push_str(f);
        }
        if self.labels.is_some() {
            out.push('\t');
            out.push_str(LABEL_COLUMN);
        }
        out.push('\n');
        for (i, (id, row)) in self.ids.iter().zip(&self.rows).enumerate() {
            out.push_str(id);
            for v in row {
                out.push('\t');
                out.push_str(&v.to_string());
            }
            if let Some(labels) = &self.labels {
                out.push('\t');
                out.push_str(&labels[i].to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, FeatureError> {
        let err = |m: String| FeatureError::Tsv(m);
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| err("empty file".into()))?.split('\t').collect();
        if header.first() != Some(&"utterance_id") {
            return Err(err("first column must be `utterance_id`".into()));
        }
        let has_label = header.last() == Some(&LABEL_COLUMN);
        let features: Vec<String> = header[1..header.len() - usize::from(has_label)]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut table = FeatureTable {
            features,
            ids: Vec::new(),
            rows: Vec::new(),
            labels: has_label.then(Vec::new),
        };
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != header.len() {
                return Err(err(format!("line {}: {} columns, expected {}", n + 2, cols.len(), header.len())));
            }
            let values: Vec<f64> = cols[1..]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| err(format!("line {}: bad number `{c}`", n + 2))))
                .collect::<Result<_, _>>()?;
            table.ids.push(cols[0].to_string());
            if let Some(labels) = &mut table.labels {
                labels.push(values[values.len() - 1]);
                table.rows.push(values[..values.len() - 1].to_vec());
            } else {
                table.rows.push(values);
            }
        }
        Ok(table)
    }
}
