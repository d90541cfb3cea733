use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use super::{FeatureError, FeatureManifest, FeatureVector, SeedList, CATALOGUE};
use crate::corpus::{annotate_tokens, AnnotatedUtterance, AnnotationKind, CorpusError, FillerLexicon, LangPair, UtteranceRecord};
use crate::lm::{padded_ngrams, train_model1, train_ngram, LexicalTable, NgramModel, QuartileClass};
use crate::text::{is_punctuation, katakana_fraction, orthographic_similarity, tokenize, Lang};

pub const NGRAM_ORDER: usize = 3;
pub const MODEL1_ITERATIONS: usize = 5;
const COGNATE_THRESHOLD: f64 = 0.5;

/// A record tokenized once, ready for repeated extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRecord {
    pub id: String,
    pub src: Vec<String>,
    pub src_lower: Vec<String>,
    pub interp: AnnotatedUtterance,
    pub interp_lower: Vec<String>,
    pub reference_lower: Vec<String>,
}

fn lower(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

pub fn prepare(record: &UtteranceRecord, fillers: &FillerLexicon) -> Result<PreparedRecord, FeatureError> {
    let src_lang = record.lang_pair.source_lang()?;
    let tgt_lang = record.lang_pair.target_lang()?;
    let src = tokenize(&record.source, src_lang).tokens;
    let interp = annotate_tokens(tokenize(&record.interp, tgt_lang).tokens, fillers);
    let reference = tokenize(&record.reference, tgt_lang).tokens;
    Ok(PreparedRecord {
        id: record.id.clone(),
        src_lower: lower(&src),
        src,
        interp_lower: lower(&interp.tokens),
        interp,
        reference_lower: lower(&reference),
    })
}

/// Statistical resources, trained on one fold's training records.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub src_lm: Option<NgramModel>,
    pub tgt_lm: Option<NgramModel>,
    pub lex: Option<LexicalTable>,
}

const SRC_LM_FILE: &str = "src_lm.json";
const TGT_LM_FILE: &str = "tgt_lm.json";
const LEX_FILE: &str = "lex.json";

impl Resources {
    fn src_lm(&self) -> Result<&NgramModel, FeatureError> {
        self.src_lm.as_ref().ok_or(FeatureError::MissingResource("source language model"))
    }

    fn tgt_lm(&self) -> Result<&NgramModel, FeatureError> {
        self.tgt_lm.as_ref().ok_or(FeatureError::MissingResource("target language model"))
    }

    fn lex(&self) -> Result<&LexicalTable, FeatureError> {
        self.lex.as_ref().ok_or(FeatureError::MissingResource("lexical translation table"))
    }

    /// Serialized documents keyed by file name.
    pub fn documents(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(m) = &self.src_lm {
            out.push((SRC_LM_FILE, m.to_json()));
        }
        if let Some(m) = &self.tgt_lm {
            out.push((TGT_LM_FILE, m.to_json()));
        }
        if let Some(t) = &self.lex {
            out.push((LEX_FILE, t.to_json()));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<(), FeatureError> {
        for (name, text) in self.documents() {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }

    /// Loads whichever resource files exist in `dir`.
    pub fn load(dir: &Path) -> Result<Self, FeatureError> {
        let read = |name: &str| -> Result<Option<String>, FeatureError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            std::fs::read_to_string(&path).map(Some).map_err(|source| {
                CorpusError::Io {
                    path: path.display().to_string(),
                    source,
                }
                .into()
            })
        };
        Ok(Resources {
            src_lm: read(SRC_LM_FILE)?.map(|t| NgramModel::from_json(&t)).transpose()?,
            tgt_lm: read(TGT_LM_FILE)?.map(|t| NgramModel::from_json(&t)).transpose()?,
            lex: read(LEX_FILE)?.map(|t| LexicalTable::from_json(&t)).transpose()?,
        })
    }
}

/// Trains both language models and the lexical table from `train` alone:
/// the source LM on source sides, the target LM on references, and Model 1
/// on source/reference pairs.
pub fn train_resources(train: &[&PreparedRecord]) -> Result<Resources, FeatureError> {
    let sources: Vec<Vec<&str>> = train.iter().map(|r| r.src_lower.iter().map(String::as_str).collect()).collect();
    let references: Vec<Vec<&str>> = train
        .iter()
        .map(|r| r.reference_lower.iter().map(String::as_str).collect())
        .collect();
    let parallel: Vec<(Vec<&str>, Vec<&str>)> = train
        .iter()
        .map(|r| {
            (
                r.src_lower.iter().map(String::as_str).collect(),
                r.reference_lower.iter().map(String::as_str).collect(),
            )
        })
        .collect();
    Ok(Resources {
        src_lm: Some(train_ngram(&sources, NGRAM_ORDER)?),
        tgt_lm: Some(train_ngram(&references, NGRAM_ORDER)?),
        lex: Some(train_model1(&parallel, MODEL1_ITERATIONS)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CognateRule {
    Orthographic,
    Katakana,
}

fn cognate_rule(pair: &LangPair) -> Result<CognateRule, FeatureError> {
    let unsupported = || FeatureError::UnsupportedPair(pair.to_string());
    let src = pair.source_lang().map_err(|_| unsupported())?;
    let tgt = pair.target_lang().map_err(|_| unsupported())?;
    match (src, tgt) {
        (_, Lang::Ja) => Ok(CognateRule::Katakana),
        (Lang::Ja, _) => Err(unsupported()),
        _ => Ok(CognateRule::Orthographic),
    }
}

fn words<S: AsRef<str>>(tokens: &[S]) -> impl Iterator<Item = &str> {
    tokens.iter().map(AsRef::as_ref).filter(|t| !is_punctuation(t))
}

/// Pause, filler and incomplete-word shares of all interpreter tokens.
pub fn feat_disfluency(interp: &AnnotatedUtterance) -> [f64; 3] {
    let n = interp.tokens.len();
    if n == 0 {
        return [0.0; 3];
    }
    [AnnotationKind::Pause, AnnotationKind::Filler, AnnotationKind::Incomplete].map(|k| interp.count(k) as f64 / n as f64)
}

/// Share of non-punctuation tokens found in the seed list.
pub fn feat_nonspecific<S: AsRef<str>>(tokens: &[S], seed: &SeedList) -> f64 {
    let (hits, total) = words(tokens).fold((0usize, 0usize), |(h, t), w| (h + usize::from(seed.contains(w)), t + 1));
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Share of non-punctuation interpreter tokens that resemble a source token
/// (Latin-script targets) or are mostly katakana (Japanese targets).
pub fn feat_cognates<S: AsRef<str>>(source: &[S], interp: &[S], pair: &LangPair) -> Result<f64, FeatureError> {
    let rule = cognate_rule(pair)?;
    let src: Vec<String> = words(source).map(str::to_lowercase).collect();
    let (hits, total) = words(interp).fold((0usize, 0usize), |(h, t), w| {
        let hit = match rule {
            CognateRule::Katakana => katakana_fraction(w) >= COGNATE_THRESHOLD,
            CognateRule::Orthographic => {
                let w = w.to_lowercase();
                src.iter().any(|s| orthographic_similarity(s, &w) >= COGNATE_THRESHOLD)
            }
        };
        (h + usize::from(hit), t + 1)
    });
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

/// `(len_ratio, punct_ratio, len_diff_ratio)`; interpreter words exclude
/// annotated disfluencies.
pub fn feat_length_punct<S: AsRef<str>>(source: &[S], interp: &AnnotatedUtterance) -> [f64; 3] {
    let src_words = words(source).count() as f64;
    let src_punct = source.iter().filter(|t| is_punctuation(t.as_ref())).count() as f64;
    let content: Vec<&str> = interp.unannotated().collect();
    let tgt_words = words(&content).count() as f64;
    let tgt_punct = interp.tokens.iter().filter(|t| is_punctuation(t)).count() as f64;
    let punct_ratio = if src_punct == 0.0 && tgt_punct == 0.0 {
        1.0
    } else {
        src_punct / tgt_punct.max(1.0)
    };
    [
        src_words / tgt_words.max(1.0),
        punct_ratio,
        (src_words - tgt_words).abs() / src_words.max(1.0),
    ]
}

fn mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn quartile_shares(lm: &NgramModel, tokens: &[String], n: usize) -> (f64, f64) {
    let keys = padded_ngrams(tokens, n);
    if keys.is_empty() {
        return (0.0, 0.0);
    }
    let mut q1 = 0usize;
    let mut q4 = 0usize;
    for k in &keys {
        match lm.quartile_class_of_key(k) {
            QuartileClass::Q1 => q1 += 1,
            QuartileClass::Q4 => q4 += 1,
            _ => {}
        }
    }
    (q1 as f64 / keys.len() as f64, q4 as f64 / keys.len() as f64)
}

/// Computes feature vectors for one language pair.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub lang_pair: LangPair,
    pub resources: Resources,
    pub fillers: FillerLexicon,
    pub seeds: SeedList,
}

impl FeatureExtractor {
    pub fn new(lang_pair: LangPair, resources: Resources, fillers: FillerLexicon, seeds: SeedList) -> Result<Self, FeatureError> {
        cognate_rule(&lang_pair)?;
        Ok(FeatureExtractor {
            lang_pair,
            resources,
            fillers,
            seeds,
        })
    }

    /// Built-in filler and seed lists for the pair's target language.
    pub fn with_builtin_lists(lang_pair: LangPair, resources: Resources) -> Result<Self, FeatureError> {
        let tgt = lang_pair
            .target_lang()
            .map_err(|_| FeatureError::UnsupportedPair(lang_pair.to_string()))?;
        Self::new(lang_pair, resources, FillerLexicon::builtin(tgt), SeedList::builtin(tgt))
    }

    pub fn prepare(&self, record: &UtteranceRecord) -> Result<PreparedRecord, FeatureError> {
        prepare(record, &self.fillers)
    }

    /// Every catalogue feature, in catalogue order.
    pub fn full(&self, r: &PreparedRecord) -> Result<Vec<f64>, FeatureError> {
        let src_lm = self.resources.src_lm()?;
        let tgt_lm = self.resources.tgt_lm()?;
        let lex = self.resources.lex()?;

        let src_lp = if r.src_lower.is_empty() {
            src_lm.min_sentence_logprob() - 1.0
        } else {
            src_lm.logprob(&r.src_lower)?
        };
        let tgt_lp = if r.interp_lower.is_empty() {
            tgt_lm.min_sentence_logprob() - 1.0
        } else {
            tgt_lm.logprob(&r.interp_lower)?
        };
        let types = {
            let mut seen: HashMap<&str, ()> = HashMap::new();
            for t in &r.interp_lower {
                seen.insert(t, ());
            }
            seen.len()
        };
        let type_token = if types == 0 {
            0.0
        } else {
            r.interp_lower.len() as f64 / types as f64
        };
        let trans_02 = mean(r.src_lower.iter().map(|w| lex.translations_per_word(w, 0.2) as f64));
        let trans_001 = mean(r.src_lower.iter().map(|w| {
            let freq = src_lm.unigram_count(w);
            if freq == 0 {
                0.0
            } else {
                lex.translations_per_word(w, 0.01) as f64 / freq as f64
            }
        }));
        let (uni_q1, uni_q4) = quartile_shares(src_lm, &r.src_lower, 1);
        let (bi_q1, bi_q4) = quartile_shares(src_lm, &r.src_lower, 2);
        let (tri_q1, tri_q4) = quartile_shares(src_lm, &r.src_lower, 3);
        let seen = mean(r.src_lower.iter().map(|w| f64::from(u8::from(src_lm.unigram_count(w) > 0))));
        let punct = |ts: &[String]| ts.iter().filter(|t| is_punctuation(t)).count() as f64;

        let [pause, filler, incomplete] = feat_disfluency(&r.interp);
        let content: Vec<&str> = r.interp.unannotated().collect();
        let nonspecific = feat_nonspecific(&content, &self.seeds);
        let src_refs: Vec<&str> = r.src.iter().map(String::as_str).collect();
        let cognate = feat_cognates(&src_refs, &content, &self.lang_pair)?;
        let [len_ratio, punct_ratio, len_diff] = feat_length_punct(&r.src, &r.interp);

        let values = vec![
            r.src.len() as f64,
            r.interp.tokens.len() as f64,
            mean(r.src.iter().map(|t| t.chars().count() as f64)),
            src_lp,
            tgt_lp,
            type_token,
            trans_02,
            trans_001,
            uni_q1,
            uni_q4,
            bi_q1,
            bi_q4,
            tri_q1,
            tri_q4,
            seen,
            punct(&r.src),
            punct(&r.interp.tokens),
            pause,
            filler,
            incomplete,
            nonspecific,
            cognate,
            len_ratio,
            punct_ratio,
            len_diff,
        ];
        debug_assert_eq!(values.len(), CATALOGUE.len());
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                feature: CATALOGUE[i].to_string(),
                utterance: r.id.clone(),
            });
        }
        Ok(values)
    }

    pub fn extract(&self, record: &UtteranceRecord, manifest: &Arc<FeatureManifest>) -> Result<FeatureVector, FeatureError> {
        let prepared = self.prepare(record)?;
        let full = self.full(&prepared)?;
        FeatureVector::new(Arc::clone(manifest), record.id.clone(), manifest.project(&full))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_annotations;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn record(id: &str, pair: &str, source: &str, interp: &str, reference: &str) -> UtteranceRecord {
        UtteranceRecord {
            id: id.into(),
            lang_pair: pair.parse().unwrap(),
            source: source.into(),
            interp: interp.into(),
            reference: reference.into(),
            rank: None,
            ref_provenance: None,
            degradation: None,
        }
    }

    fn toy_extractor() -> (FeatureExtractor, Vec<PreparedRecord>) {
        let fillers = FillerLexicon::builtin(Lang::Fr);
        let recs = [
            record("a", "en-fr", "the cat sat", "le chat", "le chat est assis"),
            record("b", "en-fr", "the dog sat .", "le chien est assis .", "le chien est assis ."),
            record("c", "en-fr", "a cat", "un chat", "un chat"),
        ];
        let prepared: Vec<PreparedRecord> = recs.iter().map(|r| prepare(r, &fillers).unwrap()).collect();
        let res = train_resources(&prepared.iter().collect::<Vec<_>>()).unwrap();
        let ex = FeatureExtractor::with_builtin_lists("en-fr".parse().unwrap(), res).unwrap();
        (ex, prepared)
    }

    fn value(full: &[f64], id: &str) -> f64 {
        full[super::super::catalogue_index(id).unwrap()]
    }

    #[test]
    fn baseline_counts() {
        let (ex, prepared) = toy_extractor();
        let full = ex.full(&prepared[0]).unwrap();
        assert_eq!(value(&full, "src_token_count"), 3.0);
        assert_eq!(value(&full, "src_avg_token_length"), 3.0);
        assert_eq!(value(&full, "src_seen_unigram_pct"), 1.0);
        assert_eq!(value(&full, "tgt_token_count"), 2.0);
        assert!(value(&full, "src_lm_logprob") < 0.0);
    }

    #[test]
    fn empty_interp_uses_floor() {
        let (ex, _) = toy_extractor();
        let r = ex.prepare(&record("e", "en-fr", "the cat sat", "", "le chat")).unwrap();
        let full = ex.full(&r).unwrap();
        assert_eq!(value(&full, "tgt_token_count"), 0.0);
        let floor = ex.resources.tgt_lm.as_ref().unwrap().min_sentence_logprob() - 1.0;
        assert_eq!(value(&full, "tgt_lm_logprob"), floor);
        assert!(full.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn missing_resource_is_named() {
        let ex = FeatureExtractor::with_builtin_lists("en-fr".parse().unwrap(), Resources::default()).unwrap();
        let r = ex.prepare(&record("e", "en-fr", "x", "y", "z")).unwrap();
        let err = ex.full(&r).unwrap_err();
        assert!(err.to_string().contains("source language model"), "{err}");
    }

    #[test]
    fn disfluency_on_italian_transcript() {
        let u = parse_annotations(
            "Ehm il Parlamento... dopo le elezioni... darem- darà spazio",
            Lang::It,
            &FillerLexicon::builtin(Lang::It),
        );
        let n = u.tokens.len() as f64;
        assert_eq!(n, 11.0);
        assert_eq!(feat_disfluency(&u), [2.0 / n, 1.0 / n, 1.0 / n]);
        assert_eq!(feat_disfluency(&AnnotatedUtterance::default()), [0.0; 3]);
    }

    #[test]
    fn nonspecific_examples() {
        let en = SeedList::builtin(Lang::En);
        assert!((feat_nonspecific(&toks("he explained it to them"), &en) - 0.6).abs() < 1e-12);
        assert_eq!(feat_nonspecific(&toks("cats eat fish"), &en), 0.0);
        assert_eq!(feat_nonspecific(&toks("they them ."), &en), 1.0);
    }

    #[test]
    fn cognate_examples() {
        let fr: LangPair = "en-fr".parse().unwrap();
        let ja: LangPair = "en-ja".parse().unwrap();
        assert_eq!(feat_cognates(&toks("artificial"), &toks("artificiel"), &fr).unwrap(), 1.0);
        assert_eq!(feat_cognates(&toks("computer"), &toks("コンピュータ です"), &ja).unwrap(), 0.5);
        assert_eq!(feat_cognates(&toks("cat"), &toks("chien"), &fr).unwrap(), 0.0);
        assert_eq!(feat_cognates(&toks("cat"), &[], &fr).unwrap(), 0.0);
        let other: LangPair = "xx-yy".parse().unwrap();
        assert!(matches!(feat_cognates(&toks("a"), &toks("b"), &other), Err(FeatureError::UnsupportedPair(_))));
    }

    #[test]
    fn length_punct_examples() {
        let lex = FillerLexicon::builtin(Lang::En);
        let ten = toks("a b c d e f g h i j");
        let five = annotate_tokens(toks("a b c d e"), &lex);
        assert_eq!(feat_length_punct(&ten, &five)[0], 2.0);
        let same = toks("the cat sat");
        assert_eq!(feat_length_punct(&same, &annotate_tokens(same.clone(), &lex)), [1.0, 1.0, 0.0]);
        let src = toks("a b c d e f g h , .");
        assert_eq!(feat_length_punct(&src, &AnnotatedUtterance::default()), [8.0, 2.0, 1.0]);
    }

    #[test]
    fn resources_round_trip_through_disk() {
        let (ex, prepared) = toy_extractor();
        let dir = tempfile::tempdir().unwrap();
        ex.resources.save(dir.path()).unwrap();
        let back = Resources::load(dir.path()).unwrap();
        let ex2 = FeatureExtractor::with_builtin_lists(ex.lang_pair.clone(), back).unwrap();
        for p in &prepared {
            assert_eq!(ex.full(p).unwrap(), ex2.full(p).unwrap());
        }
    }
}
