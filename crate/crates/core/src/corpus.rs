//! Transcript corpora: the JSONL record format, validation, and the
//! normalization of disfluency markup into annotation spans.
//!
//! Interpreter transcripts are expected to use three plain-text markers:
//! a `...` (or `…`) token for a silent pause, a word ending in `-` for an
//! interrupted word, and any word from the language's filler lexicon for a
//! filled pause.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::text::{tokenize, Lang, TextError};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid corpus:\n{}", format_line_errors(.0))]
    Invalid(Vec<LineError>),
    #[error("corpus contains no records")]
    Empty,
    #[error("invalid language pair `{0}`")]
    LangPair(String),
    #[error(transparent)]
    Text(#[from] TextError),
}

fn format_line_errors(errors: &[LineError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

/// One diagnostic produced while loading a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "line {}: field `{}`: {}", self.line, field, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LangPair {
    EnJa,
    EnFr,
    EnIt,
    Other { source: String, target: String },
}

impl LangPair {
    pub fn source_code(&self) -> &str {
        match self {
            LangPair::EnJa | LangPair::EnFr | LangPair::EnIt => "en",
            LangPair::Other { source, .. } => source,
        }
    }

    pub fn target_code(&self) -> &str {
        match self {
            LangPair::EnJa => "ja",
            LangPair::EnFr => "fr",
            LangPair::EnIt => "it",
            LangPair::Other { target, .. } => target,
        }
    }

    pub fn source_lang(&self) -> Result<Lang, TextError> {
        self.source_code().parse()
    }

    pub fn target_lang(&self) -> Result<Lang, TextError> {
        self.target_code().parse()
    }
}

impl fmt::Display for LangPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source_code(), self.target_code())
    }
}

impl FromStr for LangPair {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "en-ja" => return Ok(LangPair::EnJa),
            "en-fr" => return Ok(LangPair::EnFr),
            "en-it" => return Ok(LangPair::EnIt),
            _ => {}
        }
        let valid_code = |c: &str| (2..=3).contains(&c.len()) && c.bytes().all(|b| b.is_ascii_lowercase());
        match lower.split_once('-') {
            Some((src, tgt)) if valid_code(src) && valid_code(tgt) => Ok(LangPair::Other {
                source: src.to_string(),
                target: tgt.to_string(),
            }),
            _ => Err(CorpusError::LangPair(s.to_string())),
        }
    }
}

impl Serialize for LangPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LangPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Interpreter proficiency: B (lowest), A, S (highest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank {
    B,
    A,
    S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub lang_pair: LangPair,
    pub source: String,
    pub interp: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<Rank>,
    /// Where the reference came from (human translation, MT, ...). Not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_provenance: Option<String>,
    /// Ground-truth degradation level, present on generated corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degradation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    lang_pair: LangPair,
    records: Vec<UtteranceRecord>,
}

impl Corpus {
    /// Builds a corpus, enforcing the same rules as [`load_corpus`].
    pub fn new(records: Vec<UtteranceRecord>) -> Result<Self, CorpusError> {
        let Some(first) = records.first() else {
            return Err(CorpusError::Empty);
        };
        let lang_pair = first.lang_pair.clone();
        let mut errors = Vec::new();
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            validate_record(r, i + 1, &lang_pair, &mut seen, &mut errors);
        }
        if errors.is_empty() {
            Ok(Corpus { lang_pair, records })
        } else {
            Err(CorpusError::Invalid(errors))
        }
    }

    pub fn lang_pair(&self) -> &LangPair {
        &self.lang_pair
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One JSON object per line, in record order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn validate_record(
    r: &UtteranceRecord,
    line: usize,
    lang_pair: &LangPair,
    seen: &mut HashSet<String>,
    errors: &mut Vec<LineError>,
) {
    let mut err = |field: &str, message: &str| {
        errors.push(LineError {
            line,
            field: Some(field.to_string()),
            message: message.to_string(),
        })
    };
    if r.id.trim().is_empty() {
        err("id", "must be nonempty");
    } else if !seen.insert(r.id.clone()) {
        err("id", &format!("duplicate id `{}`", r.id));
    }
    if &r.lang_pair != lang_pair {
        err(
            "lang_pair",
            &format!("`{}` differs from the corpus language pair `{}`", r.lang_pair, lang_pair),
        );
    }
    if r.source.trim().is_empty() {
        err("source", "must be nonempty");
    }
    if r.reference.trim().is_empty() {
        err("reference", "must be nonempty");
    }
}

const REQUIRED_KEYS: [&str; 5] = ["id", "lang_pair", "source", "interp", "reference"];

fn parse_line(obj: &Map<String, Value>, line: usize, errors: &mut Vec<LineError>) -> Option<UtteranceRecord> {
    let before = errors.len();
    let mut field_error = |field: &str, message: String| {
        errors.push(LineError {
            line,
            field: Some(field.to_string()),
            message,
        })
    };
    for key in REQUIRED_KEYS {
        match obj.get(key) {
            None => field_error(key, "missing required field".into()),
            Some(Value::String(_)) => {}
            Some(other) => field_error(key, format!("expected a string, found {other}")),
        }
    }
    let lang_pair = match obj.get("lang_pair") {
        Some(Value::String(s)) => match s.parse::<LangPair>() {
            Ok(lp) => Some(lp),
            Err(_) => {
                field_error("lang_pair", format!("invalid language pair `{s}`"));
                None
            }
        },
        _ => None,
    };
    let rank = match obj.get("rank") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s == "A" || s == "B" || s == "S" => {
            Some(serde_json::from_value::<Rank>(Value::String(s.clone())).expect("checked variant"))
        }
        Some(other) => {
            field_error("rank", format!("expected one of \"B\", \"A\", \"S\", found {other}"));
            None
        }
    };
    let ref_provenance = match obj.get("ref_provenance") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => {
            field_error("ref_provenance", format!("expected a string, found {other}"));
            None
        }
    };
    let degradation = match obj.get("degradation") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => n.as_f64(),
        Some(other) => {
            field_error("degradation", format!("expected a number, found {other}"));
            None
        }
    };
    if errors.len() > before {
        return None;
    }
    let text = |key: &str| obj[key].as_str().expect("checked above").to_string();
    Some(UtteranceRecord {
        id: text("id"),
        lang_pair: lang_pair?,
        source: text("source"),
        interp: text("interp"),
        reference: text("reference"),
        rank,
        ref_provenance,
        degradation,
    })
}

/// Parses JSONL corpus text. All problems are collected so a single run
/// reports every bad line.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut errors = Vec::new();
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(raw) {
            Ok(Value::Object(obj)) => {
                if let Some(r) = parse_line(&obj, line, &mut errors) {
                    records.push(r);
                    lines.push(line);
                }
            }
            Ok(_) => errors.push(LineError {
                line,
                field: None,
                message: "expected a JSON object".into(),
            }),
            Err(e) => errors.push(LineError {
                line,
                field: None,
                message: format!("malformed JSON: {e}"),
            }),
        }
    }
    if records.is_empty() && errors.is_empty() {
        return Err(CorpusError::Empty);
    }
    if let Some(first) = records.first() {
        let lang_pair = first.lang_pair.clone();
        let mut seen = HashSet::new();
        for (r, &line) in records.iter().zip(&lines) {
            validate_record(r, line, &lang_pair, &mut seen, &mut errors);
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(CorpusError::Invalid(errors));
    }
    Corpus::new(records)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Parses a word list: one token per line, `#` starts a comment, entries are
/// lowercased.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Filled-pause words for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillerLexicon {
    pub lang: Lang,
    pub words: BTreeSet<String>,
}

impl FillerLexicon {
    pub fn new(lang: Lang, words: impl IntoIterator<Item = impl Into<String>>) -> Self {
        FillerLexicon {
            lang,
            words: words.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }

    pub fn parse(lang: Lang, text: &str) -> Self {
        FillerLexicon {
            lang,
            words: parse_word_list(text),
        }
    }

    /// The lexicon shipped in `resources/fillers/`.
    pub fn builtin(lang: Lang) -> Self {
        let text = match lang {
            Lang::En => include_str!("../resources/fillers/en.txt"),
            Lang::Fr => include_str!("../resources/fillers/fr.txt"),
            Lang::It => include_str!("../resources/fillers/it.txt"),
            Lang::Ja => include_str!("../resources/fillers/ja.txt"),
        };
        Self::parse(lang, text)
    }

    /// Loads `<dir>/<lang>.txt`.
    pub fn load(dir: &Path, lang: Lang) -> Result<Self, CorpusError> {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    Pause,
    Filler,
    Incomplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnnotationSpan {
    pub kind: AnnotationKind,
    pub token_index: usize,
}

/// Interpreter tokens plus the disfluency flags raised on them. Flagged tokens
/// stay in `tokens`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedUtterance {
    pub tokens: Vec<String>,
    pub spans: Vec<AnnotationSpan>,
}

impl AnnotatedUtterance {
    pub fn count(&self, kind: AnnotationKind) -> usize {
        self.spans.iter().filter(|s| s.kind == kind).count()
    }

    /// Tokens that carry no annotation, in order.
    pub fn unannotated(&self) -> impl Iterator<Item = &str> {
        let mut flagged = self.spans.iter().map(|s| s.token_index).peekable();
        self.tokens.iter().enumerate().filter_map(move |(i, t)| {
            if flagged.peek() == Some(&i) {
                flagged.next();
                None
            } else {
                Some(t.as_str())
            }
        })
    }
}

pub fn is_pause_marker(token: &str) -> bool {
    token == "..." || token == "…"
}

pub fn is_incomplete_word(token: &str) -> bool {
    let mut rev = token.chars().rev();
    matches!(rev.next(), Some('-' | '\u{2010}')) && rev.next().is_some_and(char::is_alphanumeric)
}

/// Classifies a single token. Pause wins over incomplete, incomplete over
/// filler, so every token gets at most one kind.
pub fn classify_token(token: &str, lexicon: &FillerLexicon) -> Option<AnnotationKind> {
    if is_pause_marker(token) {
        Some(AnnotationKind::Pause)
    } else if is_incomplete_word(token) {
        Some(AnnotationKind::Incomplete)
    } else if lexicon.contains(token) {
        Some(AnnotationKind::Filler)
    } else {
        None
    }
}

pub fn annotate_tokens(tokens: Vec<String>, lexicon: &FillerLexicon) -> AnnotatedUtterance {
    let spans = tokens
        .iter()
        .enumerate()
        .filter_map(|(token_index, t)| {
            classify_token(t, lexicon).map(|kind| AnnotationSpan { kind, token_index })
        })
        .collect();
    AnnotatedUtterance { tokens, spans }
}

pub fn parse_annotations(interp_text: &str, lang: Lang, lexicon: &FillerLexicon) -> AnnotatedUtterance {
    annotate_tokens(tokenize(interp_text, lang).tokens, lexicon)
}
