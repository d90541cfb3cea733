//! Tokenization and the small orthographic helpers shared by the feature
//! extractor and the metric.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum TextError {
    #[error("unsupported language code `{0}` (expected one of en, fr, it, ja)")]
    UnsupportedLanguage(String),
}

/// Languages the tokenizer and resources know about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Fr,
    It,
    Ja,
}

impl Lang {
    pub const ALL: [Lang; 4] = [Lang::En, Lang::Fr, Lang::It, Lang::Ja];

    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Fr => "fr",
            Lang::It => "it",
            Lang::Ja => "ja",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Lang {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(Lang::En),
            "fr" => Ok(Lang::Fr),
            "it" => Ok(Lang::It),
            "ja" => Ok(Lang::Ja),
            _ => Err(TextError::UnsupportedLanguage(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedUtterance {
    pub tokens: Vec<String>,
    pub lang: Lang,
}

impl TokenizedUtterance {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Splits `text` into tokens.
///
/// For en/fr/it, whitespace-separated chunks are further split so that
/// punctuation marks become their own tokens. Apostrophes and hyphens between
/// two word characters stay inside the word (`l'ordine`, `well-known`), a
/// hyphen closing a word is kept as an incomplete-word marker (`darem-`), and
/// runs of full stops are kept together (`...`). Case is preserved.
///
/// Japanese input is expected to be segmented already and is split on
/// whitespace only.
pub fn tokenize(text: &str, lang: Lang) -> TokenizedUtterance {
    let tokens = match lang {
        Lang::Ja => text.split_whitespace().map(str::to_string).collect(),
        Lang::En | Lang::Fr | Lang::It => {
            let mut out = Vec::new();
            for chunk in text.split_whitespace() {
                split_chunk(chunk, &mut out);
            }
            out
        }
    };
    TokenizedUtterance { tokens, lang }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}')
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}')
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
        || matches!(
            get_general_category(c),
            GeneralCategory::NonspacingMark
                | GeneralCategory::SpacingMark
                | GeneralCategory::EnclosingMark
        )
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        let mut j = i + 1;
        if is_word_char(c) {
            loop {
                if j < n && is_word_char(chars[j]) {
                    j += 1;
                } else if j + 1 < n && is_joiner(chars[j]) && is_word_char(chars[j + 1]) {
                    j += 2;
                } else {
                    break;
                }
            }
            if j < n && is_hyphen(chars[j]) && (j + 1 == n || !is_word_char(chars[j + 1])) {
                j += 1;
            }
        } else if c == '.' {
            while j < n && chars[j] == '.' {
                j += 1;
            }
        }
        out.push(chars[i..j].iter().collect());
        i = j;
    }
}

const EXTRA_PUNCTUATION: &[char] = &['。', '、', '「', '」', '『', '』', '・', '…'];

/// True iff every character is Unicode punctuation or one of the CJK marks
/// transcripts commonly use. Empty tokens are not punctuation.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty()
        && token.chars().all(|c| {
            EXTRA_PUNCTUATION.contains(&c)
                || matches!(
                    get_general_category(c),
                    GeneralCategory::ConnectorPunctuation
                        | GeneralCategory::DashPunctuation
                        | GeneralCategory::OpenPunctuation
                        | GeneralCategory::ClosePunctuation
                        | GeneralCategory::InitialPunctuation
                        | GeneralCategory::FinalPunctuation
                        | GeneralCategory::OtherPunctuation
                )
        })
}

/// Fraction of characters in the katakana block (U+30A0..=U+30FF). Returns 0
/// for the empty string.
pub fn katakana_fraction(token: &str) -> f64 {
    let (total, kana) = token.chars().fold((0usize, 0usize), |(t, k), c| {
        (t + 1, k + usize::from(('\u{30A0}'..='\u{30FF}').contains(&c)))
    });
    if total == 0 {
        0.0
    } else {
        kana as f64 / total as f64
    }
}

/// `1 - lev(a, b) / max(|a|, |b|)` over case-folded Unicode scalar values.
/// Two empty strings are identical (1.0).
pub fn orthographic_similarity(a: &str, b: &str) -> f64 {
    let a = a.to_lowercase();
    let b = b.to_lowercase();
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(&a, &b) as f64 / longest as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize(text, Lang::En).tokens
    }

    #[test]
    fn counts_the_chairman_sentence() {
        assert_eq!(toks("The chairman explained the proposal to the delegates").len(), 8);
    }

    #[test]
    fn splits_punctuation() {
        assert_eq!(toks("cat, dog."), vec!["cat", ",", "dog", "."]);
        assert!(toks("").is_empty());
        assert!(toks("   \t ").is_empty());
    }

    #[test]
    fn keeps_clitics_hyphens_and_ellipses() {
        let t = tokenize("all'ordine del giorno? Parlamento... darem- darà well-known", Lang::It);
        assert_eq!(
            t.tokens,
            vec![
                "all'ordine", "del", "giorno", "?", "Parlamento", "...", "darem-", "darà",
                "well-known"
            ]
        );
        assert_eq!(toks("'quoted'"), vec!["'", "quoted", "'"]);
        assert_eq!(toks("well--"), vec!["well-", "-"]);
    }

    #[test]
    fn japanese_is_whitespace_split() {
        let t = tokenize("コンピュータ です 。", Lang::Ja);
        assert_eq!(t.tokens, vec!["コンピュータ", "です", "。"]);
    }

    #[test]
    fn language_codes() {
        assert_eq!("FR".parse::<Lang>().unwrap(), Lang::Fr);
        assert_eq!(
            "de".parse::<Lang>(),
            Err(TextError::UnsupportedLanguage("de".into()))
        );
    }

    #[test]
    fn punctuation_classes() {
        assert!(is_punctuation(","));
        assert!(!is_punctuation("darà"));
        assert!(is_punctuation("…"));
        assert!(is_punctuation("..."));
        assert!(is_punctuation("。"));
        assert!(!is_punctuation("$"));
        assert!(!is_punctuation(""));
    }

    #[test]
    fn katakana() {
        assert_eq!(katakana_fraction("コンピュータ"), 1.0);
        assert_eq!(katakana_fraction("cat"), 0.0);
        assert!((katakana_fraction("データ圧縮") - 0.6).abs() < 1e-12);
    }

    #[test]
    fn similarity_examples() {
        assert!((orthographic_similarity("artificial", "artificiel") - 0.9).abs() < 1e-12);
        assert!((orthographic_similarity("cat", "chien") - 0.2).abs() < 1e-12);
        assert_eq!(orthographic_similarity("x", "x"), 1.0);
        assert_eq!(orthographic_similarity("Parlamento", "parlamento"), 1.0);
        // "artificial" / "artificiale": one insertion over 11 chars.
        assert!((orthographic_similarity("artificial", "artificiale") - 10.0 / 11.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn similarity_is_symmetric_and_bounded(a in "[a-zA-Zàé]{1,8}", b in "[a-zA-Zàé]{1,8}") {
            let s = orthographic_similarity(&a, &b);
            prop_assert_eq!(s, orthographic_similarity(&b, &a));
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s == 1.0, a.to_lowercase() == b.to_lowercase());
        }

        #[test]
        fn tokens_are_nonempty_and_whitespace_free(text in "\\PC{0,40}") {
            for t in tokenize(&text, Lang::Fr).tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn token_counts_add_under_concatenation(a in "\\PC{0,30}", b in "\\PC{0,30}") {
            let joined = format!("{a} {b}");
            prop_assert_eq!(
                toks(&joined).len(),
                toks(&a).len() + toks(&b).len()
            );
        }

        #[test]
        fn retokenizing_is_stable(text in "[a-z'. ,?-]{0,40}") {
            let first = toks(&text);
            prop_assert_eq!(toks(&first.join(" ")), first);
        }

        #[test]
        fn katakana_fraction_counts_whole_chars(token in "[アイウエオカa-z圧]{1,10}") {
            let len = token.chars().count() as f64;
            let scaled = katakana_fraction(&token) * len;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }
}
