//! Seeded generator of aligned source/interpretation/reference triples.
//!
//! Sentences come from a small parallel phrase grammar (English source;
//! French, Italian or pre-segmented Japanese target). The reference is the
//! clean target sentence; the interpretation is the reference degraded at a
//! per-utterance level δ by token omission, pronoun substitution, katakana
//! loanword substitution (Japanese), filler and pause insertion, and false
//! starts. The mixed profile also swaps noun phrases and verbs for wrong ones
//! at a second, independent rate, so part of the metric's variation is not
//! tied to δ.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Corpus, LangPair, UtteranceRecord};
use crate::text::Lang;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegradationProfile {
    /// All degradation kinds, δ uniform on [0, 1].
    Mixed,
    /// Fillers and pauses only.
    Fillers,
    /// Token omission only.
    Length,
    /// δ = 0: the interpretation equals the reference.
    Clean,
    /// δ = 1 with everything omitted.
    Silent,
}

impl FromStr for DegradationProfile {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixed" => Ok(Self::Mixed),
            "fillers" => Ok(Self::Fillers),
            "length" => Ok(Self::Length),
            "clean" => Ok(Self::Clean),
            "silent" => Ok(Self::Silent),
            other => Err(EvalError::Config(format!(
                "unknown degradation profile `{other}` (mixed, fillers, length, clean, silent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Rates {
    drop: f64,
    pronoun: f64,
    katakana: f64,
    filler: f64,
    pause: f64,
    false_start: f64,
    substitute: f64,
}

impl DegradationProfile {
    fn rates(self, d: f64, substitute: f64) -> Rates {
        match self {
            Self::Mixed => Rates {
                substitute,
                drop: 0.5 * d,
                pronoun: 0.4 * d,
                katakana: 0.5 * d,
                filler: 0.25 * d,
                pause: 0.15 * d,
                false_start: 0.08 * d,
            },
            Self::Fillers => Rates {
                filler: 0.35 * d,
                pause: 0.25 * d,
                ..Rates::default()
            },
            Self::Length => Rates {
                drop: 0.8 * d,
                ..Rates::default()
            },
            Self::Clean => Rates::default(),
            Self::Silent => Rates {
                drop: 1.0,
                ..Rates::default()
            },
        }
    }

    fn draw_level(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Clean => 0.0,
            Self::Silent => 1.0,
            _ => rng.random::<f64>(),
        }
    }
}

/// Upper bound of the mixed profile's per-utterance substitution rate.
const MAX_SUBSTITUTION: f64 = 0.5;

/// Noun phrase: English, French, Italian, Japanese, katakana loan variant.
type Np = (&'static str, &'static str, &'static str, &'static str, Option<&'static str>);
/// Verb, adverbial: English, French, Italian, Japanese.
type Phrase = (&'static str, &'static str, &'static str, &'static str);

const NOUNS: &[Np] = &[
    ("the committee", "le comité", "il comitato", "委員会", Some("コミッティ")),
    ("the proposal", "la proposition", "la proposta", "提案", Some("プロポーザル")),
    ("the budget", "le budget", "il bilancio", "予算", Some("バジェット")),
    ("the report", "le rapport", "la relazione", "報告書", Some("レポート")),
    ("the parliament", "le parlement", "il parlamento", "議会", Some("パーラメント")),
    ("the government", "le gouvernement", "il governo", "政府", Some("ガバメント")),
    ("the agreement", "l'accord", "l'accordo", "協定", Some("アグリーメント")),
    ("the crisis", "la crise", "la crisi", "危機", Some("クライシス")),
    ("the strategy", "la stratégie", "la strategia", "戦略", Some("ストラテジー")),
    ("the market", "le marché", "il mercato", "市場", Some("マーケット")),
    ("the technology", "la technologie", "la tecnologia", "技術", Some("テクノロジー")),
    ("the policy", "la politique", "la politica", "政策", Some("ポリシー")),
    ("the problem", "le problème", "il problema", "問題", Some("プロブレム")),
    ("the program", "le programme", "il programma", "計画", Some("プログラム")),
    ("the system", "le système", "il sistema", "制度", Some("システム")),
    ("the rule", "la règle", "la regola", "規則", Some("ルール")),
    ("the meeting", "la réunion", "la riunione", "会議", Some("ミーティング")),
    ("the debate", "le débat", "il dibattito", "討論", Some("ディベート")),
    ("the president", "le président", "il presidente", "大統領", Some("プレジデント")),
    ("the minister", "le ministre", "il ministro", "大臣", Some("ミニスター")),
    ("the citizens", "les citoyens", "i cittadini", "市民", Some("シチズン")),
    ("the companies", "les entreprises", "le imprese", "企業", Some("カンパニー")),
    ("the energy", "l'énergie", "l'energia", "エネルギー", None),
    ("the security", "la sécurité", "la sicurezza", "安全", Some("セキュリティ")),
    ("the environment", "l'environnement", "l'ambiente", "環境", None),
    ("the elections", "les élections", "le elezioni", "選挙", None),
    ("the agenda", "l'ordre du jour", "l'ordine del giorno", "議題", Some("アジェンダ")),
    ("the data", "les données", "i dati", "情報", Some("データ")),
    ("the support", "le soutien", "il sostegno", "支援", Some("サポート")),
    ("the reform", "la réforme", "la riforma", "改革", Some("リフォーム")),
    ("the project", "le projet", "il progetto", "事業", Some("プロジェクト")),
    ("the delegates", "les délégués", "i delegati", "代表団", Some("デリゲート")),
    ("the industry", "l'industrie", "l'industria", "産業", Some("インダストリー")),
    ("the country", "le pays", "il paese", "国", Some("カントリー")),
];

const VERBS: &[Phrase] = &[
    ("approved", "a approuvé", "ha approvato", "承認 し た"),
    ("rejected", "a rejeté", "ha respinto", "拒否 し た"),
    ("discussed", "a discuté", "ha discusso", "議論 し た"),
    ("presented", "a présenté", "ha presentato", "発表 し た"),
    ("supported", "a soutenu", "ha sostenuto", "支持 し た"),
    ("examined", "a examiné", "ha esaminato", "検討 し た"),
    ("criticized", "a critiqué", "ha criticato", "批判 し た"),
    ("explained", "a expliqué", "ha spiegato", "説明 し た"),
    ("adopted", "a adopté", "ha adottato", "採択 し た"),
    ("modified", "a modifié", "ha modificato", "修正 し た"),
    ("published", "a publié", "ha pubblicato", "公表 し た"),
    ("defended", "a défendu", "ha difeso", "擁護 し た"),
    ("financed", "a financé", "ha finanziato", "融資 し た"),
    ("protected", "a protégé", "ha protetto", "保護 し た"),
    ("evaluated", "a évalué", "ha valutato", "評価 し た"),
    ("announced", "a annoncé", "ha annunciato", "告知 し た"),
    ("reformed", "a réformé", "ha riformato", "改革 し た"),
    ("strengthened", "a renforcé", "ha rafforzato", "強化 し た"),
];

const ADVERBIALS: &[Phrase] = &[
    ("after the elections", "après les élections", "dopo le elezioni", "選挙 の 後"),
    ("last week", "la semaine dernière", "la settimana scorsa", "先週"),
    ("in Brussels", "à Bruxelles", "a Bruxelles", "ブリュッセル で"),
    ("yesterday", "hier", "ieri", "昨日"),
    ("for the first time", "pour la première fois", "per la prima volta", "初めて"),
    ("without delay", "sans délai", "senza indugio", "遅滞 なく"),
    ("in the plenary session", "en séance plénière", "in seduta plenaria", "本会議 で"),
    ("this morning", "ce matin", "stamattina", "今朝"),
    ("after a long debate", "après un long débat", "dopo un lungo dibattito", "長い 討論 の 後"),
    ("with great concern", "avec une grande inquiétude", "con grande preoccupazione", "強い 懸念 を もって"),
    ("at the last meeting", "lors de la dernière réunion", "durante l'ultima riunione", "前回 の 会議 で"),
    ("in the name of the citizens", "au nom des citoyens", "a nome dei cittadini", "市民 の 名 において"),
];

const SUBJECT_PRONOUNS: [(Lang, &[&str]); 3] = [
    (Lang::Fr, &["il", "elle", "ils"]),
    (Lang::It, &["lui", "lei", "loro"]),
    (Lang::Ja, &["彼", "彼ら", "それ"]),
];
const OBJECT_PRONOUNS: [(Lang, &[&str]); 3] = [
    (Lang::Fr, &["cela", "ça", "ceci"]),
    (Lang::It, &["questo", "ciò", "quello"]),
    (Lang::Ja, &["それ", "これ", "あれ"]),
];
const FILLERS: [(Lang, &[&str]); 3] = [
    (Lang::Fr, &["euh", "ben", "hein"]),
    (Lang::It, &["ehm", "eh", "mah"]),
    (Lang::Ja, &["えー", "あの", "えっと"]),
];

fn for_lang<'a>(table: &[(Lang, &'a [&'a str])], lang: Lang) -> &'a [&'a str] {
    table.iter().find(|(l, _)| *l == lang).map(|(_, w)| *w).expect("target language covered")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Subject,
    Object,
    Other,
}

/// A target-side phrase; noun phrases and verbs remember their lexicon entry.
struct Segment {
    tokens: Vec<String>,
    role: Role,
    noun: Option<usize>,
    verb: Option<usize>,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn tgt(np: &Np, lang: Lang) -> &'static str {
    match lang {
        Lang::Fr => np.1,
        Lang::It => np.2,
        _ => np.3,
    }
}

fn tgt_phrase(p: &Phrase, lang: Lang) -> &'static str {
    match lang {
        Lang::Fr => p.1,
        Lang::It => p.2,
        _ => p.3,
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    chars.next().map_or_else(String::new, |c| c.to_uppercase().chain(chars).collect())
}

/// Builds one sentence pair: English source text and target segments.
fn sentence(rng: &mut ChaCha8Rng, lang: Lang) -> (String, Vec<Segment>) {
    let subj = rng.random_range(0..NOUNS.len());
    let verb_idx = rng.random_range(0..VERBS.len());
    let verb = VERBS[verb_idx];
    let obj = rng.random_range(0..NOUNS.len());
    let obj2 = rng.random_bool(0.3).then(|| rng.random_range(0..NOUNS.len()));
    let adv = rng.random_bool(0.6).then(|| pick(rng, ADVERBIALS));

    let mut en = format!("{} {} {}", NOUNS[subj].0, verb.0, NOUNS[obj].0);
    if let Some(o) = obj2 {
        en.push_str(" and ");
        en.push_str(NOUNS[o].0);
    }
    if let Some(a) = adv {
        en.push(' ');
        en.push_str(a.0);
    }
    let source = capitalize(&en) + ".";

    let np = |i: usize, role: Role| Segment {
        tokens: words(tgt(&NOUNS[i], lang)),
        role,
        noun: Some(i),
        verb: None,
    };
    let other = |s: &str| Segment {
        tokens: words(s),
        role: Role::Other,
        noun: None,
        verb: None,
    };
    let verb_seg = || Segment {
        verb: Some(verb_idx),
        ..other(tgt_phrase(&verb, lang))
    };
    let mut segs = Vec::new();
    if lang == Lang::Ja {
        if let Some(a) = adv {
            segs.push(other(a.3));
            segs.push(other("、"));
        }
        segs.push(np(subj, Role::Subject));
        segs.push(other("は"));
        segs.push(np(obj, Role::Object));
        if let Some(o) = obj2 {
            segs.push(other("と"));
            segs.push(np(o, Role::Object));
        }
        segs.push(other("を"));
        segs.push(verb_seg());
        segs.push(other("。"));
    } else {
        let and = if lang == Lang::Fr { "et" } else { "e" };
        segs.push(np(subj, Role::Subject));
        segs.push(verb_seg());
        segs.push(np(obj, Role::Object));
        if let Some(o) = obj2 {
            segs.push(other(and));
            segs.push(np(o, Role::Object));
        }
        if let Some(a) = adv {
            segs.push(other(tgt_phrase(&a, lang)));
        }
        segs.push(other("."));
    }
    (source, segs)
}

fn render(tokens: &[String], lang: Lang) -> String {
    if lang == Lang::Ja {
        return tokens.join(" ");
    }
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && t != "." {
            out.push(' ');
        }
        if i == 0 {
            out.push_str(&capitalize(t));
        } else {
            out.push_str(t);
        }
    }
    out
}

/// Prefix of about half the word followed by a hyphen, if the word is long
/// enough to be cut.
fn false_start(word: &str) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() < 2 || !chars.iter().all(|c| c.is_alphanumeric() || *c == '\'') {
        return None;
    }
    let cut = chars.len().div_ceil(2).max(1);
    let prefix: String = chars[..cut].iter().collect();
    prefix.chars().last().filter(|c| c.is_alphanumeric())?;
    Some(prefix + "-")
}

fn degrade(rng: &mut ChaCha8Rng, segs: &[Segment], lang: Lang, rates: Rates) -> Vec<String> {
    let mut tokens: Vec<String> = Vec::new();
    for seg in segs {
        let mut seg_tokens = seg.tokens.clone();
        let mut noun = seg.noun;
        if let Some(v) = seg.verb {
            if rng.random_bool(rates.substitute) {
                let w = (v + rng.random_range(1..VERBS.len())) % VERBS.len();
                seg_tokens = words(tgt_phrase(&VERBS[w], lang));
            }
        }
        if let Some(i) = noun {
            if rng.random_bool(rates.substitute) {
                let j = (i + rng.random_range(1..NOUNS.len())) % NOUNS.len();
                seg_tokens = words(tgt(&NOUNS[j], lang));
                noun = Some(j);
            }
        }
        if let Some(i) = noun {
            if lang == Lang::Ja && NOUNS[i].4.is_some() && rng.random_bool(rates.katakana) {
                seg_tokens = vec![NOUNS[i].4.expect("checked").to_string()];
            }
            if seg.role != Role::Other && rng.random_bool(rates.pronoun) {
                let table = if seg.role == Role::Subject { &SUBJECT_PRONOUNS } else { &OBJECT_PRONOUNS };
                seg_tokens = vec![pick(rng, for_lang(table, lang)).to_string()];
            }
        }
        tokens.extend(seg_tokens);
    }
    let fillers = for_lang(&FILLERS, lang);
    let mut out = Vec::with_capacity(tokens.len() * 2);
    for t in tokens {
        if rng.random_bool(rates.drop) {
            continue;
        }
        if rng.random_bool(rates.false_start) {
            if let Some(fs) = false_start(&t) {
                out.push(fs);
            }
        }
        out.push(t);
        if rng.random_bool(rates.filler) {
            out.push(pick(rng, fillers).to_string());
        }
        if rng.random_bool(rates.pause) {
            out.push("...".to_string());
        }
    }
    out
}

/// Generates `n ≥ 100` records for `en-fr`, `en-it` or `en-ja`, each carrying
/// its degradation level.
pub fn generate_synthetic(n: usize, lang_pair: &LangPair, profile: DegradationProfile, seed: u64) -> Result<Corpus, EvalError> {
    if n < 100 {
        return Err(EvalError::Config(format!("synthetic corpora need at least 100 records, got {n}")));
    }
    let lang = match lang_pair {
        LangPair::EnFr => Lang::Fr,
        LangPair::EnIt => Lang::It,
        LangPair::EnJa => Lang::Ja,
        other => return Err(EvalError::Config(format!("no synthetic grammar for `{other}`"))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|i| {
            let (source, segs) = sentence(&mut rng, lang);
            let reference_tokens: Vec<String> = segs.iter().flat_map(|s| s.tokens.iter().cloned()).collect();
            let level = profile.draw_level(&mut rng);
            let substitute = rng.random_range(0.0..MAX_SUBSTITUTION);
            let interp_tokens = degrade(&mut rng, &segs, lang, profile.rates(level, substitute));
            UtteranceRecord {
                id: format!("{lang_pair}-{i:04}"),
                lang_pair: lang_pair.clone(),
                source,
                interp: render(&interp_tokens, lang),
                reference: render(&reference_tokens, lang),
                rank: None,
                ref_provenance: Some("synthetic".into()),
                degradation: Some(level),
            }
        })
        .collect();
    Ok(Corpus::new(records)?)
}
