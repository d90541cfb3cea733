//! Flat JSON run configuration. Every key is optional; command-line flags
//! take precedence over file values, which take precedence over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Deserializer};

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, deserialize_with = "one_or_many")]
    pub corpus: Vec<PathBuf>,
    #[serde(default, deserialize_with = "comma_list")]
    pub manifests: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub fillers: Option<PathBuf>,
    pub seed_lists: Option<PathBuf>,
    pub k: Option<usize>,
    pub bootstrap_resamples: Option<usize>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub kernel_gamma: Option<f64>,
    pub meteor_alpha: Option<f64>,
    pub meteor_beta: Option<f64>,
    pub meteor_gamma_pen: Option<f64>,
    #[serde(default, deserialize_with = "comma_list")]
    pub meteor_matchers: Option<Vec<String>>,
    pub ablation: Option<bool>,
    pub clamp: Option<bool>,
    pub model: Option<PathBuf>,
    pub resources: Option<PathBuf>,
    #[serde(default, deserialize_with = "comma_list")]
    pub pairs: Option<Vec<String>>,
    pub n: Option<usize>,
    pub profile: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // Relative paths in the file are relative to the file itself.
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.corpus.iter_mut().for_each(rebase);
        for p in [
            &mut cfg.out,
            &mut cfg.fillers,
            &mut cfg.seed_lists,
            &mut cfg.model,
            &mut cfg.resources,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        Ok(cfg)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PathBuf>, D::Error> {
    Ok(match OneOrMany::<PathBuf>::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

/// Accepts `["a", "b"]` or `"a,b"`.
fn comma_list<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<String>>, D::Error> {
    Ok(Some(match OneOrMany::<String>::deserialize(d)? {
        OneOrMany::One(s) => split_list(&s),
        OneOrMany::Many(v) => v,
    }))
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

pub fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_lists_in_either_form() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"corpus": "a.jsonl", "manifests": "baseline, proposed", "C": 10, "seed": 3}"#).unwrap();
        assert_eq!(cfg.corpus, vec![PathBuf::from("a.jsonl")]);
        assert_eq!(cfg.manifests.unwrap(), ["baseline", "proposed"]);
        assert_eq!(cfg.c, Some(10.0));
        let cfg: RunConfig = serde_json::from_str(r#"{"corpus": ["a", "b"], "meteor_matchers": ["exact"]}"#).unwrap();
        assert_eq!(cfg.corpus.len(), 2);
        assert_eq!(cfg.meteor_matchers.unwrap(), ["exact"]);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).is_err());
    }
}
