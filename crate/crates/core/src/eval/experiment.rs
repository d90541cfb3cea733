use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{derive_seed, make_folds, paired_bootstrap, pearson, EvalError, Fold, SignificanceResult};
use crate::corpus::{Corpus, FillerLexicon};
use crate::features::{
    prepare, train_resources, FeatureError, FeatureExtractor, FeatureManifest, PreparedRecord, SeedList, Standardizer,
    DISFLUENCY_FEATURES,
};
use crate::learner::{default_grid, grid_search, rbf, SvrHyperparams};
use crate::meteor::{score_texts, MeteorConfig};

/// Cumulative ablation steps: column label and the features it removes on
/// top of the previous column.
pub const ABLATION_COLUMNS: [(&str, &[&str]); 4] = [
    ("w/o cog", &["cognate_ratio"]),
    ("w/o spec", &["nonspecific_ratio"]),
    ("w/o fill", &DISFLUENCY_FEATURES),
    ("w/o len", &["len_diff_ratio"]),
];

/// The proposed manifest with each ablation step applied cumulatively.
pub fn ablation_chain(proposed: &FeatureManifest) -> Vec<FeatureManifest> {
    let mut current = proposed.clone();
    ABLATION_COLUMNS
        .iter()
        .map(|(name, drop)| {
            current = current.without(*name, drop);
            current.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub k: usize,
    pub seed: u64,
    /// Hyperparameter grid; `None` uses [`default_grid`] for each manifest.
    pub grid: Option<Vec<SvrHyperparams>>,
    pub bootstrap_resamples: usize,
    /// Metric settings; the language is taken from each dataset.
    pub meteor: MeteorConfig,
    pub manifests: Vec<FeatureManifest>,
    /// Also run the cumulative ablation of the proposed manifest.
    pub ablation: bool,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k: 10,
            seed: DEFAULT_SEED,
            grid: None,
            bootstrap_resamples: 10_000,
            meteor: MeteorConfig::default(),
            manifests: vec![FeatureManifest::baseline(), FeatureManifest::trimmed(), FeatureManifest::proposed()],
            ablation: true,
        }
    }
}

impl ExperimentConfig {
    /// SHA-256 of the configuration's canonical JSON.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("plain data")).expect("plain data");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// One corpus to evaluate, with the word lists for its target language.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub corpus: Corpus,
    pub fillers: FillerLexicon,
    pub seeds: SeedList,
}

impl Dataset {
    pub fn with_builtin_lists(name: impl Into<String>, corpus: Corpus) -> Result<Self, EvalError> {
        let lang = corpus.lang_pair().target_lang().map_err(FeatureError::from)?;
        Ok(Dataset {
            name: name.into(),
            corpus,
            fillers: FillerLexicon::builtin(lang),
            seeds: SeedList::builtin(lang),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub dev_r: f64,
    pub test_r: f64,
    pub hyperparams: SvrHyperparams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestResult {
    pub manifest: FeatureManifest,
    pub folds: Vec<FoldResult>,
    pub mean_test_r: f64,
    /// Test-fold prediction for every record, in corpus order.
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetResult {
    pub name: String,
    pub lang_pair: String,
    pub records: usize,
    pub corpus_sha256: String,
    pub mean_label: f64,
    pub manifests: Vec<ManifestResult>,
    /// Ablation column label → mean test r minus that of `proposed`.
    pub ablation: Option<BTreeMap<String, f64>>,
    pub significance: Vec<SignificanceResult>,
}

impl DatasetResult {
    pub fn manifest(&self, name: &str) -> Option<&ManifestResult> {
        self.manifests.iter().find(|m| m.manifest.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub config_digest: String,
    pub config: serde_json::Value,
    pub datasets: Vec<DatasetResult>,
}

struct FoldOutput {
    /// Per unique feature list: fold result and `(index, prediction)` pairs.
    per_list: Vec<(FoldResult, Vec<(usize, f64)>)>,
}

fn run_fold(
    dataset: &Dataset,
    prepared: &[PreparedRecord],
    labels: &[f64],
    lists: &[FeatureManifest],
    config: &ExperimentConfig,
    fold_index: usize,
    fold: &Fold,
) -> Result<FoldOutput, EvalError> {
    let fail = |manifest: &str, message: String| EvalError::Fold {
        dataset: dataset.name.clone(),
        manifest: manifest.to_string(),
        fold: fold_index,
        message,
    };
    let train_refs: Vec<&PreparedRecord> = fold.train.iter().map(|&i| &prepared[i]).collect();
    let resources = train_resources(&train_refs).map_err(|e| fail("*", e.to_string()))?;
    let extractor = FeatureExtractor::new(
        dataset.corpus.lang_pair().clone(),
        resources,
        dataset.fillers.clone(),
        dataset.seeds.clone(),
    )?;
    let full: Vec<Vec<f64>> = prepared
        .iter()
        .map(|r| extractor.full(r))
        .collect::<Result<_, _>>()
        .map_err(|e| fail("*", e.to_string()))?;
    let pick = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| labels[i]).collect() };
    let (train_y, dev_y, test_y) = (pick(&fold.train), pick(&fold.dev), pick(&fold.test));

    let per_list = lists
        .iter()
        .map(|manifest| {
            let rows = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| manifest.project(&full[i])).collect() };
            let train_raw = rows(&fold.train);
            let standardizer = Standardizer::fit(&train_raw)?;
            let std_rows = |raw: Vec<Vec<f64>>| -> Vec<Vec<f64>> { raw.iter().map(|r| standardizer.transform(r)).collect() };
            let train_x = std_rows(train_raw);
            let dev_x = std_rows(rows(&fold.dev));
            let test_x = std_rows(rows(&fold.test));
            let grid = config.grid.clone().unwrap_or_else(|| default_grid(manifest.len()));
            let outcome = grid_search(&train_x, &train_y, &dev_x, &dev_y, &grid).map_err(|e| fail(&manifest.name, e.to_string()))?;
            let gamma = outcome.best.kernel_gamma;
            let support: Vec<(&Vec<f64>, f64)> = train_x
                .iter()
                .zip(&outcome.solution.coef)
                .filter(|(_, &c)| c != 0.0)
                .map(|(x, &c)| (x, c))
                .collect();
            let preds: Vec<f64> = test_x
                .iter()
                .map(|x| support.iter().map(|(sv, c)| c * rbf(sv, x, gamma)).sum::<f64>() + outcome.solution.bias)
                .collect();
            let test_r = pearson(&preds, &test_y).map_err(|e| fail(&manifest.name, format!("test correlation: {e}")))?;
            let result = FoldResult {
                fold: fold_index,
                dev_r: outcome.dev_r[outcome.best_index].expect("winner has a defined r"),
                test_r,
                hyperparams: outcome.best,
            };
            Ok((result, fold.test.iter().copied().zip(preds).collect()))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(FoldOutput { per_list })
}

fn corpus_labels(dataset: &Dataset, meteor: &MeteorConfig) -> Result<Vec<f64>, EvalError> {
    let lang = dataset.corpus.lang_pair().target_lang().map_err(FeatureError::from)?;
    let cfg = MeteorConfig {
        lang,
        ..meteor.clone()
    };
    dataset
        .corpus
        .records()
        .iter()
        .map(|r| {
            score_texts(&r.interp, &r.reference, &cfg)
                .map(|s| s.score)
                .map_err(|source| EvalError::Label {
                    id: r.id.clone(),
                    source,
                })
        })
        .collect()
}

fn run_dataset(dataset: &Dataset, config: &ExperimentConfig) -> Result<DatasetResult, EvalError> {
    let mut manifests = config.manifests.clone();
    if config.ablation {
        let proposed = FeatureManifest::proposed();
        if !manifests.iter().any(|m| m.features == proposed.features) {
            manifests.push(proposed.clone());
        }
        manifests.extend(ablation_chain(&proposed));
    }
    // Manifests with identical feature lists share their runs.
    let mut lists: Vec<FeatureManifest> = Vec::new();
    let list_of: Vec<usize> = manifests
        .iter()
        .map(|m| match lists.iter().position(|l| l.features == m.features) {
            Some(i) => i,
            None => {
                lists.push(m.clone());
                lists.len() - 1
            }
        })
        .collect();

    let labels = corpus_labels(dataset, &config.meteor)?;
    let prepared: Vec<PreparedRecord> = dataset
        .corpus
        .records()
        .iter()
        .map(|r| prepare(r, &dataset.fillers))
        .collect::<Result<_, _>>()?;
    let n = prepared.len();
    let plan = make_folds(n, config.k, derive_seed(config.seed, "folds"))?;
    let outputs: Vec<FoldOutput> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| run_fold(dataset, &prepared, &labels, &lists, config, i, fold))
        .collect::<Result<_, _>>()?;

    let list_results: Vec<ManifestResult> = lists
        .iter()
        .enumerate()
        .map(|(li, manifest)| {
            let mut predictions = vec![f64::NAN; n];
            let mut folds = Vec::with_capacity(outputs.len());
            for out in &outputs {
                let (result, preds) = &out.per_list[li];
                folds.push(result.clone());
                for &(i, p) in preds {
                    predictions[i] = p;
                }
            }
            let mean_test_r = folds.iter().map(|f| f.test_r).sum::<f64>() / folds.len() as f64;
            ManifestResult {
                manifest: manifest.clone(),
                folds,
                mean_test_r,
                predictions,
            }
        })
        .collect();
    let results: Vec<ManifestResult> = manifests
        .iter()
        .zip(&list_of)
        .map(|(m, &li)| ManifestResult {
            manifest: m.clone(),
            ..list_results[li].clone()
        })
        .collect();

    let find = |name: &str| results.iter().find(|m| m.manifest.name == name);
    let ablation = if config.ablation {
        let proposed = FeatureManifest::proposed();
        let proposed_r = results
            .iter()
            .find(|m| m.manifest.features == proposed.features)
            .expect("proposed always runs with ablation")
            .mean_test_r;
        Some(
            ABLATION_COLUMNS
                .iter()
                .map(|(name, _)| (name.to_string(), find(name).expect("ablation ran").mean_test_r - proposed_r))
                .collect(),
        )
    } else {
        None
    };

    let mut significance = Vec::new();
    for other in ["trimmed", "baseline"] {
        if let (Some(a), Some(b)) = (find("proposed"), find(other)) {
            let seed = derive_seed(config.seed, &format!("bootstrap/{}/proposed/{other}", dataset.name));
            let mut s = paired_bootstrap(&labels, &a.predictions, &b.predictions, config.bootstrap_resamples, seed)?;
            s.system_a = "proposed".into();
            s.system_b = other.into();
            significance.push(s);
        }
    }

    Ok(DatasetResult {
        name: dataset.name.clone(),
        lang_pair: dataset.corpus.lang_pair().to_string(),
        records: n,
        corpus_sha256: hex(&Sha256::digest(dataset.corpus.to_jsonl().as_bytes())),
        mean_label: labels.iter().sum::<f64>() / n as f64,
        manifests: results,
        ablation,
        significance,
    })
}

/// Runs cross-validation for every dataset and manifest. Any failed fold
/// aborts the whole run.
pub fn run_experiment(datasets: &[Dataset], config: &ExperimentConfig) -> Result<ExperimentReport, EvalError> {
    if datasets.is_empty() {
        return Err(EvalError::Config("no datasets".into()));
    }
    if config.manifests.is_empty() && !config.ablation {
        return Err(EvalError::Config("no manifests selected".into()));
    }
    for m in &config.manifests {
        FeatureManifest::custom(m.name.clone(), m.features.iter().cloned())?;
        if m.is_empty() {
            return Err(EvalError::Config(format!("manifest `{}` is empty", m.name)));
        }
    }
    config.meteor.validate().map_err(|e| EvalError::Config(e.to_string()))?;
    if let Some(grid) = &config.grid {
        if grid.is_empty() {
            return Err(EvalError::Config("empty hyperparameter grid".into()));
        }
    }
    let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != datasets.len() {
        return Err(EvalError::Config("dataset names must be unique".into()));
    }
    let results = datasets
        .iter()
        .map(|d| run_dataset(d, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentReport {
        seed: config.seed,
        config_digest: config.digest(),
        config: serde_json::to_value(config).expect("plain data"),
        datasets: results,
    })
}

impl ExperimentReport {
    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::to_value(self).expect("plain data")).expect("plain data")
    }

    fn column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for d in &self.datasets {
            for m in &d.manifests {
                let is_ablation = ABLATION_COLUMNS.iter().any(|(n, _)| *n == m.manifest.name);
                if !is_ablation && !cols.contains(&m.manifest.name) {
                    cols.push(m.manifest.name.clone());
                }
            }
        }
        cols
    }

    /// Mean test r per dataset and manifest, with an average row.
    pub fn results_table(&self) -> String {
        let cols = self.column_names();
        let k = self.datasets.first().and_then(|d| d.manifests.first()).map_or(0, |m| m.folds.len());
        let mut out = format!("Pearson's r on the test folds (mean of {k} folds)\n");
        let width = self.datasets.iter().map(|d| d.name.len()).max().unwrap_or(0).max(7);
        let _ = write!(out, "{:<width$}", "dataset");
        for c in &cols {
            let _ = write!(out, "  {c:>10}");
        }
        out.push('\n');
        for d in &self.datasets {
            let _ = write!(out, "{:<width$}", d.name);
            for c in &cols {
                match d.manifest(c) {
                    Some(m) => {
                        let _ = write!(out, "  {:>10.3}", m.mean_test_r);
                    }
                    None => {
                        let _ = write!(out, "  {:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<width$}", "Average");
        for c in &cols {
            let vals: Vec<f64> = self.datasets.iter().filter_map(|d| d.manifest(c)).map(|m| m.mean_test_r).collect();
            let _ = write!(out, "  {:>10.3}", vals.iter().sum::<f64>() / vals.len().max(1) as f64);
        }
        out.push('\n');
        for d in &self.datasets {
            for s in &d.significance {
                let _ = writeln!(
                    out,
                    "{}: {} vs {}: p = {:.4} ({} resamples, {} skipped)",
                    d.name, s.system_a, s.system_b, s.p_value, s.resamples, s.skipped
                );
            }
        }
        out
    }

    /// Cumulative ablation deltas, or `None` when ablation was not run.
    pub fn ablation_table(&self) -> Option<String> {
        if self.datasets.iter().any(|d| d.ablation.is_none()) {
            return None;
        }
        let width = self.datasets.iter().map(|d| d.name.len()).max().unwrap_or(0).max(7);
        let mut out = String::from("Change in mean test r versus proposed (cumulative ablation, left to right)\n");
        let _ = write!(out, "{:<width$}", "dataset");
        for (c, _) in ABLATION_COLUMNS {
            let _ = write!(out, "  {c:>9}");
        }
        out.push('\n');
        let mut sums = [0.0; 4];
        for d in &self.datasets {
            let ab = d.ablation.as_ref().expect("checked");
            let _ = write!(out, "{:<width$}", d.name);
            for (i, (c, _)) in ABLATION_COLUMNS.iter().enumerate() {
                let _ = write!(out, "  {:>+9.3}", ab[*c]);
                sums[i] += ab[*c];
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<width$}", "Average");
        for s in sums {
            let _ = write!(out, "  {:>+9.3}", s / self.datasets.len() as f64);
        }
        out.push('\n');
        Some(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("seed {}  config {}\n\n", self.seed, self.config_digest);
        out.push_str(&self.results_table());
        if let Some(t) = self.ablation_table() {
            out.push('\n');
            out.push_str(&t);
        }
        out
    }
}
