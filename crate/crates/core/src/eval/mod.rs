//! Cross-validation harness, correlation statistics and significance tests.

mod experiment;
mod synth;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use experiment::{
    ablation_chain, run_experiment, Dataset, DatasetResult, ExperimentConfig, ExperimentReport, FoldResult, ManifestResult,
    ABLATION_COLUMNS,
};
pub use synth::{generate_synthetic, DegradationProfile};

use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::learner::LearnError;
use crate::meteor::MeteorError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("correlation is undefined (zero variance)")]
    UndefinedCorrelation,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("{n} records cannot be split into {k} folds (need at least {})", 3 * .k)]
    TooFewRecords { n: usize, k: usize },
    #[error("invalid experiment setting: {0}")]
    Config(String),
    #[error("every bootstrap resample had an undefined correlation")]
    NoValidResamples,
    #[error("record `{id}`: {source}")]
    Label { id: String, source: MeteorError },
    #[error("dataset `{dataset}`, manifest `{manifest}`, fold {fold}: {message}")]
    Fold {
        dataset: String,
        manifest: String,
        fold: usize,
        message: String,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Derives an independent sub-seed for a named purpose.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Product-moment correlation. Fails when either side is (numerically)
/// constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewItems(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let tiny = |ss: f64, m: f64| ss <= 1e-24 * n * (1.0 + m * m);
    if tiny(sxx, mx) || tiny(syy, my) || !sxy.is_finite() {
        return Err(EvalError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Shuffles `0..n` with the seed and cuts it into `k` near-equal slices.
/// Fold `i` tests on slice `i`, tunes on slice `i + 1` (cyclically) and
/// trains on the rest. Index lists are sorted.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 || n < 3 * k {
        return Err(EvalError::TooFewRecords { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let slices: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut s = order[i * n / k..(i + 1) * n / k].to_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let folds = (0..k)
        .map(|i| {
            let dev_i = (i + 1) % k;
            let mut train: Vec<usize> = (0..k)
                .filter(|&j| j != i && j != dev_i)
                .flat_map(|j| slices[j].iter().copied())
                .collect();
            train.sort_unstable();
            Fold {
                train,
                dev: slices[dev_i].clone(),
                test: slices[i].clone(),
            }
        })
        .collect();
    Ok(FoldPlan { k, seed, folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub system_a: String,
    pub system_b: String,
    /// Share of valid resamples where A's correlation is not above B's.
    pub p_value: f64,
    pub resamples: usize,
    /// Resamples dropped because a correlation was undefined.
    pub skipped: usize,
}

/// One-sided paired bootstrap of Pearson r: resamples items with
/// replacement and counts how often system A fails to beat system B.
pub fn paired_bootstrap(
    y_true: &[f64],
    pred_a: &[f64],
    pred_b: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<SignificanceResult, EvalError> {
    let n = y_true.len();
    if pred_a.len() != n {
        return Err(EvalError::LengthMismatch(n, pred_a.len()));
    }
    if pred_b.len() != n {
        return Err(EvalError::LengthMismatch(n, pred_b.len()));
    }
    if n < 2 {
        return Err(EvalError::TooFewItems(n));
    }
    if resamples == 0 {
        return Err(EvalError::Config("bootstrap needs at least one resample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ys, mut a, mut b) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut not_better, mut skipped) = (0usize, 0usize);
    for _ in 0..resamples {
        for slot in 0..n {
            let i = rng.random_range(0..n);
            ys[slot] = y_true[i];
            a[slot] = pred_a[i];
            b[slot] = pred_b[i];
        }
        match (pearson(&a, &ys), pearson(&b, &ys)) {
            (Ok(ra), Ok(rb)) => not_better += usize::from(ra <= rb),
            _ => skipped += 1,
        }
    }
    let valid = resamples - skipped;
    if valid == 0 {
        return Err(EvalError::NoValidResamples);
    }
    Ok(SignificanceResult {
        system_a: "a".into(),
        system_b: "b".into(),
        p_value: not_better as f64 / valid as f64,
        resamples,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(EvalError::UndefinedCorrelation)));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(EvalError::TooFewItems(1))));
    }

    #[test]
    fn fold_examples() {
        let plan = make_folds(559, 10, 7).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
        assert!(sizes.iter().all(|&s| s == 55 || s == 56));
        assert_eq!(sizes.iter().sum::<usize>(), 559);
        let small = make_folds(30, 10, 1).unwrap();
        for f in &small.folds {
            assert_eq!((f.test.len(), f.dev.len(), f.train.len()), (3, 3, 24));
        }
        assert_eq!(make_folds(30, 10, 1).unwrap(), small);
        assert!(matches!(make_folds(29, 10, 1), Err(EvalError::TooFewRecords { .. })));
    }

    #[test]
    fn bootstrap_examples() {
        let y: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
        let same = paired_bootstrap(&y, &y, &y, 1000, 3).unwrap();
        assert_eq!(same.p_value, 1.0);
        let anti: Vec<f64> = y.iter().enumerate().map(|(i, v)| -v + 0.3 * ((i * 13) % 7) as f64).collect();
        let dominant = paired_bootstrap(&y, &y, &anti, 1000, 3).unwrap();
        assert!(dominant.p_value < 0.05);
        assert_eq!(paired_bootstrap(&y, &y, &anti, 1000, 3).unwrap(), dominant);
        assert!(paired_bootstrap(&y, &y[1..], &y, 10, 3).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_purpose() {
        assert_ne!(derive_seed(1, "folds"), derive_seed(1, "bootstrap"));
        assert_eq!(derive_seed(1, "folds"), derive_seed(1, "folds"));
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            xs in prop::collection::vec(-100.0f64..100.0, 3..30),
            ys in prop::collection::vec(-100.0f64..100.0, 3..30),
            scale in 0.1f64..10.0,
            offset in -50.0f64..50.0,
        ) {
            let n = xs.len().min(ys.len());
            let (x, y) = (&xs[..n], &ys[..n]);
            if let Ok(r) = pearson(x, y) {
                let moved: Vec<f64> = x.iter().map(|v| v * scale + offset).collect();
                let flipped: Vec<f64> = x.iter().map(|v| -v * scale).collect();
                prop_assert!((pearson(&moved, y).unwrap() - r).abs() < 1e-9);
                prop_assert!((pearson(&flipped, y).unwrap() + r).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn folds_partition(n in 30usize..200, k in 2usize..10, seed: u64) {
            prop_assume!(n >= 3 * k);
            let plan = make_folds(n, k, seed).unwrap();
            let mut seen = vec![0u8; n];
            for f in &plan.folds {
                for &i in &f.test {
                    seen[i] += 1;
                }
                prop_assert!(!f.dev.is_empty() && !f.test.is_empty());
                prop_assert!(f.dev.iter().all(|i| !f.train.contains(i) && !f.test.contains(i)));
                prop_assert_eq!(f.train.len() + f.dev.len() + f.test.len(), n);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn bootstrap_swap_complement(seed: u64) {
            let y: Vec<f64> = (0..40).map(|i| ((i * 17 + seed as usize % 13) % 23) as f64).collect();
            let a: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + ((i * 5) % 9) as f64).collect();
            let b: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + ((i * 7) % 11) as f64).collect();
            let ab = paired_bootstrap(&y, &a, &b, 200, seed).unwrap();
            let ba = paired_bootstrap(&y, &b, &a, 200, seed).unwrap();
            prop_assert!(ab.p_value + ba.p_value >= 1.0 - 1e-12);
        }
    }
}
