//! Epsilon-SVR with an RBF kernel, solved by sequential minimal optimization.
//!
//! The dual is written over `2n` multipliers (`alpha` then `alpha*`):
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  yᵀa = 0,  0 ≤ a ≤ C
//! y = (+1…, −1…),  Q_st = y_s y_t K(s mod n, t mod n),
//! p = (ε − z…, ε + z…)
//! ```
//!
//! where `z` are the labels shifted by their midrange. Each step updates the
//! maximal violating pair (ties to the lowest index) until the violation
//! drops below the tolerance. The prediction is `Σ βᵢ K(xᵢ, x) + b` with
//! `βᵢ = alphaᵢ − alpha*ᵢ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::pearson;
use crate::features::{FeatureError, FeatureManifest, FeatureVector, Standardizer};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("{what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("training needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("dev correlation is undefined for every grid cell (zero-variance labels or predictions)")]
    UndefinedCorrelation,
    #[error("model expects manifest `{expected}`, got `{found}`")]
    ManifestMismatch { expected: String, found: String },
    #[error("expected an `{expected}` document, found `{found}`")]
    Format { expected: &'static str, found: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperparams {
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
    pub kernel_gamma: f64,
}

impl SvrHyperparams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let ok = self.c > 0.0
            && self.c.is_finite()
            && self.epsilon >= 0.0
            && self.epsilon.is_finite()
            && self.kernel_gamma > 0.0
            && self.kernel_gamma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(LearnError::Hyperparams(format!("{self:?}")))
        }
    }
}

/// C ∈ {1, 10, 100} × ε ∈ {0.01, 0.05, 0.1} × γ ∈ {0.1/d, 1/d, 10/d}.
pub fn default_grid(dim: usize) -> Vec<SvrHyperparams> {
    let d = dim.max(1) as f64;
    let mut grid = Vec::with_capacity(27);
    for c in [1.0, 10.0, 100.0] {
        for epsilon in [0.01, 0.05, 0.1] {
            for g in [0.1, 1.0, 10.0] {
                grid.push(SvrHyperparams {
                    c,
                    epsilon,
                    kernel_gamma: g / d,
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Dual solution over the training points.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrSolution {
    /// `alphaᵢ − alpha*ᵢ` per training point.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

/// Row-major pairwise squared distances between `a` and `b`.
pub fn sq_dist_matrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for u in a {
        for v in b {
            out.push(sq_dist(u, v));
        }
    }
    out
}

fn check_rows(x: &[Vec<f64>], y: &[f64]) -> Result<(), LearnError> {
    if x.len() != y.len() {
        return Err(LearnError::Dimension {
            what: "labels",
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(LearnError::TooFewPoints(x.len()));
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(LearnError::Dimension {
            what: "feature vector",
            expected: d,
            found: r.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite("features"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite("labels"));
    }
    Ok(())
}

fn midrange(y: &[f64]) -> f64 {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    0.5 * (lo + hi)
}

/// Solves the dual for a precomputed row-major `n × n` kernel matrix.
pub fn solve_with_kernel(kernel: &[f64], y: &[f64], hp: &SvrHyperparams, opts: &SmoOptions) -> Result<SvrSolution, LearnError> {
    hp.validate()?;
    let n = y.len();
    if kernel.len() != n * n {
        return Err(LearnError::Dimension {
            what: "kernel matrix",
            expected: n * n,
            found: kernel.len(),
        });
    }
    if n < 2 {
        return Err(LearnError::TooFewPoints(n));
    }
    let shift = midrange(y);
    let z: Vec<f64> = y.iter().map(|v| v - shift).collect();
    let c = hp.c;
    let m = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0f64; m];
    let mut grad: Vec<f64> = (0..m)
        .map(|t| if t < n { hp.epsilon - z[t] } else { hp.epsilon + z[t - n] })
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // Maximal violating pair; the first half carries sign +1, the second -1.
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for (t, (&a, &g)) in alpha[..n].iter().zip(&grad[..n]).enumerate() {
            let v = -g;
            if a < c && v > gmax {
                gmax = v;
                i = t;
            }
            if a > 0.0 && v < gmin {
                gmin = v;
                j = t;
            }
        }
        for (t, (&a, &g)) in alpha[n..].iter().zip(&grad[n..]).enumerate() {
            if a > 0.0 && g > gmax {
                gmax = g;
                i = t + n;
            }
            if a < c && g < gmin {
                gmin = g;
                j = t + n;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let (ri, rj) = (i % n, j % n);
        let kii = kernel[ri * n + ri];
        let kjj = kernel[rj * n + rj];
        let qij = yi * yj * kernel[ri * n + rj];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        const TAU: f64 = 1e-12;
        if yi != yj {
            let mut quad = kii + kjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kii + kjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = yi * (alpha[i] - old_i);
        let dj = yj * (alpha[j] - old_j);
        let row_i = &kernel[ri * n..ri * n + n];
        let row_j = &kernel[rj * n..rj * n + n];
        let (g_pos, g_neg) = grad.split_at_mut(n);
        for (((gp, gn), &ki), &kj) in g_pos.iter_mut().zip(g_neg.iter_mut()).zip(row_i).zip(row_j) {
            let s = di * ki + dj * kj;
            *gp += s;
            *gn -= s;
        }
    }
    if !converged {
        log::warn!("SMO stopped at the iteration cap ({}) before reaching tolerance {}", opts.max_iter, opts.tol);
    }

    let rho = compute_rho(&alpha, &grad, n, c);
    Ok(SvrSolution {
        coef: (0..n).map(|t| alpha[t] - alpha[t + n]).collect(),
        bias: shift - rho,
        iterations,
        converged,
    })
}

/// Threshold from the free multipliers, or the midpoint of the feasible
/// interval when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], n: usize, c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..2 * n {
        let s = if t < n { 1.0 } else { -1.0 };
        let yg = s * grad[t];
        if alpha[t] >= c {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    }
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    sq_dist_matrix(x, x).into_iter().map(|d| (-gamma * d).exp()).collect()
}

/// Trains on already standardized rows.
pub fn train_svr(x: &[Vec<f64>], y: &[f64], hp: &SvrHyperparams) -> Result<SvrSolution, LearnError> {
    train_svr_with(x, y, hp, &SmoOptions::default())
}

pub fn train_svr_with(x: &[Vec<f64>], y: &[f64], hp: &SvrHyperparams, opts: &SmoOptions) -> Result<SvrSolution, LearnError> {
    check_rows(x, y)?;
    hp.validate()?;
    solve_with_kernel(&kernel_matrix(x, hp.kernel_gamma), y, hp, opts)
}

/// Largest KKT violation of `coef` as a solution for `(x, y, hp)`, measured
/// as the gap between the maximal and minimal violating gradients (0 when
/// the conditions hold exactly). Multipliers are recovered as
/// `alpha = max(β, 0)`, `alpha* = max(−β, 0)`.
pub fn kkt_residual(x: &[Vec<f64>], y: &[f64], hp: &SvrHyperparams, coef: &[f64]) -> f64 {
    let n = y.len();
    let shift = midrange(y);
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for t in 0..n {
        let f: f64 = (0..n).map(|s| coef[s] * rbf(&x[s], &x[t], hp.kernel_gamma)).sum();
        let z = y[t] - shift;
        let (a, a_star) = (coef[t].max(0.0), (-coef[t]).max(0.0));
        // Gradients of the alpha and alpha* entries.
        let g_plus = f + hp.epsilon - z;
        let g_minus = -f + hp.epsilon + z;
        // alpha: sign +1; alpha*: sign −1.
        let v_plus = -g_plus;
        let v_minus = g_minus;
        if a < hp.c {
            gmax = gmax.max(v_plus);
        }
        if a > 0.0 {
            gmin = gmin.min(v_plus);
        }
        if a_star > 0.0 {
            gmax = gmax.max(v_minus);
        }
        if a_star < hp.c {
            gmin = gmin.min(v_minus);
        }
    }
    (gmax - gmin).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub x: Vec<f64>,
    pub coef: f64,
}

/// A fitted predictor: standardizer, support vectors and bias, tied to the
/// manifest it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub manifest: FeatureManifest,
    pub standardizer: Standardizer,
    pub hyperparams: SvrHyperparams,
    pub support: Vec<SupportVector>,
    pub bias: f64,
}

const MODEL_FORMAT: &str = "svr-v1";

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    manifest: FeatureManifest,
    standardizer: Standardizer,
    hyperparams: SvrHyperparams,
    duals: Vec<SupportVector>,
    bias: f64,
}

impl TrainedModel {
    /// Keeps the training points with nonzero coefficients.
    pub fn from_solution(
        manifest: FeatureManifest,
        standardizer: Standardizer,
        hyperparams: SvrHyperparams,
        x_std: &[Vec<f64>],
        solution: &SvrSolution,
    ) -> Self {
        let support = x_std
            .iter()
            .zip(&solution.coef)
            .filter(|(_, &c)| c != 0.0)
            .map(|(x, &coef)| SupportVector { x: x.clone(), coef })
            .collect();
        TrainedModel {
            manifest,
            standardizer,
            hyperparams,
            support,
            bias: solution.bias,
        }
    }

    /// Decision value for an already standardized row.
    pub fn decision(&self, x_std: &[f64]) -> f64 {
        self.support
            .iter()
            .map(|sv| sv.coef * rbf(&sv.x, x_std, self.hyperparams.kernel_gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Prediction for a raw (unstandardized) row in manifest order.
    pub fn predict_row(&self, raw: &[f64], clamp: bool) -> Result<f64, LearnError> {
        if raw.len() != self.standardizer.dim() {
            return Err(LearnError::Dimension {
                what: "feature vector",
                expected: self.standardizer.dim(),
                found: raw.len(),
            });
        }
        let v = self.decision(&self.standardizer.transform(raw));
        Ok(if clamp { v.clamp(0.0, 1.0) } else { v })
    }

    pub fn predict(&self, x: &FeatureVector, clamp: bool) -> Result<f64, LearnError> {
        if *x.manifest != self.manifest {
            return Err(LearnError::ManifestMismatch {
                expected: self.manifest.name.clone(),
                found: x.manifest.name.clone(),
            });
        }
        self.predict_row(&x.values, clamp)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.into(),
            manifest: self.manifest.clone(),
            standardizer: self.standardizer.clone(),
            hyperparams: self.hyperparams,
            duals: self.support.clone(),
            bias: self.bias,
        };
        serde_json::to_string_pretty(&serde_json::to_value(doc).expect("plain data")).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(LearnError::Format {
                expected: MODEL_FORMAT,
                found: doc.format,
            });
        }
        Ok(TrainedModel {
            manifest: doc.manifest,
            standardizer: doc.standardizer,
            hyperparams: doc.hyperparams,
            support: doc.duals,
            bias: doc.bias,
        })
    }
}

/// Standardizes `raw` and trains one model.
pub fn fit(manifest: FeatureManifest, raw: &[Vec<f64>], y: &[f64], hp: &SvrHyperparams) -> Result<TrainedModel, LearnError> {
    check_rows(raw, y)?;
    if raw[0].len() != manifest.len() {
        return Err(LearnError::Dimension {
            what: "feature vector",
            expected: manifest.len(),
            found: raw[0].len(),
        });
    }
    let standardizer = Standardizer::fit(raw)?;
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.transform(r)).collect();
    let solution = train_svr(&x, y, hp)?;
    Ok(TrainedModel::from_solution(manifest, standardizer, *hp, &x, &solution))
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best: SvrHyperparams,
    pub best_index: usize,
    /// Dev Pearson r per grid cell, `None` where undefined.
    pub dev_r: Vec<Option<f64>>,
    /// Solution of the winning cell, trained on the training rows.
    pub solution: SvrSolution,
}

/// Trains every cell on `train`, scores it on `dev` by Pearson r and returns
/// the best. Ties go to the smaller C, then the larger epsilon, then grid
/// order. Rows must already be standardized.
pub fn grid_search(
    train_x: &[Vec<f64>],
    train_y: &[f64],
    dev_x: &[Vec<f64>],
    dev_y: &[f64],
    grid: &[SvrHyperparams],
) -> Result<GridOutcome, LearnError> {
    if grid.is_empty() {
        return Err(LearnError::EmptyGrid);
    }
    check_rows(train_x, train_y)?;
    if dev_x.len() != dev_y.len() {
        return Err(LearnError::Dimension {
            what: "dev labels",
            expected: dev_x.len(),
            found: dev_y.len(),
        });
    }
    for hp in grid {
        hp.validate()?;
    }
    let train_d = sq_dist_matrix(train_x, train_x);
    let dev_d = sq_dist_matrix(dev_x, train_x);
    let n = train_x.len();
    let opts = SmoOptions::default();
    let cells: Vec<Result<(Option<f64>, SvrSolution), LearnError>> = grid
        .par_iter()
        .map(|hp| {
            let kernel: Vec<f64> = train_d.iter().map(|d| (-hp.kernel_gamma * d).exp()).collect();
            let sol = solve_with_kernel(&kernel, train_y, hp, &opts)?;
            let preds: Vec<f64> = dev_d
                .chunks(n)
                .map(|row| {
                    row.iter()
                        .zip(&sol.coef)
                        .filter(|(_, &c)| c != 0.0)
                        .map(|(d, c)| c * (-hp.kernel_gamma * d).exp())
                        .sum::<f64>()
                        + sol.bias
                })
                .collect();
            Ok((pearson(&preds, dev_y).ok(), sol))
        })
        .collect();
    let mut dev_r = Vec::with_capacity(grid.len());
    let mut solutions = Vec::with_capacity(grid.len());
    for cell in cells {
        let (r, sol) = cell?;
        dev_r.push(r);
        solutions.push(sol);
    }
    let mut best: Option<usize> = None;
    for (k, r) in dev_r.iter().enumerate() {
        let Some(r) = *r else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let rb = dev_r[b].expect("defined");
                r > rb
                    || (r == rb
                        && (grid[k].c < grid[b].c || (grid[k].c == grid[b].c && grid[k].epsilon > grid[b].epsilon)))
            }
        };
        if better {
            best = Some(k);
        }
    }
    let best_index = best.ok_or(LearnError::UndefinedCorrelation)?;
    Ok(GridOutcome {
        best: grid[best_index],
        best_index,
        dev_r,
        solution: solutions.swap_remove(best_index),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(c: f64, epsilon: f64, kernel_gamma: f64) -> SvrHyperparams {
        SvrHyperparams { c, epsilon, kernel_gamma }
    }

    fn toy() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 6.0 - 1.0, ((i * 7) % 5) as f64 / 5.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 0.5 + 0.3 * r[0] - 0.1 * r[1] * r[1]).collect();
        (x, y)
    }

    #[test]
    fn constant_labels_give_constant_predictor() {
        let (x, _) = toy();
        let y = vec![0.37; x.len()];
        let sol = train_svr(&x, &y, &hp(10.0, 0.05, 0.5)).unwrap();
        assert!(sol.coef.iter().all(|&c| c == 0.0));
        assert_eq!(sol.bias, 0.37);
    }

    #[test]
    fn dual_feasibility_and_kkt() {
        let (x, y) = toy();
        for h in [hp(1.0, 0.01, 0.5), hp(100.0, 0.05, 2.0), hp(10.0, 0.0, 0.1)] {
            let sol = train_svr(&x, &y, &h).unwrap();
            assert!(sol.converged);
            assert!(sol.coef.iter().sum::<f64>().abs() < 1e-6);
            assert!(sol.coef.iter().all(|c| c.abs() <= h.c + 1e-12));
            assert!(kkt_residual(&x, &y, &h, &sol.coef) <= 1e-3);
        }
    }

    #[test]
    fn label_shift_equivariance() {
        let (x, y) = toy();
        let h = hp(10.0, 0.02, 1.0);
        let a = fit(FeatureManifest::custom("m", ["len_ratio", "punct_ratio"]).unwrap(), &x, &y, &h).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 3.25).collect();
        let b = fit(a.manifest.clone(), &x, &shifted, &h).unwrap();
        for r in &x {
            let (pa, pb) = (a.predict_row(r, false).unwrap(), b.predict_row(r, false).unwrap());
            assert!((pb - pa - 3.25).abs() < SmoOptions::default().tol, "{}", pb - pa - 3.25);
        }
    }

    #[test]
    fn empty_support_predicts_bias() {
        let m = TrainedModel {
            manifest: FeatureManifest::custom("m", ["len_ratio"]).unwrap(),
            standardizer: Standardizer {
                mean: vec![0.0],
                std: vec![1.0],
            },
            hyperparams: hp(1.0, 0.1, 1.0),
            support: vec![],
            bias: 0.42,
        };
        assert_eq!(m.predict_row(&[5.0], false).unwrap(), 0.42);
        assert_eq!(m.predict_row(&[-1.0], true).unwrap(), 0.42);
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let (x, y) = toy();
        let m = fit(FeatureManifest::custom("m", ["len_ratio", "punct_ratio"]).unwrap(), &x, &y, &hp(10.0, 0.01, 0.7)).unwrap();
        let text = m.to_json();
        let back = TrainedModel::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        for r in &x {
            assert_eq!(m.predict_row(r, false).unwrap().to_bits(), back.predict_row(r, false).unwrap().to_bits());
        }
    }

    #[test]
    fn manifest_mismatch_is_rejected() {
        let (x, y) = toy();
        let m = fit(FeatureManifest::custom("m", ["len_ratio", "punct_ratio"]).unwrap(), &x, &y, &hp(1.0, 0.1, 1.0)).unwrap();
        let other = std::sync::Arc::new(FeatureManifest::custom("o", ["len_ratio", "cognate_ratio"]).unwrap());
        let v = FeatureVector::new(other, "u", vec![0.0, 0.0]).unwrap();
        assert!(matches!(m.predict(&v, false), Err(LearnError::ManifestMismatch { .. })));
    }

    #[test]
    fn input_validation() {
        let (x, y) = toy();
        assert!(matches!(train_svr(&x, &y[1..], &hp(1.0, 0.1, 1.0)), Err(LearnError::Dimension { .. })));
        let mut bad = x.clone();
        bad[3][0] = f64::NAN;
        assert!(matches!(train_svr(&bad, &y, &hp(1.0, 0.1, 1.0)), Err(LearnError::NonFinite(_))));
        assert!(train_svr(&x, &y, &hp(0.0, 0.1, 1.0)).is_err());
    }

    #[test]
    fn grid_of_one_and_tie_rule() {
        let (x, y) = toy();
        let only = [hp(10.0, 0.01, 0.5)];
        assert_eq!(grid_search(&x, &y, &x, &y, &only).unwrap().best, only[0]);
        // Identical cells except for C: both fit the same, smaller C wins.
        let tied = [hp(100.0, 0.01, 0.5), hp(10.0, 0.01, 0.5)];
        let out = grid_search(&x, &y, &x, &y, &tied).unwrap();
        assert_eq!(out.dev_r[0], out.dev_r[1]);
        assert_eq!(out.best.c, 10.0);
        assert!(matches!(grid_search(&x, &y, &x, &y, &[]), Err(LearnError::EmptyGrid)));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(18);
        assert_eq!(g.len(), 27);
        assert!(g.iter().any(|h| h.c == 100.0 && h.epsilon == 0.1 && (h.kernel_gamma - 10.0 / 18.0).abs() < 1e-15));
    }
}
