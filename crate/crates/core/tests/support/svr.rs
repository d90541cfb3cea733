//! Random SVR instances and a dense dual solver used as a reference.

use interpqe::learner::{kkt_residual, rbf, train_svr_with, SmoOptions, SvrHyperparams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub hp: SvrHyperparams,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(8..=20);
    let d = rng.random_range(1..=5);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = x
        .iter()
        .map(|r| (2.0 * r[0]).sin() + 0.3 * r.iter().sum::<f64>() + rng.random_range(-0.1..0.1))
        .collect();
    let hp = SvrHyperparams {
        c: [1.0, 10.0][rng.random_range(0..2)],
        epsilon: [0.01, 0.1][rng.random_range(0..2)],
        kernel_gamma: [0.5, 1.0, 2.0][rng.random_range(0..3)],
    };
    Instance { x, y, hp }
}

pub fn gram(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter().map(|a| x.iter().map(|b| rbf(a, b, gamma)).collect()).collect()
}

pub fn matvec(k: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    k.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Euclidean projection onto {0 ≤ a, s ≤ c, Σa = Σs}: a = clip(va − λ),
/// s = clip(vs + λ) with λ found by bisection.
pub fn project(va: &[f64], vs: &[f64], c: f64) -> (Vec<f64>, Vec<f64>) {
    let clip = |v: f64| v.clamp(0.0, c);
    let gap = |l: f64| va.iter().map(|v| clip(v - l)).sum::<f64>() - vs.iter().map(|v| clip(v + l)).sum::<f64>();
    let bound = c + va.iter().chain(vs).fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let l = 0.5 * (lo + hi);
    (va.iter().map(|v| clip(v - l)).collect(), vs.iter().map(|v| clip(v + l)).collect())
}

/// Dense dual solve by accelerated projected gradient with adaptive
/// restart. Returns (coef, bias).
pub fn reference_solve(inst: &Instance) -> (Vec<f64>, f64) {
    let n = inst.y.len();
    let (c, eps) = (inst.hp.c, inst.hp.epsilon);
    let k = gram(&inst.x, inst.hp.kernel_gamma);
    // Power iteration for the largest eigenvalue; the 2n Hessian doubles it.
    let mut v = vec![1.0; n];
    let mut lam = 0.0;
    for _ in 0..500 {
        let w = matvec(&k, &v);
        lam = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        v = w.iter().map(|t| t / lam).collect();
    }
    let step = 1.0 / (2.0 * lam * 1.01);
    let grad = |a: &[f64], s: &[f64]| {
        let beta: Vec<f64> = a.iter().zip(s).map(|(p, q)| p - q).collect();
        let kb = matvec(&k, &beta);
        let ga: Vec<f64> = (0..n).map(|i| kb[i] + eps - inst.y[i]).collect();
        let gs: Vec<f64> = (0..n).map(|i| -kb[i] + eps + inst.y[i]).collect();
        (ga, gs)
    };
    let (mut a, mut s) = (vec![0.0; n], vec![0.0; n]);
    let (mut ya, mut ys) = (a.clone(), s.clone());
    let mut t = 1.0f64;
    for _ in 0..400_000 {
        let (ga, gs) = grad(&ya, &ys);
        let va: Vec<f64> = (0..n).map(|i| ya[i] - step * ga[i]).collect();
        let vs: Vec<f64> = (0..n).map(|i| ys[i] - step * gs[i]).collect();
        let (na, ns) = project(&va, &vs, c);
        let moved: f64 = (0..n).map(|i| (na[i] - a[i]).powi(2) + (ns[i] - s[i]).powi(2)).sum::<f64>().sqrt();
        // Restart momentum when the step points uphill.
        let uphill: f64 = (0..n).map(|i| (ya[i] - na[i]) * (na[i] - a[i]) + (ys[i] - ns[i]) * (ns[i] - s[i])).sum();
        let t_next = if uphill > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let mom = if uphill > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        ya = (0..n).map(|i| na[i] + mom * (na[i] - a[i])).collect();
        ys = (0..n).map(|i| ns[i] + mom * (ns[i] - s[i])).collect();
        a = na;
        s = ns;
        t = t_next;
        if moved < 1e-13 {
            break;
        }
    }
    let beta: Vec<f64> = a.iter().zip(&s).map(|(p, q)| p - q).collect();
    let kb = matvec(&k, &beta);
    let free = |v: f64| v > 1e-7 * c && v < c * (1.0 - 1e-7);
    let mut sum = 0.0;
    let mut count = 0;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let upper_b = inst.y[i] - eps - kb[i];
        let lower_b = inst.y[i] + eps - kb[i];
        if free(a[i]) {
            sum += upper_b;
            count += 1;
        }
        if free(s[i]) {
            sum += lower_b;
            count += 1;
        }
        // Bound multipliers restrict the feasible offsets.
        if a[i] >= c * (1.0 - 1e-7) {
            lo = lo.max(upper_b);
        } else if a[i] <= 1e-7 * c {
            hi = hi.min(upper_b);
        }
        if s[i] >= c * (1.0 - 1e-7) {
            hi = hi.min(lower_b);
        } else if s[i] <= 1e-7 * c {
            lo = lo.max(lower_b);
        }
    }
    let bias = if count > 0 { sum / count as f64 } else { 0.5 * (lo + hi) };
    (beta, bias)
}

pub fn predict(x: &[Vec<f64>], coef: &[f64], bias: f64, gamma: f64, at: &[f64]) -> f64 {
    x.iter().zip(coef).map(|(xi, c)| c * rbf(xi, at, gamma)).sum::<f64>() + bias
}

/// Largest prediction gap between SMO at `tol` and the dense reference,
/// over the training points and random probes of 12 instances.
pub fn worst_gap(tol: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for seed in 0..12 {
        let inst = instance(seed);
        let opts = SmoOptions { tol, ..SmoOptions::default() };
        let sol = train_svr_with(&inst.x, &inst.y, &inst.hp, &opts).unwrap();
        assert!(sol.converged);
        assert!(kkt_residual(&inst.x, &inst.y, &inst.hp, &sol.coef) <= tol.max(1e-6));
        let (coef, bias) = reference_solve(&inst);
        let d = inst.x[0].len();
        let probes = inst
            .x
            .iter()
            .cloned()
            .chain((0..10).map(|_| (0..d).map(|_| rng.random_range(-1.2..1.2)).collect()));
        for p in probes {
            let ours = predict(&inst.x, &sol.coef, sol.bias, inst.hp.kernel_gamma, &p);
            let theirs = predict(&inst.x, &coef, bias, inst.hp.kernel_gamma, &p);
            worst = worst.max((ours - theirs).abs());
        }
    }
    worst
}

