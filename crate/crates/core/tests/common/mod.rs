//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the optimizer; formulas are written out directly
//! under full coupling and unit noise.

#![allow(dead_code)]

use ctsf::model::{BandPlan, ChannelSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_channels(rng: &mut ChaCha8Rng, k: usize) -> ChannelSet {
    let bob = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    let eve = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    ChannelSet::unit_noise(bob, eve)
}

/// `Σ_k log2(1 + γ_k) - log2(1 + γ_{e,k})` with every band fully coupled.
/// Bob cancels the decoys; Eve hears everything.
pub fn direct_rate(xi: &[f64], h: &[f64], e: &[f64], trues: &[usize]) -> f64 {
    let bob_total: f64 = trues.iter().map(|&i| xi[i] * h[i]).sum();
    let eve_total: f64 = xi.iter().zip(e).map(|(x, g)| x * g).sum();
    trues
        .iter()
        .map(|&k| {
            let s = xi[k] * h[k];
            let se = xi[k] * e[k];
            let gamma = s / (bob_total - s + 1.0);
            let gamma_e = se / (eve_total - se + 1.0);
            (1.0 + gamma).log2() - (1.0 + gamma_e).log2()
        })
        .sum()
}

/// Largest violation of the deception, order, dominance, budget and sign
/// constraints; zero when all hold.
pub fn violation(xi: &[f64], e: &[f64], plan: &BandPlan, threshold: f64, budget: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xi {
        worst = worst.max(-x);
    }
    worst = worst.max(xi.iter().sum::<f64>() - budget);
    let eve_total: f64 = xi.iter().zip(e).map(|(x, g)| x * g).sum();
    for &n in &plan.fake_bands {
        let own = xi[n] * e[n];
        if threshold > 0.0 {
            worst = worst.max(threshold * (eve_total - own + 1.0) - own);
        }
        for &k in &plan.true_bands {
            worst = worst.max(xi[k] - xi[n]);
            worst = worst.max(xi[k] * e[k] - own);
        }
    }
    worst
}

/// Best grid value of [`direct_rate`] over the feasible set, grid step
/// `budget / steps` on every band. `None` when no grid point is feasible.
///
/// Decoy indices start at the largest true index; points below that break
/// the order constraint, so nothing feasible is skipped.
pub fn grid_optimum(ch: &ChannelSet, plan: &BandPlan, threshold: f64, budget: f64, steps: usize) -> Option<f64> {
    let order: Vec<usize> = plan.true_bands.iter().chain(&plan.fake_bands).copied().collect();
    let mut search = Grid {
        ch,
        plan,
        threshold,
        budget,
        step: budget / steps as f64,
        steps,
        order,
        xi: vec![0.0; plan.num_bands],
        best: None,
    };
    search.descend(0, 0, 0);
    search.best
}

struct Grid<'a> {
    ch: &'a ChannelSet,
    plan: &'a BandPlan,
    threshold: f64,
    budget: f64,
    step: f64,
    steps: usize,
    order: Vec<usize>,
    xi: Vec<f64>,
    best: Option<f64>,
}

impl Grid<'_> {
    fn descend(&mut self, depth: usize, used: usize, max_true: usize) {
        if depth == self.order.len() {
            let e = &self.ch.eve_gain;
            if violation(&self.xi, e, self.plan, self.threshold, self.budget) <= 1e-12 * self.budget.max(1.0) {
                let r = direct_rate(&self.xi, &self.ch.bob_gain, e, &self.plan.true_bands);
                self.best = Some(self.best.map_or(r, |b: f64| b.max(r)));
            }
            return;
        }
        let band = self.order[depth];
        let is_true = depth < self.plan.true_bands.len();
        let lo = if is_true { 0 } else { max_true };
        for i in lo..=self.steps - used {
            self.xi[band] = i as f64 * self.step;
            let m = if is_true { max_true.max(i) } else { max_true };
            self.descend(depth + 1, used + i, m);
        }
        self.xi[band] = 0.0;
    }
}

/// Squared sinc ratio written out directly.
pub fn coefficient(alpha: f64, d: f64, k: usize) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    let x = std::f64::consts::PI * alpha * d;
    let num = x.sin() / x;
    let den = (x / k as f64).sin() / (x / k as f64);
    (num / den).powi(2)
}

/// Grid-scan minimizer of the coefficient misfit over α in (0, 1].
pub fn scan_alpha(targets: &[f64], k_ref: usize, points: usize) -> f64 {
    let k = targets.len();
    (1..=points)
        .map(|i| i as f64 / points as f64)
        .map(|a| {
            let f: f64 = targets
                .iter()
                .enumerate()
                .map(|(i, &c)| (c - coefficient(a, i as f64 - k_ref as f64, k)).powi(2))
                .sum();
            (a, f)
        })
        .fold((1.0, f64::INFINITY), |b, p| if p.1 < b.1 { p } else { b })
        .0
}
