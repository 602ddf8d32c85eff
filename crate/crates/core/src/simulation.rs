//! Rician channel generation and Monte-Carlo evaluation of the allocation
//! methods.
//!
//! Realization `i` of a batch is drawn from a ChaCha8 generator seeded with
//! the batch seed and switched to stream `i`, so any realization can be
//! regenerated alone and parallel runs match serial ones bit for bit. All
//! methods and sweep points share one batch, which makes comparisons paired.
//!
//! Realizations where the deception constraints cannot be met are counted in
//! `feasible_fraction`, excluded from the rate and SINR means, and count as
//! neither deceived nor intercepted: the scheme does not transmit.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BandPlan, ChannelSet, RicianParams, Scenario};
use crate::multiplexing::CorrelationMatrix;
use crate::optimizer::{bado, equal_power_baseline, ofdm_baseline, recover_powers, BadoOptions, Problem};
use crate::sinr::{decoy_dominates, indicators_from_report, RateReport, SinrReport};

/// Power gains `|h|²` of `num_bands` independent Rician channels.
///
/// `h = √(κ/(κ+1)) √μ e^{jθ} + √(μ/(κ+1)) w`, with θ uniform and `w`
/// circularly-symmetric unit complex Gaussian, so `E|h|² = μ`.
pub fn draw_channels<R: Rng + ?Sized>(params: &RicianParams, num_bands: usize, rng: &mut R) -> Vec<f64> {
    let kappa = params.k_linear();
    let mu = params.mean_gain;
    let los = (kappa / (kappa + 1.0) * mu).sqrt();
    let scatter = (mu / (kappa + 1.0) / 2.0).sqrt();
    (0..num_bands)
        .map(|_| {
            let theta: f64 = rng.random::<f64>() * TAU;
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let re = los * theta.cos() + scatter * x;
            let im = los * theta.sin() + scatter * y;
            re * re + im * im
        })
        .collect()
}

fn realization_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationBatch {
    pub realizations: Vec<ChannelSet>,
    pub seed: u64,
    pub params: (RicianParams, RicianParams),
}

impl RealizationBatch {
    /// Bob's gains are drawn before Eve's within each realization.
    pub fn generate(scenario: &Scenario) -> Self {
        let k = scenario.band_plan.num_bands;
        let bob = scenario.rician_bob;
        let eve = scenario.rician_eve;
        let realizations = (0..scenario.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = realization_rng(scenario.seed, i);
                let bob_gain = draw_channels(&bob, k, &mut rng);
                let eve_gain = draw_channels(&eve, k, &mut rng);
                ChannelSet {
                    bob_gain,
                    eve_gain,
                    bob_noise: vec![scenario.bob_noise; k],
                    eve_noise: vec![scenario.eve_noise; k],
                }
            })
            .collect();
        Self {
            realizations,
            seed: scenario.seed,
            params: (bob, eve),
        }
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bado,
    /// `P_s / K` on every band, evaluated at the plan's α.
    Equal,
    /// BADO with orthogonal bands.
    Ofdm,
    /// BADO without the threshold, order and dominance constraints.
    BadoUnconstrained,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bado, Method::Equal, Method::Ofdm, Method::BadoUnconstrained];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bado => "bado",
            Method::Equal => "equal",
            Method::Ofdm => "ofdm",
            Method::BadoUnconstrained => "bado-unconstrained",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Transmit powers chosen by `method` and the coupling they are evaluated
/// under, or `None` when the method has no admissible allocation.
pub fn allocate(
    ch: &ChannelSet,
    plan: &BandPlan,
    threshold: f64,
    budget: f64,
    method: Method,
) -> Result<Option<(Vec<f64>, CorrelationMatrix)>> {
    let ch = ch.normalized();
    if method == Method::Equal {
        let powers = equal_power_baseline(plan, &ch, budget).powers;
        return Ok(Some((powers, CorrelationMatrix::from_alpha(plan.alpha, plan.num_bands)?)));
    }
    let problem = Problem::new(ch, plan.clone(), threshold, budget)?;
    let opts = BadoOptions::default();
    let outcome = match method {
        Method::Ofdm => ofdm_baseline(&problem, &opts)
            .map(|r| (r.xi_star.0, CorrelationMatrix::identity(plan.num_bands))),
        Method::Bado | Method::BadoUnconstrained => {
            let problem = if method == Method::Bado {
                problem
            } else {
                problem.without_decoy_constraints()
            };
            bado(&problem, &opts).and_then(|r| {
                if !r.converged {
                    return Err(Error::Solver("alternating optimization did not converge".into()));
                }
                let rec = recover_powers(&problem, &r)?;
                let corr = CorrelationMatrix::from_alpha(rec.alpha_fit.alpha_star, plan.num_bands)?;
                Ok((rec.powers.powers, corr))
            })
        }
        Method::Equal => unreachable!(),
    };
    match outcome {
        Ok(v) => Ok(Some(v)),
        Err(Error::Infeasible(_) | Error::Solver(_) | Error::Recovery(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Metrics of one realization under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub powers: Vec<f64>,
    pub sum_secrecy: f64,
    pub intercept_sinr: Vec<f64>,
    pub decoy_sinr: Vec<f64>,
    pub intercepted: Vec<bool>,
    pub deceived: Vec<bool>,
    pub dominates: bool,
}

pub fn evaluate(ch: &ChannelSet, plan: &BandPlan, threshold: f64, budget: f64, method: Method) -> Result<Option<Evaluation>> {
    let Some((powers, corr)) = allocate(ch, plan, threshold, budget, method)? else {
        return Ok(None);
    };
    let report = SinrReport::evaluate(&powers, ch, &corr, plan, false)?;
    let rates = RateReport::from_sinr(&report);
    let ind = indicators_from_report(&report, &powers, ch, plan, threshold);
    Ok(Some(Evaluation {
        dominates: decoy_dominates(&powers, ch, plan),
        sum_secrecy: rates.sum_secrecy,
        intercept_sinr: report.eve_intercept_sinr,
        decoy_sinr: report.eve_decoy_sinr,
        intercepted: ind.intercepted,
        deceived: ind.deceived,
        powers,
    }))
}

/// Per-realization evaluations, in batch order. `None` marks an infeasible
/// realization.
pub fn point_outcomes(
    batch: &RealizationBatch,
    plan: &BandPlan,
    threshold: f64,
    budget: f64,
    method: Method,
) -> Result<Vec<Option<Evaluation>>> {
    batch
        .realizations
        .par_iter()
        .map(|ch| evaluate(ch, plan, threshold, budget, method))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// P_s (linear) or T̃h at this point, depending on the sweep.
    pub sweep_value: f64,
    pub method: Method,
    pub mean_sum_secrecy: f64,
    pub stderr_secrecy: f64,
    pub mean_intercept_sinr: f64,
    pub mean_decoy_sinr: f64,
    pub interception_prob: f64,
    pub deception_prob: f64,
    pub feasible_fraction: f64,
    /// Fraction of all realizations where the decoys dominate at Eve.
    pub dominance_rate: f64,
    pub trials: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (if n == 0 { f64::NAN } else { sum / n as f64 }, n)
}

impl MetricsRecord {
    /// Means run over feasible realizations; probabilities over all of them.
    pub fn from_outcomes(sweep_value: f64, method: Method, outcomes: &[Option<Evaluation>]) -> Self {
        let trials = outcomes.len();
        let feasible: Vec<&Evaluation> = outcomes.iter().flatten().collect();
        let (mean_sum_secrecy, n) = mean(feasible.iter().map(|e| e.sum_secrecy));
        let stderr_secrecy = if n < 2 {
            f64::NAN
        } else {
            let var = feasible
                .iter()
                .map(|e| (e.sum_secrecy - mean_sum_secrecy).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        let (mean_intercept_sinr, _) = mean(feasible.iter().flat_map(|e| e.intercept_sinr.iter().copied()));
        let (mean_decoy_sinr, _) = mean(feasible.iter().flat_map(|e| e.decoy_sinr.iter().copied()));
        let rate = |count: usize, per: usize| {
            if trials == 0 || per == 0 {
                0.0
            } else {
                count as f64 / (trials * per) as f64
            }
        };
        let (n_true, n_fake) = feasible
            .first()
            .map(|e| (e.intercepted.len(), e.deceived.len()))
            .unwrap_or((0, 0));
        let intercepted = feasible.iter().map(|e| e.intercepted.iter().filter(|&&b| b).count()).sum();
        let deceived = feasible.iter().map(|e| e.deceived.iter().filter(|&&b| b).count()).sum();
        let dominating = feasible.iter().filter(|e| e.dominates).count();
        Self {
            sweep_value,
            method,
            mean_sum_secrecy,
            stderr_secrecy,
            mean_intercept_sinr,
            mean_decoy_sinr,
            interception_prob: rate(intercepted, n_true),
            deception_prob: rate(deceived, n_fake),
            feasible_fraction: rate(n, 1),
            dominance_rate: rate(dominating, 1),
            trials,
        }
    }
}

/// Generates the scenario's batch and evaluates one method on it.
pub fn run_point(scenario: &Scenario, method: Method) -> Result<MetricsRecord> {
    let batch = RealizationBatch::generate(scenario);
    let outcomes = point_outcomes(
        &batch,
        &scenario.band_plan,
        scenario.deception_threshold,
        scenario.total_power,
        method,
    )?;
    Ok(MetricsRecord::from_outcomes(scenario.deception_threshold, method, &outcomes))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::precondition("sweep grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::precondition("sweep grid must be strictly ascending"));
    }
    Ok(())
}

/// One record per (P_s, method), P_s linear, grid-major order.
pub fn sweep_power(scenario: &Scenario, ps_grid: &[f64], methods: &[Method]) -> Result<Vec<MetricsRecord>> {
    check_grid(ps_grid)?;
    let batch = RealizationBatch::generate(scenario);
    let mut out = Vec::with_capacity(ps_grid.len() * methods.len());
    for &ps in ps_grid {
        for &m in methods {
            let outcomes = point_outcomes(&batch, &scenario.band_plan, scenario.deception_threshold, ps, m)?;
            out.push(MetricsRecord::from_outcomes(ps, m, &outcomes));
        }
    }
    Ok(out)
}

/// One record per (T̃h, method), grid-major order.
pub fn sweep_threshold(scenario: &Scenario, th_grid: &[f64], methods: &[Method]) -> Result<Vec<MetricsRecord>> {
    check_grid(th_grid)?;
    if th_grid.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::precondition("thresholds must be finite and nonnegative"));
    }
    let batch = RealizationBatch::generate(scenario);
    let mut out = Vec::with_capacity(th_grid.len() * methods.len());
    for &th in th_grid {
        for &m in methods {
            let outcomes = point_outcomes(&batch, &scenario.band_plan, th, scenario.total_power, m)?;
            out.push(MetricsRecord::from_outcomes(th, m, &outcomes));
        }
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "sweep_value,method,mean_sum_secrecy,mean_intercept_sinr,mean_decoy_sinr,\
interception_prob,deception_prob,feasible_fraction,trials,stderr_secrecy";

/// Nine significant digits in scientific notation.
fn sig9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        format!("{x}")
    }
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            sig9(r.sweep_value),
            r.method,
            sig9(r.mean_sum_secrecy),
            sig9(r.mean_intercept_sinr),
            sig9(r.mean_decoy_sinr),
            sig9(r.interception_prob),
            sig9(r.deception_prob),
            sig9(r.feasible_fraction),
            r.trials,
            sig9(r.stderr_secrecy),
        )?;
    }
    Ok(())
}
