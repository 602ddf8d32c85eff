//! SINR expressions at Bob and Eve, secrecy rates, the decoy-dominance
//! condition and per-realization interception/deception indicators.
//!
//! Bob knows the decoys and cancels them, so his interference comes from the
//! other true bands only (optionally plus a residual decoy term). Eve sees
//! every band. Correlation entry `c(i, k)` weights band `i` leaking into the
//! receiver of band `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BandPlan, ChannelSet};
use crate::multiplexing::CorrelationMatrix;

fn check_dims(powers: &[f64], ch: &ChannelSet, corr: &CorrelationMatrix, plan: &BandPlan) -> Result<()> {
    let k = plan.num_bands;
    if powers.len() != k || ch.num_bands() != k || corr.num_bands() != k {
        return Err(Error::precondition(format!(
            "dimension mismatch: plan has {k} bands, powers {}, channels {}, correlation {}",
            powers.len(),
            ch.num_bands(),
            corr.num_bands()
        )));
    }
    Ok(())
}

/// Bob's SINR on true band `k`.
pub fn bob_sinr(
    k: usize,
    powers: &[f64],
    ch: &ChannelSet,
    corr: &CorrelationMatrix,
    plan: &BandPlan,
    residual_decoy: bool,
) -> Result<f64> {
    check_dims(powers, ch, corr, plan)?;
    if !plan.is_true(k) {
        return Err(Error::precondition(format!("band {k} is not a true band")));
    }
    let mut interference: f64 = plan
        .true_bands
        .iter()
        .filter(|&&i| i != k)
        .map(|&i| powers[i] * ch.bob_gain[i] * corr.get(i, k))
        .sum();
    if residual_decoy {
        interference += plan
            .fake_bands
            .iter()
            .map(|&n| powers[n] * ch.bob_gain[n] * corr.get(n, k))
            .sum::<f64>();
    }
    Ok(powers[k] * ch.bob_gain[k] / (interference + ch.bob_noise[k]))
}

/// SINR at Eve for band `band`, with interference from every other band.
fn eve_sinr_any(band: usize, powers: &[f64], ch: &ChannelSet, corr: &CorrelationMatrix) -> f64 {
    let interference: f64 = (0..powers.len())
        .filter(|&i| i != band)
        .map(|i| powers[i] * ch.eve_gain[i] * corr.get(i, band))
        .sum();
    powers[band] * ch.eve_gain[band] / (interference + ch.eve_noise[band])
}

/// Eve's SINR when intercepting true band `k`.
pub fn eve_intercept_sinr(
    k: usize,
    powers: &[f64],
    ch: &ChannelSet,
    corr: &CorrelationMatrix,
    plan: &BandPlan,
) -> Result<f64> {
    check_dims(powers, ch, corr, plan)?;
    if !plan.is_true(k) {
        return Err(Error::precondition(format!("band {k} is not a true band")));
    }
    Ok(eve_sinr_any(k, powers, ch, corr))
}

/// Eve's SINR on decoy band `n`.
pub fn eve_decoy_sinr(
    n: usize,
    powers: &[f64],
    ch: &ChannelSet,
    corr: &CorrelationMatrix,
    plan: &BandPlan,
) -> Result<f64> {
    check_dims(powers, ch, corr, plan)?;
    if !plan.is_fake(n) {
        return Err(Error::precondition(format!("band {n} is not a fake band")));
    }
    Ok(eve_sinr_any(n, powers, ch, corr))
}

/// True iff the weakest decoy at Eve is at least as strong as the strongest
/// true signal: `min_n p_n |h_en|² >= max_k p_k |h_ek|²`. Vacuously true
/// when either set is empty.
pub fn decoy_dominates(powers: &[f64], ch: &ChannelSet, plan: &BandPlan) -> bool {
    let received = |i: usize| powers[i] * ch.eve_gain[i];
    let weakest_decoy = plan.fake_bands.iter().map(|&n| received(n)).fold(f64::INFINITY, f64::min);
    let strongest_true = plan
        .true_bands
        .iter()
        .map(|&k| received(k))
        .fold(f64::NEG_INFINITY, f64::max);
    weakest_decoy >= strongest_true
}

/// SINRs ordered like `plan.true_bands` / `plan.fake_bands`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrReport {
    pub bob_sinr: Vec<f64>,
    pub eve_intercept_sinr: Vec<f64>,
    pub eve_decoy_sinr: Vec<f64>,
}

impl SinrReport {
    pub fn evaluate(
        powers: &[f64],
        ch: &ChannelSet,
        corr: &CorrelationMatrix,
        plan: &BandPlan,
        residual_decoy: bool,
    ) -> Result<Self> {
        check_dims(powers, ch, corr, plan)?;
        Ok(Self {
            bob_sinr: plan
                .true_bands
                .iter()
                .map(|&k| bob_sinr(k, powers, ch, corr, plan, residual_decoy))
                .collect::<Result<_>>()?,
            eve_intercept_sinr: plan.true_bands.iter().map(|&k| eve_sinr_any(k, powers, ch, corr)).collect(),
            eve_decoy_sinr: plan.fake_bands.iter().map(|&n| eve_sinr_any(n, powers, ch, corr)).collect(),
        })
    }
}

/// Secrecy rates in bits/s/Hz. Values are raw and may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_band_secrecy: Vec<f64>,
    pub sum_secrecy: f64,
}

impl RateReport {
    pub fn from_sinr(report: &SinrReport) -> Self {
        let per_band_secrecy: Vec<f64> = report
            .bob_sinr
            .iter()
            .zip(&report.eve_intercept_sinr)
            .map(|(&b, &e)| secrecy_rate(b, e))
            .collect();
        let sum_secrecy = per_band_secrecy.iter().sum();
        Self {
            per_band_secrecy,
            sum_secrecy,
        }
    }

    /// Per-band rates floored at zero, for presentation.
    pub fn clamped(&self) -> Self {
        let per_band_secrecy: Vec<f64> = self.per_band_secrecy.iter().map(|r| r.max(0.0)).collect();
        let sum_secrecy = per_band_secrecy.iter().sum();
        Self {
            per_band_secrecy,
            sum_secrecy,
        }
    }
}

/// `log2(1 + bob) - log2(1 + eve)`.
pub fn secrecy_rate(bob: f64, eve: f64) -> f64 {
    (1.0 + bob).log2() - (1.0 + eve).log2()
}

pub fn sum_secrecy_rate(
    powers: &[f64],
    ch: &ChannelSet,
    corr: &CorrelationMatrix,
    plan: &BandPlan,
    residual_decoy: bool,
) -> Result<RateReport> {
    let report = SinrReport::evaluate(powers, ch, corr, plan, residual_decoy)?;
    Ok(RateReport::from_sinr(&report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicators {
    /// One flag per true band: Eve's SINR reaches the threshold.
    pub intercepted: Vec<bool>,
    /// One flag per fake band: the decoy reaches the threshold and dominates.
    pub deceived: Vec<bool>,
}

pub fn indicators(
    powers: &[f64],
    ch: &ChannelSet,
    corr: &CorrelationMatrix,
    plan: &BandPlan,
    threshold: f64,
) -> Result<Indicators> {
    if !(threshold >= 0.0) {
        return Err(Error::precondition("threshold must be nonnegative"));
    }
    let report = SinrReport::evaluate(powers, ch, corr, plan, false)?;
    Ok(indicators_from_report(&report, powers, ch, plan, threshold))
}

pub(crate) fn indicators_from_report(
    report: &SinrReport,
    powers: &[f64],
    ch: &ChannelSet,
    plan: &BandPlan,
    threshold: f64,
) -> Indicators {
    let dominates = decoy_dominates(powers, ch, plan);
    Indicators {
        intercepted: report.eve_intercept_sinr.iter().map(|&g| g >= threshold).collect(),
        deceived: report.eve_decoy_sinr.iter().map(|&g| dominates && g >= threshold).collect(),
    }
}
