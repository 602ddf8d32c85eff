//! Core domain types shared by every other module.
//!
//! All stored quantities are linear (powers, gains, SINRs). Decibel values
//! only appear in the configuration file and are converted on parse, see
//! [`crate::config`]. Band indices are 0-based.

use serde::{Deserialize, Serialize};

/// Role of a frequency band in a transmission plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    True,
    Fake,
}

/// Assignment of the `K` bands to true (confidential) and fake (decoy)
/// transmissions, together with the multiplexing factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    pub num_bands: usize,
    pub true_bands: Vec<usize>,
    pub fake_bands: Vec<usize>,
    pub alpha: f64,
}

impl BandPlan {
    pub fn new(num_bands: usize, true_bands: Vec<usize>, fake_bands: Vec<usize>, alpha: f64) -> Self {
        Self {
            num_bands,
            true_bands,
            fake_bands,
            alpha,
        }
    }

    /// Even bands carry true signals, odd bands carry decoys.
    pub fn interleaved(num_bands: usize, alpha: f64) -> Self {
        let true_bands = (0..num_bands).step_by(2).collect();
        let fake_bands = (1..num_bands).step_by(2).collect();
        Self::new(num_bands, true_bands, fake_bands, alpha)
    }

    pub fn role(&self, band: usize) -> Option<Role> {
        if self.true_bands.contains(&band) {
            Some(Role::True)
        } else if self.fake_bands.contains(&band) {
            Some(Role::Fake)
        } else {
            None
        }
    }

    pub fn is_true(&self, band: usize) -> bool {
        self.true_bands.contains(&band)
    }

    pub fn is_fake(&self, band: usize) -> bool {
        self.fake_bands.contains(&band)
    }

    /// Smallest true band index, used as the reference band when fitting α.
    pub fn reference_band(&self) -> Option<usize> {
        self.true_bands.iter().copied().min()
    }

    /// Structural violations that do not depend on whether the plan is used
    /// for CTSF or for a pure-true baseline.
    fn structural_violations(&self, out: &mut Vec<String>) {
        let k = self.num_bands;
        if k == 0 {
            out.push("num_bands must be positive".to_string());
        }
        for &b in self.true_bands.iter().chain(&self.fake_bands) {
            if b >= k {
                out.push(format!("band index {b} out of range for {k} bands"));
            }
        }
        if has_duplicates(&self.true_bands) || has_duplicates(&self.fake_bands) {
            out.push("duplicate band index".to_string());
        }
        if self.true_bands.iter().any(|b| self.fake_bands.contains(b)) {
            out.push("band sets overlap".to_string());
        }
        let covered = (0..k).all(|b| self.true_bands.contains(&b) || self.fake_bands.contains(&b));
        if !covered {
            out.push("band sets do not cover all bands".to_string());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha <= 1.0) {
            out.push("alpha out of range".to_string());
        }
    }

    /// Violations for a plan used in a CTSF scenario: both sets non-empty.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.structural_violations(&mut out);
        if self.true_bands.is_empty() {
            out.push("no true bands".to_string());
        }
        if self.fake_bands.is_empty() {
            out.push("no fake bands".to_string());
        }
        out
    }

    /// Violations for a baseline plan, where an empty fake set is allowed.
    pub fn baseline_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.structural_violations(&mut out);
        if self.true_bands.is_empty() {
            out.push("no true bands".to_string());
        }
        out
    }
}

fn has_duplicates(v: &[usize]) -> bool {
    v.iter().enumerate().any(|(i, a)| v[..i].contains(a))
}

/// Per-band channel power gains and noise powers for Bob and Eve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub bob_gain: Vec<f64>,
    pub eve_gain: Vec<f64>,
    pub bob_noise: Vec<f64>,
    pub eve_noise: Vec<f64>,
}

impl ChannelSet {
    /// Channel set with unit noise on every band.
    pub fn unit_noise(bob_gain: Vec<f64>, eve_gain: Vec<f64>) -> Self {
        let k = bob_gain.len();
        Self {
            bob_gain,
            eve_gain,
            bob_noise: vec![1.0; k],
            eve_noise: vec![1.0; k],
        }
    }

    pub fn num_bands(&self) -> usize {
        self.bob_gain.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.bob_noise.iter().chain(&self.eve_noise).all(|&n| n == 1.0)
    }

    /// Divides each gain by the noise power of its own band, leaving unit
    /// noise everywhere. Every SINR is unchanged by this transform.
    pub fn normalized(&self) -> Self {
        let scale = |g: &[f64], n: &[f64]| g.iter().zip(n).map(|(g, n)| g / n).collect::<Vec<_>>();
        Self::unit_noise(
            scale(&self.bob_gain, &self.bob_noise),
            scale(&self.eve_gain, &self.eve_noise),
        )
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let k = self.bob_gain.len();
        if [self.eve_gain.len(), self.bob_noise.len(), self.eve_noise.len()]
            .iter()
            .any(|&l| l != k)
        {
            out.push("channel vectors have mismatched lengths".to_string());
        }
        if self
            .bob_gain
            .iter()
            .chain(&self.eve_gain)
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            out.push("channel gains must be finite and nonnegative".to_string());
        }
        if self
            .bob_noise
            .iter()
            .chain(&self.eve_noise)
            .any(|n| !(n.is_finite() && *n > 0.0))
        {
            out.push("noise powers must be finite and positive".to_string());
        }
        out
    }
}

/// Feasibility tolerance on the power budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub budget: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            out.push("budget must be finite and nonnegative".to_string());
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            out.push("powers must be finite and nonnegative".to_string());
        }
        if self.total() > self.budget + BUDGET_TOLERANCE {
            out.push("total power exceeds budget".to_string());
        }
        out
    }
}

/// Rician fading parameters for one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianParams {
    pub k_factor_db: f64,
    pub mean_gain: f64,
}

impl RicianParams {
    pub fn new(k_factor_db: f64, mean_gain: f64) -> Self {
        Self {
            k_factor_db,
            mean_gain,
        }
    }

    /// Linear K-factor. `-inf` dB maps to Rayleigh fading (κ = 0).
    pub fn k_linear(&self) -> f64 {
        db_to_linear(self.k_factor_db)
    }

    pub fn violations(&self, link: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.k_factor_db.is_nan() || self.k_factor_db == f64::INFINITY {
            out.push(format!("{link} rician k-factor must be finite"));
        }
        if !(self.mean_gain.is_finite() && self.mean_gain > 0.0) {
            out.push(format!("{link} mean gain must be positive"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub band_plan: BandPlan,
    pub rician_bob: RicianParams,
    pub rician_eve: RicianParams,
    /// Total transmit power budget P_s, linear.
    pub total_power: f64,
    /// Deception SINR threshold, linear.
    pub deception_threshold: f64,
    pub trials: usize,
    pub seed: u64,
    /// Noise power on every Bob band, linear.
    pub bob_noise: f64,
    /// Noise power on every Eve band, linear.
    pub eve_noise: f64,
}

/// Every invariant violation of the scenario and the types it contains.
/// Never panics; an empty list means the scenario is usable downstream.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut out = s.band_plan.violations();
    out.extend(s.rician_bob.violations("bob"));
    out.extend(s.rician_eve.violations("eve"));
    if !(s.total_power.is_finite() && s.total_power >= 0.0) {
        out.push("total power must be finite and nonnegative".to_string());
    }
    if !(s.deception_threshold.is_finite() && s.deception_threshold >= 0.0) {
        out.push("deception threshold must be finite and nonnegative".to_string());
    }
    if s.trials == 0 {
        out.push("trials must be at least 1".to_string());
    }
    for (name, n) in [("bob", s.bob_noise), ("eve", s.eve_noise)] {
        if !(n.is_finite() && n > 0.0) {
            out.push(format!("{name} noise power must be finite and positive"));
        }
    }
    out
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
