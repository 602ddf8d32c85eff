//! Inter-band correlation induced by the T/F multiplexing factor α, and the
//! scalar Newton fit that recovers α from a vector of coefficients.
//!
//! For bands `i` and `k` out of `K`, the coupling is
//!
//! ```text
//! c(i, k) = | sinc(α (i - k)) / sinc(α (i - k) / K) |²,   sinc(x) = sin(πx) / (πx)
//! ```
//!
//! α = 1 gives orthogonal (OFDM) bands; α → 0 couples every pair fully.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // sinc is even; its slope near zero is -(π²/3) x.
        -(PI * PI / 3.0) * x
    } else {
        ((PI * x).cos() - sinc(x)) / x
    }
}

/// Amplitude ratio `sinc(α d) / sinc(α d / K)` for a signed band offset `d`.
/// Defined for every real α with |α d / K| < 1, which covers α ∈ (-1, 1]
/// plus the small excursions taken by finite differences.
fn amplitude(alpha: f64, offset: f64, num_bands: usize) -> f64 {
    let x = alpha * offset;
    if offset != 0.0 && x == x.round() {
        // Integer argument in the numerator: an exact zero of sinc.
        return 0.0;
    }
    sinc(x) / sinc(x / num_bands as f64)
}

fn amplitude_slope(alpha: f64, offset: f64, num_bands: usize) -> f64 {
    let kf = num_bands as f64;
    let x = alpha * offset;
    let num = sinc(x);
    let den = sinc(x / kf);
    (offset * sinc_derivative(x) * den - (offset / kf) * num * sinc_derivative(x / kf)) / (den * den)
}

fn coefficient(alpha: f64, offset: f64, num_bands: usize) -> f64 {
    let a = amplitude(alpha, offset, num_bands);
    a * a
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Correlation coefficient between bands `i` and `k`.
pub fn correlation(alpha: f64, i: usize, k: usize, num_bands: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if i >= num_bands || k >= num_bands {
        return Err(Error::precondition(format!(
            "band pair ({i}, {k}) out of range for {num_bands} bands"
        )));
    }
    Ok(coefficient(alpha, i as f64 - k as f64, num_bands))
}

/// Symmetric K×K matrix of pairwise coupling coefficients with unit
/// diagonal. Entry `(i, k)` weights the power of band `i` as it leaks into
/// the receiver of band `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    num_bands: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_alpha(alpha: f64, num_bands: usize) -> Result<Self> {
        check_alpha(alpha)?;
        let mut entries = vec![0.0; num_bands * num_bands];
        for i in 0..num_bands {
            for k in 0..num_bands {
                entries[i * num_bands + k] = coefficient(alpha, i as f64 - k as f64, num_bands);
            }
        }
        Ok(Self { num_bands, entries })
    }

    /// Orthogonal bands (α = 1).
    pub fn identity(num_bands: usize) -> Self {
        let mut entries = vec![0.0; num_bands * num_bands];
        for k in 0..num_bands {
            entries[k * num_bands + k] = 1.0;
        }
        Self { num_bands, entries }
    }

    /// Every pair fully coupled: the α → 0 limit.
    pub fn full(num_bands: usize) -> Self {
        Self {
            num_bands,
            entries: vec![1.0; num_bands * num_bands],
        }
    }

    /// Builds a matrix from explicit rows. Rows must form a square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::precondition("correlation rows must form a square matrix"));
        }
        Ok(Self {
            num_bands: n,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.entries[i * self.num_bands + k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.num_bands).map(<[f64]>::to_vec).collect()
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, i: usize, k: usize, value: f64) {
        self.entries[i * self.num_bands + k] = value;
    }
}

fn check_targets(targets: &[f64], num_bands: usize, k_ref: usize) -> Result<()> {
    if targets.len() != num_bands {
        return Err(Error::precondition(format!(
            "expected {num_bands} target coefficients, got {}",
            targets.len()
        )));
    }
    if k_ref >= num_bands {
        return Err(Error::precondition(format!("reference band {k_ref} out of range")));
    }
    Ok(())
}

fn objective_unchecked(alpha: f64, targets: &[f64], k_ref: usize) -> f64 {
    let k = targets.len();
    targets
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let r = c - coefficient(alpha, i as f64 - k_ref as f64, k);
            r * r
        })
        .sum()
}

/// Least-squares misfit between `targets` and the coefficients implied by α
/// relative to the reference band `k_ref`.
pub fn fit_objective(alpha: f64, targets: &[f64], num_bands: usize, k_ref: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_targets(targets, num_bands, k_ref)?;
    Ok(objective_unchecked(alpha, targets, k_ref))
}

/// Analytic derivative of [`fit_objective`] with respect to α.
pub fn fit_gradient(alpha: f64, targets: &[f64], num_bands: usize, k_ref: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_targets(targets, num_bands, k_ref)?;
    Ok(targets
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let d = i as f64 - k_ref as f64;
            let a = amplitude(alpha, d, num_bands);
            let model = a * a;
            let model_slope = 2.0 * a * amplitude_slope(alpha, d, num_bands);
            -2.0 * (c - model) * model_slope
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub alpha0: f64,
    /// Stop when |f′| falls below this and the Newton step below `step_tol`.
    pub grad_tol: f64,
    /// Stop when an accepted step is shorter than this.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            alpha0: 0.5,
            grad_tol: 1e-8,
            step_tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFitResult {
    pub alpha_star: f64,
    pub final_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest α the fit will return; the feasible interval is (0, 1].
pub const ALPHA_FLOOR: f64 = 1e-9;
const CURVATURE_FLOOR: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;
const SCAN_POINTS: usize = 200;

/// Central-difference first and second derivatives of the fit objective.
fn derivatives(alpha: f64, targets: &[f64], k_ref: usize) -> (f64, f64) {
    let h = 1e-5 * alpha.abs().max(1.0);
    let f0 = objective_unchecked(alpha, targets, k_ref);
    let fp = objective_unchecked(alpha + h, targets, k_ref);
    let fm = objective_unchecked(alpha - h, targets, k_ref);
    ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
}

/// Fits α by safeguarded Newton iteration on [`fit_objective`].
///
/// The misfit is multimodal in α (a coefficient can vanish at several α), so
/// Newton runs from `alpha0` and from the best point of a coarse scan of
/// (0, 1]; the lower residual wins.
///
/// Each iteration takes the Newton step `-f′/f″`, or a unit-scale step
/// against the gradient when the curvature is not positive. Trial points
/// are clamped to `[ALPHA_FLOOR, 1]` and the step is halved until the
/// objective does not increase, so accepted iterates never go uphill. When
/// the descent direction points at a bound, the bound itself is also tried;
/// this catches minima sitting exactly on α = 1, where the objective is
/// quartic and plain Newton only converges linearly.
pub fn fit_alpha(targets: &[f64], num_bands: usize, k_ref: usize, opts: &FitOptions) -> Result<AlphaFitResult> {
    check_alpha(opts.alpha0)?;
    check_targets(targets, num_bands, k_ref)?;
    if !(opts.grad_tol > 0.0 && opts.step_tol > 0.0 && opts.max_iter >= 1) {
        return Err(Error::precondition("fit tolerances must be positive and max_iter >= 1"));
    }

    let from_alpha0 = newton(targets, k_ref, opts.alpha0, opts);
    let scan_start = (1..=SCAN_POINTS)
        .map(|i| i as f64 / SCAN_POINTS as f64)
        .map(|a| (a, objective_unchecked(a, targets, k_ref)))
        .fold((1.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
        .0;
    let from_scan = newton(targets, k_ref, scan_start, opts);
    Ok(if from_scan.final_residual < from_alpha0.final_residual {
        from_scan
    } else {
        from_alpha0
    })
}

fn newton(targets: &[f64], k_ref: usize, alpha0: f64, opts: &FitOptions) -> AlphaFitResult {
    let clamp = |a: f64| a.clamp(ALPHA_FLOOR, 1.0);
    let mut alpha = alpha0;
    let mut f = objective_unchecked(alpha, targets, k_ref);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let (g, h) = derivatives(alpha, targets, k_ref);
        // A small gradient alone is not enough where the misfit is flat;
        // the Newton step has to be small too.
        let small_step = h <= CURVATURE_FLOOR || (g / h).abs() < opts.step_tol;
        if g.abs() < opts.grad_tol && small_step {
            converged = true;
            break;
        }
        // Stationary against an active bound.
        if (alpha >= 1.0 && g < 0.0) || (alpha <= ALPHA_FLOOR && g > 0.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut step = if h > CURVATURE_FLOOR { -g / h } else { -g.signum() * 0.25 };
        let mut candidate = clamp(alpha + step);
        let mut f_candidate = objective_unchecked(candidate, targets, k_ref);

        let bound = if g < 0.0 { 1.0 } else { ALPHA_FLOOR };
        let f_bound = objective_unchecked(bound, targets, k_ref);
        if f_bound <= f_candidate && f_bound <= f {
            candidate = bound;
            f_candidate = f_bound;
        }

        let mut halvings = 0;
        while f_candidate > f && halvings < MAX_HALVINGS {
            step *= 0.5;
            candidate = clamp(alpha + step);
            f_candidate = objective_unchecked(candidate, targets, k_ref);
            halvings += 1;
        }
        if f_candidate > f {
            // No descent along the safeguarded direction; round-off has the
            // last word once the gradient is negligible.
            converged = g.abs() < opts.grad_tol;
            break;
        }

        let moved = (candidate - alpha).abs();
        alpha = candidate;
        f = f_candidate;
        if moved < opts.step_tol {
            converged = true;
            break;
        }
    }

    AlphaFitResult {
        alpha_star: alpha,
        final_residual: f,
        iterations,
        converged,
    }
}
