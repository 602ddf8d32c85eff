//! Secrecy-rate maximization under deception constraints.
//!
//! The optimizer works in ξ-space, `ξ_i = p_i c_i`, where power and coupling
//! are merged into one variable per band. For a true band `k` and coupling
//! matrix `G` (all ones in the paper's model, the identity for OFDM):
//!
//! ```text
//! A_k = Σ_{i∈𝒦} ξ_i h_i G(i,k) + 1      B_k = A_k - ξ_k h_k
//! T_k = Σ_i    ξ_i e_i G(i,k) + 1      E_k = T_k - ξ_k e_k
//! R_s = Σ_k log2(A_k / B_k) - log2(T_k / E_k)
//! ```
//!
//! with `h`, `e` the Bob and Eve gains under unit noise. The auxiliary
//! variables are `τ_k = 1 / T_k` and `μ_k = 1 / B_k`. BADO alternates the
//! closed-form auxiliary update (T1) with a concave program in ξ (T2) whose
//! objective is the tangent minorant
//!
//! ```text
//! Σ_k ln A_k + ln τ_k - τ_k T_k + 1 + ln E_k + ln μ_k - μ_k B_k + 1
//! ```
//!
//! which touches `R_s` at the current point, so the objective never
//! decreases across iterations.
//!
//! Constraints: decoy SINR at Eve above the threshold, decoy ξ above every
//! true ξ, decoy received power at Eve above every true received power, the
//! budget `Σ ξ_i <= P_s`, and `ξ >= 0`.

mod barrier;

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Infeasibility, Result};
use crate::model::{BandPlan, ChannelSet, PowerAllocation};
use crate::multiplexing::{fit_alpha, AlphaFitResult, CorrelationMatrix, FitOptions};
use crate::sinr::secrecy_rate;

use barrier::{BarrierError, BarrierOptions, LogAffine, Polytope};

/// Slack applied when building a strictly feasible starting point.
const START_MARGIN: f64 = 1e-6;

/// Share of the budget left unused by the decoy-heavy starts.
const HEAVY_SLACK: f64 = 1e-3;

/// Fraction of the way a warm start is moved toward the interior start.
const WARM_PULL: f64 = 1e-2;

/// Level of the suppressed true bands in a start favouring one band.
const FAVOUR_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiVector(pub Vec<f64>);

impl XiVector {
    pub fn zeros(num_bands: usize) -> Self {
        Self(vec![0.0; num_bands])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Auxiliary variables, one entry per true band in `plan.true_bands` order.
/// Under full coupling every `tau` entry is the same.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitutions {
    pub tau: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Nonnegative(usize),
    /// Decoy SINR at Eve on fake band `n` reaches the threshold.
    DeceptionThreshold(usize),
    /// `ξ_n >= ξ_k` for fake `n`, true `k`.
    DecoyOrder(usize, usize),
    /// `ξ_n e_n >= ξ_k e_k` for fake `n`, true `k`.
    DecoyDominance(usize, usize),
    Budget,
}

#[derive(Debug, Clone)]
struct Constraint {
    kind: ConstraintKind,
    row: Vec<f64>,
    rhs: f64,
}

/// One instance of the allocation problem. Channels must have unit noise.
#[derive(Debug, Clone)]
pub struct Problem {
    channels: ChannelSet,
    plan: BandPlan,
    coupling: CorrelationMatrix,
    threshold: f64,
    budget: f64,
    decoy_constraints: bool,
}

impl Problem {
    /// Full coupling, decoy constraints enforced.
    pub fn new(channels: ChannelSet, plan: BandPlan, threshold: f64, budget: f64) -> Result<Self> {
        let mut problems = plan.baseline_violations();
        problems.extend(channels.violations());
        if channels.num_bands() != plan.num_bands {
            problems.push(format!(
                "channel set has {} bands, plan has {}",
                channels.num_bands(),
                plan.num_bands
            ));
        }
        if !channels.is_normalized() {
            problems.push("channels must be normalized to unit noise".to_string());
        }
        if !(threshold.is_finite() && threshold >= 0.0) {
            problems.push("threshold must be finite and nonnegative".to_string());
        }
        if !(budget.is_finite() && budget >= 0.0) {
            problems.push("budget must be finite and nonnegative".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::precondition(problems.join("; ")));
        }
        let coupling = CorrelationMatrix::full(plan.num_bands);
        Ok(Self {
            channels,
            plan,
            coupling,
            threshold,
            budget,
            decoy_constraints: true,
        })
    }

    pub fn with_coupling(mut self, coupling: CorrelationMatrix) -> Result<Self> {
        if coupling.num_bands() != self.plan.num_bands {
            return Err(Error::precondition("coupling matrix size does not match the plan"));
        }
        self.coupling = coupling;
        Ok(self)
    }

    /// Drops the threshold, order and dominance constraints, leaving only
    /// the budget and nonnegativity.
    pub fn without_decoy_constraints(mut self) -> Self {
        self.decoy_constraints = false;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn plan(&self) -> &BandPlan {
        &self.plan
    }

    pub fn coupling(&self) -> &CorrelationMatrix {
        &self.coupling
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn decoy_constraints(&self) -> bool {
        self.decoy_constraints
    }

    fn bob_row(&self, k: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.plan.num_bands];
        for &i in &self.plan.true_bands {
            row[i] = self.channels.bob_gain[i] * self.coupling.get(i, k);
        }
        row
    }

    fn eve_row(&self, k: usize) -> Vec<f64> {
        (0..self.plan.num_bands)
            .map(|i| self.channels.eve_gain[i] * self.coupling.get(i, k))
            .collect()
    }

    /// `(B_k, E_k)`: Bob's and Eve's interference-plus-noise on band `k`.
    fn denominators(&self, xi: &[f64], k: usize) -> (f64, f64) {
        let bob = dot(&self.bob_row(k), xi) - xi[k] * self.channels.bob_gain[k] + 1.0;
        let eve = dot(&self.eve_row(k), xi) - xi[k] * self.channels.eve_gain[k] + 1.0;
        (bob, eve)
    }

    /// Secrecy rate of each true band at `xi`, bits/s/Hz.
    pub fn per_band_rates(&self, xi: &[f64]) -> Vec<f64> {
        self.plan
            .true_bands
            .iter()
            .map(|&k| {
                let (b, e) = self.denominators(xi, k);
                secrecy_rate(xi[k] * self.channels.bob_gain[k] / b, xi[k] * self.channels.eve_gain[k] / e)
            })
            .collect()
    }

    /// Sum secrecy rate at `xi`, bits/s/Hz.
    pub fn objective(&self, xi: &[f64]) -> f64 {
        self.per_band_rates(xi).iter().sum()
    }

    /// The substituted objective `Σ_k log2(τ_k A_k) + log2(μ_k E_k)`. Equal to
    /// [`Problem::objective`] when `subs` are the substitutions of `xi`.
    pub fn objective_with(&self, xi: &[f64], subs: &Substitutions) -> f64 {
        self.plan
            .true_bands
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let a = dot(&self.bob_row(k), xi) + 1.0;
                let (_, e) = self.denominators(xi, k);
                (subs.tau[j] * a).log2() + (subs.mu[j] * e).log2()
            })
            .sum()
    }

    pub fn substitutions(&self, xi: &[f64]) -> Substitutions {
        let mut tau = Vec::with_capacity(self.plan.true_bands.len());
        let mut mu = Vec::with_capacity(self.plan.true_bands.len());
        for &k in &self.plan.true_bands {
            tau.push(1.0 / (dot(&self.eve_row(k), xi) + 1.0));
            mu.push(1.0 / self.denominators(xi, k).0);
        }
        Substitutions { tau, mu }
    }

    fn constraints(&self) -> Vec<Constraint> {
        let k = self.plan.num_bands;
        let mut out = Vec::new();
        for i in 0..k {
            let mut row = vec![0.0; k];
            row[i] = -1.0;
            out.push(Constraint {
                kind: ConstraintKind::Nonnegative(i),
                row,
                rhs: 0.0,
            });
        }
        if self.decoy_constraints {
            let e = &self.channels.eve_gain;
            for &n in &self.plan.fake_bands {
                if self.threshold > 0.0 {
                    let mut row: Vec<f64> = (0..k)
                        .map(|i| self.threshold * e[i] * self.coupling.get(i, n))
                        .collect();
                    row[n] = -e[n];
                    out.push(Constraint {
                        kind: ConstraintKind::DeceptionThreshold(n),
                        row,
                        rhs: -self.threshold,
                    });
                }
                for &t in &self.plan.true_bands {
                    let mut row = vec![0.0; k];
                    row[t] = 1.0;
                    row[n] = -1.0;
                    out.push(Constraint {
                        kind: ConstraintKind::DecoyOrder(n, t),
                        row,
                        rhs: 0.0,
                    });
                    let mut row = vec![0.0; k];
                    row[t] = e[t];
                    row[n] = -e[n];
                    out.push(Constraint {
                        kind: ConstraintKind::DecoyDominance(n, t),
                        row,
                        rhs: 0.0,
                    });
                }
            }
        }
        out.push(Constraint {
            kind: ConstraintKind::Budget,
            row: vec![1.0; k],
            rhs: self.budget,
        });
        out
    }

    /// Largest violation over all constraints; zero at a feasible point.
    pub fn constraint_violation(&self, xi: &[f64]) -> f64 {
        self.constraints()
            .iter()
            .map(|c| dot(&c.row, xi) - c.rhs)
            .fold(0.0, f64::max)
    }

    /// Constraints violated at `xi` by more than `tol`.
    pub fn violated_constraints(&self, xi: &[f64], tol: f64) -> Vec<ConstraintKind> {
        self.constraints()
            .into_iter()
            .filter(|c| dot(&c.row, xi) - c.rhs > tol)
            .map(|c| c.kind)
            .collect()
    }

    fn polytope(&self) -> Polytope {
        let mut p = Polytope::default();
        for c in self.constraints() {
            p.push(c.row, c.rhs);
        }
        p
    }

    fn infeasible(&self, constraint: impl Into<String>, required_power: f64) -> Error {
        Error::Infeasible(Infeasibility {
            constraint: constraint.into(),
            required_power,
            budget: self.budget,
        })
    }

    /// Smallest decoy ξ (in `plan.fake_bands` order) meeting the deception
    /// threshold with every true band silent. Any feasible point has at least
    /// this much decoy power, so the problem is feasible iff the sum fits in
    /// the budget.
    pub fn minimum_decoy_xi(&self) -> Result<Vec<f64>> {
        let fakes = &self.plan.fake_bands;
        if !self.decoy_constraints || self.threshold == 0.0 || fakes.is_empty() {
            return Ok(vec![0.0; fakes.len()]);
        }
        let e = &self.channels.eve_gain;
        if let Some(&n) = fakes.iter().find(|&&n| e[n] == 0.0) {
            return Err(self.infeasible(format!("decoy band {n} is invisible to the eavesdropper"), f64::INFINITY));
        }
        // Received decoy powers r solve (I - T M) r = T 1 with
        // M(n, m) = G(m, n) for m != n.
        let m = fakes.len();
        let th = self.threshold;
        let mat = DMatrix::from_fn(m, m, |a, b| {
            if a == b {
                1.0
            } else {
                -th * self.coupling.get(fakes[b], fakes[a])
            }
        });
        let rhs = DVector::from_element(m, th);
        let r = mat.lu().solve(&rhs);
        // A positive solution exists iff the spectral radius of T M is below
        // one; otherwise no finite decoy power reaches the threshold.
        match r {
            Some(r) if r.iter().all(|&v| v.is_finite() && v > 0.0) => {
                Ok(fakes.iter().zip(r.iter()).map(|(&n, &rn)| rn / e[n]).collect())
            }
            _ => Err(self.infeasible("deception threshold unreachable at any decoy power", f64::INFINITY)),
        }
    }

    /// Checks feasibility and returns the minimum total decoy power.
    pub fn check_feasible(&self) -> Result<f64> {
        let required: f64 = self.minimum_decoy_xi()?.iter().sum();
        if required > self.budget * (1.0 + 1e-12) {
            return Err(self.infeasible("deception threshold exceeds the power budget", required));
        }
        Ok(required)
    }

    /// Deterministic starting point: every true band at `s P_s / (2K)`,
    /// decoys raised just enough to satisfy their constraints, with `s`
    /// halved until the budget holds. The boolean reports whether the point
    /// is strictly interior.
    fn start_point(&self) -> Result<(XiVector, bool)> {
        let k = self.plan.num_bands;
        self.check_feasible()?;
        if self.budget == 0.0 {
            return Ok((XiVector::zeros(k), false));
        }
        if !self.decoy_constraints {
            return Ok((XiVector(vec![self.budget / (2.0 * k as f64); k]), true));
        }
        let polytope = self.polytope();
        let mut scale = 1.0;
        for _ in 0..60 {
            let level = scale * self.budget / (2.0 * k as f64);
            if let Some(xi) = self.decoys_for(&vec![level; self.plan.true_bands.len()]) {
                if polytope.slacks(&xi).iter().all(|&s| s > 0.0) {
                    return Ok((XiVector(xi), true));
                }
            }
            scale *= 0.5;
        }
        // Only the boundary point with silent true bands is left.
        let mut xi = vec![0.0; k];
        for (&n, v) in self.plan.fake_bands.iter().zip(self.minimum_decoy_xi()?) {
            xi[n] = v;
        }
        Ok((XiVector(xi), false))
    }

    /// Further starts from `base`: one per true band with that band kept and
    /// the others turned almost off, when there is more than one true band.
    fn favoured_starts(&self, base: &[f64]) -> Vec<Vec<f64>> {
        let trues = &self.plan.true_bands;
        if trues.len() < 2 || !self.decoy_constraints {
            return Vec::new();
        }
        let polytope = self.polytope();
        (0..trues.len())
            .filter_map(|keep| {
                let levels: Vec<f64> = trues
                    .iter()
                    .enumerate()
                    .map(|(j, &t)| if j == keep { base[t] } else { base[t] * FAVOUR_RATIO })
                    .collect();
                self.decoys_for(&levels)
                    .filter(|xi| polytope.slacks(xi).iter().all(|&s| s > 0.0))
            })
            .collect()
    }

    /// `xi` with the decoys scaled up to fill all but a sliver of the budget.
    /// Scaling decoys up never breaks the threshold, order or dominance
    /// constraints. `None` when there is nothing to scale or no room.
    fn decoy_heavy(&self, xi: &[f64]) -> Option<Vec<f64>> {
        let fakes = &self.plan.fake_bands;
        let fake_total: f64 = fakes.iter().map(|&n| xi[n]).sum();
        let room = self.budget * (1.0 - HEAVY_SLACK) - (xi.iter().sum::<f64>() - fake_total);
        if !(fake_total > 0.0) || room <= fake_total {
            return None;
        }
        let scale = room / fake_total;
        let mut out = xi.to_vec();
        for &n in fakes {
            out[n] *= scale;
        }
        self.polytope().slacks(&out).iter().all(|&s| s > 0.0).then_some(out)
    }

    /// True bands at `levels` (in `plan.true_bands` order); decoy received
    /// powers from the monotone fixed point of their lower bounds. `None`
    /// when the budget is exceeded.
    fn decoys_for(&self, levels: &[f64]) -> Option<Vec<f64>> {
        let k = self.plan.num_bands;
        let e = &self.channels.eve_gain;
        let g = &self.coupling;
        let mut xi = vec![0.0; k];
        for (&t, &level) in self.plan.true_bands.iter().zip(levels) {
            xi[t] = level;
        }
        let true_total: f64 = levels.iter().sum();
        let fakes = &self.plan.fake_bands;
        let th = self.threshold * (1.0 + START_MARGIN);
        let floor: Vec<f64> = fakes
            .iter()
            .map(|&n| {
                let need = self
                    .plan
                    .true_bands
                    .iter()
                    .map(|&t| xi[t] * e[n].max(e[t]))
                    .fold(0.0, f64::max);
                need * (1.0 + START_MARGIN) + f64::MIN_POSITIVE.sqrt()
            })
            .collect();
        let true_interference: Vec<f64> = fakes
            .iter()
            .map(|&n| self.plan.true_bands.iter().map(|&t| xi[t] * e[t] * g.get(t, n)).sum())
            .collect();
        let mut r = floor.clone();
        for _ in 0..200_000 {
            let mut change: f64 = 0.0;
            let mut next = r.clone();
            for (a, &n) in fakes.iter().enumerate() {
                let others: f64 = fakes
                    .iter()
                    .zip(&r)
                    .filter(|(&m, _)| m != n)
                    .map(|(&m, &rm)| rm * g.get(m, n))
                    .sum();
                next[a] = (th * (others + true_interference[a] + 1.0)).max(floor[a]);
                change = change.max((next[a] - r[a]).abs());
            }
            r = next;
            let fake_total: f64 = fakes.iter().zip(&r).map(|(&n, rn)| rn / e[n]).sum();
            if !(true_total + fake_total < self.budget) {
                return None;
            }
            if change <= 1e-15 * r.iter().copied().fold(1.0, f64::max) {
                break;
            }
        }
        for (&n, rn) in fakes.iter().zip(&r) {
            xi[n] = rn / e[n];
        }
        Some(xi)
    }
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// Auxiliary variables under full coupling, straight from their definition.
pub fn substitutions_of(xi: &XiVector, ch: &ChannelSet, plan: &BandPlan) -> Result<Substitutions> {
    if !ch.is_normalized() {
        return Err(Error::precondition("channels must be normalized to unit noise"));
    }
    if xi.0.len() != plan.num_bands || ch.num_bands() != plan.num_bands {
        return Err(Error::precondition("dimension mismatch"));
    }
    let x = xi.as_slice();
    let eve_total: f64 = dot(&ch.eve_gain, x);
    let tau = vec![1.0 / (eve_total + 1.0); plan.true_bands.len()];
    let mu = plan
        .true_bands
        .iter()
        .map(|&k| {
            let others: f64 = plan.true_bands.iter().filter(|&&i| i != k).map(|&i| x[i] * ch.bob_gain[i]).sum();
            1.0 / (others + 1.0)
        })
        .collect();
    Ok(Substitutions { tau, mu })
}

/// T1: the objective increases in every τ_k and μ_k, so their defining
/// constraints bind and the maximizer is the substitution itself.
pub fn solve_t1(problem: &Problem, xi: &XiVector) -> Substitutions {
    problem.substitutions(xi.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct T2Solution {
    pub xi: XiVector,
    /// Value of the T2 objective at `xi`, bits/s/Hz.
    pub surrogate: f64,
    pub duality_gap: f64,
    pub stationarity: f64,
    pub newton_steps: usize,
}

/// The T2 objective in nats, up to its constant, plus that constant.
fn surrogate(problem: &Problem, subs: &Substitutions) -> (LogAffine, f64) {
    let k = problem.plan.num_bands;
    let mut terms = Vec::new();
    let mut linear = vec![0.0; k];
    let mut constant = 0.0;
    for (j, &band) in problem.plan.true_bands.iter().enumerate() {
        let a = problem.bob_row(band);
        let t = problem.eve_row(band);
        let mut b = a.clone();
        b[band] = 0.0;
        let mut e = t.clone();
        e[band] = 0.0;
        let (tau, mu) = (subs.tau[j], subs.mu[j]);
        for i in 0..k {
            linear[i] -= tau * t[i] + mu * b[i];
        }
        constant += tau.ln() + 1.0 - tau + mu.ln() + 1.0 - mu;
        terms.push((a, 1.0));
        terms.push((e, 1.0));
    }
    (LogAffine { terms, linear }, constant)
}

/// Value of the T2 objective at `xi` for fixed substitutions, bits/s/Hz.
pub fn t2_objective(problem: &Problem, subs: &Substitutions, xi: &[f64]) -> f64 {
    let (f, c) = surrogate(problem, subs);
    (f.value(xi) + c) / LN_2
}

/// T2: maximizes the concave minorant over the constraint polytope with a
/// log-barrier interior-point method, starting from `xi_warm` when it is
/// strictly feasible and from the deterministic start otherwise.
pub fn solve_t2(problem: &Problem, subs: &Substitutions, xi_warm: &XiVector) -> Result<T2Solution> {
    if subs.tau.iter().chain(&subs.mu).any(|&v| !(v > 0.0)) {
        return Err(Error::precondition("substitutions must be positive"));
    }
    let polytope = problem.polytope();
    let warm_ok = xi_warm.0.len() == problem.plan.num_bands && polytope.slacks(&xi_warm.0).iter().all(|&s| s > 0.0);
    let start = match problem.start_point()? {
        // A previous optimum hugs the boundary to within the barrier
        // tolerance, where the Newton system is too ill-conditioned to
        // recentre from; nudge it toward the interior point first.
        (centre, true) if warm_ok => XiVector(
            xi_warm
                .0
                .iter()
                .zip(&centre.0)
                .map(|(w, c)| w + WARM_PULL * (c - w))
                .collect(),
        ),
        (centre, true) => centre,
        (xi, false) => {
                let value = t2_objective(problem, subs, &xi.0);
            return Ok(T2Solution {
                xi,
                surrogate: value,
                duality_gap: 0.0,
                stationarity: 0.0,
                newton_steps: 0,
            });
        }
    };
    let (f, constant) = surrogate(problem, subs);
    let sol = barrier::maximize(&f, &polytope, &start.0, &BarrierOptions::default()).map_err(|e| match e {
        BarrierError::NotStrictlyFeasible => Error::Solver("start point is not strictly feasible".into()),
        BarrierError::NewtonBudgetExhausted => Error::Solver("interior-point Newton budget exhausted".into()),
    })?;
    Ok(T2Solution {
        surrogate: (f.value(&sol.x) + constant) / LN_2,
        xi: XiVector(sol.x),
        duality_gap: sol.duality_gap / LN_2,
        stationarity: sol.stationarity,
        newton_steps: sol.newton_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadoOptions {
    /// Stop when `|ΔR_s| / max(1, |R_s|)` falls to this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BadoOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub xi_star: XiVector,
    pub subs_star: Substitutions,
    /// Sum secrecy rate at `xi_star`, bits/s/Hz.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start point followed by one entry per iteration.
    pub trace: Vec<f64>,
}

/// Alternates T1 and T2 from several deterministic start points and keeps
/// the best end point.
///
/// The problem is not concave and has competing local optima. Besides the
/// standard start there is one per true band that keeps only that band, as
/// true bands interfere with each other at Bob and the optimum often silences
/// some of them. Each start is also run with the decoys scaled up to fill
/// the budget: without that a weak true band can settle at zero power, where
/// decoy power has no effect on the objective and nothing pushes the decoys
/// high enough for the band to become worth switching back on.
pub fn bado(problem: &Problem, opts: &BadoOptions) -> Result<OptResult> {
    let (xi, interior) = problem.start_point()?;
    if !interior {
        // Zero budget, or a budget that exactly covers the minimum decoy
        // power: the feasible set is a single point.
        let value = problem.objective(&xi.0);
        return Ok(OptResult {
            subs_star: problem.substitutions(&xi.0),
            xi_star: xi,
            objective: value,
            iterations: 0,
            converged: true,
            trace: vec![value],
        });
    }
    let mut starts = vec![xi.0.clone()];
    starts.extend(problem.favoured_starts(&xi.0));
    let heavy: Vec<Vec<f64>> = starts.iter().filter_map(|s| problem.decoy_heavy(s)).collect();
    starts.extend(heavy);

    // A start whose subproblem solver fails is dropped if another succeeds.
    let mut best: Option<OptResult> = None;
    let mut failure = None;
    for start in starts {
        match alternate(problem, XiVector(start), opts) {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.objective > b.objective) {
                    best = Some(run);
                }
            }
            Err(e @ Error::Solver(_)) => failure = failure.or(Some(e)),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| failure.expect("every start either succeeds or fails"))
}

fn alternate(problem: &Problem, mut xi: XiVector, opts: &BadoOptions) -> Result<OptResult> {
    let mut value = problem.objective(&xi.0);
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let subs = solve_t1(problem, &xi);
        let next = solve_t2(problem, &subs, &xi)?;
        let next_value = problem.objective(&next.xi.0);
        trace.push(next_value);
        let change = (next_value - value).abs() / value.abs().max(1.0);
        xi = next.xi;
        value = next_value;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(OptResult {
        subs_star: problem.substitutions(&xi.0),
        xi_star: xi,
        objective: value,
        iterations,
        converged,
        trace,
    })
}

/// BADO with orthogonal bands.
pub fn ofdm_baseline(problem: &Problem, opts: &BadoOptions) -> Result<OptResult> {
    let orthogonal = problem.clone().with_coupling(CorrelationMatrix::identity(problem.plan.num_bands))?;
    bado(&orthogonal, opts)
}

/// `P_s / K` on every band.
pub fn equal_power_baseline(plan: &BandPlan, _ch: &ChannelSet, budget: f64) -> PowerAllocation {
    let k = plan.num_bands.max(1);
    PowerAllocation {
        powers: vec![budget / k as f64; plan.num_bands],
        budget,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredAllocation {
    pub powers: PowerAllocation,
    /// `ξ_i / p_i`, or 1 on a silent band.
    pub coefficients: Vec<f64>,
    pub alpha_fit: AlphaFitResult,
    /// `T̃h C_{n,e} / e_n` per fake band: the least decoy power meeting the
    /// threshold given the optimized interference.
    pub min_decoy_powers: Vec<f64>,
    /// Per-true-band secrecy rates the true powers were recovered from.
    pub band_rates: Vec<f64>,
}

impl RecoveredAllocation {
    /// Implied physical power `Σ p_i`; the optimizer bounds `Σ ξ_i` instead.
    pub fn physical_total(&self) -> f64 {
        self.powers.total()
    }
}

/// Recovers per-band powers from the optimized ξ.
///
/// With `C_k` and `C_{k,e}` the interference-plus-noise at Bob and Eve, a
/// true band's power solves
/// `log2(1 + h_k p / C_k) - log2(1 + e_k p / C_{k,e}) = R_{s,k}`,
/// whose root is `p = C_k C_{k,e} (r - 1) / (h_k C_{k,e} - r C_k e_k)` with
/// `r = 2^R_{s,k}`. Decoys transmit their optimized ξ; the threshold-only
/// minimum is reported alongside. The coefficients `c_i = ξ_i / p_i` then
/// feed the α fit.
/// True bands carrying less than this share of the budget count as off.
pub const INACTIVE_FRACTION: f64 = 1e-8;

pub fn recover_powers(problem: &Problem, result: &OptResult) -> Result<RecoveredAllocation> {
    if !result.converged {
        return Err(Error::precondition("recovery needs a converged optimization"));
    }
    let plan = &problem.plan;
    let ch = &problem.channels;
    let xi = result.xi_star.as_slice();
    let k = plan.num_bands;
    let mut powers = vec![0.0; k];
    let band_rates = problem.per_band_rates(xi);

    for (&band, &rate) in plan.true_bands.iter().zip(&band_rates) {
        // Barrier residue on an inactive band: the rate is below round-off
        // and the closed form is meaningless there.
        if xi[band] <= INACTIVE_FRACTION * problem.budget {
            powers[band] = xi[band];
            continue;
        }
        let (c_bob, c_eve) = problem.denominators(xi, band);
        let u = ch.bob_gain[band] / c_bob;
        let v = ch.eve_gain[band] / c_eve;
        let r = rate.exp2();
        let den = u - r * v;
        let r_minus_one = (rate * std::f64::consts::LN_2).exp_m1();
        // u = v makes the rate identically zero; the optimizer's own value
        // is then the root.
        let p = if (u - v).abs() <= 1e-12 * u.max(v) {
            xi[band]
        } else {
            r_minus_one / den
        };
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::Recovery(format!("no nonnegative power on true band {band}")));
        }
        powers[band] = p;
    }

    let mut min_decoy_powers = Vec::with_capacity(plan.fake_bands.len());
    for &n in &plan.fake_bands {
        powers[n] = xi[n];
        let (_, c_eve) = problem.denominators(xi, n);
        let e = ch.eve_gain[n];
        min_decoy_powers.push(if problem.threshold == 0.0 { 0.0 } else { problem.threshold * c_eve / e });
    }

    let coefficients: Vec<f64> = powers
        .iter()
        .zip(xi)
        .map(|(&p, &x)| if p > 0.0 { x / p } else { 1.0 })
        .collect();
    if let Some((i, c)) = coefficients
        .iter()
        .enumerate()
        .find(|(_, &c)| !(c >= 0.0 && c <= 1.0 + 1e-6))
    {
        return Err(Error::Recovery(format!("coefficient {c} on band {i} outside [0, 1]")));
    }
    let k_ref = plan
        .reference_band()
        .ok_or_else(|| Error::precondition("plan has no true band"))?;
    let clipped: Vec<f64> = coefficients.iter().map(|c| c.min(1.0)).collect();
    let alpha_fit = fit_alpha(&clipped, k, k_ref, &FitOptions::default())?;

    Ok(RecoveredAllocation {
        powers: PowerAllocation {
            powers,
            budget: problem.budget,
        },
        coefficients,
        alpha_fit,
        min_decoy_powers,
        band_rates,
    })
}
