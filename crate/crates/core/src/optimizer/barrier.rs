//! Log-barrier interior-point method for
//!
//! ```text
//! maximize   Σ_j ln(a_j · x + b_j) + c · x
//! subject to G x <= h
//! ```
//!
//! The objective is concave and self-concordant, so plain damped Newton on
//! `t f(x) + Σ ln(h - G x)_i` with a geometric schedule on `t` converges from
//! any strictly feasible start.

use nalgebra::{DMatrix, DVector};

/// `Σ_j ln(a_j · x + b_j) + c · x`.
#[derive(Debug, Clone)]
pub(crate) struct LogAffine {
    pub terms: Vec<(Vec<f64>, f64)>,
    pub linear: Vec<f64>,
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

impl LogAffine {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, b)| (dot(a, x) + b).ln()).sum::<f64>() + dot(&self.linear, x)
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let mut g = DVector::from_column_slice(&self.linear);
        for (a, b) in &self.terms {
            let inv = 1.0 / (dot(a, x) + b);
            for (gi, ai) in g.iter_mut().zip(a) {
                *gi += ai * inv;
            }
        }
        g
    }

    /// Adds `scale · (-∇²f)` to `h`.
    fn add_neg_hessian(&self, x: &[f64], scale: f64, h: &mut DMatrix<f64>) {
        for (a, b) in &self.terms {
            let v = dot(a, x) + b;
            let w = scale / (v * v);
            add_outer(h, a, w);
        }
    }
}

fn add_outer(h: &mut DMatrix<f64>, a: &[f64], w: f64) {
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0.0 {
            continue;
        }
        for (j, aj) in a.iter().enumerate() {
            h[(i, j)] += w * ai * aj;
        }
    }
}

/// Constraint rows `g · x <= h`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Polytope {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl Polytope {
    pub fn push(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().zip(&self.rhs).map(|(g, h)| h - dot(g, x)).collect()
    }

    fn len(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierOptions {
    /// Stop once `m / t`, the duality-gap bound, is below this. Much tighter
    /// and the active slacks drown in round-off.
    pub gap_tol: f64,
    /// Centering stops when half the squared Newton decrement is below this;
    /// the resulting error in `f` is at most `newton_tol / t`.
    pub newton_tol: f64,
    pub t0: f64,
    pub growth: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            newton_tol: 1e-8,
            t0: 1.0,
            growth: 20.0,
            max_newton: 2_000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierSolution {
    pub x: Vec<f64>,
    pub duality_gap: f64,
    /// `‖∇f - Gᵀλ‖∞` with the barrier multipliers `λ_i = 1 / (t s_i)`.
    pub stationarity: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BarrierError {
    NotStrictlyFeasible,
    NewtonBudgetExhausted,
}

fn barrier_value(f: &LogAffine, p: &Polytope, x: &[f64], t: f64) -> f64 {
    let mut v = t * f.value(x);
    for s in p.slacks(x) {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        v += s.ln();
    }
    v
}

/// Solves the negated-Hessian system, nudging the diagonal if round-off has
/// cost positive definiteness.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let mut ridge = 0.0;
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for _ in 0..8 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        if let Some(chol) = m.cholesky() {
            return Some(chol.solve(g));
        }
        ridge = if ridge == 0.0 { scale * 1e-14 } else { ridge * 100.0 };
    }
    None
}

/// `‖∇f - Σ λ_i g_i‖∞` with `λ_i = 1 / (t s_i)`.
fn kkt_residual(f: &LogAffine, p: &Polytope, x: &[f64], t: f64) -> f64 {
    let mut r = f.gradient(x);
    for (row, s) in p.rows.iter().zip(p.slacks(x)) {
        for (ri, gi) in r.iter_mut().zip(row) {
            *ri -= gi / (t * s);
        }
    }
    r.amax()
}

pub(crate) fn maximize(
    f: &LogAffine,
    p: &Polytope,
    x0: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierSolution, BarrierError> {
    let n = x0.len();
    let m = p.len() as f64;
    let mut x = x0.to_vec();
    if p.slacks(&x).iter().any(|&s| !(s > 0.0)) {
        return Err(BarrierError::NotStrictlyFeasible);
    }
    let mut t = opts.t0;
    let mut steps = 0;

    loop {
        // Centering.
        loop {
            if steps >= opts.max_newton {
                return Err(BarrierError::NewtonBudgetExhausted);
            }
            steps += 1;
            let slacks = p.slacks(&x);
            let mut grad = f.gradient(&x) * t;
            let mut hess = DMatrix::zeros(n, n);
            f.add_neg_hessian(&x, t, &mut hess);
            for (row, s) in p.rows.iter().zip(&slacks) {
                for (gi, ri) in grad.iter_mut().zip(row) {
                    *gi -= ri / s;
                }
                add_outer(&mut hess, row, 1.0 / (s * s));
            }
            let Some(dx) = newton_direction(hess, &grad) else {
                break;
            };
            let decrement = grad.dot(&dx);
            let centered = decrement / 2.0 <= opts.newton_tol;
            if centered {
                // One more full step costs nothing and squares the residual.
                let next: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi + di).collect();
                if p.slacks(&next).iter().all(|&s| s > 0.0) {
                    x = next;
                }
                break;
            }

            let mut step = 1.0;
            let trial = |step: f64| -> Vec<f64> { x.iter().zip(dx.iter()).map(|(xi, di)| xi + step * di).collect() };
            while p.slacks(&trial(step)).iter().any(|&s| !(s > 0.0)) {
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            // Inside the quadratic-convergence region a full step is safe; the
            // Armijo test would be dominated by round-off at large t.
            if decrement >= 0.01 {
                let base = barrier_value(f, p, &x, t);
                while barrier_value(f, p, &trial(step), t) < base + 0.25 * step * decrement {
                    step *= 0.5;
                    if step < 1e-20 {
                        break;
                    }
                }
            }
            if step < 1e-20 {
                break;
            }
            let next = trial(step);
            let moved = next.iter().zip(&x).any(|(a, b)| a != b);
            x = next;
            if !moved {
                break;
            }
        }

        if m / t < opts.gap_tol {
            break;
        }
        t *= opts.growth;
    }

    let stationarity = kkt_residual(f, p, &x, t);
    Ok(BarrierSolution {
        x,
        duality_gap: m / t,
        stationarity,
        newton_steps: steps,
    })
}
