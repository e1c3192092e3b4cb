//! Diffusive-limit parameters of a fitted compound Hawkes model.
//!
//! With `π` the stationary law of the move chain and `a(i)` the state values:
//!
//! ```text
//! a*   = Σ πᵢ a(i)
//! b(i) = a(i) − a*
//! g    = (P + Π* − I)⁻¹ b          Π* has every row equal to π
//! v(i) = b(i)² + Σⱼ (g(j) − g(i))² P(i,j) − 2 b(i) Σⱼ (g(j) − g(i)) P(i,j)
//! σ²   = Σ πᵢ v(i)
//! σ*   = σ √(λ / (1 − μ̂))
//! σ̄    = √(σ*² + a*² λ / (1 − μ̂)³)
//! ```
//!
//! `(S(t) − N(t) a*)` grows like `σ* W(t)` and `S(t) − a* λ t / (1 − μ̂)`
//! like `σ̄ W(t)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;
use crate::states::{StateSpace, StationaryDistribution, TransitionMatrix};

const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub a_star: f64,
    pub b: Vec<f64>,
    pub g: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma_sq: f64,
    pub sigma_star: f64,
    pub sigma_bar: f64,
}

impl LimitParams {
    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU solve with partial pivoting plus the 1-norm condition number.
/// Returns `None` when the factorization is exactly singular.
pub(crate) fn solve_with_condition(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let lu = a.clone().lu();
    let inverse = lu.try_inverse()?;
    let solution = lu.solve(rhs)?;
    let condition = one_norm(a) * one_norm(&inverse);
    if !condition.is_finite() {
        return None;
    }
    Some((solution, condition))
}

/// Solves the fundamental-matrix system `(P + Π* − I) g = b`.
pub fn fundamental_solution(p: &TransitionMatrix, pi: &StationaryDistribution, b: &[f64]) -> Result<Vec<f64>> {
    let n = p.len();
    let pi_v = pi.probabilities();
    let a = DMatrix::from_fn(n, n, |i, j| {
        p.get(i, j) + pi_v[j] - if i == j { 1.0 } else { 0.0 }
    });
    let rhs = DVector::from_column_slice(b);
    let (g, condition) = solve_with_condition(&a, &rhs).ok_or(Error::SingularFundamentalMatrix {
        condition: f64::INFINITY,
    })?;
    if condition > MAX_CONDITION {
        return Err(Error::SingularFundamentalMatrix { condition });
    }
    Ok(g.iter().copied().collect())
}

pub fn compute_limit_params(
    space: &StateSpace,
    p: &TransitionMatrix,
    pi: &StationaryDistribution,
    hawkes: &HawkesParams,
) -> Result<LimitParams> {
    let values = space.values();
    limit_params_from_values(&values, p, pi, hawkes)
}

/// Same as [`compute_limit_params`] for a bare vector of state values.
pub fn limit_params_from_values(
    values: &[f64],
    p: &TransitionMatrix,
    pi: &StationaryDistribution,
    hawkes: &HawkesParams,
) -> Result<LimitParams> {
    let n = values.len();
    if p.len() != n || pi.len() != n {
        return Err(Error::InvalidParams(format!(
            "{n} state values but a {}-state chain and {}-state stationary law",
            p.len(),
            pi.len()
        )));
    }
    let pis = pi.probabilities();
    let a_star: f64 = pis.iter().zip(values).map(|(w, a)| w * a).sum();
    let b: Vec<f64> = values.iter().map(|a| a - a_star).collect();
    let g = fundamental_solution(p, pi, &b)?;

    let v: Vec<f64> = (0..n)
        .map(|i| {
            let row = p.row(i);
            let (sq, lin) = row.iter().enumerate().fold((0.0, 0.0), |(sq, lin), (j, &pij)| {
                let d = g[j] - g[i];
                (sq + d * d * pij, lin + d * pij)
            });
            // algebraically ≥ 0; clamp rounding noise
            (b[i] * b[i] + sq - 2.0 * b[i] * lin).max(0.0)
        })
        .collect();
    let sigma_sq: f64 = pis.iter().zip(&v).map(|(w, vi)| w * vi).sum();

    let mu = hawkes.branching_ratio();
    let rate = hawkes.lambda0() / (1.0 - mu);
    let sigma_star = sigma_sq.sqrt() * rate.sqrt();
    let drift_var = a_star * a_star * hawkes.lambda0() / (1.0 - mu).powi(3);
    let sigma_bar = (sigma_star * sigma_star + drift_var).sqrt();

    Ok(LimitParams {
        a_star,
        b,
        g,
        v,
        sigma_sq,
        sigma_star,
        sigma_bar,
    })
}
