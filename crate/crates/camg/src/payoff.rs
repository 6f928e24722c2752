//! Discounted and steady-state payoff evaluation, baselines, and the
//! inefficiency parameter.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameConfig, PayoffVector, StrategyProfile};
use crate::markov::{build_transition_matrix, steady_state, TransitionMatrix};

/// Discounted expected payoff per starting state:
/// `W_j = (1 - lambda) <L| T (1 - lambda T)^{-1} |j>`, with `<L|` carrying
/// ones on the minority occupancies `1 ..= M`.
///
/// All states are obtained from a single linear solve of
/// `x^T (1 - lambda T) = (1 - lambda) <L| T` rather than a matrix inverse.
pub fn discounted_payoffs(t: &TransitionMatrix, lambda: f64) -> Result<PayoffVector> {
    if !(0.0..1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(Error::InvalidDiscount(lambda));
    }
    let n = t.n_states();
    let m = (n - 1) / 2;
    let tm = t.as_matrix();

    // rhs_j = (1 - lambda) * sum_{k <= M} T_{kj}
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        let mut s = 0.0;
        for k in 0..m {
            s += tm[(k, j)];
        }
        rhs[j] = (1.0 - lambda) * s;
    }

    // (I - lambda T^T) x = rhs
    let a = DMatrix::<f64>::identity(n, n) - tm.transpose() * lambda;
    let lu = a.clone().lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailed(format!("resolvent solve singular at lambda = {lambda}")))?;

    // guarded residual check; cannot trigger for stochastic T and lambda < 1
    let residual = (&a * &x - &rhs).abs().max();
    if residual > 1e-8 {
        return Err(Error::SolveFailed(format!(
            "resolvent solve residual {residual:.3e} at lambda = {lambda}"
        )));
    }
    Ok(PayoffVector::new(x.iter().copied().collect()))
}

/// Average payoff per agent per day when everyone chooses at random:
/// `1/2 - C(N-1, M) 2^{-N}`.
pub fn w_rand(n: usize) -> f64 {
    let m = (n - 1) / 2;
    let correction = if m <= 20 {
        // exact C(N-1, M) 2^{-N} with interleaved halvings
        let mut value = 0.5;
        for k in 1..=m {
            value *= (n - k) as f64 / (4.0 * k as f64);
        }
        value
    } else {
        // log space; the partial products overflow for large M
        let mut ln = 0.5f64.ln();
        for k in 1..=m {
            ln += ((n - k) as f64 / (4.0 * k as f64)).ln();
        }
        ln.exp()
    };
    0.5 - correction
}

/// Maximum possible average payoff per agent per day, `M / N`.
pub fn w_max(n: usize) -> f64 {
    ((n - 1) / 2) as f64 / n as f64
}

/// Steady-state average payoff, with the reducibility flag of the
/// underlying chain propagated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragePayoff {
    /// Probability of sitting in the minority in the steady state.
    pub value: f64,
    /// True when the chain was reducible and the value refers to the
    /// long-run distribution from the uniform start.
    pub reducible: bool,
}

/// Steady-state expected payoff per agent per day: the stationary
/// probability of occupancies `1 ..= M`.
pub fn average_payoff(profile: &StrategyProfile, config: &GameConfig) -> Result<AveragePayoff> {
    let t = build_transition_matrix(profile, config)?;
    let ss = steady_state(&t, config.tol);
    Ok(AveragePayoff {
        value: ss.minority_mass(),
        reducible: ss.reducible,
    })
}

/// Inefficiency `eta = (W_max - W_avg) / (W_max - W_rand)`: 1 at the random
/// baseline, 0 at full efficiency.
pub fn inefficiency(w_avg: f64, n: usize) -> f64 {
    let wmax = w_max(n);
    (wmax - w_avg) / (wmax - w_rand(n))
}

/// Full payoff summary for one profile at one discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffReport {
    pub per_state: PayoffVector,
    pub average: f64,
    pub inefficiency: f64,
    pub baseline_rand: f64,
    pub w_max: f64,
    /// Set when the steady state came from a reducible chain.
    pub reducible: bool,
}

pub fn payoff_report(profile: &StrategyProfile, config: &GameConfig) -> Result<PayoffReport> {
    let t = build_transition_matrix(profile, config)?;
    let per_state = discounted_payoffs(&t, config.discount)?;
    let avg = average_payoff(profile, config)?;
    Ok(PayoffReport {
        per_state,
        average: avg.value,
        inefficiency: inefficiency(avg.value, config.n_agents),
        baseline_rand: w_rand(config.n_agents),
        w_max: w_max(config.n_agents),
        reducible: avg.reducible,
    })
}

/// Closed-form `W_2` for N = 3 with profile `(0, p2, 1/2)`; the exact
/// rational expression used as an oracle for the resolvent solve.
pub fn w2_closed_form_n3(p2: f64, lambda: f64) -> f64 {
    let q2 = 1.0 - p2;
    (4.0 * p2 * q2 - lambda * p2 * (q2 - p2))
        / ((1.0 - lambda * q2 * (q2 - p2)) * (4.0 + lambda * (4.0 * p2 * p2 - 1.0)))
}

/// Closed-form steady-state average payoff for N = 3 with profile
/// `(0, p2, 1/2)`: `1 / (3 + 4 p2^2)`.
pub fn w_avg_closed_form_n3(p2: f64) -> f64 {
    1.0 / (3.0 + 4.0 * p2 * p2)
}
