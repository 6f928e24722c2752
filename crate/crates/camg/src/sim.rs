//! Seeded Monte Carlo simulation of N agents playing a fixed strategy
//! profile, with estimators for state frequencies, discounted payoffs, and
//! attendance fluctuations. Identical inputs reproduce identical records
//! bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AgentState, GameConfig, StrategyProfile};

/// Identity of the generator embedded in every record.
pub const GENERATOR_ID: &str = "chacha8";

/// Fraction of days dropped before steady-state estimators.
const BURN_IN_FRACTION: f64 = 0.10;
/// Minimum anchored windows for the discounted-payoff estimator.
const MIN_VISITS: usize = 100;
/// Discount weights below this truncate the estimator window.
const WINDOW_CUTOFF: f64 = 1e-12;

/// Full record of one simulation run. Days are indexed `0 ..= days-1`; day
/// 0 is the independent fair-coin initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub seed: u64,
    pub days: usize,
    pub n_agents: usize,
    /// Name of the pseudo-random generator used.
    pub generator: String,
    /// Attendance of restaurant A per day.
    pub attendance: Vec<u32>,
    /// Count of (agent, day) pairs per occupancy state; sums to N * days.
    pub state_visits: Vec<u64>,
    /// Per-state count of next-day wins over anchored (agent, day) pairs.
    pub win_counts: Vec<u64>,
    /// Per-state count of (agent, day) pairs that have a next day.
    pub win_anchors: Vec<u64>,
    /// Variance of the attendance difference `2 n(t) - N` over all days.
    pub sigma2: f64,
    /// Restaurant assignment bitmask per day; bit i set puts agent i in A.
    choices: Vec<u32>,
}

/// Runs the chain: every agent in a restaurant of occupancy i jumps
/// independently with probability `p_i` each day. Deterministic in
/// `(seed, profile, config, days)`.
pub fn simulate(
    profile: &StrategyProfile,
    config: &GameConfig,
    days: usize,
    seed: u64,
) -> Result<SimulationRecord> {
    let n = config.n_agents;
    if n > 32 {
        return Err(Error::TooManyAgentsForSimulation(n));
    }
    if profile.len() != n {
        return Err(Error::ProfileLength {
            got: profile.len(),
            expected: n,
        });
    }
    if days < 1 {
        return Err(Error::TooFewDays { got: days, min: 1 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choices = Vec::with_capacity(days);
    let mut attendance = Vec::with_capacity(days);

    let mut current: u32 = 0;
    for agent in 0..n {
        if rng.gen_bool(0.5) {
            current |= 1 << agent;
        }
    }
    choices.push(current);
    attendance.push(current.count_ones());

    for _ in 1..days {
        let occ_a = current.count_ones() as usize;
        let mut next = current;
        for agent in 0..n {
            let occupancy = if current & (1 << agent) != 0 {
                occ_a
            } else {
                n - occ_a
            };
            let p = profile.prob(occupancy);
            if p > 0.0 && rng.gen::<f64>() < p {
                next ^= 1 << agent;
            }
        }
        current = next;
        choices.push(current);
        attendance.push(current.count_ones());
    }

    // aggregate per-state visit and next-day win counts
    let mut state_visits = vec![0u64; n];
    let mut win_counts = vec![0u64; n];
    let mut win_anchors = vec![0u64; n];
    for (day, &mask) in choices.iter().enumerate() {
        let occ_a = mask.count_ones() as usize;
        let last = day + 1 == days;
        let next_mask = if last { 0 } else { choices[day + 1] };
        let next_occ_a = next_mask.count_ones() as usize;
        for agent in 0..n {
            let in_a = mask & (1 << agent) != 0;
            let occupancy = if in_a { occ_a } else { n - occ_a };
            state_visits[occupancy - 1] += 1;
            if !last {
                win_anchors[occupancy - 1] += 1;
                let next_occ = if next_mask & (1 << agent) != 0 {
                    next_occ_a
                } else {
                    n - next_occ_a
                };
                if 2 * next_occ < n {
                    win_counts[occupancy - 1] += 1;
                }
            }
        }
    }

    let mean_diff: f64 = attendance
        .iter()
        .map(|&a| 2.0 * a as f64 - n as f64)
        .sum::<f64>()
        / days as f64;
    let sigma2: f64 = attendance
        .iter()
        .map(|&a| {
            let d = 2.0 * a as f64 - n as f64 - mean_diff;
            d * d
        })
        .sum::<f64>()
        / days as f64;

    Ok(SimulationRecord {
        seed,
        days,
        n_agents: n,
        generator: GENERATOR_ID.to_string(),
        attendance,
        state_visits,
        win_counts,
        win_anchors,
        sigma2,
        choices,
    })
}

impl SimulationRecord {
    /// Occupancy of one agent on one day, 1-based agent index.
    pub fn occupancy(&self, agent: usize, day: usize) -> usize {
        let mask = self.choices[day];
        let occ_a = mask.count_ones() as usize;
        if mask & (1 << (agent - 1)) != 0 {
            occ_a
        } else {
            self.n_agents - occ_a
        }
    }

    /// Win indicator of one agent on one day.
    pub fn won(&self, agent: usize, day: usize) -> bool {
        2 * self.occupancy(agent, day) < self.n_agents
    }

    /// Empirical fraction of (agent, day) pairs per state.
    pub fn state_frequencies(&self) -> Vec<f64> {
        let total = (self.n_agents * self.days) as f64;
        self.state_visits.iter().map(|&v| v as f64 / total).collect()
    }

    /// Empirical next-day win rate conditioned on today's state, `None`
    /// for states never anchored.
    pub fn win_rates(&self) -> Vec<Option<f64>> {
        self.win_counts
            .iter()
            .zip(&self.win_anchors)
            .map(|(&w, &a)| (a > 0).then(|| w as f64 / a as f64))
            .collect()
    }

    /// First day on which the attendance split is the balanced (M, M+1),
    /// a crude relaxation-time estimate.
    pub fn first_balanced_split(&self) -> Option<usize> {
        let m = (self.n_agents - 1) / 2;
        self.attendance
            .iter()
            .position(|&a| a as usize == m || a as usize == self.n_agents - m)
    }
}

/// Point estimate with a standard error from contiguous-batch means, which
/// stays honest under the heavy autocorrelation of overlapping windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

const BATCHES: usize = 100;

fn batch_estimate(per_day_sums: &[(f64, usize)]) -> Estimate {
    // per_day_sums: (sum of window values, count) per day slot
    let days = per_day_sums.len();
    let batches = BATCHES.min(days.max(1));
    let mut means = Vec::with_capacity(batches);
    for b in 0..batches {
        let lo = b * days / batches;
        let hi = ((b + 1) * days / batches).max(lo + 1).min(days);
        let (sum, count) = per_day_sums[lo..hi]
            .iter()
            .fold((0.0, 0usize), |(s, c), &(v, k)| (s + v, c + k));
        if count > 0 {
            means.push(sum / count as f64);
        }
    }
    let total: f64 = per_day_sums.iter().map(|&(v, _)| v).sum();
    let count: usize = per_day_sums.iter().map(|&(_, k)| k).sum();
    let value = total / count as f64;
    let b = means.len() as f64;
    let var = means.iter().map(|&x| (x - value) * (x - value)).sum::<f64>() / (b - 1.0).max(1.0);
    Estimate {
        value,
        std_error: (var / b).sqrt(),
    }
}

/// Estimates the discounted payoff of one state from the record: every
/// (agent, day) visit of the state anchors a window
/// `(1 - lambda) sum_tau lambda^tau win(tau + 1)`, truncated where
/// `lambda^tau < 1e-12`; windows that would overlap the end of the record
/// are discarded. Errors out when fewer than 100 complete windows exist.
pub fn empirical_discounted_payoff(
    record: &SimulationRecord,
    lambda: f64,
    state: AgentState,
) -> Result<Estimate> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidDiscount(lambda));
    }
    let n = record.n_agents;
    let occupancy = state.occupancy;
    if occupancy < 1 || occupancy > n {
        return Err(Error::StateOutOfRange {
            index: occupancy,
            max: n,
        });
    }

    // horizon: smallest tau with lambda^tau < cutoff
    let horizon = if lambda == 0.0 {
        0usize
    } else {
        (WINDOW_CUTOFF.ln() / lambda.ln()).ceil() as usize
    };
    if record.days < horizon + 2 {
        return Err(Error::InsufficientVisits {
            state: occupancy,
            visits: 0,
            required: MIN_VISITS,
        });
    }

    let last_anchor = record.days - 2 - horizon;
    let mut weights = Vec::with_capacity(horizon + 1);
    let mut w = 1.0 - lambda;
    for _ in 0..=horizon {
        weights.push(w);
        w *= lambda;
    }

    let mut per_day: Vec<(f64, usize)> = vec![(0.0, 0); last_anchor + 1];
    let mut visits = 0usize;
    for day in 0..=last_anchor {
        let mask = record.choices[day];
        let occ_a = mask.count_ones() as usize;
        for agent in 0..n {
            let occ = if mask & (1 << agent) != 0 {
                occ_a
            } else {
                n - occ_a
            };
            if occ != occupancy {
                continue;
            }
            visits += 1;
            let mut acc = 0.0;
            for (tau, &wt) in weights.iter().enumerate() {
                let future = record.choices[day + 1 + tau];
                let occ_f = future.count_ones() as usize;
                let occ_agent = if future & (1 << agent) != 0 {
                    occ_f
                } else {
                    n - occ_f
                };
                if 2 * occ_agent < n {
                    acc += wt;
                }
            }
            per_day[day].0 += acc;
            per_day[day].1 += 1;
        }
    }
    if visits < MIN_VISITS {
        return Err(Error::InsufficientVisits {
            state: occupancy,
            visits,
            required: MIN_VISITS,
        });
    }
    Ok(batch_estimate(&per_day))
}

/// Sample variance of the attendance difference `2 n(t) - N`, divided by N,
/// over the record with the first 10% of days discarded as burn-in.
pub fn empirical_sigma2(record: &SimulationRecord) -> f64 {
    let burn = (record.days as f64 * BURN_IN_FRACTION) as usize;
    let window = &record.attendance[burn..];
    let n = record.n_agents as f64;
    let len = window.len() as f64;
    let mean: f64 = window.iter().map(|&a| 2.0 * a as f64 - n).sum::<f64>() / len;
    let var: f64 = window
        .iter()
        .map(|&a| {
            let d = 2.0 * a as f64 - n - mean;
            d * d
        })
        .sum::<f64>()
        / len;
    var / n
}

/// Batch-means estimate of a state's visit frequency, for consistency
/// checks against analytic steady states.
pub fn empirical_state_frequency(record: &SimulationRecord, state: AgentState) -> Estimate {
    let n = record.n_agents;
    let per_day: Vec<(f64, usize)> = record
        .choices
        .iter()
        .map(|&mask| {
            let occ_a = mask.count_ones() as usize;
            let hits = (0..n)
                .filter(|&agent| {
                    let occ = if mask & (1 << agent) != 0 {
                        occ_a
                    } else {
                        n - occ_a
                    };
                    occ == state.occupancy
                })
                .count();
            (hits as f64 / n as f64, 1usize)
        })
        .collect();
    batch_estimate(&per_day)
}
