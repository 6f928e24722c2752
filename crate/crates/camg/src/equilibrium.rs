//! Co-action equilibria: per-state joint best responses, the staged
//! random / edge / interior phase structure of paired states, critical
//! discounts where the optimal strategy switches, and the trapping-state
//! diagnostic for the single-deviator (Nash) analysis.
//!
//! The co-action variation is joint: when agents in state `C_i` reconsider
//! `p_i`, every agent in `C_i` adopts the new value simultaneously, so the
//! whole chain changes. The single-deviator variation, where one agent moves
//! against a frozen background, exists only inside the trap diagnostic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameConfig, PayoffVector, StrategyProfile};
use crate::markov::{build_transition_matrix, occupancy_distribution, steady_state};
use crate::payoff::{discounted_payoffs, inefficiency, w_rand};

/// Landmark comparisons snap to the lower-discount phase within this margin.
const PHASE_TIE_TOL: f64 = 1e-9;
/// Best responses at or below this value count as "stick to zero" when
/// locating the departure point A.
const RESPONSE_ZERO_EPS: f64 = 1e-7;
/// Payoff ties within this margin resolve toward the smaller probability.
const TIE_EPS: f64 = 1e-13;
/// Default discount resolution of threshold bisection.
pub const LAMBDA_RESOLUTION: f64 = 1e-4;
/// Step of the coarse discount scan that brackets threshold crossings.
const LAMBDA_SCAN_STEP: f64 = 0.02;

/// Maximizes `f` on `[lo, hi]` by golden-section search down to width `tol`.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Global maximizer of `f` on [0, 1]: coarse grid scan, golden-section
/// refinement around the best grid point, ties toward the smaller argument.
/// The grid guards against the non-concave payoff shapes that appear in the
/// edge/interior regime, where pure local search could latch onto the wrong
/// hump.
fn maximize_unit<F: FnMut(f64) -> f64>(mut f: F, grid: usize, tol: f64) -> f64 {
    let step = 1.0 / (grid - 1) as f64;
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for idx in 0..grid {
        let x = idx as f64 * step;
        let v = f(x);
        if v > best_val {
            best_val = v;
            best_idx = idx;
        }
    }
    let lo = if best_idx == 0 { 0.0 } else { (best_idx - 1) as f64 * step };
    let hi = ((best_idx + 1) as f64 * step).min(1.0);
    let refined = golden_max(&mut f, lo, hi, tol);

    // candidate set keeps exact endpoints attractive under indifference
    let mut best = (refined, f(refined));
    for cand in [best_idx as f64 * step, 0.0, 0.5] {
        let v = f(cand);
        if v > best.1 + TIE_EPS || (v >= best.1 - TIE_EPS && cand < best.0) {
            best = (cand, v);
        }
    }
    best.0
}

/// The jointly optimal jump probability for agents in `C_state`: the value
/// `p` maximizing `W_state` of the profile with `p_state := p`, every agent
/// in the state adopting it together. Ties resolve toward the smaller `p`.
pub fn best_response(state: usize, profile: &StrategyProfile, config: &GameConfig) -> Result<f64> {
    let n = config.n_agents;
    if state < 1 || state > n {
        return Err(Error::StateOutOfRange {
            index: state,
            max: n,
        });
    }
    let mut work = profile.clone();
    let mut eval = |p: f64| -> f64 {
        work = work.with_prob(state, p).expect("probability in range");
        let t = build_transition_matrix(&work, config).expect("profile validated");
        discounted_payoffs(&t, config.discount)
            .expect("resolvent regular for lambda < 1")
            .value(state)
    };
    Ok(maximize_unit(&mut eval, config.grid, config.tol))
}

fn payoff_of_state(profile: &StrategyProfile, config: &GameConfig, state: usize) -> f64 {
    let t = build_transition_matrix(profile, config).expect("profile validated");
    discounted_payoffs(&t, config.discount)
        .expect("resolvent regular for lambda < 1")
        .value(state)
}

/// Landmarks of the best-response analysis of one state pair, all located on
/// the `p_high` axis of the `(p_high, p_low)` plane:
///
/// - `P = (1/2, 1/2)`, the pair-random point;
/// - `A`: largest `p_high` at which the best response of the low state is
///   still 0;
/// - `B`: best response of the high state to `p_low = 0`;
/// - `C`: where `W_high(p_low = 0, p_high)` first climbs to the pair-random
///   payoff `W'` (absent when the high state can never match `W'`);
/// - `D`: where `W_low(p_low = 0, p_high)` falls back to `W'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub random_point: (f64, f64),
    pub a: f64,
    pub b: f64,
    pub c: Option<f64>,
    pub d: Option<f64>,
    /// Payoff of both pair states at the pair-random point.
    pub w_prime: f64,
}

fn compute_landmarks(
    low: usize,
    profile: &StrategyProfile,
    config: &GameConfig,
) -> Result<Landmarks> {
    let n = config.n_agents;
    let high = n - low;

    // W' : both pair states pay the same at (1/2, 1/2) because every agent
    // present on a (low, high) split day then flips a fair coin.
    let random = profile.with_prob(low, 0.5)?.with_prob(high, 0.5)?;
    let w_prime = payoff_of_state(&random, config, high);

    let response_low = |x: f64| -> Result<f64> {
        best_response(low, &profile.with_prob(high, x)?, config)
    };

    // A by bisection on the predicate "low state still sticks to zero"
    let a = if response_low(0.0)? > RESPONSE_ZERO_EPS {
        0.0
    } else if response_low(1.0)? <= RESPONSE_ZERO_EPS {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if response_low(mid)? > RESPONSE_ZERO_EPS {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };

    let frozen_low = profile.with_prob(low, 0.0)?;
    let b = best_response(high, &frozen_low, config)?;

    let w_high_at = |x: f64| -> Result<f64> {
        Ok(payoff_of_state(&frozen_low.with_prob(high, x)?, config, high))
    };
    let w_low_at = |x: f64| -> Result<f64> {
        Ok(payoff_of_state(&frozen_low.with_prob(high, x)?, config, low))
    };

    // C: leftmost upward crossing of W_high through W' on [0, B]
    let c = bisect_crossing(|x| Ok(w_high_at(x)? - w_prime), 0.0, b, true)?;
    // D: leftmost downward crossing of W_low through W' on [0, 1]
    let d = bisect_crossing(|x| Ok(w_low_at(x)? - w_prime), 0.0, 1.0, false)?;

    Ok(Landmarks {
        random_point: (0.5, 0.5),
        a,
        b,
        c,
        d,
        w_prime,
    })
}

/// Leftmost sign change of `f` on `[lo, hi]`; `upward` selects minus-to-plus
/// crossings, otherwise plus-to-minus. Returns `None` without a crossing.
fn bisect_crossing<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    upward: bool,
) -> Result<Option<f64>> {
    const SCAN: usize = 64;
    if hi <= lo {
        return Ok(None);
    }
    let sign_ok = |v: f64| if upward { v >= 0.0 } else { v < 0.0 };
    let mut prev_x = lo;
    let mut prev = f(lo)?;
    if sign_ok(prev) {
        return Ok(Some(lo));
    }
    for k in 1..=SCAN {
        let x = lo + (hi - lo) * k as f64 / SCAN as f64;
        let v = f(x)?;
        if sign_ok(v) {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if sign_ok(f(m)?) {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev_x = x;
        prev = v;
    }
    let _ = prev;
    Ok(None)
}

/// Sampled best-response curves of a state pair plus the landmark points
/// behind the phase decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseCurves {
    /// The pair (low, high) = (i, N - i) with i <= M.
    pub pair: (usize, usize),
    /// `(p_high, r_low(p_high))` samples: joint best response of the low
    /// state against the opposing probability.
    pub response_low: Vec<(f64, f64)>,
    /// `(p_low, r_high(p_low))` samples.
    pub response_high: Vec<(f64, f64)>,
    pub landmarks: Landmarks,
}

/// Samples both best-response curves of the pair `(low, N - low)` on a
/// uniform grid of the opposing probability and locates the landmarks.
pub fn best_response_curves(
    low: usize,
    profile: &StrategyProfile,
    config: &GameConfig,
    samples: usize,
) -> Result<BestResponseCurves> {
    let n = config.n_agents;
    if low < 1 || low > config.m_half {
        return Err(Error::StateOutOfRange {
            index: low,
            max: config.m_half,
        });
    }
    let high = n - low;
    let samples = samples.max(2);
    let mut response_low = Vec::with_capacity(samples);
    let mut response_high = Vec::with_capacity(samples);
    for k in 0..samples {
        let x = k as f64 / (samples - 1) as f64;
        response_low.push((x, best_response(low, &profile.with_prob(high, x)?, config)?));
        response_high.push((x, best_response(high, &profile.with_prob(low, x)?, config)?));
    }
    let landmarks = compute_landmarks(low, profile, config)?;
    Ok(BestResponseCurves {
        pair: (low, high),
        response_low,
        response_high,
        landmarks,
    })
}

/// Phase of one state pair in the solved strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Both pair probabilities at 1/2.
    Random,
    /// `p_low = 0`, `p_high` at the boundary point A.
    Edge,
    /// `p_low = 0`, `p_high` at the unconstrained best response B.
    Interior,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Random => "random",
            Phase::Edge => "edge",
            Phase::Interior => "interior",
        }
    }
}

/// Phase label attached to the pair (low, N - low).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPhase {
    pub low: usize,
    pub high: usize,
    pub phase: Phase,
}

/// Exactly at a crossing the lower-discount phase wins, keeping the output
/// deterministic.
fn decide_phase(lm: &Landmarks) -> Phase {
    let c = match lm.c {
        Some(c) => c,
        None => return Phase::Random,
    };
    if lm.a - c <= PHASE_TIE_TOL {
        Phase::Random
    } else if lm.b - lm.a >= -PHASE_TIE_TOL {
        Phase::Edge
    } else {
        Phase::Interior
    }
}

/// A solved co-action equilibrium at one discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    /// Canonical (win-stay lose-shift) representative of the solution orbit.
    pub profile: StrategyProfile,
    pub payoffs: PayoffVector,
    /// Pair phases for i = 1 ..= M; the outermost pair (1, N-1) always sits
    /// at its interior optimum.
    pub phases: Vec<PairPhase>,
    pub eta: f64,
    pub average_payoff: f64,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub oscillation_detected: bool,
}

const MAX_CYCLES: usize = 200;

/// Solves the co-action self-consistency equations: `p_N = 1/2` and
/// `p_1 = 0` are pinned, inner pairs are classified innermost-out through
/// their landmarks, the remaining free probabilities are re-optimized each
/// cycle, and the loop runs until the largest probability change drops
/// below the configured tolerance.
pub fn solve_coaction(config: &GameConfig) -> Result<EquilibriumSolution> {
    solve_coaction_forced(config, &BTreeMap::new())
}

/// As [`solve_coaction`] but with selected pairs pinned to a phase; the
/// threshold scanner uses this to evaluate its crossing indicators in the
/// self-consistent context of the lower-discount phase.
pub fn solve_coaction_forced(
    config: &GameConfig,
    forced: &BTreeMap<usize, Phase>,
) -> Result<EquilibriumSolution> {
    let n = config.n_agents;
    let m = config.m_half;

    let mut probs = vec![0.5; n];
    probs[0] = 0.0;
    let mut profile = StrategyProfile::new(probs)?;
    let mut phases: BTreeMap<usize, Phase> = BTreeMap::new();

    let mut converged = false;
    let mut iterations = 0usize;
    let mut oscillation = false;
    let mut damping = false;
    let mut history: Vec<Vec<f64>> = vec![profile.probs().to_vec()];

    while iterations < MAX_CYCLES {
        iterations += 1;
        let previous = profile.clone();

        // inner pairs, innermost-out: (M, M+1) first
        for low in (2..=m).rev() {
            let high = n - low;
            let lm = compute_landmarks(low, &profile, config)?;
            let phase = forced.get(&low).copied().unwrap_or_else(|| decide_phase(&lm));
            let (target_low, target_high) = match phase {
                Phase::Random => (0.5, 0.5),
                Phase::Edge => (0.0, lm.a),
                Phase::Interior => (0.0, lm.b),
            };
            phases.insert(low, phase);
            let (new_low, new_high) = if damping {
                (
                    0.5 * (target_low + profile.prob(low)),
                    0.5 * (target_high + profile.prob(high)),
                )
            } else {
                (target_low, target_high)
            };
            profile = profile.with_prob(low, new_low)?.with_prob(high, new_high)?;
        }

        // outermost pair: p_1 pinned at 0, p_{N-1} at its interior optimum
        profile = profile.with_prob(1, 0.0)?;
        let target = best_response(n - 1, &profile, config)?;
        let updated = if damping {
            0.5 * (target + profile.prob(n - 1))
        } else {
            target
        };
        profile = profile.with_prob(n - 1, updated)?;

        let delta = max_abs_diff(profile.probs(), previous.probs());
        if delta < config.tol {
            converged = true;
            break;
        }

        // 2-cycle detection: back where we were two cycles ago but not one
        history.push(profile.probs().to_vec());
        if history.len() >= 3 {
            let two_back = &history[history.len() - 3];
            if max_abs_diff(profile.probs(), two_back) < config.tol && delta >= config.tol {
                oscillation = true;
                damping = true;
            }
        }
    }

    let profile = profile.canonicalize();
    let t = build_transition_matrix(&profile, config)?;
    let payoffs = discounted_payoffs(&t, config.discount)?;
    let ss = steady_state(&t, config.tol);
    let avg = ss.minority_mass();

    let mut phase_list = vec![PairPhase {
        low: 1,
        high: n - 1,
        phase: Phase::Interior,
    }];
    for low in 2..=m {
        phase_list.push(PairPhase {
            low,
            high: n - low,
            phase: phases.get(&low).copied().unwrap_or(Phase::Random),
        });
    }

    Ok(EquilibriumSolution {
        profile,
        payoffs,
        phases: phase_list,
        eta: inefficiency(avg, n),
        average_payoff: avg,
        lambda: config.discount,
        converged,
        iterations,
        oscillation_detected: oscillation,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Root `p_2* in [0, 1/2]` of the stationarity polynomial of the N = 3
/// payoff `W_2`, cubic in the discount:
/// `16 - 32p - (24 - 56p + 32p^2) l + (9 - 28p + 40p^2 - 96p^3 + 144p^4 -
/// 64p^5) l^2 - (1 - 4p + 8p^2 - 24p^3 + 48p^4 - 32p^5) l^3 = 0`.
pub fn cubic_root_n3(lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidDiscount(lambda));
    }
    let f = |p: f64| -> f64 {
        let p2 = p * p;
        let p3 = p2 * p;
        let p4 = p3 * p;
        let p5 = p4 * p;
        16.0 - 32.0 * p - (24.0 - 56.0 * p + 32.0 * p2) * lambda
            + (9.0 - 28.0 * p + 40.0 * p2 - 96.0 * p3 + 144.0 * p4 - 64.0 * p5) * lambda * lambda
            - (1.0 - 4.0 * p + 8.0 * p2 - 24.0 * p3 + 48.0 * p4 - 32.0 * p5)
                * lambda
                * lambda
                * lambda
    };
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    if f(lo) <= 0.0 {
        return Err(Error::NoBracket {
            what: "N=3 stationarity polynomial",
            lo: 0.0,
            hi: 0.5,
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Kind of strategy switch at a critical discount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionKind {
    RandomToEdge,
    EdgeToInterior,
}

impl TransitionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransitionKind::RandomToEdge => "random->edge",
            TransitionKind::EdgeToInterior => "edge->interior",
        }
    }
}

/// One critical discount: the pair whose phase switches and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub lambda_c: f64,
    pub pair: (usize, usize),
    pub transition: TransitionKind,
}

/// Scans every inner pair of the N-agent game for its critical discounts,
/// bisecting the smooth landmark indicators A - C (random -> edge) and
/// B - A (edge -> interior) down to the default discount resolution. Each
/// indicator is evaluated in the equilibrium context solved with the pair
/// held in its lower-discount phase, so the indicator stays continuous
/// across the crossing even though the equilibrium itself jumps there.
pub fn threshold_scan(base: &GameConfig) -> Result<Vec<Threshold>> {
    threshold_scan_with_resolution(base, LAMBDA_RESOLUTION)
}

pub fn threshold_scan_with_resolution(
    base: &GameConfig,
    resolution: f64,
) -> Result<Vec<Threshold>> {
    let m = base.m_half;
    let mut thresholds = Vec::new();
    for low in 2..=m {
        for (kind, held) in [
            (TransitionKind::RandomToEdge, Phase::Random),
            (TransitionKind::EdgeToInterior, Phase::Edge),
        ] {
            let mut indicator = |lambda: f64| -> Result<f64> {
                let config = base.with_discount(lambda)?;
                let mut forced = BTreeMap::new();
                forced.insert(low, held);
                let solution = solve_coaction_forced(&config, &forced)?;
                let lm = compute_landmarks(low, &solution.profile, &config)?;
                Ok(match kind {
                    TransitionKind::RandomToEdge => match lm.c {
                        Some(c) => lm.a - c,
                        None => -1.0,
                    },
                    TransitionKind::EdgeToInterior => lm.b - lm.a,
                })
            };
            for lambda_c in bracket_and_bisect(&mut indicator, resolution)? {
                thresholds.push(Threshold {
                    lambda_c,
                    pair: (low, base.n_agents - low),
                    transition: kind,
                });
            }
        }
    }
    thresholds.sort_by(|a, b| a.lambda_c.partial_cmp(&b.lambda_c).unwrap());
    Ok(thresholds)
}

/// Coarse scan of an indicator over the discount range followed by
/// bisection of every sign-change bracket.
fn bracket_and_bisect<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    resolution: f64,
) -> Result<Vec<f64>> {
    let lambda_max = 0.999;
    let mut crossings = Vec::new();
    let mut prev_lambda = 0.0;
    let mut prev = f(prev_lambda)?;
    let steps = (lambda_max / LAMBDA_SCAN_STEP).ceil() as usize;
    for k in 1..=steps {
        let lambda = (k as f64 * LAMBDA_SCAN_STEP).min(lambda_max);
        let value = f(lambda)?;
        if (prev <= 0.0) != (value <= 0.0) {
            let (mut lo, mut hi) = (prev_lambda, lambda);
            let lo_nonpos = prev <= 0.0;
            while hi - lo > resolution {
                let mid = 0.5 * (lo + hi);
                if (f(mid)? <= 0.0) == lo_nonpos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push(0.5 * (lo + hi));
        }
        prev_lambda = lambda;
        prev = value;
    }
    Ok(crossings)
}

/// Outcome of the single-deviator (Nash) analysis at the balanced split,
/// contrasted with the joint co-action response at the same point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub n_agents: usize,
    /// The balanced split (M, M+1).
    pub split: (usize, usize),
    /// Single-deviator best response of an agent in `C_M` against the
    /// frozen split; 0 means "stay".
    pub deviator_response_minority: f64,
    /// Single-deviator best response of an agent in `C_{M+1}`.
    pub deviator_response_majority: f64,
    /// Whether the frozen-pair profile produces a reducible chain.
    pub chain_reducible: bool,
    /// Closed classes of that chain (1-based states).
    pub closed_classes: Vec<Vec<usize>>,
    /// Discounted payoff of the majority state under the frozen profile.
    pub majority_payoff: f64,
    /// Joint co-action best response of `C_{M+1}` with `p_M = 0`.
    pub coaction_response: f64,
    /// The closed-form value `1 - (M+1)^{-1/M}` it must reproduce.
    pub coaction_reference: f64,
}

/// One-day win probability of a lone deviator in `C_state` who jumps with
/// probability `p_dev` while everyone else follows `profile`.
fn deviator_one_day_payoff(
    state: usize,
    p_dev: f64,
    profile: &StrategyProfile,
    config: &GameConfig,
) -> f64 {
    let n = config.n_agents;
    let m = config.m_half;
    let p_comp = profile.prob(state);
    let p_opp = if state < n { profile.prob(n - state) } else { 0.0 };
    let dist = occupancy_distribution(n, state, p_dev, p_comp, p_opp);
    dist[..m].iter().sum()
}

/// Demonstrates the trapping pathology of the single-deviator analysis at
/// `lambda = 0`: against the frozen (M, M+1) split the lone deviator's best
/// response is to freeze too, the resulting chain locks into the split, and
/// the majority is stuck at payoff zero; the joint co-action response at
/// the same point instead shifts with probability `1 - (M+1)^{-1/M}`.
pub fn nash_trap_diagnostic(config: &GameConfig) -> Result<TrapReport> {
    let n = config.n_agents;
    let m = config.m_half;
    let day_zero = config.with_discount(0.0)?;

    // frozen split: the balanced pair pinned at zero, everything else random
    let mut probs = vec![0.5; n];
    probs[m - 1] = 0.0;
    probs[m] = 0.0;
    let frozen = StrategyProfile::new(probs)?;

    let respond = |state: usize| -> f64 {
        maximize_unit(
            |p| deviator_one_day_payoff(state, p, &frozen, &day_zero),
            day_zero.grid,
            day_zero.tol,
        )
    };
    let deviator_response_minority = respond(m);
    let deviator_response_majority = respond(m + 1);

    let t = build_transition_matrix(&frozen, &day_zero)?;
    let ss = steady_state(&t, day_zero.tol);
    let majority_payoff = discounted_payoffs(&t, 0.0)?.value(m + 1);

    // the co-action alternative: all of C_{M+1} tunes jointly, p_M stays 0
    let coaction_response = best_response(m + 1, &frozen, &day_zero)?;
    let coaction_reference = 1.0 - ((m + 1) as f64).powf(-1.0 / m as f64);

    Ok(TrapReport {
        n_agents: n,
        split: (m, m + 1),
        deviator_response_minority,
        deviator_response_majority,
        chain_reducible: ss.reducible,
        closed_classes: ss.closed_classes,
        majority_payoff,
        coaction_response,
        coaction_reference,
    })
}

/// Per-state payoff of the all-random profile, used by dominance checks.
pub fn random_baseline_payoff(config: &GameConfig) -> f64 {
    w_rand(config.n_agents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, lambda: f64) -> GameConfig {
        GameConfig::with_defaults(n, lambda).unwrap()
    }

    #[test]
    fn best_response_matches_section5_closed_form() {
        // lambda = 0, p_M = 0 context: optimum q_{M+1} = (M+1)^{-1/M}
        for n in [3usize, 5, 7] {
            let m = (n - 1) / 2;
            let cfg = config(n, 0.0);
            let mut probs = vec![0.5; n];
            probs[m - 1] = 0.0;
            let profile = StrategyProfile::new(probs).unwrap();
            let p = best_response(m + 1, &profile, &cfg).unwrap();
            let expected = 1.0 - ((m + 1) as f64).powf(-1.0 / m as f64);
            assert!((p - expected).abs() < 1e-8, "n={n}: {p} vs {expected}");
        }
    }

    #[test]
    fn best_response_n3_lambda0_is_half() {
        let cfg = config(3, 0.0);
        let profile = StrategyProfile::new(vec![0.0, 0.3, 0.5]).unwrap();
        let p = best_response(2, &profile, &cfg).unwrap();
        assert!((p - 0.5).abs() < 1e-8);
    }

    #[test]
    fn best_response_n3_tends_to_zero_at_high_lambda() {
        let cfg = config(3, 0.999);
        let profile = StrategyProfile::new(vec![0.0, 0.3, 0.5]).unwrap();
        let p = best_response(2, &profile, &cfg).unwrap();
        assert!(p < 0.05, "p = {p}");
    }

    #[test]
    fn solve_n3_lambda0() {
        let cfg = config(3, 0.0);
        let sol = solve_coaction(&cfg).unwrap();
        assert!(sol.converged);
        assert!((sol.profile.prob(1)).abs() < 1e-12);
        assert!((sol.profile.prob(2) - 0.5).abs() < 1e-7);
        assert!((sol.profile.prob(3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn solve_n3_matches_cubic() {
        for lambda in [0.1, 0.45, 0.8, 0.95] {
            let cfg = config(3, lambda);
            let sol = solve_coaction(&cfg).unwrap();
            let root = cubic_root_n3(lambda).unwrap();
            assert!(
                (sol.profile.prob(2) - root).abs() < 1e-6,
                "lambda={lambda}: {} vs {root}",
                sol.profile.prob(2)
            );
        }
    }

    #[test]
    fn cubic_endpoints() {
        assert!((cubic_root_n3(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(cubic_root_n3(0.999).unwrap() < 0.05);
        assert!(cubic_root_n3(1.0).is_err());
    }

    #[test]
    fn cubic_root_is_stationary_point_of_closed_form() {
        use crate::payoff::w2_closed_form_n3;
        for lambda in [0.2, 0.5, 0.9] {
            let p = cubic_root_n3(lambda).unwrap();
            let h = 1e-6;
            let derivative =
                (w2_closed_form_n3(p + h, lambda) - w2_closed_form_n3(p - h, lambda)) / (2.0 * h);
            assert!(derivative.abs() < 1e-6, "lambda={lambda} dW2={derivative}");
        }
    }

    #[test]
    fn n5_phase_progression() {
        // paper regimes: random at 0.1, edge at 0.4, interior at 0.8
        let sol = solve_coaction(&config(5, 0.1)).unwrap();
        assert_eq!(sol.phases[1].phase, Phase::Random);
        assert!((sol.profile.prob(2) - 0.5).abs() < 1e-9);
        assert!((sol.profile.prob(3) - 0.5).abs() < 1e-9);

        let sol = solve_coaction(&config(5, 0.4)).unwrap();
        assert_eq!(sol.phases[1].phase, Phase::Edge);
        assert!(sol.profile.prob(2).abs() < 1e-12);
        assert!(sol.profile.prob(3) > 0.0 && sol.profile.prob(3) < 0.5);
        assert!(sol.profile.prob(4) < 0.5);

        let sol = solve_coaction(&config(5, 0.8)).unwrap();
        assert_eq!(sol.phases[1].phase, Phase::Interior);
        assert!(sol.profile.prob(2).abs() < 1e-12);
    }

    #[test]
    fn landmark_order_n5() {
        // A left of C at lambda = 0.1; right of it at 0.4; B left of A at 0.8
        let profile = StrategyProfile::new(vec![0.0, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let lm = compute_landmarks(2, &profile, &config(5, 0.1)).unwrap();
        assert!(lm.a < lm.c.unwrap());

        let sol = solve_coaction(&config(5, 0.4)).unwrap();
        let lm = compute_landmarks(2, &sol.profile, &config(5, 0.4)).unwrap();
        assert!(lm.a > lm.c.unwrap());
        assert!(lm.b > lm.a);

        let sol = solve_coaction(&config(5, 0.8)).unwrap();
        let lm = compute_landmarks(2, &sol.profile, &config(5, 0.8)).unwrap();
        assert!(lm.b < lm.a);
    }

    #[test]
    fn trap_diagnostic_small_n() {
        for n in [3usize, 5] {
            let report = nash_trap_diagnostic(&config(n, 0.0)).unwrap();
            assert!(report.deviator_response_minority.abs() < 1e-12);
            assert!(report.deviator_response_majority.abs() < 1e-12);
            assert!(report.chain_reducible);
            let m = (n - 1) / 2;
            assert!(report.closed_classes.contains(&vec![m]));
            assert!(report.closed_classes.contains(&vec![m + 1]));
            assert!(report.majority_payoff.abs() < 1e-12);
            assert!(
                (report.coaction_response - report.coaction_reference).abs() < 1e-8,
                "n={n}"
            );
        }
    }

    #[test]
    fn equilibrium_dominates_random_baseline() {
        for (n, lambda) in [(3usize, 0.3), (5, 0.5), (5, 0.05)] {
            let cfg = config(n, lambda);
            let sol = solve_coaction(&cfg).unwrap();
            let baseline = w_rand(n);
            for state in 1..=n {
                assert!(
                    sol.payoffs.value(state) >= baseline - 1e-9,
                    "n={n} lambda={lambda} state={state}: {} < {baseline}",
                    sol.payoffs.value(state)
                );
            }
        }
    }

    /// Grid-step perturbations of any single state's probability must not
    /// improve that state's payoff, except for the high state of an edge
    /// pair: there the optimum is constrained, the payoff still rises
    /// toward B, and what pins the solution is the low state's response
    /// departing from zero just past A.
    fn assert_self_consistent(sol: &EquilibriumSolution, cfg: &GameConfig) {
        let n = cfg.n_agents;
        let step = 1.0 / (cfg.grid - 1) as f64;
        let mut edge_high = Vec::new();
        for pp in &sol.phases {
            if pp.phase == Phase::Edge {
                edge_high.push(pp.high);
            }
        }
        for state in 1..=n {
            let here = payoff_of_state(&sol.profile, cfg, state);
            let deltas: &[f64] = if edge_high.contains(&state) {
                &[-1.0] // downhill side only; uphill is blocked by the pair partner
            } else {
                &[-1.0, 1.0]
            };
            for sign in deltas {
                let p = (sol.profile.prob(state) + sign * step).clamp(0.0, 1.0);
                let perturbed = sol.profile.with_prob(state, p).unwrap();
                let w = payoff_of_state(&perturbed, cfg, state);
                assert!(
                    w <= here + 1e-9,
                    "state {state}: perturbing to {p} raises payoff {here} -> {w}"
                );
            }
        }
        // the edge constraint itself: one grid step past A wakes up the
        // low state's best response
        for pp in &sol.phases {
            if pp.phase == Phase::Edge {
                let nudged = sol
                    .profile
                    .with_prob(pp.high, (sol.profile.prob(pp.high) + step).min(1.0))
                    .unwrap();
                let response = best_response(pp.low, &nudged, cfg).unwrap();
                assert!(
                    response > 0.0,
                    "edge pair ({}, {}): low response still 0 past A",
                    pp.low,
                    pp.high
                );
            }
        }
    }

    #[test]
    fn solution_is_self_consistent_across_phases() {
        for (n, lambda) in [(5usize, 0.1), (5, 0.4), (5, 0.8), (3, 0.6)] {
            let cfg = config(n, lambda);
            let sol = solve_coaction(&cfg).unwrap();
            assert!(sol.converged, "n={n} lambda={lambda}");
            assert_self_consistent(&sol, &cfg);
        }
    }
}
