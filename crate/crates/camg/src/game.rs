//! Domain types for the co-action minority game.
//!
//! A game instance is `N` agents (odd) choosing between two restaurants each
//! day, with those in the smaller restaurant earning payoff 1. An agent's
//! state is `C_i`: she sits in a restaurant holding `i` people including
//! herself. A strategy profile assigns each state a jump probability `p_i`.
//!
//! State indices are 1-based everywhere in the public API, matching the
//! `C_1 ..= C_N` labeling; vectors are stored 0-based internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default convergence tolerance for solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default probability-grid resolution for coarse 1-D scans.
pub const DEFAULT_GRID: usize = 2001;

/// One game instance: the pair (N, lambda) plus numeric knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Number of agents N, odd and >= 3.
    pub n_agents: usize,
    /// Discount parameter lambda in [0, 1).
    pub discount: f64,
    /// M = (N - 1) / 2, the size of a full minority.
    pub m_half: usize,
    /// Convergence tolerance for iterative solvers.
    pub tol: f64,
    /// Number of grid points for coarse 1-D maximization scans.
    pub grid: usize,
}

impl GameConfig {
    /// Validates and builds a config. Rejects even or too-small N,
    /// out-of-range lambda, and non-positive tol/grid.
    pub fn new(n_agents: usize, discount: f64, tol: f64, grid: usize) -> Result<Self> {
        if n_agents < 3 || n_agents % 2 == 0 {
            return Err(Error::InvalidAgentCount(n_agents));
        }
        if !(0.0..1.0).contains(&discount) || !discount.is_finite() {
            return Err(Error::InvalidDiscount(discount));
        }
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidTolerance(tol));
        }
        if grid < 2 {
            return Err(Error::InvalidGrid(grid));
        }
        Ok(Self {
            n_agents,
            discount,
            m_half: (n_agents - 1) / 2,
            tol,
            grid,
        })
    }

    /// Config with default tolerance and grid resolution.
    pub fn with_defaults(n_agents: usize, discount: f64) -> Result<Self> {
        Self::new(n_agents, discount, DEFAULT_TOL, DEFAULT_GRID)
    }

    /// Same game with a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(self.n_agents, discount, self.tol, self.grid)
    }
}

/// The state of an agent sitting in a restaurant with `occupancy` people
/// total (herself included). Occupancy 0 cannot occur for an occupied seat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub occupancy: usize,
}

impl AgentState {
    pub fn new(occupancy: usize, config: &GameConfig) -> Result<Self> {
        if occupancy < 1 || occupancy > config.n_agents {
            return Err(Error::StateOutOfRange {
                index: occupancy,
                max: config.n_agents,
            });
        }
        Ok(Self { occupancy })
    }
}

/// The N jump probabilities `p_1 ..= p_N`: an agent in `C_i` switches
/// restaurants next day with probability `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    probs: Vec<f64>,
}

impl StrategyProfile {
    /// Validates every entry into [0, 1].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for (idx, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidProbability {
                    index: idx + 1,
                    value: p,
                });
            }
        }
        Ok(Self { probs })
    }

    /// Validates entries and the length against a config.
    pub fn for_config(probs: Vec<f64>, config: &GameConfig) -> Result<Self> {
        if probs.len() != config.n_agents {
            return Err(Error::ProfileLength {
                got: probs.len(),
                expected: config.n_agents,
            });
        }
        Self::new(probs)
    }

    /// The random-choice profile: every entry 1/2.
    pub fn uniform(config: &GameConfig) -> Self {
        Self {
            probs: vec![0.5; config.n_agents],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Jump probability of state `C_i`, 1-based.
    pub fn prob(&self, state: usize) -> f64 {
        assert!(
            state >= 1 && state <= self.probs.len(),
            "state {state} out of range 1..={}",
            self.probs.len()
        );
        self.probs[state - 1]
    }

    /// All probabilities in state order (`probs()[i]` is `p_{i+1}`).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Copy with `p_state` replaced, 1-based.
    pub fn with_prob(&self, state: usize, p: f64) -> Result<Self> {
        if state < 1 || state > self.probs.len() {
            return Err(Error::StateOutOfRange {
                index: state,
                max: self.probs.len(),
            });
        }
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::InvalidProbability {
                index: state,
                value: p,
            });
        }
        let mut probs = self.probs.clone();
        probs[state - 1] = p;
        Ok(Self { probs })
    }

    /// Complements the pair (j, N-j): `p_j <- 1 - p_j` and
    /// `p_{N-j} <- 1 - p_{N-j}`. Maps a self-consistent solution to another
    /// one with identical payoffs; applying it twice restores the original.
    pub fn flip_pair(&self, j: usize) -> Result<Self> {
        let n = self.probs.len();
        if j < 1 || j > n {
            return Err(Error::StateOutOfRange { index: j, max: n });
        }
        if j == n {
            // C_N pairs with the empty restaurant; there is nothing to flip.
            return Err(Error::UnpairedState(j));
        }
        let partner = n - j;
        let mut probs = self.probs.clone();
        probs[j - 1] = 1.0 - probs[j - 1];
        probs[partner - 1] = 1.0 - probs[partner - 1];
        Ok(Self { probs })
    }

    /// Win-stay lose-shift representative of the 2^M-member flip orbit:
    /// for every pair (j, N-j) with j <= M, enforce `p_j <= p_{N-j}`,
    /// leaving ties unflipped.
    pub fn canonicalize(&self) -> Self {
        let n = self.probs.len();
        let m = (n - 1) / 2;
        let mut out = self.clone();
        for j in 1..=m {
            if out.probs[j - 1] > out.probs[n - j - 1] {
                out = out.flip_pair(j).expect("pair index in range");
            }
        }
        out
    }
}

/// Discounted expected payoffs `W_1 ..= W_N` per current state. The (1 -
/// lambda) normalization keeps every entry in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffVector {
    values: Vec<f64>,
}

impl PayoffVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Payoff of state `C_j`, 1-based.
    pub fn value(&self, state: usize) -> f64 {
        assert!(
            state >= 1 && state <= self.values.len(),
            "state {state} out of range 1..={}",
            self.values.len()
        );
        self.values[state - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let c = GameConfig::new(3, 0.0, 1e-10, 2001).unwrap();
        assert_eq!(c.m_half, 1);
        let c = GameConfig::new(5, 0.4, 1e-10, 2001).unwrap();
        assert_eq!(c.m_half, 2);

        assert!(matches!(
            GameConfig::new(4, 0.2, 1e-10, 2001),
            Err(Error::InvalidAgentCount(4))
        ));
        assert!(matches!(
            GameConfig::new(1, 0.2, 1e-10, 2001),
            Err(Error::InvalidAgentCount(1))
        ));
        assert!(matches!(
            GameConfig::new(5, 1.0, 1e-10, 2001),
            Err(Error::InvalidDiscount(_))
        ));
        assert!(matches!(
            GameConfig::new(5, -0.1, 1e-10, 2001),
            Err(Error::InvalidDiscount(_))
        ));
        assert!(matches!(
            GameConfig::new(5, 0.2, 0.0, 2001),
            Err(Error::InvalidTolerance(_))
        ));
        assert!(matches!(
            GameConfig::new(5, 0.2, 1e-10, 0),
            Err(Error::InvalidGrid(0))
        ));
    }

    #[test]
    fn uniform_profile_is_all_half() {
        for n in [3usize, 5, 7] {
            let config = GameConfig::with_defaults(n, 0.0).unwrap();
            let p = StrategyProfile::uniform(&config);
            assert_eq!(p.len(), n);
            assert!(p.probs().iter().all(|&x| x == 0.5));
        }
    }

    fn assert_close(got: &[f64], expected: &[f64]) {
        assert_eq!(got.len(), expected.len());
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{got:?} vs {expected:?}");
        }
    }

    #[test]
    fn flip_pair_definition() {
        let p = StrategyProfile::new(vec![0.0, 0.3, 0.5]).unwrap();
        let f = p.flip_pair(1).unwrap();
        assert_close(f.probs(), &[1.0, 0.7, 0.5]);

        // j = 2 pairs with 3 for N = 5
        let p = StrategyProfile::new(vec![0.0, 0.5, 0.42, 0.5, 0.5]).unwrap();
        let f = p.flip_pair(2).unwrap();
        assert_close(f.probs(), &[0.0, 0.5, 0.58, 0.5, 0.5]);
    }

    #[test]
    fn flip_pair_is_involution() {
        let p = StrategyProfile::new(vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        for j in 1..=4 {
            let back = p.flip_pair(j).unwrap().flip_pair(j).unwrap();
            for (a, b) in back.probs().iter().zip(p.probs()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn flip_pair_rejects_out_of_range() {
        let p = StrategyProfile::new(vec![0.0, 0.3, 0.5]).unwrap();
        assert!(p.flip_pair(0).is_err());
        assert!(p.flip_pair(3).is_err());
        assert!(p.flip_pair(4).is_err());
    }

    #[test]
    fn canonicalize_picks_win_stay_representative() {
        let p = StrategyProfile::new(vec![1.0, 0.7, 0.5]).unwrap();
        assert_close(p.canonicalize().probs(), &[0.0, 0.3, 0.5]);

        let p = StrategyProfile::new(vec![0.0, 0.3, 0.5]).unwrap();
        assert_close(p.canonicalize().probs(), &[0.0, 0.3, 0.5]);
    }

    #[test]
    fn canonicalize_is_idempotent_and_orbit_invariant() {
        let p = StrategyProfile::new(vec![0.9, 0.8, 0.1, 0.2, 0.5]).unwrap();
        let c = p.canonicalize();
        assert_eq!(c.canonicalize(), c);
        assert!(c.probs()[0] <= c.probs()[3]);
        assert!(c.probs()[1] <= c.probs()[2]);

        // every member of the flip orbit maps to the same representative
        for mask in 0u8..4 {
            let mut q = p.clone();
            if mask & 1 != 0 {
                q = q.flip_pair(1).unwrap();
            }
            if mask & 2 != 0 {
                q = q.flip_pair(2).unwrap();
            }
            let cc = q.canonicalize();
            for (a, b) in cc.probs().iter().zip(c.probs()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn profile_validation() {
        assert!(StrategyProfile::new(vec![0.0, 1.1]).is_err());
        assert!(StrategyProfile::new(vec![-0.1]).is_err());
        let config = GameConfig::with_defaults(3, 0.0).unwrap();
        assert!(StrategyProfile::for_config(vec![0.5, 0.5], &config).is_err());
    }
}
